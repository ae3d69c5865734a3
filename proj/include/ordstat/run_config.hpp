#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ordstat/bounds.hpp"
#include "ordstat/experiments.hpp"
#include "ordstat/mc.hpp"
#include "ordstat/spec_io.hpp"
#include "ordstat/version.hpp"

namespace ordstat {

using json = nlohmann::json;

// Grid specs on the command line: "geom:start:stop:ratio" or a comma list.
inline std::vector<double> parse_grid_list(const std::string& text) {
  std::vector<double> out;
  if (text.rfind("geom:", 0) == 0) {
    std::istringstream ss(text.substr(5));
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') ||
        !std::getline(ss, c))
      throw std::invalid_argument("grid spec must be geom:start:stop:ratio");
    const double start = std::stod(a);
    const double stop = std::stod(b);
    const double ratio = std::stod(c);
    if (!(start > 0.0 && stop > 0.0 && ratio > 0.0 && ratio != 1.0))
      throw std::invalid_argument("geom grid needs positive start/stop and ratio != 1");
    const bool down = stop < start;
    if ((down && ratio >= 1.0) || (!down && ratio <= 1.0))
      throw std::invalid_argument("geom grid ratio moves away from stop");
    for (double x = start; down ? x >= stop * (1.0 - 1e-12) : x <= stop * (1.0 + 1e-12);
         x *= ratio)
      out.push_back(x);
    if (out.empty()) throw std::invalid_argument("geom grid is empty");
    return out;
  }
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    out.push_back(std::stod(cell));
  }
  if (out.empty()) throw std::invalid_argument("empty grid list");
  return out;
}

inline std::vector<double> grid_from_json(const json& value) {
  if (value.is_string()) return parse_grid_list(value.get<std::string>());
  if (value.is_array()) {
    std::vector<double> out;
    for (const auto& v : value) out.push_back(v.get<double>());
    if (out.empty()) throw std::invalid_argument("empty grid list");
    return out;
  }
  throw std::invalid_argument("grid must be a list or a spec string");
}

// Model specs: "fbm:alpha", "powerexp:alpha[:scale]", "ssbeta:beta".
inline CorrelationModel parse_model(const std::string& text) {
  std::stringstream ss(text);
  std::string kind;
  std::getline(ss, kind, ':');
  std::vector<double> args;
  std::string cell;
  while (std::getline(ss, cell, ':')) args.push_back(std::stod(cell));
  if (kind == "fbm" && args.size() == 1) return CorrelationModel::fbm(args[0]);
  if (kind == "powerexp" && (args.size() == 1 || args.size() == 2))
    return CorrelationModel::power_exp(args[0], args.size() == 2 ? args[1] : 1.0);
  if (kind == "ssbeta" && args.size() == 1)
    return CorrelationModel::self_similar_beta(args[0]);
  throw std::invalid_argument(
      "model spec must be fbm:alpha, powerexp:alpha[:scale] or ssbeta:beta");
}

inline RankConvention parse_convention(const std::string& text) {
  if (text == "asc" || text == "ascending") return RankConvention::ascending;
  if (text == "desc" || text == "descending") return RankConvention::descending;
  throw std::invalid_argument("convention must be asc or desc");
}

namespace detail {

// Strict reader over one flat parameter namespace: every present key must be
// known, every required key must be present.
class ParamReader {
 public:
  ParamReader(const json& object, std::string scope)
      : object_(object), scope_(std::move(scope)) {
    if (!object_.is_object())
      throw std::invalid_argument(scope_ + ": parameters must be an object");
  }

  void finish(const std::vector<std::string>& allowed) const {
    for (const auto& [key, value] : object_.items()) {
      (void)value;
      bool known = false;
      for (const auto& k : allowed)
        if (k == key) {
          known = true;
          break;
        }
      if (!known)
        throw std::invalid_argument(scope_ + ": unknown key \"" + key + "\"");
    }
  }

  bool has(const std::string& key) const { return object_.contains(key); }

  template <typename T>
  T require(const std::string& key) const {
    if (!object_.contains(key))
      throw std::invalid_argument(scope_ + ": missing required key \"" + key + "\"");
    return get<T>(key);
  }

  template <typename T>
  T value_or(const std::string& key, T fallback) const {
    if (!object_.contains(key)) return fallback;
    return get<T>(key);
  }

  template <typename T>
  T get(const std::string& key) const {
    try {
      return object_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument(scope_ + ": key \"" + key + "\" has the wrong type");
    }
  }

  const json& raw(const std::string& key) const { return object_.at(key); }

 private:
  const json& object_;
  std::string scope_;
};

}  // namespace detail

struct RunConfig {
  std::string subcommand;
  json params;  // the subcommand's flat namespace, as given
  std::uint64_t seed = 0;
  bool seed_was_generated = false;
  int workers = 1;
  std::string out = "-";
  std::string format = "json";
  bool no_timestamp = false;
};

inline const std::vector<std::string>& known_subcommands() {
  static const std::vector<std::string> kList = {
      "bounds", "verify", "lowtail", "pursuit",
      "lishao", "slepian", "gumbel", "constants"};
  return kList;
}

// Top-level config: subcommand selector, shared execution keys and one
// object per subcommand. Unknown keys are errors; typos must fail loudly.
inline RunConfig parse_config(const json& merged) {
  if (!merged.is_object())
    throw std::invalid_argument("config: top level must be an object");
  std::vector<std::string> allowed = {"subcommand", "seed",         "workers",
                                      "out",        "format",       "no_timestamp"};
  for (const auto& s : known_subcommands()) allowed.push_back(s);
  for (const auto& [key, value] : merged.items()) {
    (void)value;
    bool known = false;
    for (const auto& k : allowed)
      if (k == key) known = true;
    if (!known)
      throw std::invalid_argument("config: unknown key \"" + key + "\"");
  }
  RunConfig config;
  if (!merged.contains("subcommand"))
    throw std::invalid_argument("config: missing \"subcommand\"");
  config.subcommand = merged.at("subcommand").get<std::string>();
  bool valid_sub = false;
  for (const auto& s : known_subcommands())
    if (s == config.subcommand) valid_sub = true;
  if (!valid_sub)
    throw std::invalid_argument("config: unknown subcommand \"" +
                                config.subcommand + "\"");
  for (const auto& s : known_subcommands())
    if (s != config.subcommand && merged.contains(s))
      throw std::invalid_argument("config: parameters given for inactive subcommand \"" +
                                  s + "\"");
  if (merged.contains("seed")) {
    config.seed = merged.at("seed").get<std::uint64_t>();
  } else {
    std::random_device rd;
    config.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    config.seed_was_generated = true;
  }
  config.workers = merged.value("workers", 1);
  if (config.workers < 1)
    throw std::invalid_argument("config: workers must be positive");
  config.out = merged.value("out", std::string("-"));
  config.format = merged.value("format", std::string("json"));
  if (config.format != "json" && config.format != "csv")
    throw std::invalid_argument("config: format must be json or csv");
  config.no_timestamp = merged.value("no_timestamp", false);
  config.params = merged.value(config.subcommand, json::object());
  return config;
}

namespace detail {

inline json mc_estimate_json(const McEstimate& e) {
  return json{{"value", e.value},
              {"stderr", e.stderr_},
              {"n_samples", e.n_samples}};
}

inline json bound_report_json(const BoundReport& b) {
  json j{{"kind", to_string(b.kind)},
         {"value", b.value},
         {"applicable", b.applicable},
         {"violated_conditions", b.violated_conditions}};
  if (!std::isnan(b.u_min)) j["u_min"] = b.u_min;
  return j;
}

inline json fit_json(const ExponentFit& f) {
  return json{{"slope", f.slope},         {"intercept", f.intercept},
              {"slope_stderr", f.slope_stderr}, {"x_lo", f.x_lo},
              {"x_hi", f.x_hi},           {"n_points", f.n_points},
              {"r2", f.r2}};
}

inline json norming_json(const NormingConstants& nc) {
  return json{{"a", nc.a},         {"b", nc.b},       {"d_const", nc.d_const},
              {"t_horizon", nc.T}, {"n", nc.n},       {"r", nc.r},
              {"alpha", nc.alpha}, {"a_const", nc.a_const}};
}

inline json limit_report_json(const LimitCheckReport& r) {
  return json{{"ks_distance", r.ks_distance},
              {"n_replications", r.n_replications},
              {"target", r.target},
              {"norming", norming_json(r.norming)},
              {"quantiles",
               {{"p05", r.quantiles[0]},
                {"p25", r.quantiles[1]},
                {"p50", r.quantiles[2]},
                {"p75", r.quantiles[3]},
                {"p95", r.quantiles[4]}}},
              {"advisories", r.advisories}};
}

inline ThresholdVector vector_from_json(const json& value, const char* what) {
  std::vector<double> vals = grid_from_json(value);
  ThresholdVector u(static_cast<long>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) u(static_cast<long>(i)) = vals[i];
  (void)what;
  return u;
}

struct LoadedPair {
  GaussianArraySpec x, y;
  OrderStatSelector sel;
  ThresholdVector u;
  double jitter_x = 0.0, jitter_y = 0.0;
};

inline LoadedPair load_pair(const ParamReader& reader) {
  const std::string cov_x = reader.require<std::string>("cov_x");
  const std::string cov_y = reader.require<std::string>("cov_y");
  std::optional<int> d, n;
  if (reader.has("d")) d = reader.get<int>("d");
  if (reader.has("n")) n = reader.get<int>("n");
  ThresholdVector u = vector_from_json(reader.raw("u"), "u");
  if (!d) d = static_cast<int>(u.size());
  GaussianArraySpec x = load_spec(cov_x, d, n);
  GaussianArraySpec y = load_spec(cov_y, d, n);
  check_same_shape(x, y);
  OrderStatSelector sel{reader.value_or<int>("r", 1),
                        parse_convention(reader.value_or<std::string>(
                            "convention", "asc"))};
  sel.validate_for(x.n());
  check_threshold_dim(x, u);
  return LoadedPair{std::move(x), std::move(y), sel, std::move(u)};
}

// All seven bound kinds for one instance. Kind-specific precondition
// failures become inapplicable rows instead of aborting the table.
inline std::vector<BoundReport> all_bounds(const GaussianArraySpec& x,
                                           const GaussianArraySpec& y, int r,
                                           const ThresholdVector& u,
                                           const ThresholdVector* a,
                                           const ThresholdVector* b,
                                           const BoundOptions& opts) {
  std::vector<BoundReport> table;
  table.push_back(theorem1_abs_bound(x, y, u, opts));
  table.push_back(theorem1_signed_bound(x, y, u, opts));
  {
    ThresholdVector lo, hi;
    if (a && b) {
      lo = *a;
      hi = *b;
    } else {
      lo = ThresholdVector::Constant(u.size(),
                                     -std::numeric_limits<double>::infinity());
      hi = u;
    }
    table.push_back(remark_interval_bound(x, y, lo, hi, opts));
  }
  table.push_back(remark_large_u_bound(x, y, u, opts));
  try {
    auto [sgn, abs] = theorem3_bounds(x, y, r, u, opts);
    table.push_back(sgn);
    table.push_back(abs);
  } catch (const std::invalid_argument& e) {
    for (BoundKind kind : {BoundKind::thm3_signed, BoundKind::thm3_abs}) {
      BoundReport rep;
      rep.kind = kind;
      rep.applicable = false;
      rep.violated_conditions = {e.what()};
      table.push_back(rep);
    }
  }
  try {
    table.push_back(prop2_log_ratio_bound(x, y, u, opts));
  } catch (const std::exception& e) {
    BoundReport rep;
    rep.kind = BoundKind::prop2_log_ratio;
    rep.applicable = false;
    rep.violated_conditions = {e.what()};
    table.push_back(rep);
  }
  return table;
}

inline json run_bounds(const RunConfig& config) {
  ParamReader reader(config.params, "bounds");
  reader.finish({"cov_x", "cov_y", "d", "n", "r", "convention", "u", "a", "b",
                 "cond_tol"});
  LoadedPair pair = load_pair(reader);
  BoundOptions opts;
  opts.condition_tol = reader.value_or<double>("cond_tol", 1e-12);
  std::optional<ThresholdVector> a, b;
  if (reader.has("a") != reader.has("b"))
    throw std::invalid_argument("bounds: give both interval endpoints a and b");
  if (reader.has("a")) {
    a = vector_from_json(reader.raw("a"), "a");
    b = vector_from_json(reader.raw("b"), "b");
  }
  const int r_desc_free = pair.sel.rank;  // bounds are rank-uniform except thm3
  (void)r_desc_free;
  const int r_asc = pair.sel.ascending_rank(pair.x.n());
  std::vector<BoundReport> table =
      all_bounds(pair.x, pair.y, r_asc, pair.u, a ? &*a : nullptr,
                 b ? &*b : nullptr, opts);
  SlepianConditions slep = slepian_conditions(pair.x, pair.y, opts);
  json rows = json::array();
  for (const BoundReport& rep : table) rows.push_back(bound_report_json(rep));
  return json{{"table", rows},
              {"slepian_conditions",
               {{"holds", slep.holds}, {"violations", slep.violations}}}};
}

inline json run_verify(const RunConfig& config) {
  ParamReader reader(config.params, "verify");
  reader.finish({"cov_x", "cov_y", "d", "n", "r", "convention", "u", "samples",
                 "antithetic", "crn", "chunk", "cond_tol"});
  LoadedPair pair = load_pair(reader);
  McOptions mc;
  mc.n_samples = reader.value_or<long long>("samples", 1'000'000);
  mc.seed = config.seed;
  mc.workers = config.workers;
  mc.antithetic = reader.value_or<bool>("antithetic", true);
  mc.common_random_numbers = reader.value_or<bool>("crn", false);
  mc.chunk_size = reader.value_or<long long>("chunk", 1 << 14);
  BoundOptions opts;
  opts.condition_tol = reader.value_or<double>("cond_tol", 1e-12);

  const McEstimate delta =
      estimate_delta(pair.x, pair.y, pair.sel, pair.u, mc);
  const int r_asc = pair.sel.ascending_rank(pair.x.n());
  std::vector<BoundReport> table =
      all_bounds(pair.x, pair.y, r_asc, pair.u, nullptr, nullptr, opts);

  std::optional<McEstimate> theta;
  std::string theta_note;
  const BoundReport* prop2 = nullptr;
  for (const BoundReport& rep : table)
    if (rep.kind == BoundKind::prop2_log_ratio) prop2 = &rep;
  if (prop2 && prop2->applicable && pair.u.minCoeff() >= 0.0) {
    try {
      theta = estimate_theta_log(pair.x, pair.y, pair.sel, pair.u, mc);
    } catch (const std::runtime_error& e) {
      theta_note = e.what();
    }
  }

  json rows = json::array();
  for (const BoundReport& rep : table) {
    json row = bound_report_json(rep);
    bool dominated = false;
    switch (rep.kind) {
      case BoundKind::thm1_abs:
      case BoundKind::thm3_abs:
        dominated =
            std::abs(delta.value) <= rep.value + 3.0 * delta.stderr_;
        break;
      case BoundKind::thm1_signed:
      case BoundKind::remark_large_u:
      case BoundKind::thm3_signed:
        dominated = delta.value <= rep.value + 3.0 * delta.stderr_;
        break;
      case BoundKind::remark_interval:
        // Interval event with a = -inf reduces to the CDF difference.
        dominated =
            std::abs(delta.value) <= rep.value + 3.0 * delta.stderr_;
        break;
      case BoundKind::prop2_log_ratio:
        dominated = theta.has_value()
                        ? theta->value <= rep.value + 3.0 * theta->stderr_
                        : false;
        break;
    }
    row["dominated"] = dominated;
    rows.push_back(row);
  }
  json result{{"estimate", delta.value},
              {"stderr", delta.stderr_},
              {"n_samples", delta.n_samples},
              {"bounds", rows}};
  result["theta_log"] =
      theta ? mc_estimate_json(*theta) : json(nullptr);
  if (!theta_note.empty()) result["theta_log_note"] = theta_note;
  return result;
}

inline json lowtail_curve_json(const std::vector<LowtailPoint>& curve) {
  json rows = json::array();
  for (const LowtailPoint& p : curve)
    rows.push_back({{"x", p.x},
                    {"p_hat", p.est.value},
                    {"stderr", p.est.stderr_},
                    {"coarse_p_hat", p.coarse_value},
                    {"grid_delta", p.grid_delta},
                    {"censored", p.censored}});
  return rows;
}

inline std::pair<double, double> default_fit_window(
    const std::vector<double>& xs) {
  // Exclude the largest 20 percent of levels: pre-asymptotic territory.
  std::vector<double> sorted(xs);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t cut = sorted.size() - std::max<std::size_t>(1, sorted.size() / 5);
  const double hi = sorted[std::min(cut, sorted.size() - 1)];
  return {sorted.front(), hi};
}

inline json run_lowtail(const RunConfig& config) {
  ParamReader reader(config.params, "lowtail");
  reader.finish({"alpha", "n", "r", "convention", "c", "x_grid", "paths",
                 "grid_m", "fit_lo", "fit_hi", "dump_paths"});
  LowtailParams params;
  params.alpha = reader.value_or<double>("alpha", 1.0);
  params.n = reader.value_or<int>("n", 1);
  params.sel = {reader.value_or<int>("r", 1),
                parse_convention(reader.value_or<std::string>("convention", "desc"))};
  params.c = reader.value_or<double>("c", 0.0);
  params.x_grid = reader.has("x_grid")
                      ? grid_from_json(reader.raw("x_grid"))
                      : parse_grid_list("geom:1.0:0.05:0.8");
  for (double x : params.x_grid)
    if (!(x > 0.0))
      throw std::invalid_argument("lowtail: levels must be positive");
  params.n_paths = reader.value_or<long long>("paths", 20000);
  params.grid = GridSpec{0.0, 1.0, reader.value_or<int>("grid_m", 1025)};
  params.seed = config.seed;
  params.workers = config.workers;
  const std::vector<LowtailPoint> curve = lowtail_curve(params);
  if (reader.has("dump_paths")) {
    std::ofstream os(reader.get<std::string>("dump_paths"));
    const CorrelationModel model = CorrelationModel::fbm(params.alpha);
    const GridSpec fine = params.grid.refined();
    const auto paths =
        sample_paths(model, fine, params.n + (params.c > 0.0 ? 1 : 0),
                     params.seed, choose_method(model, fine.points()),
                     config.workers);
    dump_paths_csv(paths, os);
  }
  auto [lo, hi] = default_fit_window(params.x_grid);
  lo = reader.value_or<double>("fit_lo", lo);
  hi = reader.value_or<double>("fit_hi", hi);
  json result{{"curve", lowtail_curve_json(curve)}};
  try {
    const ExponentFit fit = fit_exponent(to_curve_points(curve), lo, hi);
    result["fit"] = fit_json(fit);
    result["exponent_estimate"] = {{"two_c_over_alpha", fit.slope},
                                   {"c_hat", 0.5 * params.alpha * fit.slope}};
  } catch (const std::invalid_argument& e) {
    result["fit_error"] = e.what();
  }
  return result;
}

inline json run_pursuit(const RunConfig& config) {
  ParamReader reader(config.params, "pursuit");
  reader.finish({"alpha", "n", "r", "convention", "s_grid", "paths", "grid_m",
                 "fit_lo", "fit_hi"});
  PursuitParams params;
  params.alpha = reader.value_or<double>("alpha", 1.0);
  params.n = reader.value_or<int>("n", 1);
  params.sel = {reader.value_or<int>("r", 1),
                parse_convention(reader.value_or<std::string>("convention", "desc"))};
  params.s_grid = reader.has("s_grid")
                      ? grid_from_json(reader.raw("s_grid"))
                      : parse_grid_list("geom:0.5:8.0:1.5");
  params.n_paths = reader.value_or<long long>("paths", 20000);
  params.grid = GridSpec{0.0, 1.0, reader.value_or<int>("grid_m", 1025)};
  params.seed = config.seed;
  params.workers = config.workers;
  const std::vector<PursuitPoint> curve = pursuit_tail(params);
  json rows = json::array();
  for (const PursuitPoint& p : curve)
    rows.push_back({{"s", p.s},
                    {"level", p.level},
                    {"p_hat", p.est.value},
                    {"stderr", p.est.stderr_},
                    {"grid_delta", p.grid_delta},
                    {"censored", p.censored}});
  json result{{"curve", rows}};
  const double lo = reader.value_or<double>("fit_lo", params.s_grid.front());
  const double hi = reader.value_or<double>("fit_hi", params.s_grid.back());
  try {
    const ExponentFit fit = fit_pursuit_exponent(curve, lo, hi);
    result["fit"] = fit_json(fit);
    result["q_hat"] = -fit.slope;
    result["q_stderr"] = fit.slope_stderr;
  } catch (const std::invalid_argument& e) {
    result["fit_error"] = e.what();
  }
  return result;
}

inline json run_lishao(const RunConfig& config) {
  ParamReader reader(config.params, "lishao");
  reader.finish({"alpha", "n", "r", "convention", "c", "t_ladder",
                 "points_per_unit_time", "paths"});
  LishaoParams params;
  params.alpha = reader.value_or<double>("alpha", 1.0);
  params.n = reader.value_or<int>("n", 1);
  params.sel = {reader.value_or<int>("r", 1),
                parse_convention(reader.value_or<std::string>("convention", "desc"))};
  params.c = reader.value_or<double>("c", 0.0);
  params.t_ladder = reader.has("t_ladder")
                        ? grid_from_json(reader.raw("t_ladder"))
                        : std::vector<double>{2.0, 4.0, 8.0};
  params.points_per_unit_time = reader.value_or<int>("points_per_unit_time", 16);
  params.n_paths = reader.value_or<long long>("paths", 10000);
  params.seed = config.seed;
  params.workers = config.workers;
  const std::vector<LishaoPoint> ladder = lishao_constant(params);
  json rows = json::array();
  for (const LishaoPoint& p : ladder)
    rows.push_back({{"t_horizon", p.t_horizon},
                    {"p_hat", p.p_hat},
                    {"constant", p.constant.value},
                    {"stderr", p.constant.stderr_}});
  return json{{"ladder", rows}};
}

inline json run_slepian(const RunConfig& config) {
  ParamReader reader(config.params, "slepian");
  reader.finish({"model_x", "model_y", "model_z", "c", "level", "n", "r",
                 "convention", "grid_m", "t1", "paths", "variant2"});
  SlepianProcessParams params;
  params.model_x = parse_model(reader.value_or<std::string>("model_x", "powerexp:1.0:1.0"));
  params.model_y = parse_model(reader.value_or<std::string>("model_y", "powerexp:1.0:2.0"));
  params.model_z = parse_model(reader.value_or<std::string>("model_z", "powerexp:1.0:1.0"));
  params.c = reader.value_or<double>("c", 0.0);
  params.level = reader.value_or<double>("level", 1.0);
  params.n = reader.value_or<int>("n", 1);
  params.sel = {reader.value_or<int>("r", 1),
                parse_convention(reader.value_or<std::string>("convention", "desc"))};
  params.grid = GridSpec{0.0, reader.value_or<double>("t1", 1.0),
                         reader.value_or<int>("grid_m", 257)};
  params.n_paths = reader.value_or<long long>("paths", 4000);
  params.seed = config.seed;
  params.workers = config.workers;
  params.run_variant2 = reader.value_or<bool>("variant2", false);
  const SlepianProcessResult r = slepian_process_check(params);
  json result{{"p_x", mc_estimate_json(r.p_x)},
              {"p_y", mc_estimate_json(r.p_y)},
              {"ordered", r.ordered}};
  if (r.p_zx) {
    result["variant2"] = {{"p_zx", mc_estimate_json(*r.p_zx)},
                          {"p_zy", mc_estimate_json(*r.p_zy)},
                          {"ordered", r.ordered2}};
  }
  return result;
}

inline json run_gumbel(const RunConfig& config) {
  ParamReader reader(config.params, "gumbel");
  reader.finish({"variant", "gamma", "rho_t", "alpha", "n", "r", "convention",
                 "t", "reps", "a_const", "grid_m", "points_per_block",
                 "calibrate", "cal_u", "cal_t", "cal_reps", "cal_grid_m"});
  const std::string variant = reader.value_or<std::string>("variant", "a");
  const double alpha = reader.value_or<double>("alpha", 1.0);
  const int n = reader.value_or<int>("n", 1);
  OrderStatSelector sel{reader.value_or<int>("r", 1),
                        parse_convention(reader.value_or<std::string>(
                            "convention", "desc"))};
  const double T = reader.value_or<double>("t", 100.0);
  const int reps = reader.value_or<int>("reps", 2000);
  const CorrelationModel model = CorrelationModel::power_exp(alpha, 1.0);

  double a_const = reader.value_or<double>("a_const", 1.0);
  json calibration(nullptr);
  if (reader.value_or<bool>("calibrate", false)) {
    const McEstimate cal = calibrate_a_const(
        model, n, sel, reader.value_or<double>("cal_u", 2.5),
        reader.value_or<double>("cal_t", 20.0),
        reader.value_or<int>("cal_grid_m", 641),
        reader.value_or<int>("cal_reps", 4000), splitmix64(config.seed ^ 0xCA11),
        config.workers);
    a_const = cal.value;
    calibration = mc_estimate_json(cal);
  }

  LimitCheckReport report;
  if (variant == "a") {
    GumbelParams params;
    params.model = model;
    params.n = n;
    params.sel = sel;
    params.T = T;
    params.n_reps = reps;
    params.grid_m = reader.value_or<int>("grid_m", (1 << 14) + 1);
    params.a_const = a_const;
    params.seed = config.seed;
    params.workers = config.workers;
    report = gumbel_experiment(params);
  } else if (variant == "b" || variant == "c") {
    MixtureParams params;
    params.base_model = model;
    params.n = n;
    params.sel = sel;
    params.T = T;
    params.n_reps = reps;
    params.points_per_block = reader.value_or<int>("points_per_block", 64);
    params.a_const = a_const;
    params.seed = config.seed;
    params.workers = config.workers;
    if (variant == "b") {
      report = normal_limit_experiment(reader.require<double>("rho_t"), params);
    } else {
      report = mixed_gumbel_experiment(reader.require<double>("gamma"), params);
    }
  } else {
    throw std::invalid_argument("gumbel: variant must be a, b or c");
  }
  json result = limit_report_json(report);
  result["variant"] = variant;
  result["calibration"] = calibration;
  return result;
}

inline json run_constants(const RunConfig& config) {
  ParamReader reader(config.params, "constants");
  reader.finish({"n", "r", "alpha", "t", "a_const"});
  const NormingConstants nc = norming_constants(
      reader.value_or<int>("n", 1), reader.value_or<int>("r", 1),
      reader.value_or<double>("alpha", 1.0), reader.require<double>("t"),
      reader.value_or<double>("a_const", 1.0));
  return norming_json(nc);
}

}  // namespace detail

// Dispatch; the returned report embeds the resolved config for replay.
inline json run(const RunConfig& config) {
  json results;
  if (config.subcommand == "bounds") results = detail::run_bounds(config);
  else if (config.subcommand == "verify") results = detail::run_verify(config);
  else if (config.subcommand == "lowtail") results = detail::run_lowtail(config);
  else if (config.subcommand == "pursuit") results = detail::run_pursuit(config);
  else if (config.subcommand == "lishao") results = detail::run_lishao(config);
  else if (config.subcommand == "slepian") results = detail::run_slepian(config);
  else if (config.subcommand == "gumbel") results = detail::run_gumbel(config);
  else if (config.subcommand == "constants") results = detail::run_constants(config);
  else throw std::invalid_argument("unknown subcommand " + config.subcommand);

  json resolved{{"subcommand", config.subcommand},
                {"seed", config.seed},
                {"out", config.out},
                {"format", config.format},
                {"no_timestamp", config.no_timestamp},
                {config.subcommand, config.params}};
  // Worker count is execution infrastructure, not part of the scientific
  // record: results are bit-identical at any worker count by construction.
  json report{{"schema", "ordstat-report-v1"},
              {"library_version", kVersion},
              {"subcommand", config.subcommand},
              {"config", resolved},
              {"results", results}};
  if (!config.no_timestamp) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
    report["timestamp"] = buf;
  }
  return report;
}

// CSV projection of a report: curves and tables become rows, scalar results
// become key,value pairs.
inline std::string report_to_csv(const json& report) {
  std::ostringstream os;
  os.precision(17);
  const json& results = report.at("results");
  const std::string sub = report.at("subcommand").get<std::string>();
  auto scalar_rows = [&os](const json& obj, const std::string& prefix,
                           auto&& self) -> void {
    for (const auto& [key, value] : obj.items()) {
      const std::string name = prefix.empty() ? key : prefix + "." + key;
      if (value.is_object()) {
        self(value, name, self);
      } else if (value.is_array()) {
        os << name << ",\"" << value.dump() << "\"\n";
      } else {
        os << name << "," << value.dump() << "\n";
      }
    }
  };
  if (sub == "bounds") {
    os << "kind,value,applicable,violated_conditions,u_min\n";
    for (const auto& row : results.at("table")) {
      os << row.at("kind").get<std::string>() << ","
         << row.at("value").dump() << "," << (row.at("applicable").get<bool>() ? 1 : 0)
         << ",\"";
      const auto& viol = row.at("violated_conditions");
      for (std::size_t i = 0; i < viol.size(); ++i)
        os << (i ? "|" : "") << viol[i].get<std::string>();
      os << "\"," << (row.contains("u_min") ? row.at("u_min").dump() : "") << "\n";
    }
  } else if (sub == "lowtail") {
    os << "x,p_hat,stderr,coarse_p_hat,grid_delta,censored\n";
    for (const auto& row : results.at("curve"))
      os << row.at("x").dump() << "," << row.at("p_hat").dump() << ","
         << row.at("stderr").dump() << "," << row.at("coarse_p_hat").dump() << ","
         << row.at("grid_delta").dump() << ","
         << (row.at("censored").get<bool>() ? 1 : 0) << "\n";
  } else if (sub == "pursuit") {
    os << "s,level,p_hat,stderr,grid_delta,censored\n";
    for (const auto& row : results.at("curve"))
      os << row.at("s").dump() << "," << row.at("level").dump() << ","
         << row.at("p_hat").dump() << "," << row.at("stderr").dump() << ","
         << row.at("grid_delta").dump() << ","
         << (row.at("censored").get<bool>() ? 1 : 0) << "\n";
  } else if (sub == "lishao") {
    os << "t_horizon,p_hat,constant,stderr\n";
    for (const auto& row : results.at("ladder"))
      os << row.at("t_horizon").dump() << "," << row.at("p_hat").dump() << ","
         << row.at("constant").dump() << "," << row.at("stderr").dump() << "\n";
  } else {
    os << "key,value\n";
    scalar_rows(results, "", scalar_rows);
  }
  return os.str();
}

// Writes the report; "-" means stdout.
inline void write_report(const RunConfig& config, const json& report,
                         std::ostream& console) {
  std::string payload = config.format == "json"
                            ? report.dump(2) + "\n"
                            : report_to_csv(report);
  if (config.out == "-") {
    console << payload;
    return;
  }
  std::ofstream os(config.out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write report to " + config.out);
  os << payload;
}

}  // namespace ordstat
