#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordstat/bounds.hpp"
#include "ordstat/fit.hpp"
#include "ordstat/mc.hpp"
#include "ordstat/paths.hpp"
#include "ordstat/quadrature.hpp"
#include "ordstat/stats.hpp"

namespace ordstat {

namespace detail {

// Fills 2*k path buffers for two consecutive replications from one
// substream; circulant pairs are split across the replications so no draw is
// wasted. paths[0..k-1] belong to the first replication, paths[k..2k-1] to
// the second.
inline void fill_replication_pair(const PathSampler& sampler, NormalRng& rng,
                                  std::vector<std::vector<double>>& paths,
                                  int k) {
  for (int j = 0; j < k; ++j)
    sampler.sample_pair(rng, paths[static_cast<std::size_t>(j)],
                        paths[static_cast<std::size_t>(k + j)]);
}

// Pointwise r-th order statistic (ascending rank ra within a column of n
// values) plus c * z, maximized over the given index stride.
inline double orderstat_sup(const std::vector<std::vector<double>>& paths,
                            int first, int n, int ra, double c,
                            const std::vector<double>* z, double z_sign,
                            std::size_t m, std::size_t stride) {
  thread_local std::vector<double> column;
  column.resize(static_cast<std::size_t>(n));
  double sup = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < m; idx += stride) {
    for (int j = 0; j < n; ++j)
      column[static_cast<std::size_t>(j)] =
          paths[static_cast<std::size_t>(first + j)][idx];
    std::nth_element(column.begin(), column.begin() + (ra - 1), column.end());
    double v = column[static_cast<std::size_t>(ra - 1)];
    if (z) v += c * z_sign * (*z)[idx];
    sup = std::max(sup, v);
  }
  return sup;
}

inline PathMethod choose_method(const CorrelationModel& model,
                                const std::vector<double>& times) {
  const std::size_t n = times.size() - 1;
  const bool pow2 = is_power_of_two(2 * n);
  if (!pow2) return PathMethod::cholesky;
  if (model.kind() == CorrelationModel::Kind::fbm)
    return times.front() == 0.0 ? PathMethod::circulant : PathMethod::cholesky;
  return model.stationary() ? PathMethod::circulant : PathMethod::cholesky;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lower-tail curves
// ---------------------------------------------------------------------------

struct LowtailParams {
  double alpha = 1.0;
  int n = 1;
  OrderStatSelector sel{1, RankConvention::descending};
  double c = 0.0;
  // Sign applied to the independent companion process Z; -1 gives the
  // pursuit difference. Distributionally irrelevant since Z is centered.
  double z_sign = 1.0;
  std::vector<double> x_grid;
  long long n_paths = 20000;
  GridSpec grid{0.0, 1.0, 1025};  // estimates also computed at grid.refined()
  std::uint64_t seed = 0;
  int workers = 1;
};

struct LowtailPoint {
  double x = 0.0;
  McEstimate est;              // finer-grid estimate (2m-1 points)
  double coarse_value = 0.0;   // base-grid estimate (m points)
  double grid_delta = 0.0;     // |fine - coarse|, pure discretization
  bool censored = false;       // zero successes on the fine grid
};

// P{ sup_{[0,1]} ( X_{r:n}(t) + c Z(t) ) <= x } over a ladder of levels, with
// X_{r:n} generated by n iid fbm copies and Z an independent fbm of the same
// index. Both grid resolutions are evaluated on the same sample paths, so the
// reported delta isolates discretization from Monte Carlo noise.
inline std::vector<LowtailPoint> lowtail_curve(const LowtailParams& params) {
  if (params.x_grid.empty())
    throw std::invalid_argument("lowtail_curve: empty x grid");
  params.grid.validate();
  if (params.n < 1) throw std::invalid_argument("lowtail_curve: need n >= 1");
  params.sel.validate_for(params.n);
  if (params.n_paths < 1)
    throw std::invalid_argument("lowtail_curve: need n_paths >= 1");

  const GridSpec fine = params.grid.refined();
  const CorrelationModel model = CorrelationModel::fbm(params.alpha);
  const std::vector<double> times = fine.points();
  PathSampler sampler(model, times, detail::choose_method(model, times));
  const std::size_t m = sampler.grid_size();
  const int ra = params.sel.ascending_rank(params.n);
  const bool with_z = params.c > 0.0;
  const int k = params.n + (with_z ? 1 : 0);
  const std::size_t n_levels = params.x_grid.size();

  const long long n_pairs = (params.n_paths + 1) / 2;
  struct Tally {
    std::vector<long long> fine, coarse;
  };
  std::vector<Tally> tallies(static_cast<std::size_t>(n_pairs));
  run_chunks(static_cast<std::size_t>(n_pairs), params.workers, [&](std::size_t p) {
    NormalRng rng(substream_seed(params.seed, 11, p));
    thread_local std::vector<std::vector<double>> paths;
    paths.resize(static_cast<std::size_t>(2 * k));
    for (auto& buf : paths) buf.resize(m);
    detail::fill_replication_pair(sampler, rng, paths, k);
    Tally t;
    t.fine.assign(n_levels, 0);
    t.coarse.assign(n_levels, 0);
    const long long reps_here =
        (2 * static_cast<long long>(p) + 1 < params.n_paths) ? 2 : 1;
    for (long long rep = 0; rep < reps_here; ++rep) {
      const int base = static_cast<int>(rep) * k;
      const std::vector<double>* z =
          with_z ? &paths[static_cast<std::size_t>(base + params.n)] : nullptr;
      const double sup_fine = detail::orderstat_sup(
          paths, base, params.n, ra, params.c, z, params.z_sign, m, 1);
      const double sup_coarse = detail::orderstat_sup(
          paths, base, params.n, ra, params.c, z, params.z_sign, m, 2);
      for (std::size_t j = 0; j < n_levels; ++j) {
        if (sup_fine <= params.x_grid[j]) ++t.fine[j];
        if (sup_coarse <= params.x_grid[j]) ++t.coarse[j];
      }
    }
    tallies[p] = std::move(t);
  });

  std::vector<long long> fine_hits(n_levels, 0), coarse_hits(n_levels, 0);
  for (const Tally& t : tallies)
    for (std::size_t j = 0; j < n_levels; ++j) {
      fine_hits[j] += t.fine[j];
      coarse_hits[j] += t.coarse[j];
    }
  const double np = static_cast<double>(params.n_paths);
  std::vector<LowtailPoint> out(n_levels);
  for (std::size_t j = 0; j < n_levels; ++j) {
    const double pf = static_cast<double>(fine_hits[j]) / np;
    const double pc = static_cast<double>(coarse_hits[j]) / np;
    out[j].x = params.x_grid[j];
    out[j].est = {pf, std::sqrt(pf * (1.0 - pf) / np), params.n_paths,
                  params.seed};
    out[j].coarse_value = pc;
    out[j].grid_delta = std::abs(pf - pc);
    out[j].censored = fine_hits[j] == 0;
  }
  return out;
}

inline std::vector<CurvePoint> to_curve_points(
    const std::vector<LowtailPoint>& curve) {
  std::vector<CurvePoint> pts;
  pts.reserve(curve.size());
  for (const LowtailPoint& p : curve)
    pts.push_back({p.x, p.est.value, p.est.stderr_, p.censored});
  return pts;
}

// ---------------------------------------------------------------------------
// Fractional Brownian pursuit
// ---------------------------------------------------------------------------

struct PursuitParams {
  double alpha = 1.0;
  int n = 1;
  OrderStatSelector sel{1, RankConvention::descending};
  std::vector<double> s_grid;  // increasing positive capture horizons
  long long n_paths = 20000;
  GridSpec grid{0.0, 1.0, 1025};
  std::uint64_t seed = 0;
  int workers = 1;
};

struct PursuitPoint {
  double s = 0.0;
  double level = 0.0;  // s^{-alpha/2}
  McEstimate est;      // P{ tau > s }
  double grid_delta = 0.0;
  bool censored = false;
};

// P{ tau_{r:n} > s } = P{ sup_{[0,1]} (B_{r:n}(t) - B^{(0)}(t)) <= s^{-alpha/2} }.
inline std::vector<PursuitPoint> pursuit_tail(const PursuitParams& params) {
  if (params.s_grid.empty())
    throw std::invalid_argument("pursuit_tail: empty s grid");
  for (double s : params.s_grid)
    if (!(s > 0.0))
      throw std::invalid_argument("pursuit_tail: capture times must be positive");
  LowtailParams low;
  low.alpha = params.alpha;
  low.n = params.n;
  low.sel = params.sel;
  low.c = 1.0;
  low.z_sign = -1.0;
  low.n_paths = params.n_paths;
  low.grid = params.grid;
  low.seed = params.seed;
  low.workers = params.workers;
  low.x_grid.reserve(params.s_grid.size());
  for (double s : params.s_grid)
    low.x_grid.push_back(std::pow(s, -0.5 * params.alpha));
  const std::vector<LowtailPoint> curve = lowtail_curve(low);
  std::vector<PursuitPoint> out(curve.size());
  for (std::size_t j = 0; j < curve.size(); ++j) {
    out[j].s = params.s_grid[j];
    out[j].level = curve[j].x;
    out[j].est = curve[j].est;
    out[j].grid_delta = curve[j].grid_delta;
    out[j].censored = curve[j].censored;
  }
  return out;
}

// q_hat from a pursuit curve: slope of ln P{tau > s} on ln s, negated.
inline ExponentFit fit_pursuit_exponent(const std::vector<PursuitPoint>& curve,
                                        double s_lo, double s_hi) {
  std::vector<CurvePoint> pts;
  pts.reserve(curve.size());
  for (const PursuitPoint& p : curve)
    pts.push_back({p.s, p.est.value, p.est.stderr_, p.censored});
  return fit_exponent(pts, s_lo, s_hi);
}

// ---------------------------------------------------------------------------
// Li-Shao type constants via the Lamperti dual
// ---------------------------------------------------------------------------

struct LishaoParams {
  double alpha = 1.0;
  int n = 1;
  OrderStatSelector sel{1, RankConvention::descending};
  double c = 0.0;
  std::vector<double> t_ladder = {2.0, 4.0, 8.0};
  int points_per_unit_time = 16;
  long long n_paths = 10000;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct LishaoPoint {
  double t_horizon = 0.0;
  double p_hat = 0.0;
  McEstimate constant;  // -(1/T) ln p_hat, delta-method stderr
};

// -(1/T) ln P{ sup_{[0,T]} ( X*_{r:n}(s) + c Z*(s) ) <= 0 } for a ladder of
// horizons; the duals are Lamperti transforms of fbm paths sampled exactly on
// the exponential grid.
inline std::vector<LishaoPoint> lishao_constant(const LishaoParams& params) {
  if (params.t_ladder.empty())
    throw std::invalid_argument("lishao_constant: empty horizon ladder");
  params.sel.validate_for(params.n);
  const CorrelationModel model = CorrelationModel::fbm(params.alpha);
  const bool with_z = params.c > 0.0;
  const int k = params.n + (with_z ? 1 : 0);
  std::vector<LishaoPoint> out;
  out.reserve(params.t_ladder.size());
  for (std::size_t ti = 0; ti < params.t_ladder.size(); ++ti) {
    const double horizon = params.t_ladder[ti];
    if (!(horizon > 0.0))
      throw std::invalid_argument("lishao_constant: horizons must be positive");
    const int m =
        static_cast<int>(std::lround(horizon * params.points_per_unit_time)) + 1;
    if (m < 2) throw std::invalid_argument("lishao_constant: grid too coarse");
    const std::vector<double> times = exponential_grid(0.0, horizon, m);
    PathSampler sampler(model, times, PathMethod::cholesky);
    // e^{-alpha s/2} factors of the dual, precomputed on the uniform s-grid.
    std::vector<double> damp(static_cast<std::size_t>(m));
    const double ds = horizon / (m - 1);
    for (int j = 0; j < m; ++j)
      damp[static_cast<std::size_t>(j)] = std::exp(-0.5 * params.alpha * j * ds);
    const int ra = params.sel.ascending_rank(params.n);

    const long long n_pairs = (params.n_paths + 1) / 2;
    std::vector<long long> hits(static_cast<std::size_t>(n_pairs), 0);
    run_chunks(static_cast<std::size_t>(n_pairs), params.workers, [&](std::size_t p) {
      NormalRng rng(substream_seed(params.seed, 31 + ti, p));
      thread_local std::vector<std::vector<double>> paths;
      paths.resize(static_cast<std::size_t>(2 * k));
      for (auto& buf : paths) buf.resize(static_cast<std::size_t>(m));
      detail::fill_replication_pair(sampler, rng, paths, k);
      // Dual transform in place.
      for (auto& buf : paths)
        for (int j = 0; j < m; ++j)
          buf[static_cast<std::size_t>(j)] *= damp[static_cast<std::size_t>(j)];
      const long long reps_here =
          (2 * static_cast<long long>(p) + 1 < params.n_paths) ? 2 : 1;
      long long h = 0;
      for (long long rep = 0; rep < reps_here; ++rep) {
        const int base = static_cast<int>(rep) * k;
        const std::vector<double>* z =
            with_z ? &paths[static_cast<std::size_t>(base + params.n)] : nullptr;
        const double sup = detail::orderstat_sup(
            paths, base, params.n, ra, params.c, z, 1.0,
            static_cast<std::size_t>(m), 1);
        if (sup <= 0.0) ++h;
      }
      hits[p] = h;
    });
    long long total = 0;
    for (long long h : hits) total += h;
    if (total == 0) {
      std::ostringstream os;
      os << "lishao_constant: zero successes at T = " << horizon
         << "; reduce the horizon or increase the path budget";
      throw std::runtime_error(os.str());
    }
    const double np = static_cast<double>(params.n_paths);
    const double p_hat = static_cast<double>(total) / np;
    const double se_p = std::sqrt(p_hat * (1.0 - p_hat) / np);
    LishaoPoint point;
    point.t_horizon = horizon;
    point.p_hat = p_hat;
    point.constant = {-std::log(p_hat) / horizon, se_p / (horizon * p_hat),
                      params.n_paths, params.seed};
    out.push_back(point);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Slepian ordering for processes
// ---------------------------------------------------------------------------

struct SlepianProcessParams {
  CorrelationModel model_x = CorrelationModel::power_exp(1.0, 1.0);
  CorrelationModel model_y = CorrelationModel::power_exp(1.0, 2.0);
  CorrelationModel model_z = CorrelationModel::power_exp(1.0, 1.0);
  double c = 0.0;
  double level = 1.0;
  int n = 1;
  OrderStatSelector sel{1, RankConvention::descending};
  GridSpec grid{0.0, 1.0, 257};
  long long n_paths = 4000;
  std::uint64_t seed = 0;
  int workers = 1;
  bool run_variant2 = false;
};

struct SlepianProcessResult {
  McEstimate p_x, p_y;
  bool ordered = false;
  // Optional second form: Z_{r:n} + cX against Z_{r:n} + cY.
  std::optional<McEstimate> p_zx, p_zy;
  bool ordered2 = false;
};

namespace detail {

// P( sup_grid( r-th orderstat of n iid copies + c * companion ) > level ).
inline McEstimate sup_exceed_prob(const CorrelationModel& order_model,
                                  const CorrelationModel* companion_model,
                                  double c, double level, int n, int ra,
                                  const GridSpec& grid, long long n_paths,
                                  std::uint64_t seed, std::uint64_t stream,
                                  int workers) {
  const std::vector<double> times = grid.points();
  PathSampler order_sampler(order_model, times,
                            choose_method(order_model, times));
  std::optional<PathSampler> companion;
  if (companion_model && c > 0.0)
    companion.emplace(*companion_model, times,
                      choose_method(*companion_model, times));
  const std::size_t m = order_sampler.grid_size();
  const long long n_pairs = (n_paths + 1) / 2;
  std::vector<long long> hits(static_cast<std::size_t>(n_pairs), 0);
  run_chunks(static_cast<std::size_t>(n_pairs), workers, [&](std::size_t p) {
    NormalRng rng(substream_seed(seed, stream, p));
    thread_local std::vector<std::vector<double>> paths;
    paths.resize(static_cast<std::size_t>(2 * n));
    for (auto& buf : paths) buf.resize(m);
    fill_replication_pair(order_sampler, rng, paths, n);
    thread_local std::vector<double> z1, z2;
    if (companion) {
      z1.resize(m);
      z2.resize(m);
      companion->sample_pair(rng, z1, z2);
    }
    const long long reps_here = (2 * static_cast<long long>(p) + 1 < n_paths) ? 2 : 1;
    long long h = 0;
    for (long long rep = 0; rep < reps_here; ++rep) {
      const std::vector<double>* z = companion ? (rep == 0 ? &z1 : &z2) : nullptr;
      const double sup = orderstat_sup(paths, static_cast<int>(rep) * n, n, ra,
                                       c, z, 1.0, m, 1);
      if (sup > level) ++h;
    }
    hits[p] = h;
  });
  long long total = 0;
  for (long long h : hits) total += h;
  const double np = static_cast<double>(n_paths);
  const double p_hat = static_cast<double>(total) / np;
  return {p_hat, std::sqrt(p_hat * (1.0 - p_hat) / np), n_paths, seed};
}

}  // namespace detail

// Verifies the precondition (equal variances, sigma_X <= sigma_Y on the grid)
// and estimates both exceedance probabilities with independent streams.
inline SlepianProcessResult slepian_process_check(
    const SlepianProcessParams& params) {
  params.grid.validate();
  params.sel.validate_for(params.n);
  const std::vector<double> times = params.grid.points();
  for (std::size_t a = 0; a < times.size(); ++a) {
    const double vx = params.model_x.kernel(times[a], times[a]);
    const double vy = params.model_y.kernel(times[a], times[a]);
    if (std::abs(vx - vy) > 1e-9)
      throw std::invalid_argument(
          "slepian_process_check: variance functions differ on the grid");
    for (std::size_t b = 0; b <= a; ++b) {
      const double sx = params.model_x.kernel(times[b], times[a]);
      const double sy = params.model_y.kernel(times[b], times[a]);
      if (sx > sy + 1e-9)
        throw std::invalid_argument(
            "slepian_process_check: sigma_X <= sigma_Y violated on the grid");
    }
  }
  const int ra = params.sel.ascending_rank(params.n);
  SlepianProcessResult result;
  const CorrelationModel* z =
      params.c > 0.0 ? &params.model_z : nullptr;
  result.p_x = detail::sup_exceed_prob(params.model_x, z, params.c,
                                       params.level, params.n, ra, params.grid,
                                       params.n_paths, params.seed, 41,
                                       params.workers);
  result.p_y = detail::sup_exceed_prob(params.model_y, z, params.c,
                                       params.level, params.n, ra, params.grid,
                                       params.n_paths, params.seed, 42,
                                       params.workers);
  const double se =
      std::sqrt(result.p_x.stderr_ * result.p_x.stderr_ +
                result.p_y.stderr_ * result.p_y.stderr_);
  result.ordered = result.p_x.value >= result.p_y.value - 3.0 * se;
  if (params.run_variant2) {
    result.p_zx = detail::sup_exceed_prob(params.model_z, &params.model_x,
                                          params.c, params.level, params.n, ra,
                                          params.grid, params.n_paths,
                                          params.seed, 43, params.workers);
    result.p_zy = detail::sup_exceed_prob(params.model_z, &params.model_y,
                                          params.c, params.level, params.n, ra,
                                          params.grid, params.n_paths,
                                          params.seed, 44, params.workers);
    const double se2 =
        std::sqrt(result.p_zx->stderr_ * result.p_zx->stderr_ +
                  result.p_zy->stderr_ * result.p_zy->stderr_);
    result.ordered2 = result.p_zx->value >= result.p_zy->value - 3.0 * se2;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Norming constants and limit experiments
// ---------------------------------------------------------------------------

struct NormingConstants {
  double a = 0.0;
  double b = 0.0;
  double d_const = 0.0;
  double T = 0.0;
  int n = 1;
  int r = 1;  // descending rank
  double alpha = 1.0;
  double a_const = 1.0;
};

inline NormingConstants norming_constants(int n, int r, double alpha, double T,
                                          double a_const) {
  if (r < 1 || r > n)
    throw std::invalid_argument("norming_constants: need 1 <= r <= n");
  if (!(alpha > 0.0 && alpha <= 2.0))
    throw std::invalid_argument("norming_constants: need alpha in (0, 2]");
  if (!(a_const > 0.0))
    throw std::invalid_argument("norming_constants: need A > 0");
  if (!(T > std::numbers::e))
    throw std::invalid_argument("norming_constants: need T > e");
  NormingConstants nc;
  nc.n = n;
  nc.r = r;
  nc.alpha = alpha;
  nc.T = T;
  nc.a_const = a_const;
  const double rr = static_cast<double>(r);
  nc.d_const = std::pow(rr / 2.0, rr / 2.0 - 1.0 / alpha) *
               detail::binomial(n, r) * a_const *
               std::pow(2.0 * std::numbers::pi, -rr / 2.0);
  const double log_t = std::log(T);
  nc.a = std::sqrt(2.0 * rr * log_t);
  nc.b = std::sqrt(2.0 / rr * log_t) +
         ((1.0 / alpha - rr / 2.0) * std::log(log_t) + std::log(nc.d_const)) /
             nc.a;
  return nc;
}

struct LimitCheckReport {
  double ks_distance = 0.0;
  int n_replications = 0;
  std::string target;
  NormingConstants norming;
  // 5/25/50/75/95 percent quantiles of the standardized sample.
  std::array<double, 5> quantiles{};
  std::vector<double> sample;  // sorted standardized statistics
  std::vector<std::string> advisories;
};

inline double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

// E[ exp(-e^{-(x + gamma - sqrt(2 gamma r) W)}) ] over W ~ N(0,1) by 128-node
// Gauss-Hermite quadrature.
inline double mixed_gumbel_cdf(double x, double gamma, int r) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("mixed_gumbel_cdf: need gamma > 0");
  if (r < 1) throw std::invalid_argument("mixed_gumbel_cdf: need r >= 1");
  const QuadratureRule& rule = gauss_hermite(128);
  const double spread = std::sqrt(2.0 * gamma * static_cast<double>(r));
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.node.size(); ++i) {
    const double w = std::numbers::sqrt2 * rule.node[i];
    acc += rule.weight[i] * std::exp(-std::exp(-(x + gamma - spread * w)));
  }
  return acc / std::sqrt(std::numbers::pi);
}

namespace detail {

inline void summarize_sample(LimitCheckReport& report,
                             std::vector<double> sample,
                             const std::function<double(double)>& target_cdf) {
  std::sort(sample.begin(), sample.end());
  report.n_replications = static_cast<int>(sample.size());
  report.ks_distance = ks_distance(sample, target_cdf);
  report.quantiles = {quantile_sorted(sample, 0.05),
                      quantile_sorted(sample, 0.25),
                      quantile_sorted(sample, 0.50),
                      quantile_sorted(sample, 0.75),
                      quantile_sorted(sample, 0.95)};
  report.sample = std::move(sample);
}

inline int descending_rank(const OrderStatSelector& sel, int n) {
  return sel.convention == RankConvention::descending ? sel.rank
                                                      : n - sel.rank + 1;
}

// Supremum of the r-th order statistics process of n iid copies over [0, T],
// one draw per replication.
inline std::vector<double> orderstat_sup_samples(const CorrelationModel& model,
                                                 int n, int ra,
                                                 const GridSpec& grid,
                                                 int n_reps, std::uint64_t seed,
                                                 std::uint64_t stream,
                                                 int workers) {
  const std::vector<double> times = grid.points();
  PathSampler sampler(model, times, choose_method(model, times));
  const std::size_t m = sampler.grid_size();
  std::vector<double> sups(static_cast<std::size_t>(n_reps));
  const long long n_pairs = (n_reps + 1) / 2;
  run_chunks(static_cast<std::size_t>(n_pairs), workers, [&](std::size_t p) {
    NormalRng rng(substream_seed(seed, stream, p));
    thread_local std::vector<std::vector<double>> paths;
    paths.resize(static_cast<std::size_t>(2 * n));
    for (auto& buf : paths) buf.resize(m);
    fill_replication_pair(sampler, rng, paths, n);
    const int reps_here = (2 * static_cast<long long>(p) + 1 < n_reps) ? 2 : 1;
    for (int rep = 0; rep < reps_here; ++rep)
      sups[2 * p + static_cast<std::size_t>(rep)] = orderstat_sup(
          paths, rep * n, n, ra, 0.0, nullptr, 1.0, m, 1);
  });
  return sups;
}

// Supremum over [0, T] of the order statistics of n independent
// block-independent processes: each copy restarts as a fresh stationary
// segment on every unit interval [k-1, k).
inline std::vector<double> block_orderstat_sup_samples(
    const CorrelationModel& base, int n, int ra, int t_blocks,
    int points_per_block, int n_reps, std::uint64_t seed, std::uint64_t stream,
    int workers) {
  const int q = points_per_block;
  // One factor for the longest segment (q+1 points, closing the last block at
  // t = T); shorter segments reuse its leading rows.
  GridSpec seg{0.0, 1.0, q + 1};
  PathSampler segment_sampler(base, seg.points(), PathMethod::cholesky);
  std::vector<double> sups(static_cast<std::size_t>(n_reps));
  run_chunks(static_cast<std::size_t>(n_reps), workers, [&](std::size_t rep) {
    NormalRng rng(substream_seed(seed, stream, rep));
    thread_local std::vector<std::vector<double>> segs;
    segs.resize(static_cast<std::size_t>(n));
    for (auto& buf : segs) buf.resize(static_cast<std::size_t>(q) + 1);
    thread_local std::vector<double> column;
    column.resize(static_cast<std::size_t>(n));
    double sup = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < t_blocks; ++k) {
      const int pts = (k == t_blocks - 1) ? q + 1 : q;
      for (int j = 0; j < n; ++j) {
        // Cholesky draw truncated to the first `pts` grid points.
        thread_local std::vector<double> z;
        z.resize(static_cast<std::size_t>(q) + 1);
        rng.fill_normal(z.begin(), z.begin() + pts);
        segment_sampler.transform_truncated(z, pts,
                                            segs[static_cast<std::size_t>(j)]);
      }
      for (int idx = 0; idx < pts; ++idx) {
        for (int j = 0; j < n; ++j)
          column[static_cast<std::size_t>(j)] =
              segs[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx)];
        std::nth_element(column.begin(), column.begin() + (ra - 1),
                         column.end());
        sup = std::max(sup, column[static_cast<std::size_t>(ra - 1)]);
      }
    }
    sups[rep] = sup;
  });
  return sups;
}

}  // namespace detail

struct GumbelParams {
  CorrelationModel model = CorrelationModel::power_exp(1.0, 1.0);
  int n = 1;
  OrderStatSelector sel{1, RankConvention::descending};
  double T = 100.0;
  int n_reps = 2000;
  int grid_m = (1 << 14) + 1;
  double a_const = 1.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

// Gumbel limit under short-range dependence: standardizes the grid supremum
// of the order statistics process with (a_{r,T}, b_{r,T}) and reports the KS
// distance to exp(-e^{-x}).
inline LimitCheckReport gumbel_experiment(const GumbelParams& params) {
  if (!params.model.stationary())
    throw std::invalid_argument("gumbel_experiment: model must be stationary");
  if (params.model.kind() == CorrelationModel::Kind::power_exp &&
      std::abs(params.model.scale() - 1.0) > 1e-12)
    throw std::invalid_argument(
        "gumbel_experiment: power_exp scale must be 1 so the local expansion "
        "is rho(t) = 1 - |t|^alpha + o(|t|^alpha)");
  params.sel.validate_for(params.n);
  const int r = detail::descending_rank(params.sel, params.n);
  const NormingConstants nc =
      norming_constants(params.n, r, params.model.alpha(), params.T,
                        params.a_const);
  GridSpec grid{0.0, params.T, params.grid_m};
  std::vector<double> sups = detail::orderstat_sup_samples(
      params.model, params.n, params.n - r + 1, grid, params.n_reps,
      params.seed, 51, params.workers);
  for (double& v : sups) v = nc.a * (v - nc.b);
  LimitCheckReport report;
  report.target = "gumbel";
  report.norming = nc;
  detail::summarize_sample(report, std::move(sups),
                           [](double x) { return gumbel_cdf(x); });
  return report;
}

struct MixtureParams {
  CorrelationModel base_model = CorrelationModel::power_exp(1.0, 1.0);
  int n = 1;
  OrderStatSelector sel{1, RankConvention::descending};
  double T = 100.0;  // must be a whole number of unit blocks
  int n_reps = 2000;
  int points_per_block = 64;
  double a_const = 1.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

namespace detail {

inline int block_count(double T) {
  const int blocks = static_cast<int>(std::lround(T));
  if (blocks < 2 || std::abs(T - blocks) > 1e-9)
    throw std::invalid_argument(
        "mixture experiments need an integer horizon T >= 2");
  return blocks;
}

}  // namespace detail

// Mixed Gumbel limit under rho(t) ln t -> gamma: per replication the block
// supremum is scaled by sqrt(1 - rho_*) and shifted by a shared
// sqrt(rho_*) W, with rho_* = gamma / ln T.
inline LimitCheckReport mixed_gumbel_experiment(double gamma,
                                                const MixtureParams& params) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("mixed_gumbel_experiment: need gamma > 0");
  const double rho_star = gamma / std::log(params.T);
  if (!(rho_star < 1.0))
    throw std::invalid_argument(
        "mixed_gumbel_experiment: need T > e^gamma so that rho_* < 1");
  params.sel.validate_for(params.n);
  const int blocks = detail::block_count(params.T);
  const int r = detail::descending_rank(params.sel, params.n);
  const NormingConstants nc = norming_constants(
      params.n, r, params.base_model.alpha(), params.T, params.a_const);
  std::vector<double> sups = detail::block_orderstat_sup_samples(
      params.base_model, params.n, params.n - r + 1, blocks,
      params.points_per_block, params.n_reps, params.seed, 61, params.workers);
  const double keep = std::sqrt(1.0 - rho_star);
  const double share = std::sqrt(rho_star);
  run_chunks(static_cast<std::size_t>(params.n_reps), 1, [&](std::size_t rep) {
    NormalRng rng(substream_seed(params.seed, 62, rep));
    sups[rep] = nc.a * (keep * sups[rep] + share * rng.normal() - nc.b);
  });
  LimitCheckReport report;
  std::ostringstream os;
  os << "mixed_gumbel(gamma=" << gamma << ", r=" << r << ")";
  report.target = os.str();
  report.norming = nc;
  detail::summarize_sample(report, std::move(sups), [&](double x) {
    return mixed_gumbel_cdf(x, gamma, r);
  });
  return report;
}

// Normal limit under rho(t) ln t -> infinity, probed with a supplied rho_T:
// the shared component dominates and the standardized statistic approaches W.
inline LimitCheckReport normal_limit_experiment(double rho_t,
                                                const MixtureParams& params) {
  if (!(rho_t > 0.0 && rho_t < 1.0))
    throw std::invalid_argument("normal_limit_experiment: need rho_T in (0,1)");
  params.sel.validate_for(params.n);
  const int blocks = detail::block_count(params.T);
  const int r = detail::descending_rank(params.sel, params.n);
  const NormingConstants nc = norming_constants(
      params.n, r, params.base_model.alpha(), params.T, params.a_const);
  std::vector<double> sups = detail::block_orderstat_sup_samples(
      params.base_model, params.n, params.n - r + 1, blocks,
      params.points_per_block, params.n_reps, params.seed, 71, params.workers);
  const double keep = std::sqrt(1.0 - rho_t);
  const double share = std::sqrt(rho_t);
  run_chunks(static_cast<std::size_t>(params.n_reps), 1, [&](std::size_t rep) {
    NormalRng rng(substream_seed(params.seed, 72, rep));
    sups[rep] =
        (keep * sups[rep] + share * rng.normal() - keep * nc.b) / share;
  });
  LimitCheckReport report;
  report.target = "normal";
  report.norming = nc;
  if (rho_t * std::log(params.T) < 3.0)
    report.advisories.push_back(
        "rho_T ln T < 3: outside the intended strong-dependence regime");
  detail::summarize_sample(report, std::move(sups),
                           [](double x) { return std_normal_cdf(x); });
  return report;
}

// Coarse calibration of the Pickands-type constant A_{r,alpha}: inverts the
// finite-horizon exceedance asymptotics at a moderate level u0 using a Monte
// Carlo estimate of P{ sup_{[0,T]} X_{r:n} > u0 }.
inline McEstimate calibrate_a_const(const CorrelationModel& model, int n,
                                    const OrderStatSelector& sel, double u0,
                                    double t_cal, int grid_m, int n_reps,
                                    std::uint64_t seed, int workers) {
  if (!model.stationary())
    throw std::invalid_argument("calibrate_a_const: model must be stationary");
  sel.validate_for(n);
  const int r = detail::descending_rank(sel, n);
  const double alpha = model.alpha();
  GridSpec grid{0.0, t_cal, grid_m};
  std::vector<double> sups = detail::orderstat_sup_samples(
      model, n, n - r + 1, grid, n_reps, seed, 81, workers);
  long long exceed = 0;
  for (double v : sups)
    if (v > u0) ++exceed;
  const double np = static_cast<double>(n_reps);
  const double p_hat = static_cast<double>(exceed) / np;
  const double se = std::sqrt(p_hat * (1.0 - p_hat) / np);
  const double denom = t_cal * detail::binomial(n, r) *
                       std::pow(2.0 * std::numbers::pi, -r / 2.0) *
                       std::pow(u0, 2.0 / alpha - r) *
                       std::exp(-0.5 * r * u0 * u0);
  if (!(p_hat > 0.0))
    throw std::runtime_error(
        "calibrate_a_const: no exceedances; lower u0 or increase the budget");
  return {p_hat / denom, se / denom, n_reps, seed};
}

}  // namespace ordstat
