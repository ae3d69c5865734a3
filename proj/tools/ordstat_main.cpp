// Command-line front end: every subcommand reads an optional JSON config,
// command-line flags override file values, and the emitted report embeds the
// resolved config so any run can be replayed exactly.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ordstat/run_config.hpp"
#include "ordstat/version.hpp"

namespace {

using ordstat::json;

struct FlagStore {
  // One staging slot per option; only flags the user actually passed are
  // merged over the config file.
  std::map<std::string, std::string> strings;
  std::map<std::string, double> doubles;
  std::map<std::string, long long> ints;
  std::map<std::string, bool> bools;
};

void add_common_output(CLI::App* cmd, FlagStore& store) {
  cmd->add_option_function<std::string>(
      "--out", [&store](const std::string& v) { store.strings["out"] = v; },
      "report path ('-' for stdout)");
  cmd->add_option_function<std::string>(
      "--format",
      [&store](const std::string& v) { store.strings["format"] = v; },
      "json|csv");
  cmd->add_option_function<long long>(
      "--seed", [&store](long long v) { store.ints["seed"] = v; },
      "master seed (default: random, logged)");
  cmd->add_option_function<long long>(
      "--workers", [&store](long long v) { store.ints["workers"] = v; },
      "worker threads (env ORDSTAT_WORKERS, flag wins)");
  cmd->add_flag_function(
      "--no-timestamp",
      [&store](std::int64_t) { store.bools["no_timestamp"] = true; },
      "omit the timestamp field from the report");
  cmd->add_option_function<std::string>(
      "--config",
      [&store](const std::string& v) { store.strings["config"] = v; },
      "JSON config file; flags override file values");
}

void stage_str(CLI::App* cmd, FlagStore& store, const std::string& flag,
               const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&store, key](const std::string& v) { store.strings["p:" + key] = v; },
      help);
}

void stage_num(CLI::App* cmd, FlagStore& store, const std::string& flag,
               const std::string& key, const std::string& help) {
  cmd->add_option_function<double>(
      flag, [&store, key](double v) { store.doubles["p:" + key] = v; }, help);
}

void stage_int(CLI::App* cmd, FlagStore& store, const std::string& flag,
               const std::string& key, const std::string& help) {
  cmd->add_option_function<long long>(
      flag, [&store, key](long long v) { store.ints["p:" + key] = v; }, help);
}

void stage_bool(CLI::App* cmd, FlagStore& store, const std::string& flag,
                const std::string& key, const std::string& help) {
  cmd->add_flag_function(
      flag, [&store, key](std::int64_t) { store.bools["p:" + key] = true; },
      help);
}

json merged_config(const std::string& subcommand, const FlagStore& store) {
  json merged;
  auto it = store.strings.find("config");
  if (it != store.strings.end()) {
    std::ifstream in(it->second);
    if (!in)
      throw std::invalid_argument("cannot open config file: " + it->second);
    try {
      in >> merged;
    } catch (const json::exception& e) {
      throw std::invalid_argument(it->second + ": malformed JSON (" +
                                  std::string(e.what()) + ")");
    }
  } else {
    merged = json::object();
  }
  if (merged.contains("subcommand") &&
      merged.at("subcommand").get<std::string>() != subcommand)
    throw std::invalid_argument(
        "config file names a different subcommand than the command line");
  merged["subcommand"] = subcommand;
  for (const auto& [key, v] : store.strings) {
    if (key == "config") continue;
    if (key.rfind("p:", 0) == 0)
      merged[subcommand][key.substr(2)] = v;
    else
      merged[key] = v;
  }
  for (const auto& [key, v] : store.doubles) {
    if (key.rfind("p:", 0) == 0)
      merged[subcommand][key.substr(2)] = v;
    else
      merged[key] = v;
  }
  for (const auto& [key, v] : store.ints) {
    if (key.rfind("p:", 0) == 0)
      merged[subcommand][key.substr(2)] = v;
    else
      merged[key] = v;
  }
  for (const auto& [key, v] : store.bools) {
    if (key.rfind("p:", 0) == 0)
      merged[subcommand][key.substr(2)] = v;
    else
      merged[key] = v;
  }
  if (!merged.contains("workers")) {
    if (const char* env = std::getenv("ORDSTAT_WORKERS"))
      merged["workers"] = std::atoi(env);
  }
  return merged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Comparison bounds and simulation experiments for order "
               "statistics of Gaussian arrays"};
  app.set_version_flag("--version", ordstat::kVersion);
  app.require_subcommand(1);

  std::map<std::string, FlagStore> stores;

  auto* bounds = app.add_subcommand("bounds", "evaluate all closed-form bounds");
  {
    FlagStore& store = stores["bounds"];
    stage_str(bounds, store, "--cov-x", "cov_x", "covariance file of X (JSON or CSV)");
    stage_str(bounds, store, "--cov-y", "cov_y", "covariance file of Y");
    stage_int(bounds, store, "--d", "d", "row count");
    stage_int(bounds, store, "--n", "n", "column count");
    stage_int(bounds, store, "--r", "r", "order statistic rank");
    stage_str(bounds, store, "--convention", "convention", "asc|desc");
    stage_str(bounds, store, "--u", "u", "threshold list, e.g. 0.5,1.0");
    stage_str(bounds, store, "--a", "a", "interval lower endpoints");
    stage_str(bounds, store, "--b", "b", "interval upper endpoints");
    stage_num(bounds, store, "--cond-tol", "cond_tol", "condition tolerance");
    add_common_output(bounds, store);
  }

  auto* verify = app.add_subcommand("verify", "Monte Carlo bound verification");
  {
    FlagStore& store = stores["verify"];
    stage_str(verify, store, "--cov-x", "cov_x", "covariance file of X");
    stage_str(verify, store, "--cov-y", "cov_y", "covariance file of Y");
    stage_int(verify, store, "--d", "d", "row count");
    stage_int(verify, store, "--n", "n", "column count");
    stage_int(verify, store, "--r", "r", "order statistic rank");
    stage_str(verify, store, "--convention", "convention", "asc|desc");
    stage_str(verify, store, "--u", "u", "threshold list");
    stage_int(verify, store, "--samples", "samples", "Monte Carlo sample budget");
    stage_bool(verify, store, "--crn", "crn", "common random numbers (exploratory)");
    add_common_output(verify, store);
  }

  auto* lowtail = app.add_subcommand("lowtail", "lower-tail curve and exponent fit");
  {
    FlagStore& store = stores["lowtail"];
    stage_num(lowtail, store, "--alpha", "alpha", "self-similarity index in (0,2)");
    stage_int(lowtail, store, "--n", "n", "number of generating paths");
    stage_int(lowtail, store, "--r", "r", "order statistic rank");
    stage_str(lowtail, store, "--convention", "convention", "asc|desc");
    stage_num(lowtail, store, "--c", "c", "companion weight");
    stage_str(lowtail, store, "--x-grid", "x_grid", "levels: list or geom:a:b:ratio");
    stage_int(lowtail, store, "--paths", "paths", "replications");
    stage_int(lowtail, store, "--grid-m", "grid_m", "base grid points on [0,1]");
    stage_num(lowtail, store, "--fit-lo", "fit_lo", "fit window lower x");
    stage_num(lowtail, store, "--fit-hi", "fit_hi", "fit window upper x");
    stage_str(lowtail, store, "--dump-paths", "dump_paths", "CSV path dump file");
    add_common_output(lowtail, store);
  }

  auto* pursuit = app.add_subcommand("pursuit", "capture-time tail estimation");
  {
    FlagStore& store = stores["pursuit"];
    stage_num(pursuit, store, "--alpha", "alpha", "self-similarity index in (0,2)");
    stage_int(pursuit, store, "--n", "n", "number of pursuers");
    stage_int(pursuit, store, "--r", "r", "capture rank");
    stage_str(pursuit, store, "--convention", "convention", "asc|desc");
    stage_str(pursuit, store, "--s-grid", "s_grid", "horizons: list or geom:a:b:ratio");
    stage_int(pursuit, store, "--paths", "paths", "replications");
    stage_int(pursuit, store, "--grid-m", "grid_m", "base grid points on [0,1]");
    stage_num(pursuit, store, "--fit-lo", "fit_lo", "fit window lower s");
    stage_num(pursuit, store, "--fit-hi", "fit_hi", "fit window upper s");
    add_common_output(pursuit, store);
  }

  auto* lishao = app.add_subcommand("lishao", "Li-Shao constant ladder");
  {
    FlagStore& store = stores["lishao"];
    stage_num(lishao, store, "--alpha", "alpha", "self-similarity index in (0,2)");
    stage_int(lishao, store, "--n", "n", "number of generating paths");
    stage_int(lishao, store, "--r", "r", "order statistic rank");
    stage_str(lishao, store, "--convention", "convention", "asc|desc");
    stage_num(lishao, store, "--c", "c", "companion weight");
    stage_str(lishao, store, "--t-ladder", "t_ladder", "horizon ladder");
    stage_int(lishao, store, "--points-per-unit-time", "points_per_unit_time",
              "dual grid density");
    stage_int(lishao, store, "--paths", "paths", "replications per horizon");
    add_common_output(lishao, store);
  }

  auto* slepian = app.add_subcommand("slepian", "process-level ordering check");
  {
    FlagStore& store = stores["slepian"];
    stage_str(slepian, store, "--model-x", "model_x", "e.g. powerexp:1.0:1.0");
    stage_str(slepian, store, "--model-y", "model_y", "e.g. powerexp:1.0:2.0");
    stage_str(slepian, store, "--model-z", "model_z", "companion model");
    stage_num(slepian, store, "--c", "c", "companion weight");
    stage_num(slepian, store, "--level", "level", "exceedance level");
    stage_int(slepian, store, "--n", "n", "number of generating paths");
    stage_int(slepian, store, "--r", "r", "order statistic rank");
    stage_str(slepian, store, "--convention", "convention", "asc|desc");
    stage_int(slepian, store, "--grid-m", "grid_m", "grid points");
    stage_num(slepian, store, "--t1", "t1", "horizon");
    stage_int(slepian, store, "--paths", "paths", "replications per side");
    stage_bool(slepian, store, "--variant2", "variant2",
               "also check the swapped form");
    add_common_output(slepian, store);
  }

  auto* gumbel = app.add_subcommand("gumbel", "limit-theorem experiments");
  {
    FlagStore& store = stores["gumbel"];
    stage_str(gumbel, store, "--variant", "variant", "a|b|c");
    stage_num(gumbel, store, "--gamma", "gamma", "mixing parameter (variant c)");
    stage_num(gumbel, store, "--rho-t", "rho_t", "shared weight (variant b)");
    stage_num(gumbel, store, "--alpha", "alpha", "local correlation exponent");
    stage_int(gumbel, store, "--n", "n", "number of generating paths");
    stage_int(gumbel, store, "--r", "r", "order statistic rank");
    stage_str(gumbel, store, "--convention", "convention", "asc|desc");
    stage_num(gumbel, store, "--t", "t", "horizon T");
    stage_int(gumbel, store, "--reps", "reps", "replications");
    stage_num(gumbel, store, "--a-const", "a_const", "Pickands-type constant");
    stage_int(gumbel, store, "--grid-m", "grid_m", "grid points (variant a)");
    stage_int(gumbel, store, "--points-per-block", "points_per_block",
              "grid density per unit block (variants b, c)");
    stage_bool(gumbel, store, "--calibrate", "calibrate",
               "coarsely calibrate the constant before the run");
    stage_num(gumbel, store, "--cal-u", "cal_u", "calibration level");
    stage_num(gumbel, store, "--cal-t", "cal_t", "calibration horizon");
    stage_int(gumbel, store, "--cal-reps", "cal_reps", "calibration replications");
    add_common_output(gumbel, store);
  }

  auto* constants = app.add_subcommand("constants", "norming constants a, b, D");
  {
    FlagStore& store = stores["constants"];
    stage_int(constants, store, "--n", "n", "number of generating paths");
    stage_int(constants, store, "--r", "r", "order statistic rank (descending)");
    stage_num(constants, store, "--alpha", "alpha", "local correlation exponent");
    stage_num(constants, store, "--t", "t", "horizon T > e");
    stage_num(constants, store, "--a-const", "a_const", "Pickands-type constant");
    add_common_output(constants, store);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    const json merged = merged_config(sub, stores[sub]);
    ordstat::RunConfig config = ordstat::parse_config(merged);
    if (config.seed_was_generated)
      std::cerr << "seed not provided; using " << config.seed << "\n";
    const json report = ordstat::run(config);
    ordstat::write_report(config, report, std::cout);
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
