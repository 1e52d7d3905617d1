#include "bicausal/cli_io.hpp"
#include "bicausal/errors.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

using namespace bicausal;

namespace {

// Flags bound to a scratch config; only flags given on the command line are
// copied over the base configuration (defaults or --config document).
struct Overrides {
  RunConfig flags;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> appliers;

  template <typename T>
  void bind(CLI::App& app, const std::string& name, T RunConfig::*field, const std::string& help) {
    CLI::Option* opt = app.add_option(name, flags.*field, help);
    appliers.emplace_back(opt, [this, field](RunConfig& c) { c.*field = flags.*field; });
  }

  void flag(CLI::App& app, const std::string& name, bool RunConfig::*field, bool value,
            const std::string& help) {
    CLI::Option* opt = app.add_flag(name, help);
    appliers.emplace_back(opt, [field, value](RunConfig& c) { c.*field = value; });
  }

  void apply(RunConfig& c) const {
    for (const auto& [opt, fn] : appliers) {
      if (opt->count() > 0) fn(c);
    }
  }
};

void set_truth(StructuralParams& p, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::Configuration, "--truth expects name=value, got '" + kv + "'");
  }
  const std::string key = kv.substr(0, eq);
  double v = 0.0;
  try {
    v = std::stod(kv.substr(eq + 1));
  } catch (...) {
    throw Error(ErrorCode::Configuration, "--truth " + key + ": not a number");
  }
  double StructuralParams::*fields[] = {
      &StructuralParams::mu_x0, &StructuralParams::mu_y0, &StructuralParams::beta_xy,
      &StructuralParams::beta_yx, &StructuralParams::mu_xz, &StructuralParams::mu_yw,
      &StructuralParams::sigma, &StructuralParams::gamma1, &StructuralParams::gamma2,
      &StructuralParams::eta, &StructuralParams::delta, &StructuralParams::mu_xq,
      &StructuralParams::mu_yq};
  const char* names[] = {"mu_x0", "mu_y0", "beta_xy", "beta_yx", "mu_xz", "mu_yw", "sigma",
                         "gamma1", "gamma2", "eta", "delta", "mu_xq", "mu_yq"};
  for (std::size_t i = 0; i < std::size(names); ++i) {
    if (key == names[i]) {
      p.*fields[i] = v;
      return;
    }
  }
  throw Error(ErrorCode::Configuration, "--truth: unknown parameter '" + key + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Configuration, path + ": " + e.what());
  }
}

void add_common(CLI::App& sub, Overrides& ov) {
  ov.bind(sub, "--seed", &RunConfig::seed, "Random seed");
  ov.bind(sub, "--threads", &RunConfig::threads, "Worker threads (0: BICAUSAL_THREADS or all)");
  ov.bind(sub, "--out,-o", &RunConfig::output, "Output path (default stdout)");
}

void add_data(CLI::App& sub, Overrides& ov) {
  ov.bind(sub, "--input,-i", &RunConfig::input, "Dataset CSV (default: simulate)");
  ov.bind(sub, "--preset", &RunConfig::preset, "Column preset: heart");
  ov.bind(sub, "--n", &RunConfig::n, "Simulated sample size");
  ov.bind(sub, "--scenario", &RunConfig::scenario, "Simulated instruments: gaussian|uniform");
  ov.flag(sub, "--no-q", &RunConfig::include_q, false, "Drop covariates from the probit designs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional causal effects between two binary variables"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::vector<std::string> truth_kv;
  std::string x_col, y_col, z_col, w_col;
  std::vector<std::string> covariates, standardize;
  std::string manifest_path;

  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset from the latent model");
  auto* estimate = app.add_subcommand("estimate", "Plug-in and naive estimates");
  auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep over a parameter grid");
  auto* boot = app.add_subcommand("bootstrap", "Bootstrap the plug-in estimator");
  auto* replay = app.add_subcommand("replay", "Re-run a manifest or report");
  replay->add_option("manifest", manifest_path, "Manifest or report JSON")->required();
  ov.bind(*replay, "--out,-o", &RunConfig::output, "Output path (default stdout)");
  ov.bind(*replay, "--threads", &RunConfig::threads, "Worker threads");

  for (CLI::App* sub : {simulate, estimate, sweep, boot}) {
    add_common(*sub, ov);
    sub->add_option("--config", config_path, "JSON configuration document");
    sub->add_option("--truth", truth_kv, "Structural parameter name=value (repeatable)");
  }
  for (CLI::App* sub : {estimate, sweep, boot}) {
    add_data(*sub, ov);
    sub->add_option("--x-column", x_col, "Column for X");
    sub->add_option("--y-column", y_col, "Column for Y");
    sub->add_option("--z-column", z_col, "Column for Z");
    sub->add_option("--w-column", w_col, "Column for W");
    sub->add_option("--covariates", covariates, "Covariate columns")->delimiter(',');
    sub->add_option("--standardize", standardize, "Columns to z-score")->delimiter(',');
    ov.bind(*sub, "--level", &RunConfig::level, "Confidence level");
  }
  ov.bind(*simulate, "--n", &RunConfig::n, "Sample size");
  ov.bind(*simulate, "--scenario", &RunConfig::scenario, "gaussian|uniform");

  ov.bind(*estimate, "--method", &RunConfig::method, "iv|naive|both");
  ov.flag(*estimate, "--delta", &RunConfig::delta, true, "Delta-method standard errors");
  ov.bind(*estimate, "--bootstrap", &RunConfig::bootstrap, "Bootstrap replicates for the IV estimate");
  ov.bind(*boot, "--bootstrap,-B", &RunConfig::bootstrap, "Bootstrap replicates");

  ov.bind(*sweep, "--reps", &RunConfig::reps, "Replicates per cell (simulation or bootstrap)");
  ov.bind(*sweep, "--solver", &RunConfig::solver, "prop1|prop3|cor1|cor2|cor3|general");
  ov.bind(*sweep, "--grid", &RunConfig::grids, "Axis name[,name]=min:max:step (repeatable)");
  ov.bind(*sweep, "--branch", &RunConfig::branch, "lt1|gt1 (cor3)");
  ov.bind(*sweep, "--gamma1", &RunConfig::gamma1, "Fixed gamma1");
  ov.bind(*sweep, "--gamma2", &RunConfig::gamma2, "Fixed gamma2");
  ov.bind(*sweep, "--eta0", &RunConfig::eta0, "Fixed eta0");
  ov.bind(*sweep, "--delta0", &RunConfig::delta0, "Fixed delta0");
  ov.bind(*sweep, "--bound", &RunConfig::general_bound, "Root-scan bound (general)");
  ov.bind(*sweep, "--grid-points", &RunConfig::general_grid_points, "Root-scan points (general)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_status(ErrorCode::Configuration);
  }

  try {
    RunConfig cfg;
    if (replay->parsed()) {
      cfg = config_from_manifest(read_json_file(manifest_path));
    } else {
      if (!config_path.empty()) cfg = config_from_json(read_json_file(config_path));
      cfg.command = app.get_subcommands().front()->get_name();
    }
    ov.apply(cfg);
    for (const auto& kv : truth_kv) set_truth(cfg.truth, kv);
    if (!x_col.empty()) cfg.schema.x_column = x_col;
    if (!y_col.empty()) cfg.schema.y_column = y_col;
    if (!z_col.empty()) cfg.schema.z_column = z_col;
    if (!w_col.empty()) cfg.schema.w_column = w_col;
    if (!covariates.empty()) cfg.schema.covariate_columns = covariates;
    if (!standardize.empty()) cfg.schema.standardize_columns = standardize;

    const CommandResult result = run_command(cfg);
    write_result(cfg, result, std::cout);
    if (!cfg.output.empty()) {
      std::cout << result.summary;
    } else {
      std::cerr << result.summary;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << error_document(e);
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":{\"code\":\"Internal\",\"exit_status\":1,\"message\":"
              << nlohmann::json(std::string(e.what())).dump() << "}}\n";
    return 1;
  }
}
