#pragma once

#include "bicausal/inference.hpp"
#include "bicausal/sweep.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bicausal {

inline constexpr const char* kToolName = "bicausal";
inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

struct ColumnSchema {
  std::string x_column = "x";
  std::string y_column = "y";
  std::string z_column = "z";
  std::string w_column = "w";
  std::vector<std::string> covariate_columns;
  // Literal -> value for every column that is not numeric.
  std::map<std::string, double> binary_recodings{{"Yes", 1.0}, {"No", 0.0}};
  // Per-column literal maps, consulted before binary_recodings.
  std::map<std::string, std::map<std::string, double>> column_recodings;
  // z-scored with the post-filtering sample mean and sd (n - 1).
  std::vector<std::string> standardize_columns;

  // Throws Configuration when role columns repeat.
  void validate() const;
  std::vector<std::string> used_columns() const;
};

// HeartDisease -> x, Diabetic -> y, Stroke -> z, standardised BMI -> w.
// "No, borderline diabetes" counts as 0 and "Yes (during pregnancy)" as 1.
ColumnSchema heart_disease_schema();

// Literals treated as missing: "", "NA", "NaN", ".".
bool is_missing_literal(const std::string& s);

// Splits one RFC-4180 record (quoted fields, doubled quotes).
std::vector<std::string> split_csv_record(const std::string& line);

// Reads a header-first CSV. Rows missing any used column are dropped and
// counted; literals are recoded; standardisation uses the kept rows.
// Throws Io, MissingColumn, UnmappedLiteral, EmptyAfterFiltering, Domain
// (x or y not binary after recoding).
Dataset load_csv(const std::string& path, const ColumnSchema& schema);
Dataset read_csv(std::istream& in, const ColumnSchema& schema, const std::string& source_name);

// Header x,y,z,w,<q names>; values at 17 significant digits.
void write_dataset_csv(std::ostream& out, const Dataset& d);

std::string format_double(double v);

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string command;  // simulate, estimate, sweep, bootstrap
  std::uint64_t seed = 1;
  std::size_t n = 10000;
  std::string scenario = "gaussian";
  StructuralParams truth = StructuralParams::simulation_baseline();

  std::string input;   // dataset CSV; empty means simulate from truth
  // Primary artifact path; empty means stdout. Read from configuration
  // documents but not written back, like `threads`.
  std::string output;
  std::string preset;  // "" or "heart"
  ColumnSchema schema;

  std::string method = "both";  // iv, naive, both
  bool delta = false;
  std::size_t bootstrap = 0;
  double level = 0.95;
  bool include_q = true;

  std::size_t reps = 1;
  std::string solver = "prop3";
  std::string branch = "lt1";  // lt1, gt1
  std::vector<std::string> grids;
  double gamma1 = 1.0, gamma2 = 0.0, eta0 = 0.0, delta0 = 0.0;
  double general_bound = 10.0;
  int general_grid_points = 4001;

  // Not part of the serialised configuration: results never depend on it.
  unsigned threads = 0;

  // Throws Configuration on malformed values.
  void validate() const;
  SweepPlan sweep_plan() const;
  ColumnSchema effective_schema() const;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

// {tool, version, command, seed, config}
nlohmann::ordered_json manifest(const RunConfig& cfg);
RunConfig config_from_manifest(const nlohmann::json& j);

nlohmann::ordered_json to_json(const StructuralParams& p);
nlohmann::ordered_json to_json(const EffectEstimate& e);
nlohmann::ordered_json to_json(const BootstrapResult& b);

// Long-format table with columns: axis labels, beta_xy, beta_yx, bias_xy,
// bias_yx, sd_xy, sd_yx, ci_lo_xy, ci_hi_xy, ci_lo_yx, ci_hi_yx, n_success,
// n_fail. Missing values are empty fields.
void write_sweep_csv(std::ostream& out, const SweepTable& table);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommandResult {
  // Primary artifact text (CSV or JSON document).
  std::string artifact;
  // Manifest written next to artifacts that are not JSON themselves.
  std::optional<std::string> manifest;
  // Human-readable summary.
  std::string summary;
};

// The data a command operates on: the input CSV when given, else a
// simulated sample from the configured truth with stream rng.derive(0).
Dataset command_dataset(const RunConfig& cfg);

CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_estimate(const RunConfig& cfg);
CommandResult cmd_sweep(const RunConfig& cfg);
CommandResult cmd_bootstrap(const RunConfig& cfg);
CommandResult run_command(const RunConfig& cfg);

// Writes the artifact to cfg.output (or `out`) and the manifest to
// <output>.manifest.json when there is one.
void write_result(const RunConfig& cfg, const CommandResult& result, std::ostream& out);

// {"error": {"code": name, "exit_status": k, "message": text}}
std::string error_document(const Error& e);

}  // namespace bicausal
