#pragma once

#include "bicausal/identification.hpp"
#include "bicausal/sensitivity.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bicausal {

// One grid axis. Several parameter names on one axis move together
// ("eta0,delta0=-0.16:0.16:0.02").
struct SweepAxis {
  std::vector<std::string> parameters;  // gamma1, gamma2, eta0, delta0
  std::vector<double> values;
};

// Parses "name[,name...]=min:max:step" (inclusive) or "name=value".
// Values are min + i*step rounded to 12 decimals. Throws Configuration.
SweepAxis parse_axis(const std::string& spec);

std::string axis_label(const SweepAxis& axis);

struct SweepPlan {
  std::vector<SweepAxis> axes;
  SensitivityParams base;  // values for parameters not on any axis
  SolverConfig solver;

  // Product of axis sizes; 1 when there are no axes.
  std::size_t cell_count() const;
  // Cell parameters in Cartesian order, first axis slowest.
  SensitivityParams cell(std::size_t index) const;
  std::vector<double> axis_values(std::size_t index) const;
  // Throws Configuration for empty axes, unknown names, duplicated names or a
  // solver incompatible with the eta0/delta0 parameterisation.
  void validate() const;
};

// Re-simulated data per cell and replicate. The cell's sensitivity
// parameters are imposed on the truth: gamma1, gamma2 directly and
// eta = eta_for(truth), delta = delta_for(truth).
struct SimulationDesign {
  StructuralParams truth;
  IVScenario scenario;
  std::size_t n = 10000;
};

using SweepSource = std::variant<ProbitCoefVector, Dataset, SimulationDesign>;

struct SweepOptions {
  // Coefficient sources ignore this; datasets are bootstrapped when > 1;
  // simulation designs are re-drawn this many times per cell.
  std::size_t replicates = 1;
  double level = 0.95;
  unsigned threads = 0;
  EstimationOptions estimation;
};

struct SweepRow {
  std::vector<double> axis_values;
  SensitivityParams params;
  double beta_xy = 0.0;  // point estimate (NaN when it failed)
  double beta_yx = 0.0;
  std::optional<double> bias_xy, bias_yx;
  std::optional<double> sd_xy, sd_yx;
  std::optional<Interval> ci_xy, ci_yx;
  std::size_t n_success = 0;
  std::size_t n_fail = 0;
  std::map<std::string, std::size_t> failure_reasons;
  std::map<std::string, std::size_t> warnings;
};

struct SweepTable {
  std::vector<SweepAxis> axes;
  std::vector<SweepRow> rows;
};

// Evaluates the plan's solver at every cell. Per-cell failures are tallied;
// only configuration errors propagate. Replicate r of cell c draws from
// rng.derive(c).derive(r) (simulation) or rng.derive(r) (bootstrap resample).
SweepTable sweep(const SweepSource& source, const SweepPlan& plan, const SweepOptions& opts,
                 const RngStream& rng);

// Summary of one simulated cell: `replicates` fresh datasets under the
// cell's truth, each estimated with the solver. Replicate r uses
// cell_rng.derive(r), so sweep() rows equal simulate_cell(..., rng.derive(c)).
SweepRow simulate_cell(const SimulationDesign& design, const SensitivityParams& sp,
                       const SolverConfig& solver, const SweepOptions& opts,
                       const RngStream& cell_rng);

// Truth with the sensitivity parameters imposed (see SimulationDesign).
StructuralParams apply_sensitivity(const StructuralParams& truth, const SensitivityParams& sp);

}  // namespace bicausal
