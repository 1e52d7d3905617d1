#include "bicausal/sweep.hpp"

#include "bicausal/errors.hpp"
#include "bicausal/inference.hpp"
#include "bicausal/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace bicausal {

namespace {

const std::set<std::string>& known_parameters() {
  static const std::set<std::string> names{"gamma1", "gamma2", "eta0", "delta0"};
  return names;
}

double parse_number(const std::string& text, const std::string& spec) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (...) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::Configuration, "grid '" + spec + "': bad number '" + text + "'");
  }
  return v;
}

double round12(double v) {
  const double r = std::round(v * 1e12) / 1e12;
  return r == 0.0 ? 0.0 : r;
}

void set_parameter(SensitivityParams& sp, const std::string& name, double value) {
  if (name == "gamma1") sp.gamma1 = value;
  else if (name == "gamma2") sp.gamma2 = value;
  else if (name == "eta0") sp.eta0 = value;
  else if (name == "delta0") sp.delta0 = value;
  else throw Error(ErrorCode::Configuration, "unknown sensitivity parameter '" + name + "'");
}

struct Outcome {
  std::optional<BetaPair> beta;
  std::string failure;
  bool branch_inconsistent = false;
};

Outcome solve_outcome(const ProbitCoefVector& xi, const SensitivityParams& sp,
                      const SolverConfig& solver) {
  Outcome out;
  try {
    const CandidateSolutions sol = solve_at(xi, sp, solver);
    out.branch_inconsistent = sol.branch_inconsistent;
    out.beta = sol.selected_pair();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Configuration) throw;
    out.failure = std::string(error_code_name(e.code()));
  }
  return out;
}

Outcome simulate_outcome(const SimulationDesign& design, const SensitivityParams& sp,
                         const SolverConfig& solver, const EstimationOptions& est,
                         const RngStream& rng) {
  try {
    const StructuralParams truth = apply_sensitivity(design.truth, sp);
    const Dataset d = simulate(truth, design.scenario, design.n, rng);
    return solve_outcome(fit_reduced_form(d, est).xi, sp, solver);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Configuration) throw;
    Outcome out;
    out.failure = std::string(error_code_name(e.code()));
    return out;
  }
}

void tally(SweepRow& row, const Outcome& o) {
  if (o.branch_inconsistent) ++row.warnings["BranchInconsistent"];
  if (o.beta) {
    ++row.n_success;
  } else {
    ++row.n_fail;
    ++row.failure_reasons[o.failure];
  }
}

// Spread of replicate estimates: sd and percentile interval.
void summarize_spread(SweepRow& row, const std::vector<Outcome>& outcomes, double level) {
  std::vector<double> xy, yx;
  for (const auto& o : outcomes) {
    if (!o.beta) continue;
    xy.push_back(o.beta->xy);
    yx.push_back(o.beta->yx);
  }
  if (xy.empty()) return;
  row.sd_xy = sample_sd(xy);
  row.sd_yx = sample_sd(yx);
  row.ci_xy = percentile_interval(xy, level);
  row.ci_yx = percentile_interval(yx, level);
}

SweepRow summarize_simulation(const SimulationDesign& design, const SensitivityParams& sp,
                              const std::vector<Outcome>& outcomes, double level) {
  SweepRow row;
  row.params = sp;
  double sxy = 0.0, syx = 0.0;
  for (const auto& o : outcomes) {
    tally(row, o);
    if (o.beta) {
      sxy += o.beta->xy;
      syx += o.beta->yx;
    }
  }
  if (row.n_success == 0) {
    row.beta_xy = row.beta_yx = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  row.beta_xy = sxy / static_cast<double>(row.n_success);
  row.beta_yx = syx / static_cast<double>(row.n_success);
  row.bias_xy = row.beta_xy - design.truth.beta_xy;
  row.bias_yx = row.beta_yx - design.truth.beta_yx;
  summarize_spread(row, outcomes, level);
  return row;
}

}  // namespace

SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::Configuration,
                "grid '" + spec + "' must look like name=min:max:step or name=value");
  }
  SweepAxis axis;
  std::stringstream names(spec.substr(0, eq));
  for (std::string name; std::getline(names, name, ',');) {
    if (!known_parameters().count(name)) {
      throw Error(ErrorCode::Configuration, "grid '" + spec + "': unknown parameter '" + name +
                                                "' (expected gamma1, gamma2, eta0, delta0)");
    }
    axis.parameters.push_back(name);
  }
  if (axis.parameters.empty()) {
    throw Error(ErrorCode::Configuration, "grid '" + spec + "' names no parameter");
  }

  std::vector<std::string> parts;
  std::stringstream range(spec.substr(eq + 1));
  for (std::string part; std::getline(range, part, ':');) parts.push_back(part);
  if (parts.size() == 1) {
    axis.values.push_back(parse_number(parts[0], spec));
    return axis;
  }
  if (parts.size() != 3) {
    throw Error(ErrorCode::Configuration, "grid '" + spec + "' must have min:max:step");
  }
  const double lo = parse_number(parts[0], spec);
  const double hi = parse_number(parts[1], spec);
  const double step = parse_number(parts[2], spec);
  if (!(step > 0.0) || lo > hi) {
    throw Error(ErrorCode::Configuration, "grid '" + spec + "' needs min <= max and step > 0");
  }
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 1000000) {
    throw Error(ErrorCode::Configuration, "grid '" + spec + "' has too many points");
  }
  for (std::size_t i = 0; i < count; ++i) {
    axis.values.push_back(round12(lo + static_cast<double>(i) * step));
  }
  return axis;
}

std::string axis_label(const SweepAxis& axis) {
  std::string label;
  for (const auto& p : axis.parameters) label += (label.empty() ? "" : "_") + p;
  return label;
}

std::size_t SweepPlan::cell_count() const {
  std::size_t count = 1;
  for (const auto& a : axes) count *= a.values.size();
  return count;
}

std::vector<double> SweepPlan::axis_values(std::size_t index) const {
  std::vector<double> out(axes.size());
  for (std::size_t k = axes.size(); k-- > 0;) {
    const std::size_t size = axes[k].values.size();
    out[k] = axes[k].values[index % size];
    index /= size;
  }
  return out;
}

SensitivityParams SweepPlan::cell(std::size_t index) const {
  SensitivityParams sp = base;
  const auto values = axis_values(index);
  for (std::size_t k = 0; k < axes.size(); ++k) {
    for (const auto& name : axes[k].parameters) set_parameter(sp, name, values[k]);
  }
  return sp;
}

void SweepPlan::validate() const {
  std::set<std::string> seen;
  for (const auto& a : axes) {
    if (a.values.empty()) throw Error(ErrorCode::Configuration, "sweep axis with no values");
    for (const auto& name : a.parameters) {
      if (!known_parameters().count(name)) {
        throw Error(ErrorCode::Configuration, "unknown sensitivity parameter '" + name + "'");
      }
      if (!seen.insert(name).second) {
        throw Error(ErrorCode::Configuration, "parameter '" + name + "' appears on two axes");
      }
    }
  }
  if (cell_count() == 0) throw Error(ErrorCode::Configuration, "empty sweep grid");
  if (base.mode != solver_mode(solver.kind)) {
    throw Error(ErrorCode::Configuration,
                "solver " + solver_name(solver.kind) +
                    " is incompatible with the eta0/delta0 parameterisation of the plan");
  }
}

StructuralParams apply_sensitivity(const StructuralParams& truth, const SensitivityParams& sp) {
  StructuralParams p = truth;
  p.gamma1 = sp.gamma1;
  p.gamma2 = sp.gamma2;
  p.eta = sp.eta_for(truth);
  p.delta = sp.delta_for(truth);
  return p;
}

SweepRow simulate_cell(const SimulationDesign& design, const SensitivityParams& sp,
                       const SolverConfig& solver, const SweepOptions& opts,
                       const RngStream& cell_rng) {
  const std::size_t reps = std::max<std::size_t>(1, opts.replicates);
  std::vector<Outcome> outcomes(reps);
  parallel_for(reps, opts.threads, [&](std::size_t r) {
    outcomes[r] = simulate_outcome(design, sp, solver, opts.estimation, cell_rng.derive(r));
  });
  return summarize_simulation(design, sp, outcomes, opts.level);
}

SweepTable sweep(const SweepSource& source, const SweepPlan& plan, const SweepOptions& opts,
                 const RngStream& rng) {
  plan.validate();
  if (!(opts.level > 0.0 && opts.level < 1.0)) {
    throw Error(ErrorCode::Configuration, "confidence level must lie in (0, 1)");
  }
  const std::size_t cells = plan.cell_count();
  SweepTable table;
  table.axes = plan.axes;
  table.rows.resize(cells);

  if (const auto* xi = std::get_if<ProbitCoefVector>(&source)) {
    for (std::size_t c = 0; c < cells; ++c) {
      SweepRow& row = table.rows[c];
      row.params = plan.cell(c);
      const Outcome o = solve_outcome(*xi, row.params, plan.solver);
      tally(row, o);
      row.beta_xy = o.beta ? o.beta->xy : std::numeric_limits<double>::quiet_NaN();
      row.beta_yx = o.beta ? o.beta->yx : std::numeric_limits<double>::quiet_NaN();
    }
  } else if (const auto* data = std::get_if<Dataset>(&source)) {
    // Point estimate from the full sample.
    std::optional<ProbitCoefVector> xi_hat;
    std::string point_failure;
    try {
      xi_hat = fit_reduced_form(*data, opts.estimation).xi;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Configuration) throw;
      point_failure = std::string(error_code_name(e.code()));
    }
    // Bootstrap: one reduced-form fit per resample, reused by every cell.
    const std::size_t reps = opts.replicates > 1 ? opts.replicates : 0;
    std::vector<std::vector<Outcome>> boot(cells, std::vector<Outcome>(reps));
    const Eigen::Index n = data->n();
    parallel_for(reps, opts.threads, [&](std::size_t r) {
      RngStream child = rng.derive(r);
      std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
      for (auto& i : rows) i = static_cast<Eigen::Index>(child.below(static_cast<std::uint64_t>(n)));
      std::optional<ProbitCoefVector> xi_r;
      std::string failure;
      try {
        xi_r = fit_reduced_form(data->take_rows(rows), opts.estimation).xi;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Configuration) throw;
        failure = std::string(error_code_name(e.code()));
      }
      for (std::size_t c = 0; c < cells; ++c) {
        if (xi_r) {
          boot[c][r] = solve_outcome(*xi_r, plan.cell(c), plan.solver);
        } else {
          boot[c][r].failure = failure;
        }
      }
    });
    for (std::size_t c = 0; c < cells; ++c) {
      SweepRow& row = table.rows[c];
      row.params = plan.cell(c);
      Outcome point;
      if (xi_hat) point = solve_outcome(*xi_hat, row.params, plan.solver);
      else point.failure = point_failure;
      row.beta_xy = point.beta ? point.beta->xy : std::numeric_limits<double>::quiet_NaN();
      row.beta_yx = point.beta ? point.beta->yx : std::numeric_limits<double>::quiet_NaN();
      if (reps == 0) {
        tally(row, point);
      } else {
        if (!point.beta) ++row.failure_reasons["point:" + point.failure];
        for (const auto& o : boot[c]) tally(row, o);
        summarize_spread(row, boot[c], opts.level);
      }
    }
  } else {
    const auto& design = std::get<SimulationDesign>(source);
    const std::size_t reps = std::max<std::size_t>(1, opts.replicates);
    std::vector<Outcome> outcomes(cells * reps);
    parallel_for(cells * reps, opts.threads, [&](std::size_t k) {
      const std::size_t c = k / reps, r = k % reps;
      outcomes[k] = simulate_outcome(design, plan.cell(c), plan.solver, opts.estimation,
                                     rng.derive(c).derive(r));
    });
    for (std::size_t c = 0; c < cells; ++c) {
      const std::vector<Outcome> cell_outcomes(outcomes.begin() + static_cast<long>(c * reps),
                                               outcomes.begin() + static_cast<long>((c + 1) * reps));
      table.rows[c] = summarize_simulation(design, plan.cell(c), cell_outcomes, opts.level);
    }
  }

  for (std::size_t c = 0; c < cells; ++c) table.rows[c].axis_values = plan.axis_values(c);
  return table;
}

}  // namespace bicausal
