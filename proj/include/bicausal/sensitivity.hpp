#pragma once

#include "bicausal/identification.hpp"
#include "bicausal/structural_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bicausal {

// How eta0 / delta0 relate to the raw direct effects eta / delta:
//   RelativeToIV:  eta0 = eta / mu_xz, delta0 = delta / mu_yw
//   SignalToNoise: eta0 = eta / sigma, delta0 = delta / sigma
enum class EtaDeltaMode { RelativeToIV, SignalToNoise };

struct SensitivityParams {
  double gamma1 = 1.0;
  double gamma2 = 0.0;
  double eta0 = 0.0;
  double delta0 = 0.0;
  EtaDeltaMode mode = EtaDeltaMode::RelativeToIV;

  // gamma1 > 0 and gamma1 >= gamma2^2, finite values.
  void validate() const;

  // Raw eta and delta implied for a given structural truth.
  double eta_for(const StructuralParams& p) const;
  double delta_for(const StructuralParams& p) const;
};

// Ratios of fitted slope coefficients.
struct Ratios {
  double k1 = 0.0;  // xi_yz / xi_xz
  double k2 = 0.0;  // xi_xw / xi_yw
  double t1 = 0.0;  // xi_xw / xi_xz
  double t2 = 0.0;  // xi_yz / xi_yw
  double t3 = 0.0;  // xi_xz / xi_yz
  double t4 = 0.0;  // xi_xw / xi_yw
};

// Throws DegenerateRatio when xi_xz, xi_yw or xi_yz is below 1e-12 in
// magnitude.
Ratios ratios(const ProbitCoefVector& xi);

enum class SelectionRule {
  SignK1,              // sgn(beta_xy) = sgn(k1)
  SignT3,              // sgn(beta_xy) = sgn(t3)
  SignT4,              // sgn(beta_yx) = sgn(t4)
  BranchProductLtOne,  // caller asserted beta_xy beta_yx < 1
  BranchProductGtOne,  // caller asserted beta_xy beta_yx > 1
  Unresolved,
};

std::string selection_rule_name(SelectionRule rule);

struct Candidate {
  BetaPair beta;
  // Residual of the equation that produced the candidate.
  double residual = 0.0;
  bool satisfies_rule = false;
};

struct CandidateSolutions {
  std::vector<Candidate> candidates;
  std::optional<std::size_t> selected;
  SelectionRule selection_rule = SelectionRule::Unresolved;
  // Set by solve_corollary3 when the returned pair's product contradicts the
  // requested branch.
  bool branch_inconsistent = false;

  // Throws AmbiguousSolution when nothing was selected.
  const BetaPair& selected_pair() const;
  bool contains(const BetaPair& b, double tol) const;
};

// Residual of the model constraints for a candidate under RelativeToIV
// sensitivity parameters, without squaring:
//   k1 (1 + beta_yx eta0)         = (beta_xy + eta0) R
//   k2 (1 + beta_xy delta0) R     = beta_yx + delta0
// with R^2 = (gamma1 + 2 gamma2 beta_yx + beta_yx^2) /
//            (gamma1 beta_xy^2 + 2 gamma2 beta_xy + 1), R > 0.
double constraint_residual(const ProbitCoefVector& xi, const BetaPair& b,
                           const SensitivityParams& sp);

enum class FormulaVariant {
  Derived,  // from the constraint system above (normative)
  Printed,  // alternative closed form with gamma1^2 in place of gamma1
};

// Correlated / unequal-scale confounders with valid instruments.
CandidateSolutions solve_prop3(const ProbitCoefVector& xi, double gamma1, double gamma2,
                               FormulaVariant variant = FormulaVariant::Derived);

// Direct Z -> Y* effect eta0 = eta / mu_xz, with delta0 = 0, gamma1 = 1,
// gamma2 = 0. Selection: sgn(beta_yx) = sgn(t4).
CandidateSolutions solve_corollary1(const ProbitCoefVector& xi, double eta0);

// Direct W -> X* effect delta0 = delta / mu_yw, with eta0 = 0, gamma1 = 1,
// gamma2 = 0. Selection: sgn(beta_xy) = sgn(t3).
CandidateSolutions solve_corollary2(const ProbitCoefVector& xi, double delta0);

enum class ProductBranch { LtOne, GtOne };

// Perfectly correlated confounders (U = V) with both direct effects in
// signal-to-noise form (eta0 = eta / sigma, delta0 = delta / sigma). The
// branch is chosen by the caller.
CandidateSolutions solve_corollary3(const ProbitCoefVector& xi, double eta0, double delta0,
                                    ProductBranch branch);

struct GeneralSolverOptions {
  double bound = 10.0;
  int grid_points = 4001;
};

// General (gamma1, gamma2, eta0, delta0) case: beta_xy is eliminated through
// the product constraint, the squared k1 constraint reduces to a quadratic in
// beta_yx which is scanned for sign changes on [-bound, bound] (its
// stationary points included) and refined by bisection. Squaring artefacts
// are removed by the unsquared sign conditions.
CandidateSolutions solve_general(const ProbitCoefVector& xi, const SensitivityParams& sp,
                                 const GeneralSolverOptions& opts = {});

// Alternative explicit beta_xy(beta_yx) expression for the general case,
// kept for comparison. It disagrees with the product constraint in the signs
// of its k1 k2 and eta0 delta0 terms.
double printed_general_beta_xy(const ProbitCoefVector& xi, double beta_yx, double eta0,
                               double delta0);

// ---------------------------------------------------------------------------
// Solver dispatch and sweeps
// ---------------------------------------------------------------------------

enum class SolverKind { Prop1, Prop3, Cor1, Cor2, Cor3, General };

std::string solver_name(SolverKind kind);
SolverKind parse_solver(const std::string& name);

struct SolverConfig {
  SolverKind kind = SolverKind::Prop3;
  ProductBranch branch = ProductBranch::LtOne;
  GeneralSolverOptions general;
};

// Mode the solver expects its eta0 / delta0 in.
EtaDeltaMode solver_mode(SolverKind kind);

CandidateSolutions solve_at(const ProbitCoefVector& xi, const SensitivityParams& sp,
                            const SolverConfig& solver);

// Selected pair; throws AmbiguousSolution when the solver could not pick one.
BetaPair solve_selected(const ProbitCoefVector& xi, const SensitivityParams& sp,
                        const SolverConfig& solver);

}  // namespace bicausal
