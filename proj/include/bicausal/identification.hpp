#pragma once

#include "bicausal/probit.hpp"
#include "bicausal/structural_model.hpp"

#include <optional>
#include <string>
#include <utility>

namespace bicausal {

struct BetaPair {
  double xy = 0.0;  // X* -> Y*
  double yx = 0.0;  // Y* -> X*
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

enum class EstimateMethod { IvProp1, Naive, Sensitivity };

// "iv", "naive" (reported with alias "GLS"), "sensitivity".
std::string method_name(EstimateMethod m);

struct EstimateDiagnostics {
  // Arguments of the two square roots in the closed-form identification map.
  std::optional<double> sqrt_argument_xy;
  std::optional<double> sqrt_argument_yx;
  bool fit_x_converged = false;
  bool fit_y_converged = false;
  int fit_x_iterations = 0;
  int fit_y_iterations = 0;
};

struct EffectEstimate {
  double beta_xy = 0.0;
  double beta_yx = 0.0;
  std::optional<double> se_xy;
  std::optional<double> se_yx;
  std::optional<Interval> ci_xy;
  std::optional<Interval> ci_yx;
  EstimateMethod method = EstimateMethod::IvProp1;
  std::string method_detail;  // e.g. solver / sensitivity settings
  EstimateDiagnostics diagnostics;

  BetaPair pair() const { return {beta_xy, beta_yx}; }
};

// Closed-form map under valid instruments and independent equal-scale
// confounders:
//   beta_xy = (xi_yz/xi_xz) sqrt(xi_xz^2 (xi_xw^2 - xi_yw^2) / (xi_yw^2 (xi_yz^2 - xi_xz^2)))
//   beta_yx = (xi_xw/xi_yw) sqrt(xi_yw^2 (xi_yz^2 - xi_xz^2) / (xi_xz^2 (xi_xw^2 - xi_yw^2)))
// Throws DegenerateRatio for |xi_xz| or |xi_yw| < 1e-12 (or a vanishing
// difference of squares) and InfeasibleIdentification when a square-root
// argument is negative.
BetaPair identify_prop1(const ProbitCoefVector& xi);

struct EstimationOptions {
  bool include_q = true;
  ProbitOptions probit;
};

// Design matrix [1, lead..., Z, W, (Q)] with `lead` optional extra leading
// regressors.
Matrix design_matrix(const Dataset& d, const std::vector<const Vector*>& lead,
                     bool include_q);

// Step 1 of the plug-in estimator: probits of X and Y on (1, Z, W[, Q]).
struct ReducedFormFits {
  ProbitFit fit_x;
  ProbitFit fit_y;
  ProbitCoefVector xi;
};

ReducedFormFits fit_reduced_form(const Dataset& d, const EstimationOptions& opts = {});

// Plug-in estimator: fit_reduced_form followed by identify_prop1.
EffectEstimate estimate_alg1(const Dataset& d, const EstimationOptions& opts = {});

// Same, but from already computed fits.
EffectEstimate estimate_from_fits(const ReducedFormFits& fits);

// Comparator that treats the other binary outcome as an exogenous regressor:
// Y on (1, X, Z, W, Q) and X on (1, Y, Z, W, Q).
EffectEstimate estimate_naive(const Dataset& d, const EstimationOptions& opts = {});

}  // namespace bicausal
