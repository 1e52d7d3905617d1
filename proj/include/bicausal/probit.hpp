#pragma once

#include "bicausal/errors.hpp"
#include "bicausal/numerics.hpp"

#include <cstddef>

namespace bicausal {

struct ProbitOptions {
  int max_iter = 100;
  // Convergence when max |score| <= tol.
  double tol = 1e-8;
  // ... or when the accepted Newton step has norm <= step_tol.
  double step_tol = 1e-10;
  int max_halvings = 30;
  // |coef| beyond this with the likelihood still improving is treated as
  // (quasi-)complete separation.
  double divergence_bound = 25.0;
};

// One fitted binary-response model with standard-normal link.
struct ProbitFit {
  Vector coefficients;     // intercept first, then regressors in design order
  Matrix covariance;       // inverse observed information at the optimum
  Matrix information;      // observed information at the optimum
  Matrix scores;           // n x p per-observation score contributions
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;

  Eigen::Index n() const { return scores.rows(); }
  Eigen::Index p() const { return coefficients.size(); }
  Vector standard_errors() const { return covariance.diagonal().cwiseSqrt(); }

  // Asymptotic covariance of sqrt(n)(coef - truth) from the sandwich
  // n * I^{-1} (sum s s') I^{-1}.
  Matrix sandwich_covariance() const;
};

class ProbitNotConvergedError : public Error {
 public:
  ProbitNotConvergedError(Vector last_iterate, const std::string& message)
      : Error(ErrorCode::NotConverged, message), last_(std::move(last_iterate)) {}

  const Vector& last_iterate() const noexcept { return last_; }

 private:
  Vector last_;
};

// Sum over observations of y log Phi(x b) + (1 - y) log Phi(-x b).
double probit_loglik(const Vector& coefs, const Vector& y, const Matrix& x);

// Newton-Raphson with step halving. The design is expected to carry a
// leading column of ones; when it does, the intercept starts at
// Phi^{-1}(mean y) and the slopes at zero.
ProbitFit fit_probit(const Vector& y, const Matrix& x, const ProbitOptions& opts = {});

// Stacked sandwich covariance for the concatenated coefficient vector
// (coef_x, coef_y) of two fits on the same rows, on the sqrt(n) scale:
// n * B^{-1} M B^{-1} with B = blockdiag(I_x, I_y) and M = sum of outer
// products of the stacked per-observation scores. Cross blocks capture the
// dependence induced by fitting both models on the same data.
Matrix stacked_score_covariance(const ProbitFit& fit_x, const ProbitFit& fit_y);

// The 6 x 6 block of stacked_score_covariance for
// Lambda = (xi_x0, xi_xz, xi_xw, xi_y0, xi_yz, xi_yw), i.e. the first three
// coefficients of each fit.
Matrix lambda_covariance(const ProbitFit& fit_x, const ProbitFit& fit_y);

}  // namespace bicausal
