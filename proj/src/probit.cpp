#include "bicausal/probit.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace bicausal {

namespace {

struct ObservationTerms {
  double log_prob;  // log Phi(t)
  double mills;     // phi(t) / Phi(t)
};

// t = (2y - 1) * eta, so every observation contributes log Phi(t).
ObservationTerms observation_terms(double t) {
  if (t < -35.0) return {log_std_normal_cdf(t), inverse_mills_ratio(t)};
  // Phi(-|t|) from one erfc call; the other tail follows by complement.
  const double lower = 0.5 * std::erfc(std::abs(t) / std::numbers::sqrt2);
  const double prob = t > 0.0 ? 1.0 - lower : lower;
  const double log_prob = t > 0.0 ? std::log1p(-lower) : std::log(lower);
  return {log_prob, std_normal_pdf(t) / prob};
}

struct NewtonState {
  double log_likelihood = 0.0;
  Vector gradient;
  Matrix information;
  Vector score_weights;  // d loglik_i / d eta_i
};

NewtonState evaluate(const Vector& coefs, const Vector& y, const Matrix& x) {
  const Vector eta = x * coefs;
  const Eigen::Index n = x.rows();
  NewtonState state;
  state.score_weights.resize(n);
  Vector curvature(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double q = y(i) > 0.5 ? 1.0 : -1.0;
    const double t = q * eta(i);
    const ObservationTerms terms = observation_terms(t);
    state.log_likelihood += terms.log_prob;
    state.score_weights(i) = q * terms.mills;
    curvature(i) = terms.mills * (t + terms.mills);
  }
  state.gradient = x.transpose() * state.score_weights;
  state.information = x.transpose() * curvature.asDiagonal() * x;
  return state;
}

void check_design(const Vector& y, const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n) {
    throw Error(ErrorCode::Domain, "fit_probit: response length " + std::to_string(y.size()) +
                                       " does not match design rows " + std::to_string(n));
  }
  if (n <= p) {
    throw Error(ErrorCode::RankDeficientDesign,
                "fit_probit: need more observations than coefficients (n=" + std::to_string(n) +
                    ", p=" + std::to_string(p) + ")");
  }
  Eigen::Index ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) {
      throw Error(ErrorCode::Domain, "fit_probit: response must be binary (row " +
                                         std::to_string(i) + ")");
    }
    if (y(i) == 1.0) ++ones;
  }
  if (ones == 0 || ones == n) {
    throw Error(ErrorCode::SeparationDetected,
                "fit_probit: response contains a single class; the likelihood has no finite "
                "maximiser");
  }
  // Rank check on the column-normalised Gram matrix.
  Matrix gram = x.transpose() * x;
  Vector scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(gram(j, j) > 0.0)) {
      throw Error(ErrorCode::RankDeficientDesign,
                  "fit_probit: design column " + std::to_string(j) + " is identically zero");
    }
    scale(j) = 1.0 / std::sqrt(gram(j, j));
  }
  gram = scale.asDiagonal() * gram * scale.asDiagonal();
  try {
    const Matrix l = cholesky_lower(gram);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (l(j, j) * l(j, j) < 1e-10) throw SingularMatrixError(static_cast<std::size_t>(j), "");
    }
  } catch (const SingularMatrixError& e) {
    throw Error(ErrorCode::RankDeficientDesign,
                "fit_probit: design is not of full column rank (pivot " +
                    std::to_string(e.pivot()) + ")");
  }
}

bool has_intercept_column(const Matrix& x) {
  return x.cols() > 0 && (x.col(0).array() == 1.0).all();
}

}  // namespace

Matrix ProbitFit::sandwich_covariance() const {
  const Matrix meat = scores.transpose() * scores;
  return static_cast<double>(n()) * covariance * meat * covariance;
}

double probit_loglik(const Vector& coefs, const Vector& y, const Matrix& x) {
  if (x.cols() != coefs.size() || x.rows() != y.size()) {
    throw Error(ErrorCode::Domain, "probit_loglik: dimension mismatch");
  }
  const Vector eta = x * coefs;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    total += observation_terms(y(i) > 0.5 ? eta(i) : -eta(i)).log_prob;
  }
  return total;
}

ProbitFit fit_probit(const Vector& y, const Matrix& x, const ProbitOptions& opts) {
  check_design(y, x);
  const Eigen::Index p = x.cols();

  Vector coefs = Vector::Zero(p);
  if (has_intercept_column(x)) coefs(0) = std_normal_quantile(y.mean());

  NewtonState state = evaluate(coefs, y, x);
  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (state.gradient.cwiseAbs().maxCoeff() <= opts.tol) {
      converged = true;
      break;
    }
    Vector step;
    try {
      step = solve_spd(state.information, state.gradient);
    } catch (const SingularMatrixError& e) {
      throw Error(ErrorCode::RankDeficientDesign,
                  std::string("fit_probit: observed information is singular: ") + e.what());
    }

    double scale = 1.0;
    bool accepted = false;
    Vector candidate;
    double candidate_ll = 0.0;
    // Log-likelihood differences below this are rounding noise.
    const double noise = 1e-12 * (1.0 + std::abs(state.log_likelihood));
    for (int h = 0; h <= opts.max_halvings; ++h, scale *= 0.5) {
      candidate = coefs + scale * step;
      candidate_ll = probit_loglik(candidate, y, x);
      if (candidate_ll >= state.log_likelihood) {
        accepted = true;
        break;
      }
      if (h == 0 && state.log_likelihood - candidate_ll <= noise) {
        // Within noise of the optimum: judge the step by the score instead.
        const NewtonState trial = evaluate(candidate, y, x);
        if (trial.gradient.cwiseAbs().maxCoeff() < state.gradient.cwiseAbs().maxCoeff()) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      // No representable improvement along the Newton direction: the
      // iterate sits at the floating-point floor of the optimum.
      converged = step.norm() <= 1e-8 * (1.0 + coefs.norm());
      break;
    }

    const double step_norm = (candidate - coefs).norm();
    coefs = candidate;
    state = evaluate(coefs, y, x);
    if (coefs.cwiseAbs().maxCoeff() > opts.divergence_bound) {
      throw Error(ErrorCode::SeparationDetected,
                  "fit_probit: coefficients diverge past |" +
                      std::to_string(opts.divergence_bound) +
                      "| while the likelihood keeps improving (separation)");
    }
    if (step_norm <= opts.step_tol) {
      ++iter;
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ProbitNotConvergedError(coefs, "fit_probit: no convergence after " +
                                             std::to_string(iter) + " iterations");
  }

  ProbitFit fit;
  fit.coefficients = coefs;
  fit.information = state.information;
  try {
    fit.covariance = inverse_spd(state.information);
  } catch (const SingularMatrixError& e) {
    throw Error(ErrorCode::RankDeficientDesign,
                std::string("fit_probit: information singular at optimum: ") + e.what());
  }
  fit.scores = x.array().colwise() * state.score_weights.array();
  fit.log_likelihood = state.log_likelihood;
  fit.iterations = iter;
  fit.converged = true;
  return fit;
}

Matrix stacked_score_covariance(const ProbitFit& fit_x, const ProbitFit& fit_y) {
  if (fit_x.n() != fit_y.n()) {
    throw Error(ErrorCode::AlignmentError,
                "stacked_score_covariance: fits use different row counts (" +
                    std::to_string(fit_x.n()) + " vs " + std::to_string(fit_y.n()) + ")");
  }
  const Eigen::Index px = fit_x.p();
  const Eigen::Index py = fit_y.p();
  Matrix bread = Matrix::Zero(px + py, px + py);
  bread.topLeftCorner(px, px) = fit_x.covariance;
  bread.bottomRightCorner(py, py) = fit_y.covariance;
  Matrix stacked(fit_x.n(), px + py);
  stacked << fit_x.scores, fit_y.scores;
  const Matrix meat = stacked.transpose() * stacked;
  return static_cast<double>(fit_x.n()) * bread * meat * bread;
}

Matrix lambda_covariance(const ProbitFit& fit_x, const ProbitFit& fit_y) {
  if (fit_x.p() < 3 || fit_y.p() < 3) {
    throw Error(ErrorCode::Domain,
                "lambda_covariance: each fit needs intercept, Z and W coefficients");
  }
  const Matrix full = stacked_score_covariance(fit_x, fit_y);
  const Eigen::Index px = fit_x.p();
  const std::array<Eigen::Index, 6> index{0, 1, 2, px, px + 1, px + 2};
  Matrix out(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) out(i, j) = full(index[i], index[j]);
  return out;
}

}  // namespace bicausal
