#include "bicausal/identification.hpp"
#include "bicausal/probit.hpp"
#include "bicausal/structural_model.hpp"

#include <cmath>

#include "doctest.h"

using namespace bicausal;

namespace {

// y ~ probit(b0 + b1 x1 + b2 x2), x ~ N(0, 1).
struct ProbitData {
  Vector y;
  Matrix x;
};

ProbitData probit_data(std::size_t n, const Vector& beta, std::uint64_t seed) {
  RngStream rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  ProbitData d{Vector(rows), Matrix(rows, beta.size())};
  for (Eigen::Index i = 0; i < rows; ++i) {
    d.x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < beta.size(); ++j) d.x(i, j) = rng.normal();
    d.y(i) = d.x.row(i).dot(beta) + rng.normal() > 0.0 ? 1.0 : 0.0;
  }
  return d;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

}  // namespace

TEST_CASE("intercept-only fits") {
  Vector y(1000);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = i % 2;
  const ProbitFit half = fit_probit(y, Matrix::Ones(1000, 1));
  CHECK(half.converged);
  CHECK(std::abs(half.coefficients(0)) < 1e-8);

  Vector y975 = Vector::Ones(4000);
  y975.head(100).setZero();
  const ProbitFit f = fit_probit(y975, Matrix::Ones(4000, 1));
  CHECK(std::abs(f.coefficients(0) - 1.959964) < 1e-4);
}

TEST_CASE("log likelihood values") {
  const ProbitData d = probit_data(50, vec({0.2, 0.5}), 3);
  CHECK(probit_loglik(Vector::Zero(2), d.y, d.x) == doctest::Approx(50 * std::log(0.5)));
  Matrix one(1, 1);
  one(0, 0) = 1.959964;
  CHECK(probit_loglik(Vector::Ones(1), Vector::Ones(1), one) ==
        doctest::Approx(std::log(0.975)).epsilon(1e-6));
}

TEST_CASE("fit recovers coefficients and satisfies the score conditions") {
  const Vector beta = vec({0.3, -0.7, 0.4});
  const ProbitData d = probit_data(20000, beta, 17);
  const ProbitFit fit = fit_probit(d.y, d.x);
  REQUIRE(fit.converged);
  const Vector se = fit.standard_errors();
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    CHECK(std::abs(fit.coefficients(j) - beta(j)) < 4.0 * se(j));
  }
  CHECK(fit.scores.colwise().sum().cwiseAbs().maxCoeff() <= 1e-8);

  // Fitted probabilities track the sample mean.
  double mean_p = 0.0, mean_y = d.y.mean();
  const Vector eta = d.x * fit.coefficients;
  CHECK(std::abs(fit.scores.col(0).sum()) <= 1e-8);
  for (Eigen::Index i = 0; i < eta.size(); ++i) mean_p += std_normal_cdf(eta(i));
  mean_p /= static_cast<double>(eta.size());
  CHECK(std::abs(mean_p - mean_y) < 0.01);

  // Optimality: random perturbations never improve the log-likelihood.
  RngStream rng(5);
  for (int k = 0; k < 20; ++k) {
    Vector pert = fit.coefficients;
    for (Eigen::Index j = 0; j < pert.size(); ++j) pert(j) += 0.01 * rng.normal();
    CHECK(probit_loglik(pert, d.y, d.x) <= fit.log_likelihood);
  }

  // Covariance is symmetric positive semidefinite.
  CHECK((fit.covariance - fit.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Matrix> es(fit.covariance);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("rescaling a regressor rescales its coefficient") {
  const ProbitData d = probit_data(5000, vec({0.1, 0.8, -0.3}), 23);
  const ProbitFit base = fit_probit(d.y, d.x, {100, 1e-11});
  Matrix scaled = d.x;
  scaled.col(1) *= 2.5;
  const ProbitFit s = fit_probit(d.y, scaled, {100, 1e-11});
  CHECK(std::abs(s.coefficients(1) - base.coefficients(1) / 2.5) <= 1e-8);
  CHECK(std::abs(s.coefficients(2) - base.coefficients(2)) <= 1e-8);
}

TEST_CASE("design and separation errors") {
  const ProbitData d = probit_data(200, vec({0.0, 1.0}), 31);
  Matrix dup(200, 3);
  dup << d.x, d.x.col(1);
  CHECK_THROWS_AS(fit_probit(d.y, dup), Error);
  try {
    fit_probit(d.y, dup);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientDesign);
  }

  Vector sep(200);
  for (Eigen::Index i = 0; i < 200; ++i) sep(i) = d.x(i, 1) > 0.0 ? 1.0 : 0.0;
  try {
    fit_probit(sep, d.x);
    FAIL("expected separation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SeparationDetected);
  }

  try {
    fit_probit(Vector::Ones(200), d.x);
    FAIL("expected separation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SeparationDetected);
  }

  ProbitOptions once;
  once.max_iter = 1;
  once.tol = 1e-300;
  once.step_tol = 0.0;
  try {
    fit_probit(d.y, d.x, once);
    FAIL("expected non-convergence");
  } catch (const ProbitNotConvergedError& e) {
    CHECK(e.last_iterate().size() == 2);
  }
}

TEST_CASE("stacked score covariance") {
  const StructuralParams p = StructuralParams::simulation_baseline();
  const Dataset d = simulate(p, IVScenario::gaussian(), 20000, RngStream(8));
  const ReducedFormFits f = fit_reduced_form(d);
  const Matrix s = stacked_score_covariance(f.fit_x, f.fit_y);
  const auto px = f.fit_x.p(), py = f.fit_y.p();
  CHECK((s.topLeftCorner(px, px) - f.fit_x.sandwich_covariance()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((s.bottomRightCorner(py, py) - f.fit_y.sandwich_covariance()).cwiseAbs().maxCoeff() <=
        1e-12);
  CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix l = lambda_covariance(f.fit_x, f.fit_y);
  CHECK(l.rows() == 6);
  CHECK(l(1, 4) == s(1, px + 1));

  // Independent halves spliced side by side: cross blocks vanish up to noise.
  const Dataset a = simulate(p, IVScenario::gaussian(), 20000, RngStream(100));
  const Dataset b = simulate(p, IVScenario::gaussian(), 20000, RngStream(200));
  const ReducedFormFits fa = fit_reduced_form(a), fb = fit_reduced_form(b);
  const Matrix c = stacked_score_covariance(fa.fit_x, fb.fit_y);
  const Matrix cross = c.topRightCorner(px, py);
  // Each cross entry has sd about sqrt(Sxx Syy) / sqrt(n).
  for (Eigen::Index i = 0; i < px; ++i) {
    for (Eigen::Index j = 0; j < py; ++j) {
      const double sd = std::sqrt(c(i, i) * c(px + j, px + j) / 20000.0);
      CHECK(std::abs(cross(i, j)) <= 3.0 * sd);
    }
  }

  const Dataset shorter = simulate(p, IVScenario::gaussian(), 100, RngStream(1));
  const ReducedFormFits fs = fit_reduced_form(shorter);
  try {
    stacked_score_covariance(fa.fit_x, fs.fit_y);
    FAIL("expected alignment error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlignmentError);
  }
}
