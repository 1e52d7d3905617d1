#include "bicausal/numerics.hpp"

#include "bicausal/errors.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace bicausal {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;

// Below this point Phi is evaluated from its asymptotic expansion in log
// space; erfc is still representable here, so both branches overlap.
constexpr double kLowerTailSwitch = -35.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

// log(1 - 1/x^2 + 3/x^4 - 15/x^6 + ...) truncated after the x^-10 term.
double mills_tail_correction(double x) {
  const double r = 1.0 / (x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 5; ++k) {
    term *= -static_cast<double>(2 * k - 1) * r;
    sum += term;
  }
  return std::log(sum);
}

}  // namespace

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double log_std_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-std_normal_cdf(-x));
  if (x > kLowerTailSwitch) return std::log(std_normal_cdf(x));
  return -0.5 * x * x - kLogSqrt2Pi - std::log(-x) + mills_tail_correction(x);
}

double inverse_mills_ratio(double x) {
  if (x > kLowerTailSwitch) return std_normal_pdf(x) / std_normal_cdf(x);
  // phi(x)/Phi(x) = -x / (1 - 1/x^2 + 3/x^4 - ...)
  return -x / std::exp(mills_tail_correction(x));
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::Domain,
                "std_normal_quantile: p must lie in (0, 1), got " + std::to_string(p));
  }
  if (p > 0.5) return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

Matrix cholesky_lower(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::Domain, "cholesky_lower: matrix is not square");
  }
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw SingularMatrixError(static_cast<std::size_t>(j),
                                "matrix is not positive definite at pivot " +
                                    std::to_string(j));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Vector solve_spd(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) {
    throw Error(ErrorCode::Domain, "solve_spd: dimension mismatch");
  }
  const Matrix l = cholesky_lower(a);
  const auto lower = l.triangularView<Eigen::Lower>();
  Vector y = lower.solve(b);
  return lower.transpose().solve(y);
}

Matrix inverse_spd(const Matrix& a) {
  const Matrix l = cholesky_lower(a);
  const auto lower = l.triangularView<Eigen::Lower>();
  Matrix inv = lower.solve(Matrix::Identity(a.rows(), a.cols()));
  inv = lower.transpose().solve(inv);
  return 0.5 * (inv + inv.transpose());
}

Matrix numeric_jacobian(const VectorFunction& f, const Vector& x, double scale) {
  const Eigen::Index m = x.size();
  Matrix jac;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double h = scale * std::max(1.0, std::abs(x(j)));
    Vector forward = x;
    Vector backward = x;
    forward(j) += h;
    backward(j) -= h;
    Vector f_plus;
    Vector f_minus;
    try {
      f_plus = f(forward);
      f_minus = f(backward);
    } catch (const Error& e) {
      throw JacobianEvaluationError(
          static_cast<std::size_t>(j), e.code(),
          "numeric_jacobian: evaluation failed when perturbing coordinate " +
              std::to_string(j) + ": " + e.what());
    }
    if (j == 0) jac.resize(f_plus.size(), m);
    // The actual spacing after rounding, not the nominal 2h.
    jac.col(j) = (f_plus - f_minus) / (forward(j) - backward(j));
  }
  return jac;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

RngStream RngStream::derive(std::uint64_t index) const {
  return RngStream(seed_, splitmix64(stream_id_ ^ splitmix64(index + 1)));
}

RngStream RngStream::derive(std::uint64_t index, std::uint64_t sub_index) const {
  return derive(index).derive(sub_index);
}

double RngStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() { return std_normal_quantile(uniform()); }

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::Domain, "RngStream::below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

ConfounderDraws draw_bivariate_confounders(RngStream& rng, std::size_t n, double sigma,
                                           double gamma1, double gamma2) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::InvalidParameters, "confounder scale sigma must be positive");
  }
  if (!(gamma1 > 0.0) || gamma1 < gamma2 * gamma2) {
    throw Error(ErrorCode::InfeasibleConfounderStructure,
                "confounder structure requires gamma1 > 0 and gamma1 >= gamma2^2 (gamma1=" +
                    std::to_string(gamma1) + ", gamma2=" + std::to_string(gamma2) + ")");
  }
  const double residual_scale = std::sqrt(gamma1 - gamma2 * gamma2) * sigma;
  ConfounderDraws draws{Vector(static_cast<Eigen::Index>(n)),
                        Vector(static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    const double v = sigma * rng.normal();
    const double e = rng.normal();
    draws.v(static_cast<Eigen::Index>(i)) = v;
    draws.u(static_cast<Eigen::Index>(i)) = gamma2 * v + residual_scale * e;
  }
  return draws;
}

}  // namespace bicausal
