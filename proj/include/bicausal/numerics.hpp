#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <random>

namespace bicausal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Standard normal distribution
// ---------------------------------------------------------------------------

double std_normal_pdf(double x);
double std_normal_cdf(double x);

// log Phi(x), accurate in the lower tail well past x = -37 where Phi itself
// underflows.
double log_std_normal_cdf(double x);

// phi(x) / Phi(x), the inverse Mills ratio, stable for large negative x.
double inverse_mills_ratio(double x);

// Throws ErrorCode::Domain unless 0 < p < 1.
double std_normal_quantile(double p);

// ---------------------------------------------------------------------------
// Dense linear algebra (symmetric positive definite systems only)
// ---------------------------------------------------------------------------

// Lower Cholesky factor of A. Throws SingularMatrixError with the failing
// pivot index when A is not numerically positive definite.
Matrix cholesky_lower(const Matrix& a);

Vector solve_spd(const Matrix& a, const Vector& b);
Matrix inverse_spd(const Matrix& a);

// ---------------------------------------------------------------------------
// Numeric differentiation
// ---------------------------------------------------------------------------

using VectorFunction = std::function<Vector(const Vector&)>;

inline double default_jacobian_scale() {
  return std::cbrt(std::numeric_limits<double>::epsilon());
}

// Central-difference Jacobian (k x m) with step scale * max(1, |x_j|).
// A bicausal::Error thrown by f at a perturbed point is rethrown as a
// JacobianEvaluationError naming the coordinate.
Matrix numeric_jacobian(const VectorFunction& f, const Vector& x,
                        double scale = default_jacobian_scale());

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

// A reproducible random stream identified by (seed, stream_id). Streams with
// different ids are seeded through independent seed sequences; derive()
// produces child streams for per-task use so that results do not depend on
// scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Child stream keyed by this stream's id and the given indices.
  RngStream derive(std::uint64_t index) const;
  RngStream derive(std::uint64_t index, std::uint64_t sub_index) const;

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

struct ConfounderDraws {
  Vector u;
  Vector v;
};

// (U, V) with Var(V) = sigma^2, Var(U) = gamma1 sigma^2 and
// Cov(U, V) = gamma2 sigma^2, built as U = gamma2 V + sqrt(gamma1 - gamma2^2)
// sigma e. Throws InfeasibleConfounderStructure when gamma1 < gamma2^2.
ConfounderDraws draw_bivariate_confounders(RngStream& rng, std::size_t n,
                                           double sigma, double gamma1,
                                           double gamma2);

}  // namespace bicausal
