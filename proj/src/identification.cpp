#include "bicausal/identification.hpp"

#include "bicausal/errors.hpp"

#include <cmath>
#include <string>

namespace bicausal {

namespace {

constexpr double kDegenerate = 1e-12;

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

void require_binary_classes(const Vector& v, const std::string& name) {
  const double ones = v.sum();
  if (ones == 0.0 || ones == static_cast<double>(v.size())) {
    throw Error(ErrorCode::SeparationDetected,
                "column " + name + " contains a single class; probit fit is not identified");
  }
}

}  // namespace

std::string method_name(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::IvProp1: return "iv";
    case EstimateMethod::Naive: return "naive";
    case EstimateMethod::Sensitivity: return "sensitivity";
  }
  return "unknown";
}

BetaPair identify_prop1(const ProbitCoefVector& xi) {
  if (std::abs(xi.xi_xz) < kDegenerate || std::abs(xi.xi_yw) < kDegenerate) {
    throw Error(ErrorCode::DegenerateRatio,
                "identify_prop1: instrument coefficient xi_xz or xi_yw is zero");
  }
  const double xz2 = xi.xi_xz * xi.xi_xz;
  const double xw2 = xi.xi_xw * xi.xi_xw;
  const double yz2 = xi.xi_yz * xi.xi_yz;
  const double yw2 = xi.xi_yw * xi.xi_yw;
  const double w_diff = xw2 - yw2;
  const double z_diff = yz2 - xz2;
  if (std::abs(w_diff) < kDegenerate || std::abs(z_diff) < kDegenerate) {
    throw Error(ErrorCode::DegenerateRatio,
                "identify_prop1: xi_xw^2 = xi_yw^2 or xi_yz^2 = xi_xz^2; the map is singular");
  }
  const double arg_xy = (xw2 * xz2 - yw2 * xz2) / (yz2 * yw2 - yw2 * xz2);
  const double arg_yx = (yz2 * yw2 - xz2 * yw2) / (xw2 * xz2 - xz2 * yw2);
  if (arg_xy < 0.0 || arg_yx < 0.0) {
    throw InfeasibleIdentificationError(
        sign_of(w_diff), sign_of(z_diff),
        "identify_prop1: negative square-root argument (sgn(xi_xw^2 - xi_yw^2) = " +
            std::to_string(sign_of(w_diff)) + ", sgn(xi_yz^2 - xi_xz^2) = " +
            std::to_string(sign_of(z_diff)) + ")");
  }
  return {xi.xi_yz / xi.xi_xz * std::sqrt(arg_xy), xi.xi_xw / xi.xi_yw * std::sqrt(arg_yx)};
}

Matrix design_matrix(const Dataset& d, const std::vector<const Vector*>& lead, bool include_q) {
  const Eigen::Index n = d.n();
  const Eigen::Index k = include_q ? d.q.cols() : 0;
  const auto l = static_cast<Eigen::Index>(lead.size());
  Matrix x(n, 3 + l + k);
  x.col(0).setOnes();
  for (Eigen::Index j = 0; j < l; ++j) x.col(1 + j) = *lead[static_cast<std::size_t>(j)];
  x.col(1 + l) = d.z;
  x.col(2 + l) = d.w;
  if (k > 0) x.rightCols(k) = d.q;
  return x;
}

ReducedFormFits fit_reduced_form(const Dataset& d, const EstimationOptions& opts) {
  require_binary_classes(d.x, d.x_name);
  require_binary_classes(d.y, d.y_name);
  const Matrix design = design_matrix(d, {}, opts.include_q);
  ReducedFormFits fits{fit_probit(d.x, design, opts.probit), fit_probit(d.y, design, opts.probit),
                       {}};
  const Vector& cx = fits.fit_x.coefficients;
  const Vector& cy = fits.fit_y.coefficients;
  fits.xi = {cx(0), cx(1), cx(2), cy(0), cy(1), cy(2)};
  return fits;
}

EffectEstimate estimate_from_fits(const ReducedFormFits& fits) {
  EffectEstimate est;
  est.method = EstimateMethod::IvProp1;
  est.method_detail = "prop1";
  est.diagnostics.fit_x_converged = fits.fit_x.converged;
  est.diagnostics.fit_y_converged = fits.fit_y.converged;
  est.diagnostics.fit_x_iterations = fits.fit_x.iterations;
  est.diagnostics.fit_y_iterations = fits.fit_y.iterations;
  const BetaPair b = identify_prop1(fits.xi);
  const ProbitCoefVector& xi = fits.xi;
  const double xz2 = xi.xi_xz * xi.xi_xz, xw2 = xi.xi_xw * xi.xi_xw;
  const double yz2 = xi.xi_yz * xi.xi_yz, yw2 = xi.xi_yw * xi.xi_yw;
  est.diagnostics.sqrt_argument_xy = (xw2 * xz2 - yw2 * xz2) / (yz2 * yw2 - yw2 * xz2);
  est.diagnostics.sqrt_argument_yx = (yz2 * yw2 - xz2 * yw2) / (xw2 * xz2 - xz2 * yw2);
  est.beta_xy = b.xy;
  est.beta_yx = b.yx;
  return est;
}

EffectEstimate estimate_alg1(const Dataset& d, const EstimationOptions& opts) {
  return estimate_from_fits(fit_reduced_form(d, opts));
}

EffectEstimate estimate_naive(const Dataset& d, const EstimationOptions& opts) {
  require_binary_classes(d.x, d.x_name);
  require_binary_classes(d.y, d.y_name);
  const ProbitFit on_x = fit_probit(d.y, design_matrix(d, {&d.x}, opts.include_q), opts.probit);
  const ProbitFit on_y = fit_probit(d.x, design_matrix(d, {&d.y}, opts.include_q), opts.probit);
  EffectEstimate est;
  est.method = EstimateMethod::Naive;
  est.method_detail = "GLS";
  est.beta_xy = on_x.coefficients(1);
  est.beta_yx = on_y.coefficients(1);
  est.se_xy = std::sqrt(on_x.covariance(1, 1));
  est.se_yx = std::sqrt(on_y.covariance(1, 1));
  est.diagnostics.fit_x_converged = on_y.converged;
  est.diagnostics.fit_y_converged = on_x.converged;
  est.diagnostics.fit_x_iterations = on_y.iterations;
  est.diagnostics.fit_y_iterations = on_x.iterations;
  return est;
}

}  // namespace bicausal
