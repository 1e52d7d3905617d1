#pragma once

#include "bicausal/numerics.hpp"

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace bicausal {

// Latent bidirectional model
//
//   X* = mu_x0 + beta_yx Y* + mu_xz Z + delta W + mu_xq Q + U,   X = 1{X* > 0}
//   Y* = mu_y0 + beta_xy X* + eta Z + mu_yw W + mu_yq Q + V,     Y = 1{Y* > 0}
//
// with Var(V) = sigma^2, Var(U) = gamma1 sigma^2, Cov(U, V) = gamma2 sigma^2.
// eta = delta = 0 gives valid instruments; gamma1 = 1, gamma2 = 0 gives
// independent confounders of equal scale.
struct StructuralParams {
  double mu_x0 = 0.0;
  double mu_y0 = 0.0;
  double beta_xy = 0.0;  // X* -> Y*
  double beta_yx = 0.0;  // Y* -> X*
  double mu_xz = 1.0;
  double mu_yw = 1.0;
  double sigma = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 0.0;
  double eta = 0.0;    // direct Z -> Y*
  double delta = 0.0;  // direct W -> X*
  double mu_xq = 0.0;
  double mu_yq = 0.0;

  // Throws InvalidParameters / FeedbackSingular / InfeasibleConfounderStructure.
  void validate() const;

  // The baseline simulation design: beta_yx = 0.45, beta_xy = -0.25,
  // mu_xz = mu_yw = 0.65, sigma = 0.75, mu_xq = mu_yq = 0.15, zero intercepts.
  static StructuralParams simulation_baseline();
};

struct ReducedForm {
  double c = 1.0;
  double theta_x0 = 0.0, theta_xz = 0.0, theta_xw = 0.0, theta_xq = 0.0;
  double theta_y0 = 0.0, theta_yz = 0.0, theta_yw = 0.0, theta_yq = 0.0;
  double theta_xu = 0.0, theta_xv = 0.0, theta_yu = 0.0, theta_yv = 0.0;
  double lambda1 = 1.0;  // Var(theta_xu U + theta_xv V)
  double lambda2 = 1.0;  // Var(theta_yu U + theta_yv V)
};

// Identifiable probit coefficients Lambda = (xi_x0, xi_xz, xi_xw, xi_y0,
// xi_yz, xi_yw).
struct ProbitCoefVector {
  double xi_x0 = 0.0;
  double xi_xz = 0.0;
  double xi_xw = 0.0;
  double xi_y0 = 0.0;
  double xi_yz = 0.0;
  double xi_yw = 0.0;

  Vector to_vector() const;
  static ProbitCoefVector from_vector(const Vector& lambda);
  bool all_finite() const;
};

// Feedback-solved reduced form, including the direct-effect terms eta and
// delta. Throws FeedbackSingular when |1 - beta_xy beta_yx| < 1e-12.
ReducedForm reduced_form(const StructuralParams& p);

// xi = theta / sqrt(lambda) row by row.
ProbitCoefVector probit_coefs(const StructuralParams& p);

// Probit coefficients of Q in the X and Y models.
std::array<double, 2> probit_q_coefs(const StructuralParams& p);

struct Provenance {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  // Pre-standardisation sample mean / sd of standardised columns.
  std::map<std::string, double> raw_means;
  std::map<std::string, double> raw_sds;
};

struct Dataset {
  Vector x;  // binary
  Vector y;  // binary
  Vector z;
  Vector w;
  Matrix q;  // n x k extra covariates, k may be zero
  std::vector<std::string> q_names;
  std::string x_name = "x", y_name = "y", z_name = "z", w_name = "w";
  Provenance provenance;

  Eigen::Index n() const { return x.size(); }

  // Checks column lengths and that x, y are binary.
  void validate() const;

  Dataset take_rows(const std::vector<Eigen::Index>& rows) const;
};

enum class IVScenarioKind { GaussianIVs, UniformIVs, Custom };

struct IVScenario {
  IVScenarioKind kind = IVScenarioKind::GaussianIVs;
  // Used only by Custom.
  std::function<double(RngStream&)> z_sampler;
  std::function<double(RngStream&)> w_sampler;

  static IVScenario gaussian() { return {}; }
  static IVScenario uniform() { return {IVScenarioKind::UniformIVs, {}, {}}; }
};

std::string scenario_name(IVScenarioKind kind);
IVScenarioKind parse_scenario(const std::string& name);

// Draws Q ~ N(0, 1), (U, V), then (Z, W) per scenario, solves the latent
// system exactly through the reduced form and thresholds at zero.
Dataset simulate(const StructuralParams& p, const IVScenario& scenario, std::size_t n,
                 RngStream rng);

}  // namespace bicausal
