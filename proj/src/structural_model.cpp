#include "bicausal/structural_model.hpp"

#include "bicausal/errors.hpp"

#include <cmath>
#include <string>

namespace bicausal {

void StructuralParams::validate() const {
  const std::array<double, 13> all{mu_x0, mu_y0, beta_xy, beta_yx, mu_xz, mu_yw, sigma,
                                   gamma1, gamma2, eta, delta, mu_xq, mu_yq};
  for (double v : all) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidParameters, "structural parameters must be finite");
    }
  }
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::InvalidParameters, "sigma must be positive");
  }
  if (std::abs(1.0 - beta_xy * beta_yx) < 1e-12) {
    throw Error(ErrorCode::FeedbackSingular,
                "beta_xy * beta_yx = 1: the feedback system has no unique solution");
  }
  if (!(gamma1 > 0.0) || gamma1 < gamma2 * gamma2) {
    throw Error(ErrorCode::InfeasibleConfounderStructure,
                "confounder structure requires gamma1 > 0 and gamma1 >= gamma2^2");
  }
}

StructuralParams StructuralParams::simulation_baseline() {
  StructuralParams p;
  p.beta_yx = 0.45;
  p.beta_xy = -0.25;
  p.mu_xz = 0.65;
  p.mu_yw = 0.65;
  p.sigma = 0.75;
  p.mu_xq = 0.15;
  p.mu_yq = 0.15;
  return p;
}

Vector ProbitCoefVector::to_vector() const {
  Vector v(6);
  v << xi_x0, xi_xz, xi_xw, xi_y0, xi_yz, xi_yw;
  return v;
}

ProbitCoefVector ProbitCoefVector::from_vector(const Vector& lambda) {
  if (lambda.size() != 6) {
    throw Error(ErrorCode::Domain, "ProbitCoefVector needs exactly six entries");
  }
  return {lambda(0), lambda(1), lambda(2), lambda(3), lambda(4), lambda(5)};
}

bool ProbitCoefVector::all_finite() const { return to_vector().allFinite(); }

ReducedForm reduced_form(const StructuralParams& p) {
  const double denom = 1.0 - p.beta_xy * p.beta_yx;
  if (std::abs(denom) < 1e-12) {
    throw Error(ErrorCode::FeedbackSingular,
                "beta_xy * beta_yx = 1: the feedback system has no unique solution");
  }
  ReducedForm r;
  const double c = 1.0 / denom;
  r.c = c;
  r.theta_x0 = c * (p.mu_x0 + p.beta_yx * p.mu_y0);
  r.theta_xz = c * (p.mu_xz + p.beta_yx * p.eta);
  r.theta_xw = c * (p.delta + p.beta_yx * p.mu_yw);
  r.theta_xq = c * (p.mu_xq + p.beta_yx * p.mu_yq);
  r.theta_y0 = c * (p.beta_xy * p.mu_x0 + p.mu_y0);
  r.theta_yz = c * (p.beta_xy * p.mu_xz + p.eta);
  r.theta_yw = c * (p.beta_xy * p.delta + p.mu_yw);
  r.theta_yq = c * (p.beta_xy * p.mu_xq + p.mu_yq);
  r.theta_xu = c;
  r.theta_xv = c * p.beta_yx;
  r.theta_yu = c * p.beta_xy;
  r.theta_yv = c;
  const double s2 = p.sigma * p.sigma;
  r.lambda1 = c * c * s2 * (p.gamma1 + 2.0 * p.gamma2 * p.beta_yx + p.beta_yx * p.beta_yx);
  r.lambda2 = c * c * s2 * (p.gamma1 * p.beta_xy * p.beta_xy + 2.0 * p.gamma2 * p.beta_xy + 1.0);
  return r;
}

namespace {

std::array<double, 2> latent_scales(const ReducedForm& r) {
  if (!(r.lambda1 > 0.0) || !(r.lambda2 > 0.0)) {
    throw Error(ErrorCode::InvalidParameters,
                "latent error variance is zero; probit coefficients are undefined");
  }
  return {std::sqrt(r.lambda1), std::sqrt(r.lambda2)};
}

}  // namespace

ProbitCoefVector probit_coefs(const StructuralParams& p) {
  const ReducedForm r = reduced_form(p);
  const auto [sx, sy] = latent_scales(r);
  return {r.theta_x0 / sx, r.theta_xz / sx, r.theta_xw / sx,
          r.theta_y0 / sy, r.theta_yz / sy, r.theta_yw / sy};
}

std::array<double, 2> probit_q_coefs(const StructuralParams& p) {
  const ReducedForm r = reduced_form(p);
  const auto [sx, sy] = latent_scales(r);
  return {r.theta_xq / sx, r.theta_yq / sy};
}

void Dataset::validate() const {
  const Eigen::Index rows = x.size();
  if (y.size() != rows || z.size() != rows || w.size() != rows ||
      (q.cols() > 0 && q.rows() != rows)) {
    throw Error(ErrorCode::Domain, "dataset columns have different lengths");
  }
  if (static_cast<Eigen::Index>(q_names.size()) != q.cols()) {
    throw Error(ErrorCode::Domain, "dataset covariate names do not match covariate columns");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    if ((x(i) != 0.0 && x(i) != 1.0) || (y(i) != 0.0 && y(i) != 1.0)) {
      throw Error(ErrorCode::Domain, "x and y must be binary (row " + std::to_string(i) + ")");
    }
  }
}

Dataset Dataset::take_rows(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.x_name = x_name;
  out.y_name = y_name;
  out.z_name = z_name;
  out.w_name = w_name;
  out.q_names = q_names;
  out.provenance = provenance;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.x.resize(m);
  out.y.resize(m);
  out.z.resize(m);
  out.w.resize(m);
  out.q.resize(q.cols() > 0 ? m : 0, q.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    out.x(i) = x(r);
    out.y(i) = y(r);
    out.z(i) = z(r);
    out.w(i) = w(r);
    if (q.cols() > 0) out.q.row(i) = q.row(r);
  }
  return out;
}

std::string scenario_name(IVScenarioKind kind) {
  switch (kind) {
    case IVScenarioKind::GaussianIVs: return "gaussian";
    case IVScenarioKind::UniformIVs: return "uniform";
    case IVScenarioKind::Custom: return "custom";
  }
  return "unknown";
}

IVScenarioKind parse_scenario(const std::string& name) {
  if (name == "gaussian" || name == "1") return IVScenarioKind::GaussianIVs;
  if (name == "uniform" || name == "2") return IVScenarioKind::UniformIVs;
  throw Error(ErrorCode::Configuration,
              "unknown IV scenario '" + name + "' (expected gaussian or uniform)");
}

Dataset simulate(const StructuralParams& p, const IVScenario& scenario, std::size_t n,
                 RngStream rng) {
  p.validate();
  if (n == 0) throw Error(ErrorCode::InvalidParameters, "simulate: n must be at least 1");
  if (scenario.kind == IVScenarioKind::Custom && (!scenario.z_sampler || !scenario.w_sampler)) {
    throw Error(ErrorCode::Configuration, "custom IV scenario needs Z and W samplers");
  }
  const auto rows = static_cast<Eigen::Index>(n);

  // Generation order: Q, then (U, V), then (Z, W).
  Vector q(rows);
  for (Eigen::Index i = 0; i < rows; ++i) q(i) = rng.normal();
  const ConfounderDraws uv = draw_bivariate_confounders(rng, n, p.sigma, p.gamma1, p.gamma2);
  Vector z(rows);
  Vector w(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    switch (scenario.kind) {
      case IVScenarioKind::GaussianIVs:
        z(i) = rng.normal();
        w(i) = rng.normal();
        break;
      case IVScenarioKind::UniformIVs:
        z(i) = rng.uniform(-1.0, 1.0);
        w(i) = rng.uniform(-1.0, 1.0);
        break;
      case IVScenarioKind::Custom:
        z(i) = scenario.z_sampler(rng);
        w(i) = scenario.w_sampler(rng);
        break;
    }
  }

  const double c = 1.0 / (1.0 - p.beta_xy * p.beta_yx);
  Dataset d;
  d.x.resize(rows);
  d.y.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double ex = p.mu_x0 + p.mu_xz * z(i) + p.delta * w(i) + p.mu_xq * q(i) + uv.u(i);
    const double ey = p.mu_y0 + p.eta * z(i) + p.mu_yw * w(i) + p.mu_yq * q(i) + uv.v(i);
    const double x_latent = c * (ex + p.beta_yx * ey);
    const double y_latent = c * (p.beta_xy * ex + ey);
    d.x(i) = x_latent > 0.0 ? 1.0 : 0.0;
    d.y(i) = y_latent > 0.0 ? 1.0 : 0.0;
  }
  d.z = std::move(z);
  d.w = std::move(w);
  d.q = q;
  d.q_names = {"q"};
  d.provenance.rows_read = n;
  return d;
}

}  // namespace bicausal
