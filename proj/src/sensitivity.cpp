#include "bicausal/sensitivity.hpp"

#include "bicausal/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace bicausal {

namespace {

constexpr double kDegenerate = 1e-12;

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

void require_nonzero(double v, const char* what) {
  if (std::abs(v) < kDegenerate) {
    throw Error(ErrorCode::DegenerateRatio, std::string("degenerate ratio: ") + what +
                                                " is zero to within 1e-12");
  }
}

// Both roots of a*x^2 + b*x + c, computed without cancellation.
std::array<double, 2> quadratic_roots(double a, double b, double c, double disc) {
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  if (q == 0.0) return {0.0, 0.0};
  return {q / a, c / q};
}

double quadratic_residual(double a, double b, double c, double x) {
  return std::abs((a * x + b) * x + c);
}

void select_unique(CandidateSolutions& out, SelectionRule rule) {
  std::optional<std::size_t> pick;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < out.candidates.size(); ++i) {
    if (out.candidates[i].satisfies_rule) {
      pick = i;
      ++hits;
    }
  }
  if (hits == 1) {
    out.selected = pick;
    out.selection_rule = rule;
  } else {
    out.selected.reset();
    out.selection_rule = SelectionRule::Unresolved;
  }
}

}  // namespace

void SensitivityParams::validate() const {
  if (!std::isfinite(gamma1) || !std::isfinite(gamma2) || !std::isfinite(eta0) ||
      !std::isfinite(delta0)) {
    throw Error(ErrorCode::InvalidParameters, "sensitivity parameters must be finite");
  }
  if (!(gamma1 > 0.0) || gamma1 < gamma2 * gamma2) {
    throw Error(ErrorCode::InfeasibleConfounderStructure,
                "sensitivity parameters require gamma1 > 0 and gamma1 >= gamma2^2");
  }
}

double SensitivityParams::eta_for(const StructuralParams& p) const {
  return mode == EtaDeltaMode::RelativeToIV ? eta0 * p.mu_xz : eta0 * p.sigma;
}

double SensitivityParams::delta_for(const StructuralParams& p) const {
  return mode == EtaDeltaMode::RelativeToIV ? delta0 * p.mu_yw : delta0 * p.sigma;
}

Ratios ratios(const ProbitCoefVector& xi) {
  require_nonzero(xi.xi_xz, "xi_xz");
  require_nonzero(xi.xi_yw, "xi_yw");
  require_nonzero(xi.xi_yz, "xi_yz");
  Ratios r;
  r.k1 = xi.xi_yz / xi.xi_xz;
  r.k2 = xi.xi_xw / xi.xi_yw;
  r.t1 = xi.xi_xw / xi.xi_xz;
  r.t2 = xi.xi_yz / xi.xi_yw;
  r.t3 = xi.xi_xz / xi.xi_yz;
  r.t4 = r.k2;
  return r;
}

std::string selection_rule_name(SelectionRule rule) {
  switch (rule) {
    case SelectionRule::SignK1: return "sign_k1";
    case SelectionRule::SignT3: return "sign_t3";
    case SelectionRule::SignT4: return "sign_t4";
    case SelectionRule::BranchProductLtOne: return "branch_product_lt_one";
    case SelectionRule::BranchProductGtOne: return "branch_product_gt_one";
    case SelectionRule::Unresolved: return "unresolved";
  }
  return "unknown";
}

const BetaPair& CandidateSolutions::selected_pair() const {
  if (!selected) {
    throw Error(ErrorCode::AmbiguousSolution,
                std::to_string(candidates.size()) +
                    " candidate solutions and no selection rule singles one out");
  }
  return candidates[*selected].beta;
}

bool CandidateSolutions::contains(const BetaPair& b, double tol) const {
  return std::any_of(candidates.begin(), candidates.end(), [&](const Candidate& c) {
    return std::abs(c.beta.xy - b.xy) <= tol && std::abs(c.beta.yx - b.yx) <= tol;
  });
}

double constraint_residual(const ProbitCoefVector& xi, const BetaPair& b,
                           const SensitivityParams& sp) {
  const double k1 = xi.xi_yz / xi.xi_xz;
  const double k2 = xi.xi_xw / xi.xi_yw;
  const double var_x = sp.gamma1 + 2.0 * sp.gamma2 * b.yx + b.yx * b.yx;
  const double var_y = sp.gamma1 * b.xy * b.xy + 2.0 * sp.gamma2 * b.xy + 1.0;
  if (!(var_x >= 0.0) || !(var_y > 0.0)) return std::numeric_limits<double>::infinity();
  const double r = std::sqrt(var_x / var_y);
  const double first = k1 * (1.0 + b.yx * sp.eta0) - (b.xy + sp.eta0) * r;
  const double second = k2 * (1.0 + b.xy * sp.delta0) * r - (b.yx + sp.delta0);
  return std::max(std::abs(first), std::abs(second));
}

// ---------------------------------------------------------------------------
// Correlated confounders
// ---------------------------------------------------------------------------

CandidateSolutions solve_prop3(const ProbitCoefVector& xi, double gamma1, double gamma2,
                               FormulaVariant variant) {
  SensitivityParams{gamma1, gamma2, 0.0, 0.0, EtaDeltaMode::RelativeToIV}.validate();
  require_nonzero(xi.xi_xz, "xi_xz");
  require_nonzero(xi.xi_yw, "xi_yw");
  const double k1 = xi.xi_yz / xi.xi_xz;
  const double k2 = xi.xi_xw / xi.xi_yw;
  if (std::abs(k1 * k1 - 1.0) < kDegenerate || std::abs(k2 * k2 - 1.0) < kDegenerate) {
    throw Error(ErrorCode::DegenerateRatio,
                "solve_prop3: k1^2 = 1 or k2^2 = 1 collapses the quadratic");
  }
  // With s = 1/R (R = sqrt(lambda1/lambda2) > 0), beta_xy = k1 s and
  // beta_yx = k2 / s, where s solves
  //   g (k1^2 - 1) s^2 + 2 gamma2 (k1 - k2) s + (1 - k2^2) = 0
  // with g = gamma1 (derived) or gamma1^2 (printed form).
  const double g = variant == FormulaVariant::Derived ? gamma1 : gamma1 * gamma1;
  const double a = g * (k1 * k1 - 1.0);
  const double b = 2.0 * gamma2 * (k1 - k2);
  const double c = 1.0 - k2 * k2;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    throw Error(ErrorCode::NoRealSolution,
                "solve_prop3: negative discriminant " + std::to_string(disc));
  }

  CandidateSolutions out;
  const auto roots = quadratic_roots(a, b, c, disc);
  const std::size_t count = disc == 0.0 ? 1 : 2;
  for (std::size_t i = 0; i < count; ++i) {
    const double s = roots[i];
    if (!(std::isfinite(s)) || s == 0.0) continue;
    Candidate cand;
    cand.beta = {k1 * s, k2 / s};
    cand.residual = quadratic_residual(a, b, c, s);
    cand.satisfies_rule = sign_of(cand.beta.xy) == sign_of(k1);
    // Derived form: only R > 0 is admissible, which is the sign rule itself.
    if (variant == FormulaVariant::Derived && !(s > 0.0)) continue;
    out.candidates.push_back(cand);
  }
  if (out.candidates.empty()) {
    throw Error(ErrorCode::NoRealSolution, "solve_prop3: no root with positive scale ratio");
  }
  select_unique(out, SelectionRule::SignK1);
  return out;
}

// ---------------------------------------------------------------------------
// Exclusion-restriction violations
// ---------------------------------------------------------------------------

CandidateSolutions solve_corollary1(const ProbitCoefVector& xi, double eta0) {
  const Ratios r = ratios(xi);
  const double p12 = r.t1 * r.t2;
  const double s1 = eta0 * eta0 * (p12 - 1.0) * (p12 - 1.0) - p12 * r.t3 * r.t4 + 1.0;
  const double s2 = 2.0 * p12 * eta0 * (p12 - 1.0);
  const double s3 = p12 * (p12 - r.t3 * r.t4);
  if (std::abs(s1) < kDegenerate) {
    throw Error(ErrorCode::QuadraticDegenerate, "solve_corollary1: leading coefficient s1 is zero");
  }
  const double disc = s2 * s2 - 4.0 * s1 * s3;
  if (disc < 0.0) {
    throw Error(ErrorCode::NoRealSolution,
                "solve_corollary1: negative discriminant " + std::to_string(disc));
  }
  CandidateSolutions out;
  const double sq = std::sqrt(disc);
  for (const double pm : {1.0, -1.0}) {
    if (pm < 0.0 && disc == 0.0) break;
    const double root_den = -s2 + pm * sq;
    if (root_den == 0.0) continue;
    Candidate cand;
    cand.beta.yx = root_den / (2.0 * s1);
    cand.beta.xy = eta0 * (p12 - 1.0) + 2.0 * s1 * p12 / root_den;
    if (!std::isfinite(cand.beta.xy) || !std::isfinite(cand.beta.yx)) continue;
    cand.residual = quadratic_residual(s1, s2, s3, cand.beta.yx);
    cand.satisfies_rule = sign_of(cand.beta.yx) == sign_of(r.t4);
    out.candidates.push_back(cand);
  }
  if (out.candidates.empty()) {
    throw Error(ErrorCode::NoRealSolution, "solve_corollary1: no finite root");
  }
  select_unique(out, SelectionRule::SignT4);
  return out;
}

CandidateSolutions solve_corollary2(const ProbitCoefVector& xi, double delta0) {
  const Ratios r = ratios(xi);
  const double p12 = r.t1 * r.t2;
  const double p34 = r.t3 * r.t4;
  const double s4 = p34 + p34 * delta0 * delta0 * (p12 - 1.0) * (p12 - 1.0) - p12;
  const double s5 = 2.0 * p12 * p34 * delta0 * (p12 - 1.0);
  const double s6 = p12 * (p12 * p34 - 1.0);
  if (std::abs(s4) < kDegenerate) {
    throw Error(ErrorCode::QuadraticDegenerate, "solve_corollary2: leading coefficient s4 is zero");
  }
  const double disc = s5 * s5 - 4.0 * s4 * s6;
  if (disc < 0.0) {
    throw Error(ErrorCode::NoRealSolution,
                "solve_corollary2: negative discriminant " + std::to_string(disc));
  }
  CandidateSolutions out;
  const double sq = std::sqrt(disc);
  for (const double pm : {1.0, -1.0}) {
    if (pm < 0.0 && disc == 0.0) break;
    const double root_den = -s5 + pm * sq;
    if (root_den == 0.0) continue;
    // The quadratic root is the X -> Y effect; the companion expression is
    // the Y -> X effect.
    Candidate cand;
    cand.beta.xy = root_den / (2.0 * s4);
    cand.beta.yx = delta0 * (p12 - 1.0) + 2.0 * s4 * p12 / root_den;
    if (!std::isfinite(cand.beta.xy) || !std::isfinite(cand.beta.yx)) continue;
    cand.residual = quadratic_residual(s4, s5, s6, cand.beta.xy);
    cand.satisfies_rule = sign_of(cand.beta.xy) == sign_of(r.t3);
    out.candidates.push_back(cand);
  }
  if (out.candidates.empty()) {
    throw Error(ErrorCode::NoRealSolution, "solve_corollary2: no finite root");
  }
  select_unique(out, SelectionRule::SignT3);
  return out;
}

CandidateSolutions solve_corollary3(const ProbitCoefVector& xi, double eta0, double delta0,
                                    ProductBranch branch) {
  const double sgn = branch == ProductBranch::LtOne ? -1.0 : 1.0;
  const double xz_shift = xi.xi_xz + sgn * eta0;
  const double yz_shift = xi.xi_yz + sgn * eta0;
  const double xw_shift = xi.xi_xw + sgn * delta0;
  const double yw_shift = xi.xi_yw + sgn * delta0;
  const double z_gap = xi.xi_yz - xi.xi_xz;
  const double w_gap = xi.xi_xw - xi.xi_yw;
  require_nonzero(z_gap, "xi_yz - xi_xz");
  require_nonzero(w_gap, "xi_xw - xi_yw");
  require_nonzero(xz_shift, "shifted xi_xz");
  require_nonzero(yw_shift, "shifted xi_yw");

  Candidate cand;
  cand.beta.yx = z_gap * xw_shift / (w_gap * xz_shift);
  cand.beta.xy = w_gap * yz_shift / (z_gap * yw_shift);
  cand.residual = std::max(std::abs(cand.beta.yx * w_gap * xz_shift - z_gap * xw_shift),
                           std::abs(cand.beta.xy * z_gap * yw_shift - w_gap * yz_shift));
  const double product = cand.beta.xy * cand.beta.yx;
  const bool consistent = branch == ProductBranch::LtOne ? product < 1.0 : product > 1.0;
  cand.satisfies_rule = true;

  CandidateSolutions out;
  out.candidates.push_back(cand);
  out.selected = 0;
  out.selection_rule = branch == ProductBranch::LtOne ? SelectionRule::BranchProductLtOne
                                                      : SelectionRule::BranchProductGtOne;
  out.branch_inconsistent = !consistent;
  return out;
}

// ---------------------------------------------------------------------------
// General case
// ---------------------------------------------------------------------------

namespace {

// Polynomials in beta_yx, lowest degree first.
using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Poly poly_axpy(double alpha, const Poly& a, const Poly& b) {
  Poly out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += alpha * a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

Poly poly_derivative(const Poly& a) {
  Poly out(a.size() > 1 ? a.size() - 1 : 1, 0.0);
  for (std::size_t i = 1; i < a.size(); ++i) out[i - 1] = static_cast<double>(i) * a[i];
  return out;
}

double poly_eval(const Poly& a, double x) {
  double v = 0.0;
  for (std::size_t i = a.size(); i-- > 0;) v = v * x + a[i];
  return v;
}

// Sum of |terms|: the scale of rounding error in poly_eval.
double poly_magnitude(const Poly& a, double x) {
  double v = 0.0;
  for (std::size_t i = a.size(); i-- > 0;) v = v * std::abs(x) + std::abs(a[i]);
  return v;
}

struct GeneralSystem {
  double k1, k2, gamma1, gamma2, eta0, delta0;
  Poly n, d, residual;

  GeneralSystem(double k1_, double k2_, double g1, double g2, double e0, double d0)
      : k1(k1_), k2(k2_), gamma1(g1), gamma2(g2), eta0(e0), delta0(d0) {
    // beta_xy = N(b) / D(b) from the product constraint
    //   k1 k2 (1 + b eta0)(1 + beta_xy delta0) = (beta_xy + eta0)(b + delta0).
    const double kk = k1 * k2;
    n = {eta0 * delta0 - kk, eta0 - kk * eta0};
    d = {kk * delta0 - delta0, kk * delta0 * eta0 - 1.0};
    // Squared k1 constraint multiplied through by D^2:
    //   k1^2 (1 + b eta0)^2 (gamma1 N^2 + 2 gamma2 N D + D^2)
    //     = (N + eta0 D)^2 (gamma1 + 2 gamma2 b + b^2).
    // N + eta0 D = k1 k2 (eta0 delta0 - 1)(1 + b eta0), so the common factor
    // (1 + b eta0)^2 drops out and a quadratic in b remains.
    const Poly var_y = poly_axpy(gamma1, poly_mul(n, n),
                                 poly_axpy(2.0 * gamma2, poly_mul(n, d), poly_mul(d, d)));
    const double m = kk * (eta0 * delta0 - 1.0);
    const Poly var_x{gamma1, 2.0 * gamma2, 1.0};
    residual = poly_axpy(-m * m, var_x, poly_mul(Poly{k1 * k1}, var_y));
  }

  double numerator(double b) const { return poly_eval(n, b); }
  double denominator(double b) const { return poly_eval(d, b); }
};

double bisect(const Poly& f, double lo, double hi, double f_lo) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = poly_eval(f, mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Real roots of f in [lo, hi]. Stationary points (roots of f', found
// recursively) join the grid as breakpoints, so f is monotone between
// consecutive breakpoints and clustered roots cannot hide inside one cell.
std::vector<double> real_roots(const Poly& f, double lo, double hi, int points) {
  std::vector<double> breaks;
  if (f.size() > 2) breaks = real_roots(poly_derivative(f), lo, hi, points);
  std::vector<double> roots;
  for (const double c : breaks) {
    // Even-multiplicity roots touch zero without a sign change.
    if (std::abs(poly_eval(f, c)) <= 1e-13 * poly_magnitude(f, c)) roots.push_back(c);
  }
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) breaks.push_back(i == points - 1 ? hi : lo + step * i);
  std::sort(breaks.begin(), breaks.end());
  double prev_b = breaks.front();
  double prev_f = poly_eval(f, prev_b);
  if (prev_f == 0.0) roots.push_back(prev_b);
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    const double b = breaks[i];
    const double v = poly_eval(f, b);
    if (v == 0.0) {
      roots.push_back(b);
    } else if (prev_f != 0.0 && (v < 0.0) != (prev_f < 0.0)) {
      roots.push_back(bisect(f, prev_b, b, prev_f));
    }
    prev_b = b;
    prev_f = v;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

CandidateSolutions solve_general(const ProbitCoefVector& xi, const SensitivityParams& sp,
                                 const GeneralSolverOptions& opts) {
  sp.validate();
  if (sp.mode != EtaDeltaMode::RelativeToIV) {
    throw Error(ErrorCode::Configuration,
                "solve_general expects eta0/delta0 relative to the instrument strengths");
  }
  if (!(opts.bound > 0.0) || opts.grid_points < 2) {
    throw Error(ErrorCode::Configuration, "solve_general: bound must be positive and grid >= 2");
  }
  require_nonzero(xi.xi_xz, "xi_xz");
  require_nonzero(xi.xi_yw, "xi_yw");
  const GeneralSystem sys(xi.xi_yz / xi.xi_xz, xi.xi_xw / xi.xi_yw, sp.gamma1, sp.gamma2,
                          sp.eta0, sp.delta0);

  const std::vector<double> roots =
      real_roots(sys.residual, -opts.bound, opts.bound, opts.grid_points);
  if (roots.empty()) {
    throw Error(ErrorCode::NoRealSolution,
                "solve_general: the constraint residual has no root on [-" +
                    std::to_string(opts.bound) + ", " + std::to_string(opts.bound) + "]");
  }

  CandidateSolutions out;
  for (const double b : roots) {
    const double d = sys.denominator(b);
    const double lead = 1.0 + b * sp.eta0;
    if (std::abs(d) < kDegenerate || std::abs(lead) < kDegenerate) continue;
    const BetaPair beta{sys.numerator(b) / d, b};
    const double cross = 1.0 + beta.xy * sp.delta0;
    if (std::abs(cross) < kDegenerate) continue;
    // Unsquared k1 / k2 constraints need R > 0.
    const bool sign_k1 = sign_of(sys.k1) == sign_of((beta.xy + sp.eta0) / lead);
    const bool sign_k2 = sign_of(sys.k2) == sign_of((beta.yx + sp.delta0) / cross);
    if (!sign_k1 || !sign_k2) continue;
    const bool duplicate = std::any_of(out.candidates.begin(), out.candidates.end(),
                                       [&](const Candidate& c) {
                                         return std::abs(c.beta.yx - b) < 1e-7;
                                       });
    if (duplicate) continue;
    Candidate cand;
    cand.beta = beta;
    cand.residual = constraint_residual(xi, beta, sp);
    cand.satisfies_rule = true;
    out.candidates.push_back(cand);
  }
  if (out.candidates.empty()) {
    throw Error(ErrorCode::NoRealSolution,
                "solve_general: every root of the squared constraint violates the sign "
                "conditions");
  }
  select_unique(out, SelectionRule::SignK1);
  return out;
}

double printed_general_beta_xy(const ProbitCoefVector& xi, double beta_yx, double eta0,
                               double delta0) {
  const double a = xi.xi_xz * xi.xi_yw;
  const double b = xi.xi_yz * xi.xi_xw;
  const double num = a * delta0 * eta0 - b - a * eta0 * beta_yx + b * eta0 * beta_yx;
  const double den = a * beta_yx - b * eta0 * delta0 * beta_yx + a * delta0 - b * delta0;
  return num / den;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

std::string solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::Prop1: return "prop1";
    case SolverKind::Prop3: return "prop3";
    case SolverKind::Cor1: return "cor1";
    case SolverKind::Cor2: return "cor2";
    case SolverKind::Cor3: return "cor3";
    case SolverKind::General: return "general";
  }
  return "unknown";
}

SolverKind parse_solver(const std::string& name) {
  for (SolverKind k : {SolverKind::Prop1, SolverKind::Prop3, SolverKind::Cor1, SolverKind::Cor2,
                       SolverKind::Cor3, SolverKind::General}) {
    if (solver_name(k) == name) return k;
  }
  throw Error(ErrorCode::Configuration, "unknown solver '" + name +
                                            "' (expected prop1, prop3, cor1, cor2, cor3, general)");
}

EtaDeltaMode solver_mode(SolverKind kind) {
  return kind == SolverKind::Cor3 ? EtaDeltaMode::SignalToNoise : EtaDeltaMode::RelativeToIV;
}

CandidateSolutions solve_at(const ProbitCoefVector& xi, const SensitivityParams& sp,
                            const SolverConfig& solver) {
  if (sp.mode != solver_mode(solver.kind)) {
    throw Error(ErrorCode::Configuration,
                "solver " + solver_name(solver.kind) +
                    " is incompatible with the eta0/delta0 parameterisation requested");
  }
  switch (solver.kind) {
    case SolverKind::Prop1: {
      CandidateSolutions out;
      out.candidates.push_back({identify_prop1(xi), 0.0, true});
      out.selected = 0;
      out.selection_rule = SelectionRule::SignK1;
      return out;
    }
    case SolverKind::Prop3: return solve_prop3(xi, sp.gamma1, sp.gamma2);
    case SolverKind::Cor1: return solve_corollary1(xi, sp.eta0);
    case SolverKind::Cor2: return solve_corollary2(xi, sp.delta0);
    case SolverKind::Cor3: return solve_corollary3(xi, sp.eta0, sp.delta0, solver.branch);
    case SolverKind::General: return solve_general(xi, sp, solver.general);
  }
  throw Error(ErrorCode::Configuration, "unknown solver");
}

BetaPair solve_selected(const ProbitCoefVector& xi, const SensitivityParams& sp,
                        const SolverConfig& solver) {
  return solve_at(xi, sp, solver).selected_pair();
}

}  // namespace bicausal
