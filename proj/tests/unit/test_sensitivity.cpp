#include "bicausal/sensitivity.hpp"

#include <cmath>

#include "doctest.h"

using namespace bicausal;

namespace {

ProbitCoefVector oracle_xi(double g1 = 1.0, double g2 = 0.0, double eta = 0.0,
                           double delta = 0.0) {
  StructuralParams p = StructuralParams::simulation_baseline();
  p.gamma1 = g1;
  p.gamma2 = g2;
  p.eta = eta;
  p.delta = delta;
  return probit_coefs(p);
}

int sgn(double v) { return (v > 0) - (v < 0); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Domain;
}

}  // namespace

TEST_CASE("ratios") {
  const Ratios r = ratios(oracle_xi());
  CHECK(std::abs(r.k1 + 0.26596) < 1e-4);
  CHECK(std::abs(r.k2 - 0.42300) < 1e-4);
  CHECK(std::abs(r.t1 - 0.45000) < 1e-4);
  CHECK(std::abs(r.t2 + 0.25000) < 1e-4);
  CHECK(std::abs(r.t3 + 3.75993) < 1e-4);
  CHECK(r.t4 == r.k2);
  CHECK(r.k1 * r.k2 == doctest::Approx(r.t1 * r.t2).epsilon(1e-15));

  ProbitCoefVector z = oracle_xi();
  z.xi_xw = 0.0;
  const Ratios rz = ratios(z);
  CHECK(rz.t1 == 0.0);
  CHECK(rz.t4 == 0.0);
  CHECK(rz.k2 == 0.0);

  z.xi_yw = 1e-13;
  CHECK(code_of([&] { ratios(z); }) == ErrorCode::DegenerateRatio);
}

TEST_CASE("correlated confounders") {
  const ProbitCoefVector xi = oracle_xi();
  const CandidateSolutions s = solve_prop3(xi, 1.0, 0.0);
  const BetaPair& b = s.selected_pair();
  const BetaPair ref = identify_prop1(xi);
  CHECK(std::abs(b.xy - ref.xy) <= 1e-10);
  CHECK(std::abs(b.yx - ref.yx) <= 1e-10);
  CHECK(std::abs(b.xy + 0.25) < 2e-4);
  CHECK(std::abs(b.xy * b.yx - ratios(xi).k1 * ratios(xi).k2) <= 1e-10);
  CHECK(s.selection_rule == SelectionRule::SignK1);

  const ProbitCoefVector xc = oracle_xi(0.5, 0.3);
  const CandidateSolutions sc = solve_prop3(xc, 0.5, 0.3);
  CHECK(sc.contains({-0.25, 0.45}, 1e-8));
  for (const auto& c : sc.candidates) {
    CHECK(c.residual <= 1e-8);
    CHECK(constraint_residual(xc, c.beta, {0.5, 0.3, 0.0, 0.0}) <= 1e-8);
  }
  if (sc.selected) {
    CHECK(sgn(sc.candidates[*sc.selected].beta.xy) == sgn(ratios(xc).k1));
  }

  // The printed form only agrees with the derivation at gamma1 = 1.
  const CandidateSolutions printed = solve_prop3(xc, 0.5, 0.3, FormulaVariant::Printed);
  CHECK_FALSE(printed.contains({-0.25, 0.45}, 1e-4));
  const CandidateSolutions printed1 = solve_prop3(xi, 1.0, 0.0, FormulaVariant::Printed);
  CHECK(printed1.contains(ref, 1e-10));
}

TEST_CASE("correlated-confounder error paths") {
  ProbitCoefVector xi = oracle_xi();
  xi.xi_yz = xi.xi_xz;
  CHECK(code_of([&] { solve_prop3(xi, 1.0, 0.0); }) == ErrorCode::DegenerateRatio);
  CHECK(code_of([&] { solve_prop3(oracle_xi(), 0.2, 0.5); }) ==
        ErrorCode::InfeasibleConfounderStructure);
  // k1^2 > 1 and k2^2 < 1 with no linear term gives a negative discriminant.
  const ProbitCoefVector neg{0.0, 0.3, 0.1, 0.0, 0.8, 0.5};
  CHECK(code_of([&] { solve_prop3(neg, 1.0, 0.0); }) == ErrorCode::NoRealSolution);
}

TEST_CASE("direct effect of Z on Y") {
  const ProbitCoefVector xi = oracle_xi();
  const BetaPair ref = identify_prop1(xi);
  const BetaPair b0 = solve_corollary1(xi, 0.0).selected_pair();
  CHECK(std::abs(b0.xy - ref.xy) <= 1e-10);
  CHECK(std::abs(b0.yx - ref.yx) <= 1e-10);

  const ProbitCoefVector x1 = oracle_xi(1.0, 0.0, 0.1 * 0.65, 0.0);
  const CandidateSolutions s = solve_corollary1(x1, 0.1);
  const BetaPair& b = s.selected_pair();
  CHECK(std::abs(b.xy + 0.25) <= 1e-8);
  CHECK(std::abs(b.yx - 0.45) <= 1e-8);
  CHECK(sgn(b.yx) == sgn(ratios(x1).t4));
  CHECK(s.selection_rule == SelectionRule::SignT4);
  CHECK(constraint_residual(x1, b, {1.0, 0.0, 0.1, 0.0}) <= 1e-8);
  for (const auto& c : s.candidates) CHECK(c.residual <= 1e-8);

  // t1 t2 = t3 t4 = 1 and eta0 = 0 give s1 = 0.
  const ProbitCoefVector degenerate{0.0, 1.0, 1.0, 0.0, 1.0, 1.0};
  CHECK(code_of([&] { solve_corollary1(degenerate, 0.0); }) == ErrorCode::QuadraticDegenerate);
  // s1 = 1 - t1 t2 t3 t4 > 0 and s3 = t1 t2 (t1 t2 - t3 t4) > 0 with no linear term.
  const ProbitCoefVector negative{0.0, 1.0, 0.5, 0.0, 2.0, 1.0};
  CHECK(code_of([&] { solve_corollary1(negative, 0.0); }) == ErrorCode::NoRealSolution);
}

TEST_CASE("direct effect of W on X") {
  const ProbitCoefVector xi = oracle_xi();
  const BetaPair ref = identify_prop1(xi);
  const BetaPair b0 = solve_corollary2(xi, 0.0).selected_pair();
  CHECK(std::abs(b0.xy - ref.xy) <= 1e-10);
  CHECK(std::abs(b0.yx - ref.yx) <= 1e-10);

  for (double d0 : {-0.08, 0.16}) {
    const ProbitCoefVector x2 = oracle_xi(1.0, 0.0, 0.0, d0 * 0.65);
    const CandidateSolutions s = solve_corollary2(x2, d0);
    const BetaPair& b = s.selected_pair();
    CHECK(std::abs(b.xy + 0.25) <= 1e-8);
    CHECK(std::abs(b.yx - 0.45) <= 1e-8);
    CHECK(sgn(b.xy) == sgn(ratios(x2).t3));
    CHECK(constraint_residual(x2, b, {1.0, 0.0, 0.0, d0}) <= 1e-8);
  }

  const ProbitCoefVector degenerate{0.0, 1.0, 1.0, 0.0, 1.0, 1.0};
  CHECK(code_of([&] { solve_corollary2(degenerate, 0.0); }) == ErrorCode::QuadraticDegenerate);
}

TEST_CASE("perfectly correlated confounders with direct effects") {
  const ProbitCoefVector xi = oracle_xi(1.0, 1.0);
  CHECK(std::abs(xi.xi_xz - 0.59770) < 1e-4);
  const CandidateSolutions s = solve_corollary3(xi, 0.0, 0.0, ProductBranch::LtOne);
  const BetaPair& b = s.selected_pair();
  CHECK(std::abs(b.xy + 0.25) < 1e-4);
  CHECK(std::abs(b.yx - 0.45) < 1e-4);
  CHECK_FALSE(s.branch_inconsistent);
  CHECK(s.selection_rule == SelectionRule::BranchProductLtOne);
  // Specialisation at eta0 = delta0 = 0.
  CHECK(b.yx == doctest::Approx((xi.xi_yz - xi.xi_xz) * xi.xi_xw /
                                ((xi.xi_xw - xi.xi_yw) * xi.xi_xz)));

  // Signal-to-noise direct effects: eta = eta0 sigma.
  const double sigma = 0.75;
  const ProbitCoefVector xd = oracle_xi(1.0, 1.0, 0.1 * sigma, -0.06 * sigma);
  const BetaPair bd = solve_corollary3(xd, 0.1, -0.06, ProductBranch::LtOne).selected_pair();
  CHECK(std::abs(bd.xy + 0.25) <= 1e-8);
  CHECK(std::abs(bd.yx - 0.45) <= 1e-8);

  // Product above one: the other branch recovers the truth.
  StructuralParams p = StructuralParams::simulation_baseline();
  p.beta_xy = 1.6;
  p.beta_yx = 0.9;
  p.gamma2 = 1.0;
  p.eta = 0.05 * p.sigma;
  p.delta = 0.05 * p.sigma;
  const ProbitCoefVector xg = probit_coefs(p);
  const CandidateSolutions g = solve_corollary3(xg, 0.05, 0.05, ProductBranch::GtOne);
  CHECK(std::abs(g.selected_pair().xy - 1.6) <= 1e-8);
  CHECK(std::abs(g.selected_pair().yx - 0.9) <= 1e-8);
  CHECK_FALSE(g.branch_inconsistent);
  const CandidateSolutions wrong = solve_corollary3(xg, 0.05, 0.05, ProductBranch::LtOne);
  const BetaPair& w = wrong.selected_pair();
  CHECK(wrong.branch_inconsistent == (w.xy * w.yx > 1.0));

  ProbitCoefVector flat = xi;
  flat.xi_yz = flat.xi_xz;
  CHECK(code_of([&] { solve_corollary3(flat, 0.0, 0.0, ProductBranch::LtOne); }) ==
        ErrorCode::DegenerateRatio);
}

TEST_CASE("general solver") {
  const ProbitCoefVector xi = oracle_xi();
  const CandidateSolutions g = solve_general(xi, {1.0, 0.0, 0.0, 0.0});
  const BetaPair p3 = solve_prop3(xi, 1.0, 0.0).selected_pair();
  CHECK(g.contains(p3, 1e-8));
  CHECK(g.contains({-0.25, 0.45}, 2e-4));

  const SensitivityParams sp{0.8, 0.2, 0.05, -0.05};
  const ProbitCoefVector x4 = oracle_xi(0.8, 0.2, 0.05 * 0.65, -0.05 * 0.65);
  const CandidateSolutions s = solve_general(x4, sp);
  CHECK(s.contains({-0.25, 0.45}, 1e-6));
  for (const auto& c : s.candidates) CHECK(c.residual <= 1e-8);

  GeneralSolverOptions tiny;
  tiny.bound = 0.1;
  CHECK(code_of([&] { solve_general(xi, {1.0, 0.0, 0.0, 0.0}, tiny); }) ==
        ErrorCode::NoRealSolution);

  // At eta0 = delta0 = 0 the printed explicit form gives -k1 k2 / beta_yx.
  const Ratios r = ratios(xi);
  CHECK(printed_general_beta_xy(xi, 0.45, 0.0, 0.0) ==
        doctest::Approx(-r.k1 * r.k2 / 0.45).epsilon(1e-10));
}

TEST_CASE("universal round trip over random designs") {
  RngStream rng(2718);
  int done = 0;
  while (done < 200) {
    StructuralParams p;
    p.beta_xy = rng.uniform(-0.9, 0.9);
    p.beta_yx = rng.uniform(-0.9, 0.9);
    p.mu_xz = rng.uniform(0.3, 1.2);
    p.mu_yw = rng.uniform(0.3, 1.2);
    p.sigma = rng.uniform(0.5, 1.5);
    p.gamma1 = rng.uniform(0.2, 3.0);
    p.gamma2 = rng.uniform(-0.95, 0.95) * std::sqrt(p.gamma1);
    const double eta0 = rng.uniform(-0.2, 0.2), delta0 = rng.uniform(-0.2, 0.2);
    p.eta = eta0 * p.mu_xz;
    p.delta = delta0 * p.mu_yw;
    ProbitCoefVector xi;
    try {
      xi = probit_coefs(p);
      ratios(xi);
    } catch (const Error&) {
      continue;
    }
    const SensitivityParams sp{p.gamma1, p.gamma2, eta0, delta0};
    CandidateSolutions s;
    try {
      s = solve_general(xi, sp);
    } catch (const Error& e) {
      FAIL("general solver failed: " << std::string(e.what()) << " bxy=" << p.beta_xy
                                     << " byx=" << p.beta_yx << " g1=" << p.gamma1
                                     << " g2=" << p.gamma2 << " eta0=" << eta0
                                     << " delta0=" << delta0);
    }
    CHECK(s.contains({p.beta_xy, p.beta_yx}, 1e-6));
    for (const auto& c : s.candidates) {
      INFO("cand " << c.beta.xy << " " << c.beta.yx << " truth " << p.beta_xy << " " << p.beta_yx << " g1=" << p.gamma1 << " g2=" << p.gamma2 << " e0=" << eta0 << " d0=" << delta0);
      CHECK(constraint_residual(xi, c.beta, sp) <= 1e-8);
    }
    ++done;
  }
}

TEST_CASE("dispatch") {
  CHECK(parse_solver("cor3") == SolverKind::Cor3);
  CHECK(solver_name(SolverKind::General) == "general");
  CHECK(code_of([] { parse_solver("bogus"); }) == ErrorCode::Configuration);
  SolverConfig cfg;
  cfg.kind = SolverKind::Cor3;
  CHECK(code_of([&] { solve_at(oracle_xi(), {1.0, 0.0, 0.0, 0.0}, cfg); }) ==
        ErrorCode::Configuration);
  cfg.kind = SolverKind::Prop1;
  const BetaPair b = solve_selected(oracle_xi(), {}, cfg);
  CHECK(b.xy == identify_prop1(oracle_xi()).xy);
  CHECK(selection_rule_name(SelectionRule::Unresolved) == "unresolved");
}

TEST_CASE("ambiguous selection throws") {
  CandidateSolutions s;
  s.candidates.push_back({{0.1, 0.2}, 0.0, true});
  s.candidates.push_back({{0.3, 0.4}, 0.0, true});
  CHECK(code_of([&] { s.selected_pair(); }) == ErrorCode::AmbiguousSolution);
}
