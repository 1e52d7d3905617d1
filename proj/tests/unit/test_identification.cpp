#include "bicausal/identification.hpp"

#include <cmath>

#include "doctest.h"

using namespace bicausal;

TEST_CASE("closed-form identification on the baseline design") {
  const ProbitCoefVector xi{0.0, 0.79034, 0.35565, 0.0, -0.21020, 0.84079};
  const BetaPair b = identify_prop1(xi);
  CHECK(std::abs(b.xy + 0.25) < 2e-4);
  CHECK(std::abs(b.yx - 0.45) < 2e-4);
}

TEST_CASE("no cross effects") {
  const ProbitCoefVector xi{0.0, 0.8, 0.0, 0.0, 0.0, 0.6};
  const BetaPair b = identify_prop1(xi);
  CHECK(b.xy == 0.0);
  CHECK(b.yx == 0.0);
}

TEST_CASE("infeasible and degenerate inputs") {
  // xi_yz^2 > xi_xz^2 while xi_xw^2 < xi_yw^2.
  const ProbitCoefVector bad{0.0, 0.3, 0.1, 0.0, 0.8, 0.5};
  try {
    identify_prop1(bad);
    FAIL("expected InfeasibleIdentification");
  } catch (const InfeasibleIdentificationError& e) {
    CHECK(e.code() == ErrorCode::InfeasibleIdentification);
    CHECK(e.sign_w_difference() == -1);
    CHECK(e.sign_z_difference() == 1);
  }
  const ProbitCoefVector zero{0.0, 0.0, 0.3, 0.0, 0.2, 0.5};
  try {
    identify_prop1(zero);
    FAIL("expected DegenerateRatio");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateRatio);
  }
}

TEST_CASE("round trip and invariances over random designs") {
  RngStream rng(404);
  int tested = 0;
  while (tested < 500) {
    StructuralParams p;
    p.beta_xy = rng.uniform(-0.9, 0.9);
    p.beta_yx = rng.uniform(-0.9, 0.9);
    if (p.beta_xy * p.beta_yx >= 1.0) continue;
    p.mu_xz = rng.uniform(0.2, 1.5) * (rng.uniform() < 0.5 ? -1 : 1);
    p.mu_yw = rng.uniform(0.2, 1.5) * (rng.uniform() < 0.5 ? -1 : 1);
    p.sigma = rng.uniform(0.3, 2.0);
    const ProbitCoefVector xi = probit_coefs(p);
    const BetaPair b = identify_prop1(xi);
    CHECK(std::abs(b.xy - p.beta_xy) <= 1e-10);
    CHECK(std::abs(b.yx - p.beta_yx) <= 1e-10);
    CHECK(std::abs(b.xy * b.yx - xi.xi_yz * xi.xi_xw / (xi.xi_xz * xi.xi_yw)) <= 1e-10);

    StructuralParams flipped = p;
    flipped.mu_xz = -p.mu_xz;
    const ProbitCoefVector xf = probit_coefs(flipped);
    CHECK(xf.xi_xz == doctest::Approx(-xi.xi_xz));
    CHECK(xf.xi_yz == doctest::Approx(-xi.xi_yz));
    const BetaPair bf = identify_prop1(xf);
    CHECK(std::abs(bf.xy - b.xy) <= 1e-10);
    CHECK(std::abs(bf.yx - b.yx) <= 1e-10);
    ++tested;
  }
}

TEST_CASE("plug-in and naive estimators on simulated data") {
  const StructuralParams p = StructuralParams::simulation_baseline();
  const Dataset d = simulate(p, IVScenario::gaussian(), 20000, RngStream(99));
  const EffectEstimate iv = estimate_alg1(d);
  CHECK(iv.method == EstimateMethod::IvProp1);
  CHECK(iv.diagnostics.fit_x_converged);
  CHECK(iv.diagnostics.fit_y_converged);
  REQUIRE(iv.diagnostics.sqrt_argument_xy.has_value());
  CHECK(*iv.diagnostics.sqrt_argument_xy > 0.0);
  // sd at n = 2e4 is about 0.015; allow 4 sd.
  CHECK(std::abs(iv.beta_xy - p.beta_xy) < 0.06);
  CHECK(std::abs(iv.beta_yx - p.beta_yx) < 0.08);

  const EffectEstimate naive = estimate_naive(d);
  CHECK(method_name(naive.method) == "naive");
  CHECK(naive.method_detail == "GLS");
  CHECK(naive.se_xy.has_value());
  // Confounded feedback pushes the naive X -> Y coefficient far from the truth.
  CHECK(naive.beta_xy - p.beta_xy > 0.3);

  Dataset noq = d;
  noq.q.resize(0, 0);
  noq.q_names.clear();
  EstimationOptions o;
  o.include_q = false;
  const EffectEstimate a = estimate_alg1(d, o);
  const EffectEstimate b = estimate_alg1(noq, o);
  CHECK(a.beta_xy == b.beta_xy);
}

TEST_CASE("null effects are estimated near zero") {
  StructuralParams p = StructuralParams::simulation_baseline();
  p.beta_xy = p.beta_yx = 0.0;
  RngStream rng(1234);
  double sxy = 0.0, syx = 0.0, ssxy = 0.0, ssyx = 0.0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const EffectEstimate e =
        estimate_alg1(simulate(p, IVScenario::gaussian(), 5000, rng.derive(r)));
    sxy += e.beta_xy;
    syx += e.beta_yx;
    ssxy += e.beta_xy * e.beta_xy;
    ssyx += e.beta_yx * e.beta_yx;
  }
  const double mxy = sxy / reps, myx = syx / reps;
  const double sdxy = std::sqrt(ssxy / reps - mxy * mxy), sdyx = std::sqrt(ssyx / reps - myx * myx);
  CHECK(std::abs(mxy) < 4 * sdxy / std::sqrt(double(reps)));
  CHECK(std::abs(myx) < 4 * sdyx / std::sqrt(double(reps)));
}

TEST_CASE("single-class outcome is reported as separation") {
  Dataset d = simulate(StructuralParams::simulation_baseline(), IVScenario::gaussian(), 500,
                       RngStream(2));
  d.y.setZero();
  try {
    estimate_alg1(d);
    FAIL("expected SeparationDetected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SeparationDetected);
  }
}
