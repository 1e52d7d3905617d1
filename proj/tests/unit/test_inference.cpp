#include "bicausal/inference.hpp"

#include <cmath>
#include <numeric>

#include "doctest.h"

using namespace bicausal;

namespace {

const Dataset& baseline_data() {
  static const Dataset d = simulate(StructuralParams::simulation_baseline(),
                                    IVScenario::gaussian(), 4000, RngStream(55));
  return d;
}

}  // namespace

TEST_CASE("percentile ranks") {
  std::vector<double> v(200);
  std::iota(v.begin(), v.end(), 1.0);
  std::reverse(v.begin(), v.end());
  const Interval ci = percentile_interval(v, 0.95);
  CHECK(ci.lo == 5.0);
  CHECK(ci.hi == 195.0);
  const Interval c90 = percentile_interval(std::vector<double>{3, 1, 2, 4, 5, 6, 7, 8, 9, 10}, 0.9);
  CHECK(c90.lo == 1.0);
  CHECK(c90.hi == 10.0);
  CHECK(sample_sd({1.0, 2.0, 3.0}) == doctest::Approx(1.0));
}

TEST_CASE("delta method with the identity map gives the sandwich standard errors") {
  const ReducedFormFits f = fit_reduced_form(baseline_data());
  const Vector se = delta_method_se(f.fit_x, f.fit_y, [](const Vector& v) { return v; });
  const double n = static_cast<double>(f.fit_x.n());
  const Vector sx = (f.fit_x.sandwich_covariance().diagonal() / n).cwiseSqrt();
  const Vector sy = (f.fit_y.sandwich_covariance().diagonal() / n).cwiseSqrt();
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(se(j) - sx(j)) <= 1e-10);
    CHECK(std::abs(se(3 + j) - sy(j)) <= 1e-10);
  }
  // Sandwich and inverse-information SEs agree closely under correct specification.
  CHECK(se(1) == doctest::Approx(f.fit_x.standard_errors()(1)).epsilon(0.1));

  const StandardErrors p1 = delta_method_prop1(f);
  CHECK(p1.se_xy > 0.0);
  CHECK(p1.se_yx > 0.0);
}

TEST_CASE("delta method reports the feasibility boundary") {
  const ReducedFormFits f = fit_reduced_form(baseline_data());
  const double edge = f.fit_x.coefficients(1);
  const IdentificationMap map = [edge](const Vector& v) -> Vector {
    if (v(1) > edge) throw Error(ErrorCode::InfeasibleIdentification, "outside");
    return v.head(2);
  };
  try {
    delta_method_se(f.fit_x, f.fit_y, map);
    FAIL("expected FeasibilityBoundary");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FeasibilityBoundary);
  }

  // A plug-in point right at the boundary: xi_yz^2 = xi_xz^2 up to 1e-9.
  ReducedFormFits g = f;
  g.fit_y.coefficients(1) = g.fit_x.coefficients(1) * (1.0 + 1e-9);
  g.xi.xi_yz = g.fit_y.coefficients(1);
  try {
    delta_method_prop1(g);
    FAIL("expected an error at the boundary");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::FeasibilityBoundary ||
           e.code() == ErrorCode::InfeasibleIdentification));
  }
}

TEST_CASE("bootstrap of a constant estimator") {
  BootstrapOptions o;
  o.replicates = 20;
  const BootstrapResult b =
      bootstrap(baseline_data(), [](const Dataset&) { return BetaPair{0.3, -0.1}; }, o,
                RngStream(1));
  CHECK(b.successes == 20);
  CHECK(b.sd_xy == 0.0);
  CHECK(b.ci_xy.lo == 0.3);
  CHECK(b.ci_xy.hi == 0.3);
  CHECK(b.ci_yx.lo == -0.1);
}

TEST_CASE("bootstrap determinism across thread counts") {
  auto est = [](const Dataset& d) { return estimate_alg1(d).pair(); };
  BootstrapOptions o;
  o.replicates = 16;
  o.threads = 1;
  const BootstrapResult a = bootstrap(baseline_data(), est, o, RngStream(77));
  o.threads = 4;
  const BootstrapResult b = bootstrap(baseline_data(), est, o, RngStream(77));
  REQUIRE(a.estimates.size() == b.estimates.size());
  for (std::size_t i = 0; i < a.estimates.size(); ++i) {
    CHECK(a.estimates[i].xy == b.estimates[i].xy);
    CHECK(a.estimates[i].yx == b.estimates[i].yx);
  }
  CHECK(a.sd_xy == b.sd_xy);
  CHECK(a.ci_yx.hi == b.ci_yx.hi);
  CHECK(a.ci_xy.lo <= a.ci_xy.hi);
}

TEST_CASE("bootstrap failure handling") {
  BootstrapOptions o;
  o.replicates = 100;
  // First resampled row has z > 1.6 in about 5% of replicates.
  auto rare = [](const Dataset& d) -> BetaPair {
    if (d.z(0) > 1.6) throw Error(ErrorCode::NotConverged, "synthetic");
    return {d.z.mean(), d.w.mean()};
  };
  const BootstrapResult r = bootstrap(baseline_data(), rare, o, RngStream(3));
  CHECK(r.successes + r.failure_reasons.at("NotConverged") == 100);
  CHECK(r.successes < 100);
  CHECK(r.estimates.size() == r.successes);

  auto often = [](const Dataset& d) -> BetaPair {
    if (d.z(0) > 0.0) throw Error(ErrorCode::InfeasibleIdentification, "synthetic");
    return {0.0, 0.0};
  };
  try {
    bootstrap(baseline_data(), often, o, RngStream(3));
    FAIL("expected ExcessiveFailureRate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ExcessiveFailureRate);
  }

  auto config = [](const Dataset&) -> BetaPair {
    throw Error(ErrorCode::Configuration, "bad setup");
  };
  try {
    bootstrap(baseline_data(), config, o, RngStream(3));
    FAIL("expected Configuration");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Configuration);
  }

  o.replicates = 1;
  CHECK_THROWS_AS(bootstrap(baseline_data(), rare, o, RngStream(3)), Error);
}
