#include "bicausal/inference.hpp"

#include "bicausal/errors.hpp"
#include "bicausal/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace bicausal {

IdentificationMap prop1_map() {
  return [](const Vector& lambda) {
    const BetaPair b = identify_prop1(ProbitCoefVector::from_vector(lambda));
    Vector out(2);
    out << b.xy, b.yx;
    return out;
  };
}

Vector delta_method_se(const ProbitFit& fit_x, const ProbitFit& fit_y,
                       const IdentificationMap& map) {
  const Matrix sigma = lambda_covariance(fit_x, fit_y);
  Vector lambda(6);
  lambda << fit_x.coefficients.head(3), fit_y.coefficients.head(3);
  Matrix jac;
  try {
    jac = numeric_jacobian(map, lambda);
  } catch (const JacobianEvaluationError& e) {
    throw Error(ErrorCode::FeasibilityBoundary,
                "delta method: perturbation of coordinate " + std::to_string(e.coordinate()) +
                    " left the feasible region (" + std::string(error_code_name(e.cause())) +
                    "); use the bootstrap instead");
  }
  const double n = static_cast<double>(fit_x.n());
  const Vector var = (jac * sigma * jac.transpose()).diagonal() / n;
  return var.cwiseMax(0.0).cwiseSqrt();
}

StandardErrors delta_method_prop1(const ReducedFormFits& fits) {
  // The point itself must be feasible before differentiating around it.
  identify_prop1(fits.xi);
  const Vector se = delta_method_se(fits.fit_x, fits.fit_y, prop1_map());
  return {se(0), se(1)};
}

Interval percentile_interval(std::vector<double> sample, double level) {
  if (sample.empty()) {
    throw Error(ErrorCode::Domain, "percentile_interval: empty sample");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::Configuration, "confidence level must lie in (0, 1)");
  }
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  const double alpha = 1.0 - level;
  auto at_rank = [&](double r) {
    // Guard against 0.025 * 200 evaluating to 5.000000000000001.
    auto k = static_cast<std::size_t>(std::ceil(r - 1e-9));
    k = std::clamp<std::size_t>(k, 1, sample.size());
    return sample[k - 1];
  };
  return {at_rank(alpha / 2.0 * m), at_rank((1.0 - alpha / 2.0) * m)};
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

BootstrapResult bootstrap(const Dataset& d, const PairEstimator& estimator,
                          const BootstrapOptions& opts, const RngStream& rng) {
  if (opts.replicates < 2) {
    throw Error(ErrorCode::Configuration, "bootstrap needs at least 2 replicates");
  }
  if (!(opts.level > 0.0 && opts.level < 1.0)) {
    throw Error(ErrorCode::Configuration, "confidence level must lie in (0, 1)");
  }
  const Eigen::Index n = d.n();
  if (n == 0) throw Error(ErrorCode::EmptyAfterFiltering, "bootstrap on an empty dataset");

  std::vector<std::optional<BetaPair>> slots(opts.replicates);
  std::vector<std::string> reasons(opts.replicates);
  parallel_for(opts.replicates, opts.threads, [&](std::size_t r) {
    RngStream child = rng.derive(r);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& row : rows) row = static_cast<Eigen::Index>(child.below(static_cast<std::uint64_t>(n)));
    try {
      slots[r] = estimator(d.take_rows(rows));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Configuration) throw;
      reasons[r] = std::string(error_code_name(e.code()));
    }
  });

  BootstrapResult out;
  out.replicates = opts.replicates;
  out.level = opts.level;
  std::vector<double> xy, yx;
  for (std::size_t r = 0; r < opts.replicates; ++r) {
    if (slots[r]) {
      out.estimates.push_back(*slots[r]);
      xy.push_back(slots[r]->xy);
      yx.push_back(slots[r]->yx);
    } else {
      ++out.failure_reasons[reasons[r]];
    }
  }
  out.successes = out.estimates.size();
  const std::size_t failures = out.replicates - out.successes;
  if (static_cast<double>(failures) >
          opts.max_failure_rate * static_cast<double>(out.replicates) ||
      out.successes == 0) {
    std::string detail;
    for (const auto& [name, count] : out.failure_reasons) {
      detail += (detail.empty() ? "" : ", ") + name + "=" + std::to_string(count);
    }
    throw Error(ErrorCode::ExcessiveFailureRate,
                "bootstrap: " + std::to_string(failures) + " of " +
                    std::to_string(out.replicates) + " replicates failed (" + detail + ")");
  }
  out.sd_xy = sample_sd(xy);
  out.sd_yx = sample_sd(yx);
  out.ci_xy = percentile_interval(xy, opts.level);
  out.ci_yx = percentile_interval(yx, opts.level);
  return out;
}

}  // namespace bicausal
