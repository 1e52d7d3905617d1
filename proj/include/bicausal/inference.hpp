#pragma once

#include "bicausal/identification.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace bicausal {

// Maps Lambda (6-vector) to (beta_xy, beta_yx) or to any other vector.
using IdentificationMap = std::function<Vector(const Vector&)>;

// identify_prop1 wrapped as an IdentificationMap.
IdentificationMap prop1_map();

// Standard errors of map(Lambda-hat) by the delta method:
//   Var = J Sigma J' / n, Sigma = lambda_covariance(fit_x, fit_y)
// with J the central-difference Jacobian of map at Lambda-hat. Throws
// FeasibilityBoundary when a perturbed evaluation fails.
Vector delta_method_se(const ProbitFit& fit_x, const ProbitFit& fit_y,
                       const IdentificationMap& map);

struct StandardErrors {
  double se_xy = 0.0;
  double se_yx = 0.0;
};

StandardErrors delta_method_prop1(const ReducedFormFits& fits);

using PairEstimator = std::function<BetaPair(const Dataset&)>;

struct BootstrapOptions {
  std::size_t replicates = 200;
  double level = 0.95;
  double max_failure_rate = 0.10;
  unsigned threads = 0;  // 0: default_thread_count()
};

struct BootstrapResult {
  std::size_t replicates = 0;
  std::size_t successes = 0;
  std::vector<BetaPair> estimates;  // successful replicates, in replicate order
  double sd_xy = 0.0;
  double sd_yx = 0.0;
  Interval ci_xy;
  Interval ci_yx;
  double level = 0.95;
  std::map<std::string, std::size_t> failure_reasons;
};

// Percentile interval from order statistics at ranks ceil(alpha/2 m) and
// ceil((1 - alpha/2) m) (1-based) of the sorted sample.
Interval percentile_interval(std::vector<double> sample, double level);

// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_sd(const std::vector<double>& v);

// Nonparametric bootstrap: replicate r resamples n rows with replacement
// using rng.derive(r). Replicates whose estimator throws a bicausal::Error
// are dropped and tallied by error name, except Configuration errors, which
// propagate. Throws ExcessiveFailureRate when failures exceed
// max_failure_rate * replicates.
BootstrapResult bootstrap(const Dataset& d, const PairEstimator& estimator,
                          const BootstrapOptions& opts, const RngStream& rng);

}  // namespace bicausal
