#pragma once

#include <cstdint>
#include <vector>

namespace vqlab {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;  // 2.5% bootstrap percentile
  double ci_high = 0.0; // 97.5% bootstrap percentile
  std::size_t resamples = 0;
  std::size_t resamples_dropped = 0;  // a resampled mean was not positive
};

// Least squares of log(mean of groups[j]) on log(x[j]). The interval comes
// from resampling the replications within each x with replacement.
// Throws NumericError when some group mean is not positive.
SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<std::vector<double>>& groups,
                          std::size_t resamples, std::uint64_t seed);

double mean_of(const std::vector<double>& v);
double median_of(std::vector<double> v);
// Standard error of the mean (unbiased variance).
double std_error_of(const std::vector<double>& v);

}  // namespace vqlab
