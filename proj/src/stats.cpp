#include "vqlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "vqlab/error.hpp"
#include "vqlab/numeric.hpp"
#include "vqlab/rng.hpp"

namespace vqlab {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw InputError("mean of an empty list");
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw InputError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return std::sqrt(s.value() / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

namespace {

void least_squares(const std::vector<double>& lx, const std::vector<double>& ly, double& slope, double& intercept) {
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  slope = sxy / sxx;
  intercept = my - slope * mx;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<std::vector<double>>& groups,
                          std::size_t resamples, std::uint64_t seed) {
  if (x.size() != groups.size() || x.size() < 2) throw InputError("slope fit needs at least two groups");
  std::vector<double> lx(x.size()), ly(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] > 0.0) || groups[j].empty()) throw InputError("slope fit needs positive x and nonempty groups");
    const double m = mean_of(groups[j]);
    if (!(m > 0.0)) throw NumericError("mean excess is not positive; log-log fit undefined", {{"x", x[j]}, {"mean", m}});
    lx[j] = std::log(x[j]);
    ly[j] = std::log(m);
  }
  SlopeFit fit;
  least_squares(lx, ly, fit.slope, fit.intercept);
  fit.ci_low = fit.ci_high = fit.slope;

  std::vector<double> slopes;
  slopes.reserve(resamples);
  std::vector<double> boot_y(x.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    Stream s(derive_seed(seed, {stream_tag::kBootstrap, b}));
    bool ok = true;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto& g = groups[j];
      CompensatedSum acc;
      for (std::size_t i = 0; i < g.size(); ++i) acc.add(g[s.index(g.size())]);
      const double m = acc.value() / static_cast<double>(g.size());
      ok = ok && m > 0.0;
      boot_y[j] = ok ? std::log(m) : 0.0;
    }
    if (!ok) {
      ++fit.resamples_dropped;
      continue;
    }
    double sl = 0.0, ic = 0.0;
    least_squares(lx, boot_y, sl, ic);
    slopes.push_back(sl);
  }
  fit.resamples = slopes.size();
  if (!slopes.empty()) {
    fit.ci_low = percentile(slopes, 0.025);
    fit.ci_high = percentile(slopes, 0.975);
  }
  return fit;
}

}  // namespace vqlab
