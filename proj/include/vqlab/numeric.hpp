#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

namespace vqlab {

// Neumaier-compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Mean of i.i.d. draws together with the standard error of the mean.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

// First and second moment accumulator. Merging is exact in the sense that the
// result only depends on the order of merges, never on thread timing.
class MomentAccumulator {
 public:
  void add(double x) {
    sum_.add(x);
    sum_sq_.add(x * x);
    ++count_;
  }
  void merge(const MomentAccumulator& other) {
    sum_.add(other.sum_.value());
    sum_sq_.add(other.sum_sq_.value());
    count_ += other.count_;
  }
  std::size_t count() const { return count_; }
  double mean() const { return count_ ? sum_.value() / static_cast<double>(count_) : 0.0; }
  // Population variance (1/N normalization).
  double variance() const {
    if (count_ == 0) return 0.0;
    const double m = mean();
    return std::max(0.0, sum_sq_.value() / static_cast<double>(count_) - m * m);
  }
  MeanEstimate estimate() const {
    MeanEstimate e;
    e.count = count_;
    e.mean = mean();
    if (count_ > 1) {
      const double unbiased = variance() * static_cast<double>(count_) / static_cast<double>(count_ - 1);
      e.std_error = std::sqrt(unbiased / static_cast<double>(count_));
    }
    return e;
  }

 private:
  CompensatedSum sum_;
  CompensatedSum sum_sq_;
  std::size_t count_ = 0;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod (61 points) on [a, b], relative target 1e-10
// (tighter targets sit below the rule's own rounding floor). Throws NumericError when the
// error estimate exceeds `abs_tol` after subdivision.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                           const std::string& what);

// Runs body(i) for i in [0, count) over `threads` workers. Exceptions are
// rethrown on the calling thread (the one from the smallest index wins).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

// Number of fixed-size Monte Carlo chunks for a budget. Chunking is independent
// of the worker count so results never depend on it.
inline constexpr std::size_t kMonteCarloChunk = 8192;
inline std::size_t chunk_count(std::size_t draws) { return (draws + kMonteCarloChunk - 1) / kMonteCarloChunk; }

}  // namespace vqlab
