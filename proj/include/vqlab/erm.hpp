#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vqlab/distributions.hpp"
#include "vqlab/geometry.hpp"

namespace vqlab {

enum class InitRule { RandomAtoms, SpreadGreedy };

struct LloydConfig {
  int max_iters = 200;
  double rel_tol = 1e-12;  // stop when the relative risk improvement falls below this
  int restarts = 0;        // 0: ceil(10 k log n)
  InitRule init = InitRule::RandomAtoms;
  unsigned threads = 1;    // restarts run concurrently
};

struct ErmResult {
  Codebook codebook;
  double empirical_risk = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  bool certified_exact = false;
  std::vector<double> risk_trace;  // per-iteration risk of the winning restart

  std::string mode() const { return certified_exact ? "exact" : "lloyd"; }
};

int default_restarts(std::size_t k, std::size_t n);

// Multi-start Lloyd iteration. Ties in the assignment step go to the smallest
// index; an empty cell is respawned at the sample point with the largest
// current contrast. Returns the best restart (ties to the lowest restart index).
ErmResult lloyd(const PointSet& sample, std::size_t k, const LloydConfig& cfg, std::uint64_t seed);
ErmResult lloyd_weighted(const PointSet& points, std::span<const double> weights, std::size_t k,
                         const LloydConfig& cfg, std::uint64_t seed);

// True if enumerating partitions of `distinct` points into k groups is within
// the supported guard: distinct <= 14 with k <= 3, or distinct <= 9 with k <= 4.
bool exact_guard(std::size_t distinct, std::size_t k);

// Exact empirical risk minimizer by enumerating label assignments up to
// relabeling (first-occurrence canonical form). Duplicate sample points are
// merged first, so the guard applies to the number of distinct points.
ErmResult exact_erm(const PointSet& sample, std::size_t k);
ErmResult exact_erm_weighted(const PointSet& points, std::span<const double> weights, std::size_t k);

// Distinct points of a sample with their multiplicities, in first-seen order.
struct Collapsed {
  PointSet points;
  std::vector<double> counts;
};
Collapsed collapse_duplicates(const PointSet& sample);

// The operational ERM c^_n: exact_erm when the guard allows, multi-start Lloyd
// otherwise.
ErmResult solve_erm(const PointSet& sample, std::size_t k, const LloydConfig& cfg, std::uint64_t seed);

struct ReferenceEffort {
  int runs = 20;
  std::size_t sample_size = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t risk_draws = 200000;
};

struct ReferenceOptimum {
  Codebook codebook;
  double risk = 0.0;
  double risk_std_error = 0.0;
  bool certified = false;
  std::string method;
};

// A (near-)optimal codebook of the source: certified enumeration over atoms
// for finite support; for an Assouad P_sigma the candidates also include every
// balanced Q_sigma'; otherwise the best Lloyd run on a large sample.
ReferenceOptimum reference_optimum(const SourceDistribution& P, std::size_t k, const ReferenceEffort& effort = {});

}  // namespace vqlab
