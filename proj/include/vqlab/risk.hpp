#pragma once

#include <cstdint>
#include <vector>

#include "vqlab/distributions.hpp"
#include "vqlab/geometry.hpp"
#include "vqlab/numeric.hpp"

namespace vqlab {

// Monte Carlo effort. `draws` is ignored wherever an exact path exists.
struct Budget {
  std::size_t draws = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct RiskEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = false;
};

// R(c) = P gamma(c, .). Exact for finite support; exact for cone mixtures
// whenever every ball lies inside a single open Voronoi cell (Monte Carlo
// within the cut balls otherwise); Monte Carlo for the Gaussian mixture.
RiskEstimate true_risk(const Codebook& c, const SourceDistribution& P, const Budget& budget = {});

// Finite support only: sum over cells of mass * (within-cell variance +
// |c_i - centroid_i|^2). An independent route to true_risk.
double true_risk_by_cells(const Codebook& c, const FiniteSupportDist& P);

// l(c, c*) = R(c) - R(c*). Monte Carlo parts use common random numbers, so the
// standard error is that of the paired difference.
RiskEstimate excess_loss(const Codebook& c, const Codebook& c_star, const SourceDistribution& P,
                         const Budget& budget = {});

struct CellStats {
  std::vector<double> masses;
  std::vector<double> mass_std_errors;
  PointSet centroids;
  std::vector<bool> defined;  // false for empty cells
  bool exact = false;
};

// Masses and conditional means of the Voronoi partition of c (tie rule of
// nearest_index).
CellStats cell_stats(const Codebook& c, const SourceDistribution& P, const Budget& budget = {});

// Var(gamma(c, .) - gamma(c', .)) under a finite-support law.
double contrast_difference_variance(const Codebook& c, const Codebook& c_prime, const FiniteSupportDist& P);

}  // namespace vqlab
