#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vqlab/distributions.hpp"
#include "vqlab/erm.hpp"
#include "vqlab/risk.hpp"
#include "vqlab/stats.hpp"

namespace vqlab {

struct IdentityReport {
  int rho = 0;               // sign distance of (sigma, sigma')
  double predicted = 0.0;    // Delta^2 delta rho / (8 m)
  double mc_gap = 0.0;       // Monte Carlo R(Q_sigma', P_sigma) - R(Q_sigma, P_sigma)
  double mc_std_error = 0.0;
  double exact_gap = 0.0;    // per-ball second moments
  bool exact_available = false;
  double discrepancy = 0.0;  // mc_gap - predicted
  bool within_tolerance = false;  // |discrepancy| <= 3 std errors (exact: 1e-12 relative)
};

IdentityReport distortion_identity_check(const AssouadFamily& fam, const std::vector<int>& sigma,
                                         const std::vector<int>& sigma_prime, const Budget& budget);

struct HellingerRecord {
  double h2_single = 0.0;
  double h2_product = 0.0;
  double bound = 0.0;  // 4 n delta^2 / m
  std::size_t n = 0;
  int tau_distance = 0;
  bool bound_applies = false;  // rho(tau, tau') = 2
  bool within_bound = false;
};

HellingerRecord hellinger(const AssouadFamily& fam, const std::vector<int>& tau, const std::vector<int>& tau_prime,
                          std::size_t n);

enum class DeltaMode { Tuned, Zero, Fixed };

struct SlowRateConfig {
  std::size_t k = 3;
  std::size_t d = 2;
  double M = 1.0;
  std::vector<std::size_t> n_grid;
  std::size_t reps = 64;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  LloydConfig erm;
  DeltaMode delta_mode = DeltaMode::Tuned;
  double delta_fixed = 0.0;
  std::size_t eval_draws = 100000;  // only used when a ball is cut by the ERM cells
  std::size_t bootstrap = 1000;
  std::size_t max_work = 200000000;  // reps * n_max guard
};

struct SlowRateRecord {
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t tau_id = 0;
  double delta = 0.0;
  double excess_loss = 0.0;
  double std_error = 0.0;
  std::string erm_mode;
};

struct SlowRateSummary {
  std::size_t n = 0;
  double delta = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double median = 0.0;
  double max_over_tau = 0.0;
  double floor_shape = 0.0;  // M^2 sqrt(k^(1 - 4/d) / n), constant omitted
};

struct SlowRateResult {
  std::vector<SlowRateRecord> records;  // ordered by (n, rep)
  std::vector<SlowRateSummary> summaries;
  std::optional<SlopeFit> slope;
  double Delta = 0.0;
  double rho = 0.0;
  std::size_t m = 0;
};

SlowRateResult slow_rate_experiment(const SlowRateConfig& cfg);

}  // namespace vqlab
