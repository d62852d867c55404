#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqlab/distributions.hpp"
#include "vqlab/erm.hpp"
#include "vqlab/margin.hpp"
#include "vqlab/stats.hpp"

namespace vqlab {

struct FastRateConfig {
  SourceDistribution P;
  std::size_t k = 3;
  std::vector<std::size_t> n_grid;
  std::size_t reps = 64;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  LloydConfig erm;
  ReferenceEffort reference;
  std::size_t bootstrap = 1000;
  double x = std::log(100.0);
  std::optional<double> C0;
  bool force = false;
  // Margin precondition for sources without an exact certificate.
  std::size_t margin_grid_points = 32;
  std::optional<double> margin_t_max;  // default B / 8 of the reference codebook
  std::size_t margin_draws = 200000;
  // User-supplied margin constants; a finite certificate takes precedence.
  std::optional<double> kappa0;
  std::optional<std::size_t> card_mbar;
  std::size_t max_work = 200000000;  // reps * n_max guard
};

struct FastRateRecord {
  std::size_t n = 0;
  std::size_t rep = 0;
  double excess_loss = 0.0;
  double std_error = 0.0;
  std::string erm_mode;
  std::optional<double> bound;
};

struct FastRateSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double median = 0.0;
  std::optional<double> bound;
  std::optional<double> bound_display;
};

struct FastRateResult {
  std::vector<FastRateRecord> records;  // ordered by (n, rep)
  std::vector<FastRateSummary> summaries;
  std::optional<SlopeFit> slope;
  MarginReport margin;
  std::optional<FiniteCertificate> certificate;
  std::string reference_method;
  bool reference_certified = false;
  double reference_risk = 0.0;
  std::optional<double> kappa0;
  std::size_t card_mbar = 1;
  std::optional<double> bound_non_violation;  // fraction of records with excess <= bound
  bool forced = false;
};

// Thrown when the source fails the margin precondition and force is off.
class MarginRefused : public std::runtime_error {
 public:
  explicit MarginRefused(MarginReport report)
      : std::runtime_error("margin condition not satisfied; rerun with --force to override"),
        report_(std::move(report)) {}
  const MarginReport& report() const { return report_; }

 private:
  MarginReport report_;
};

// Margin report of a source: exact certificate for small finite supports,
// reference codebook plus Monte Carlo p(t) otherwise.
struct MarginAssessment {
  MarginReport report;
  std::optional<FiniteCertificate> certificate;
  std::vector<Codebook> optima;
  ReferenceOptimum reference;
};

MarginAssessment assess_margin(const SourceDistribution& P, std::size_t k, const ReferenceEffort& effort,
                               std::size_t grid_points, std::optional<double> t_max, std::size_t draws);

FastRateResult fast_rate_experiment(const FastRateConfig& cfg);

}  // namespace vqlab
