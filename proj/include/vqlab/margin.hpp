#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vqlab/distributions.hpp"
#include "vqlab/geometry.hpp"
#include "vqlab/risk.hpp"

namespace vqlab {

// {0, t_max/count, 2 t_max/count, ..., t_max}.
std::vector<double> make_t_grid(std::size_t count, double t_max);

struct PCurve {
  std::vector<double> t;
  std::vector<double> estimate;
  std::vector<double> std_error;
  bool exact = false;
  std::size_t draws = 0;
};

// p(t) = max over the codebooks of P(boundary_distance(c, X) <= t). Exact for
// finite support; otherwise one Monte Carlo sample is shared by every t and
// every codebook, so the curve is non-decreasing by construction.
PCurve p_curve(const SourceDistribution& P, const std::vector<Codebook>& codebooks, const std::vector<double>& t_grid,
               const Budget& budget = {});

struct MarginInputs {
  double B = 0.0;
  double p_min = 0.0;
  double M = 0.0;
  PCurve curve;
};

struct MarginReport {
  double B = 0.0;
  double p_min = 0.0;
  double M = 0.0;
  double slope_bound = 0.0;  // B p_min / (128 M^2)
  PCurve curve;
  std::vector<bool> verdicts;  // p(t) <= slope_bound t (+ 3 std errors)
  double r0_hat = 0.0;         // last grid point of the passing prefix
  bool satisfied = false;      // r0_hat > 0
  std::optional<double> epsilon_hat;
  std::optional<double> kappa0;
  std::vector<std::string> caveats;
};

inline constexpr double kStatTolerance = 3.0;  // standard errors

MarginReport margin_check(const MarginInputs& in);

// Analytic mode: p is a callable. r0_hat is the first crossing of p(t) and
// slope_bound * t on (0, t_max], located by a scan followed by bisection.
MarginReport margin_check_analytic(const std::function<double(double)>& p, double B, double p_min, double M,
                                   double t_max);

// Exact margin quantities of a finite-support law, from enumerating every
// partition of the atoms into k (and k - 1) groups.
struct FiniteCertificate {
  std::vector<Codebook> optima;  // distinct optimal code sets
  double risk = 0.0;             // R*_k
  double risk_k_minus_1 = 0.0;   // R*_{k-1}
  double B = 0.0;
  double p_min = 0.0;  // smallest closed-cell mass
  double M = 0.0;
  double slope_bound = 0.0;
  double r0 = 0.0;       // supremum of radii with p(t) <= slope_bound t, exclusive
  double epsilon = 0.0;  // smallest excess of a non-optimal local minimizer
  std::size_t stationary_partitions = 0;
  double kappa0 = 0.0;
  bool margin_satisfied = false;
};

FiniteCertificate certify_finite(const FiniteSupportDist& P, std::size_t k);

struct StationaryClass {
  Codebook representative;
  double risk = 0.0;
  double risk_std_error = 0.0;
  std::size_t count = 0;
};

struct EpsilonSearchResult {
  std::optional<double> epsilon_hat;  // empty: "not-found"
  std::vector<StationaryClass> classes;  // classes[0] is the best
  std::vector<std::string> caveats;
};

// Heuristic: Lloyd from `attempts` random initializations on a fixed sample
// (the weighted atoms for finite support), converged codebooks grouped by
// set distance below B/4.
EpsilonSearchResult epsilon_search(const SourceDistribution& P, std::size_t k, int attempts,
                                   const Budget& budget = {});

// 4 k M^2 max(1/eps, 64 M^2 / (p_min B^2 r0^2)).
double kappa0(double epsilon, double p_min, double B, double r0, double M, std::size_t k);

struct FastRateBound {
  double proof_form = 0.0;
  std::optional<double> display_form;
};

// With K = 32 M^2 kappa0 and Xi = 18432 pi (k + log card): 2 K Xi / n +
// (9 K + 128 M^2) x / (2 n). The display form
// C0 kappa0 (k + log card) M^2 / n + (9 kappa0 + 4) 16 M^2 x / n
// is evaluated only when C0 is given.
FastRateBound theorem31_bound(double kappa0, std::size_t k, std::size_t card_mbar, double M, double n, double x,
                              std::optional<double> C0 = std::nullopt);

struct CheckResult {
  std::size_t trials = 0;
  std::size_t passed = 0;
  std::size_t rejected_draws = 0;  // proposals outside B(0, M)^k
  double worst_margin = 0.0;       // min over trials of rhs slack (>= 0 on success)
  std::vector<std::string> caveats;

  double pass_rate() const { return trials ? static_cast<double>(passed) / static_cast<double>(trials) : 0.0; }
};

// l(c, c*) >= (p_min / 2) |c - c*|^2 for random c within B r0 / (4 sqrt2 M)
// of a certified optimum.
CheckResult local_convexity_check(const FiniteSupportDist& P, const FiniteCertificate& cert, std::size_t trials,
                                  std::uint64_t seed);

// Var(gamma(c, .) - gamma(c*(c), .)) / (16 M^2) <= |c - c*(c)|^2 <=
// kappa0 l(c, c*) for random c in B(0, M)^k.
CheckResult variance_link_check(const FiniteSupportDist& P, const FiniteCertificate& cert, std::size_t trials,
                                std::uint64_t seed);

// Left inequality only, Monte Carlo moments, 3 std-error tolerance. The
// optima list is the (heuristic) set of optimal codebooks.
CheckResult variance_link_check_mc(const SourceDistribution& P, const std::vector<Codebook>& optima,
                                   std::size_t trials, const Budget& budget);

// The codebook among the optima (over all relabelings) closest to c.
Codebook nearest_optimum(const Codebook& c, const std::vector<Codebook>& optima);

}  // namespace vqlab
