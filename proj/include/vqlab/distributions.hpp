#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vqlab/geometry.hpp"
#include "vqlab/rng.hpp"

namespace vqlab {

// --- finite support --------------------------------------------------------

struct FiniteSupportDist {
  PointSet atoms;
  std::vector<double> weights;
  double radius = 0.0;  // M; every atom lies in B(0, M)

  // Weights must be positive and sum to 1 within 1e-12. Without an explicit
  // radius, M is the largest atom norm.
  static FiniteSupportDist create(PointSet atoms, std::vector<double> weights,
                                  std::optional<double> radius = std::nullopt);
  static FiniteSupportDist uniform(PointSet atoms, std::optional<double> radius = std::nullopt);

  std::size_t dim() const { return atoms.dim(); }
};

// --- truncated Gaussian mixture -------------------------------------------

struct MixtureNormalizers {
  std::vector<double> normalizers;  // N_i = Gaussian(m_i, sigma^2 I) mass of B(0, M)
  std::vector<double> error_estimates;
  double eta = 0.0;  // 1 - min_i N_i
};

// Adaptive quadrature of the noncentral chi-square law of |X|^2 / sigma^2 over
// [0, M^2 / sigma^2]; absolute tolerance 1e-8 per component.
MixtureNormalizers mixture_normalizers(const PointSet& means, double sigma, double radius);

struct TruncatedGaussianMixture {
  PointSet means;
  std::vector<double> weights;
  double sigma = 0.0;
  double radius = 0.0;
  std::vector<double> normalizers;
  double eta = 0.0;

  static TruncatedGaussianMixture create(PointSet means, std::vector<double> weights, double sigma, double radius);

  std::size_t dim() const { return means.dim(); }
  // B~ = min_{i != j} |m_i - m_j|; +inf for a single component.
  double mean_separation() const;
  // Sum of the component formulas.
  double density(std::span<const double> x) const;
  // Same density through a log-sum-exp evaluation.
  double density_log_sum_exp(std::span<const double> x) const;
  // Expected proposals per accepted sample. Each component uses Gaussian
  // proposals, or uniform proposals in B(0, M) when those accept more often.
  double expected_draws_per_sample() const;
};

struct MixtureConditionReport {
  double lhs = 0.0;  // theta_min / theta_max
  double rhs = 0.0;
  double separation_term = 0.0;  // first term of the max
  double boundary_term = 0.0;    // second term of the max
  bool satisfied = false;        // lhs >= rhs
  double margin_radius = 0.0;    // B~ / 8 when satisfied
  double mean_separation = 0.0;
  double eta = 0.0;
  bool means_well_inside = false;  // B(m_i, B~/3) inside B(0, M)
  std::string theory;              // "d=2 theory" always; flagged when d != 2
  std::vector<std::string> caveats;
};

MixtureConditionReport mixture_condition_check(const TruncatedGaussianMixture& mix);

// --- cone-shaped balls -------------------------------------------------------

// Normalizer Z(d, rho) of the density (rho - |x - z|) on B(z, rho).
double cone_normalizer(std::size_t d, double rho);
// CDF of |X - z| / rho under the cone law: (d+1) u^d - d u^(d+1).
double cone_radial_cdf(std::size_t d, double u);
// E|X - z|^2 by radial quadrature (tolerance 1e-10 relative to rho^2).
double cone_second_moment(std::size_t d, double rho);

// Inverse radial CDF tabulated on 4096 knots with piecewise-linear (monotone)
// interpolation.
class ConeRadialSampler {
 public:
  static constexpr std::size_t kKnots = 4096;
  explicit ConeRadialSampler(std::size_t d);
  // Maps a uniform v in [0, 1) to a radius fraction u in [0, 1].
  double fraction(double v) const;
  std::size_t dim() const { return d_; }

 private:
  std::size_t d_;
  std::vector<double> cdf_;
};

struct AssouadFamily;

// Mixture of cone-shaped balls sharing one radius rho.
struct ConeMixture {
  PointSet centers;
  std::vector<double> masses;
  double rho = 0.0;
  double radius = 0.0;  // M
  double ball_second_moment = 0.0;
  std::shared_ptr<const ConeRadialSampler> sampler;
  // Set when the mixture is P_sigma of an Assouad family.
  std::shared_ptr<const AssouadFamily> family;
  std::vector<int> sigma;

  static ConeMixture create(PointSet centers, std::vector<double> masses, double rho,
                            std::optional<double> radius = std::nullopt);

  std::size_t dim() const { return centers.dim(); }
  double density(std::span<const double> x) const;
};

// --- Assouad family ----------------------------------------------------------

struct AssouadFamily {
  std::size_t k = 0;
  std::size_t d = 0;
  std::size_t m = 0;  // 2k/3
  double M = 0.0;
  double Delta = 0.0;  // 5M / (32 m^(1/d))
  double rho = 0.0;    // Delta / 16
  double delta = 0.0;
  PointSet centers;  // z_i
  PointSet shifts;   // w_i = Delta e_1

  double ball_mass(std::size_t i, const std::vector<int>& sigma) const;
  // P_sigma; balls are ordered U_1, U'_1, U_2, U'_2, ...
  ConeMixture distribution(const std::vector<int>& sigma) const;
};

AssouadFamily build_assouad(std::size_t k, std::size_t d, double M, double delta);

// min(sqrt(m) / (2 sqrt(n)), 1/3).
double assouad_delta_for_n(std::size_t m, std::size_t n);

std::vector<int> sigma_of_tau(const std::vector<int>& tau);
bool is_balanced(const std::vector<int>& sigma);
// rho(sigma, sigma') = sum_i |sigma_i - sigma'_i|.
int sign_distance(const std::vector<int>& a, const std::vector<int>& b);
std::vector<std::vector<int>> balanced_sign_vectors(std::size_t m);
std::vector<std::vector<int>> all_sign_vectors(std::size_t length);
// Bit i set iff tau_i = +1.
std::uint64_t tau_id(const std::vector<int>& tau);

double assouad_density(const AssouadFamily& fam, const std::vector<int>& sigma, std::span<const double> x);

Codebook q_sigma(const AssouadFamily& fam, const std::vector<int>& sigma);

// --- the sum type ------------------------------------------------------------

using SourceDistribution = std::variant<FiniteSupportDist, TruncatedGaussianMixture, ConeMixture>;

std::size_t dim(const SourceDistribution& P);
double support_radius(const SourceDistribution& P);
std::string kind_name(const SourceDistribution& P);

// n i.i.d. draws; every draw lies in B(0, M).
PointSet sample(const SourceDistribution& P, std::size_t n, Stream& stream);

// n draws assembled from fixed-size chunks with derived substreams, so the
// result does not depend on the worker count.
PointSet sample_parallel(const SourceDistribution& P, std::size_t n, std::uint64_t seed, unsigned threads);

}  // namespace vqlab
