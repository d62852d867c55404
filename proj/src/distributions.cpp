#include "vqlab/distributions.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "vqlab/error.hpp"
#include "vqlab/numeric.hpp"

namespace vqlab {

namespace {

void check_weights(const std::vector<double>& w, std::size_t expected, const char* what) {
  if (w.size() != expected) throw InputError(std::string(what) + ": weight count does not match point count");
  CompensatedSum s;
  for (double v : w) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(what) + ": weights must be positive");
    s.add(v);
  }
  if (std::fabs(s.value() - 1.0) > 1e-12) throw InputError(std::string(what) + ": weights must sum to 1");
}

double max_norm(const PointSet& p) {
  double r = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) r = std::max(r, norm(p[i]));
  return r;
}

// Index drawn from a discrete law given by its cumulative weights.
std::size_t draw_index(const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * cumulative.back());
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

std::vector<double> cumulative_of(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  return c;
}

void random_direction(Stream& s, std::span<double> out) {
  for (;;) {
    double n2 = 0.0;
    for (double& v : out) {
      v = s.normal();
      n2 += v * v;
    }
    if (n2 > 1e-300) {
      const double inv = 1.0 / std::sqrt(n2);
      for (double& v : out) v *= inv;
      return;
    }
  }
}

}  // namespace

// --- finite support --------------------------------------------------------

FiniteSupportDist FiniteSupportDist::create(PointSet atoms, std::vector<double> weights, std::optional<double> radius) {
  if (atoms.empty()) throw InputError("finite distribution needs at least one atom");
  check_weights(weights, atoms.size(), "finite distribution");
  FiniteSupportDist P;
  const double r = max_norm(atoms);
  if (radius) {
    if (*radius < r * (1.0 - 1e-12)) throw InputError("finite distribution: atoms lie outside B(0, M)");
    P.radius = *radius;
  } else {
    P.radius = r;
  }
  P.atoms = std::move(atoms);
  P.weights = std::move(weights);
  return P;
}

FiniteSupportDist FiniteSupportDist::uniform(PointSet atoms, std::optional<double> radius) {
  std::vector<double> w(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
  // Uniform weights sum to 1 only up to rounding; renormalize the last one.
  if (!w.empty()) {
    CompensatedSum s;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) s.add(w[i]);
    w.back() = 1.0 - s.value();
  }
  return create(std::move(atoms), std::move(w), radius);
}

// --- truncated Gaussian mixture -------------------------------------------

MixtureNormalizers mixture_normalizers(const PointSet& means, double sigma, double radius) {
  if (!(sigma > 0.0) || !(radius > 0.0)) throw InputError("mixture_normalizers: sigma and M must be positive");
  const double d = static_cast<double>(means.dim());
  MixtureNormalizers out;
  const double upper = radius * radius / (sigma * sigma);
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double a = norm(means[i]);
    const double lambda = a * a / (sigma * sigma);
    std::function<double(double)> pdf;
    if (lambda == 0.0) {
      boost::math::chi_squared_distribution<double> law(d);
      pdf = [law](double s) { return s <= 0.0 ? 0.0 : boost::math::pdf(law, s); };
    } else {
      boost::math::non_central_chi_squared_distribution<double> law(d, lambda);
      pdf = [law](double s) { return s <= 0.0 ? 0.0 : boost::math::pdf(law, s); };
    }
    // The mass sits in a window of a few standard deviations around d + lambda;
    // split there so the adaptive rule resolves the peak.
    const double centre = d + lambda;
    const double spread = std::sqrt(2.0 * (d + 2.0 * lambda));
    std::vector<double> cuts{0.0};
    for (double z : {-12.0, -4.0, 0.0, 4.0, 12.0}) {
      const double c = centre + z * spread;
      if (c > cuts.back() && c < upper) cuts.push_back(c);
    }
    cuts.push_back(upper);
    CompensatedSum mass;
    double err = 0.0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      const auto q = integrate(pdf, cuts[j], cuts[j + 1], 1e-8 / static_cast<double>(cuts.size()),
                               "mixture normalizer of component " + std::to_string(i));
      mass.add(q.value);
      err += q.error;
    }
    if (err > 1e-8) {
      throw NumericError("mixture normalizer quadrature exceeded tolerance",
                         {{"component", static_cast<double>(i)}, {"error_estimate", err}, {"sigma", sigma}});
    }
    out.normalizers.push_back(std::clamp(mass.value(), 0.0, 1.0));
    out.error_estimates.push_back(err);
  }
  const double min_n = *std::min_element(out.normalizers.begin(), out.normalizers.end());
  if (!(min_n > 0.0)) {
    throw NumericError("mixture component carries no mass inside B(0, M)", {{"min_normalizer", min_n}});
  }
  out.eta = 1.0 - min_n;
  return out;
}

TruncatedGaussianMixture TruncatedGaussianMixture::create(PointSet means, std::vector<double> weights, double sigma,
                                                          double radius) {
  if (means.empty()) throw InputError("mixture needs at least one component");
  check_weights(weights, means.size(), "mixture");
  if (!(sigma > 0.0) || !(radius > 0.0)) throw InputError("mixture: sigma and M must be positive");
  TruncatedGaussianMixture mix;
  auto norms = mixture_normalizers(means, sigma, radius);
  mix.means = std::move(means);
  mix.weights = std::move(weights);
  mix.sigma = sigma;
  mix.radius = radius;
  mix.normalizers = std::move(norms.normalizers);
  mix.eta = norms.eta;
  return mix;
}

double TruncatedGaussianMixture::mean_separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t j = i + 1; j < means.size(); ++j) best = std::min(best, squared_distance(means[i], means[j]));
  }
  return std::sqrt(best);
}

double TruncatedGaussianMixture::density(std::span<const double> x) const {
  require_same_dim(dim(), x.size(), "mixture density");
  if (norm(x) > radius) return 0.0;
  const double s2 = sigma * sigma;
  const double scale = std::pow(2.0 * std::numbers::pi * s2, 0.5 * static_cast<double>(dim()));
  double f = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    f += weights[i] / (scale * normalizers[i]) * std::exp(-squared_distance(x, means[i]) / (2.0 * s2));
  }
  return f;
}

double TruncatedGaussianMixture::density_log_sum_exp(std::span<const double> x) const {
  require_same_dim(dim(), x.size(), "mixture density");
  if (norm(x) > radius) return 0.0;
  const double s2 = sigma * sigma;
  const double log_scale = 0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi * s2);
  std::vector<double> terms(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    terms[i] = std::log(weights[i]) - std::log(normalizers[i]) - log_scale - squared_distance(x, means[i]) / (2.0 * s2);
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return 0.0;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return std::exp(top + std::log(acc));
}

namespace {
double ball_proposal_acceptance(const TruncatedGaussianMixture& P, std::size_t c);
}

double TruncatedGaussianMixture::expected_draws_per_sample() const {
  double e = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    e += weights[i] / std::max(normalizers[i], ball_proposal_acceptance(*this, i));
  }
  return e;
}

MixtureConditionReport mixture_condition_check(const TruncatedGaussianMixture& mix) {
  MixtureConditionReport r;
  const double k = static_cast<double>(mix.means.size());
  const double bt = mix.mean_separation();
  const double s2 = mix.sigma * mix.sigma;
  const double M = mix.radius;
  r.mean_separation = bt;
  r.eta = mix.eta;
  const auto [wmin, wmax] = std::minmax_element(mix.weights.begin(), mix.weights.end());
  r.lhs = *wmin / *wmax;
  if (!std::isfinite(bt)) {
    r.caveats.push_back("single component: mean separation undefined, condition not applicable");
    r.rhs = std::numeric_limits<double>::infinity();
    r.theory = "d=2 theory";
    return r;
  }
  // 1 - exp(-B~^2 / 2048 sigma^2) and exp(B~^2 / 32 sigma^2) - 1 via expm1.
  const double one_minus = -std::expm1(-bt * bt / (2048.0 * s2));
  const double grows = std::expm1(bt * bt / (32.0 * s2));
  r.separation_term = s2 / (bt * one_minus);
  r.boundary_term = std::isinf(grows) ? 0.0 : k * M * M * M / (7.0 * s2 * grows);
  r.rhs = 2048.0 * k / ((1.0 - mix.eta) * bt) * std::max(r.separation_term, r.boundary_term);
  r.satisfied = r.lhs >= r.rhs;
  r.margin_radius = r.satisfied ? bt / 8.0 : 0.0;
  r.means_well_inside = true;
  for (std::size_t i = 0; i < mix.means.size(); ++i) {
    if (norm(mix.means[i]) + bt / 3.0 > M) r.means_well_inside = false;
  }
  if (!r.means_well_inside) r.caveats.push_back("B(m_i, B~/3) not contained in B(0, M): boundary assumption fails");
  if (mix.dim() == 2) {
    r.theory = "d=2 theory";
  } else {
    r.theory = "d=2 theory (applied with d=" + std::to_string(mix.dim()) + ")";
    r.caveats.push_back("constants are derived for d = 2; transfer to other dimensions is not claimed");
  }
  return r;
}

// --- cone balls --------------------------------------------------------------

double cone_normalizer(std::size_t d, double rho) {
  const double dd = static_cast<double>(d);
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * dd) / std::tgamma(0.5 * dd);
  return sphere * std::pow(rho, dd + 1.0) / (dd * (dd + 1.0));
}

double cone_radial_cdf(std::size_t d, double u) {
  const double dd = static_cast<double>(d);
  u = std::clamp(u, 0.0, 1.0);
  return (dd + 1.0) * std::pow(u, dd) - dd * std::pow(u, dd + 1.0);
}

double cone_second_moment(std::size_t d, double rho) {
  const double dd = static_cast<double>(d);
  auto mass = [dd](double u) { return (1.0 - u) * std::pow(u, dd - 1.0); };
  auto moment = [dd](double u) { return (1.0 - u) * std::pow(u, dd + 1.0); };
  const double num = integrate(moment, 0.0, 1.0, 1e-12, "cone second moment").value;
  const double den = integrate(mass, 0.0, 1.0, 1e-12, "cone normalizer").value;
  return rho * rho * num / den;
}

ConeRadialSampler::ConeRadialSampler(std::size_t d) : d_(d), cdf_(kKnots) {
  if (d == 0) throw InputError("cone sampler needs d >= 1");
  for (std::size_t j = 0; j < kKnots; ++j) {
    cdf_[j] = cone_radial_cdf(d, static_cast<double>(j) / static_cast<double>(kKnots - 1));
  }
  cdf_.back() = 1.0;
}

double ConeRadialSampler::fraction(double v) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), v);
  if (it == cdf_.end()) return 1.0;
  const std::size_t hi = static_cast<std::size_t>(it - cdf_.begin());
  const std::size_t lo = hi - 1;
  const double span = cdf_[hi] - cdf_[lo];
  const double t = span > 0.0 ? (v - cdf_[lo]) / span : 0.0;
  return (static_cast<double>(lo) + t) / static_cast<double>(kKnots - 1);
}

ConeMixture ConeMixture::create(PointSet centers, std::vector<double> masses, double rho, std::optional<double> radius) {
  if (centers.empty()) throw InputError("cone mixture needs at least one ball");
  if (!(rho > 0.0)) throw InputError("cone radius must be positive");
  check_weights(masses, centers.size(), "cone mixture");
  ConeMixture P;
  const double r = max_norm(centers) + rho;
  if (radius) {
    if (*radius < r * (1.0 - 1e-12)) throw InputError("cone mixture: balls leave B(0, M)");
    P.radius = *radius;
  } else {
    P.radius = r;
  }
  P.rho = rho;
  P.ball_second_moment = cone_second_moment(centers.dim(), rho);
  P.sampler = std::make_shared<const ConeRadialSampler>(centers.dim());
  P.centers = std::move(centers);
  P.masses = std::move(masses);
  return P;
}

double ConeMixture::density(std::span<const double> x) const {
  require_same_dim(dim(), x.size(), "cone density");
  const double z = cone_normalizer(dim(), rho);
  double f = 0.0;
  for (std::size_t b = 0; b < centers.size(); ++b) {
    const double r = std::sqrt(squared_distance(x, centers[b]));
    if (r <= rho) f += masses[b] * (rho - r) / z;
  }
  return f;
}

// --- Assouad family ----------------------------------------------------------

double AssouadFamily::ball_mass(std::size_t i, const std::vector<int>& sigma) const {
  return (1.0 + static_cast<double>(sigma[i]) * delta) / (2.0 * static_cast<double>(m));
}

ConeMixture AssouadFamily::distribution(const std::vector<int>& sigma) const {
  if (sigma.size() != m) throw InputError("sign vector length must equal m");
  for (int s : sigma) {
    if (s != 1 && s != -1) throw InputError("sign vector entries must be +1 or -1");
  }
  if (!is_balanced(sigma)) throw InputError("sign vector must be balanced (sum zero)");
  PointSet ballc(d);
  ballc.reserve(2 * m);
  std::vector<double> masses;
  Point shifted(d);
  for (std::size_t i = 0; i < m; ++i) {
    ballc.push_back(centers[i]);
    for (std::size_t a = 0; a < d; ++a) shifted[a] = centers[i][a] + shifts[i][a];
    ballc.push_back(shifted);
    masses.push_back(ball_mass(i, sigma));
    masses.push_back(ball_mass(i, sigma));
  }
  // Masses telescope to 1; absorb rounding into the last ball.
  CompensatedSum s;
  for (std::size_t b = 0; b + 1 < masses.size(); ++b) s.add(masses[b]);
  masses.back() = 1.0 - s.value();
  ConeMixture P = ConeMixture::create(std::move(ballc), std::move(masses), rho, M);
  P.family = std::make_shared<const AssouadFamily>(*this);
  P.sigma = sigma;
  return P;
}

AssouadFamily build_assouad(std::size_t k, std::size_t d, double M, double delta) {
  if (k < 3 || k % 3 != 0) throw InputError("Assouad family needs k >= 3 divisible by 3");
  if (d == 0) throw InputError("Assouad family needs d >= 1");
  if (!(M > 0.0)) throw InputError("Assouad family needs M > 0");
  if (!(delta > 0.0) || delta > 1.0 / 3.0) throw InputError("Assouad family needs 0 < delta <= 1/3");
  AssouadFamily fam;
  fam.k = k;
  fam.d = d;
  fam.m = 2 * k / 3;
  fam.M = M;
  fam.delta = delta;
  fam.Delta = 5.0 * M / (32.0 * std::pow(static_cast<double>(fam.m), 1.0 / static_cast<double>(d)));
  fam.rho = fam.Delta / 16.0;

  // Lexicographic walk of the grid 6 Delta Z^d; a node is admissible when both
  // balls around it and around it + w fit in B(0, M).
  const double step = 6.0 * fam.Delta;
  const double inner = M - fam.rho;
  const long L = static_cast<long>(std::floor(inner / step));
  const double nodes = std::pow(2.0 * static_cast<double>(L) + 1.0, static_cast<double>(d));
  if (nodes > 5e7) throw CapacityError("Assouad grid too large to enumerate for this (k, d)");
  fam.centers = PointSet(d);
  fam.shifts = PointSet(d);
  std::vector<long> idx(d, -L);
  auto advance = [L](std::vector<long>& v) {
    for (std::size_t a = v.size(); a-- > 0;) {
      if (v[a] < L) {
        ++v[a];
        return true;
      }
      v[a] = -L;
    }
    return false;
  };
  Point z(d), zw(d), w(d, 0.0);
  w[0] = fam.Delta;
  for (;;) {
    for (std::size_t a = 0; a < d; ++a) {
      z[a] = step * static_cast<double>(idx[a]);
      zw[a] = z[a] + w[a];
    }
    if (norm(z) <= inner && norm(zw) <= inner) {
      fam.centers.push_back(z);
      fam.shifts.push_back(w);
      if (fam.centers.size() == fam.m) break;
    }
    if (!advance(idx)) break;
  }
  if (fam.centers.size() < fam.m) {
    throw CapacityError("Assouad grid cannot host m = " + std::to_string(fam.m) + " centers in B(0, M - rho)");
  }

  // Disjointness and containment of the 2m balls.
  if (!(fam.Delta - 2.0 * fam.rho > 0.0)) throw NumericError("Assouad balls U_i and U'_i overlap");
  for (std::size_t i = 0; i < fam.m; ++i) {
    for (std::size_t j = i + 1; j < fam.m; ++j) {
      const double gap = std::sqrt(squared_distance(fam.centers[i], fam.centers[j])) - fam.Delta - 2.0 * fam.rho;
      if (gap < 6.0 * fam.Delta - 2.0 * fam.rho - fam.Delta - 1e-12 || !(gap > 0.0)) {
        throw NumericError("Assouad balls from different pairs are too close", {{"gap", gap}});
      }
    }
  }
  return fam;
}

double assouad_delta_for_n(std::size_t m, std::size_t n) {
  if (n == 0) throw InputError("assouad_delta_for_n needs n >= 1");
  return std::min(std::sqrt(static_cast<double>(m)) / (2.0 * std::sqrt(static_cast<double>(n))), 1.0 / 3.0);
}

std::vector<int> sigma_of_tau(const std::vector<int>& tau) {
  std::vector<int> sigma(2 * tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] != 1 && tau[i] != -1) throw InputError("tau entries must be +1 or -1");
    sigma[i] = tau[i];
    sigma[i + tau.size()] = -tau[i];
  }
  return sigma;
}

bool is_balanced(const std::vector<int>& sigma) { return std::accumulate(sigma.begin(), sigma.end(), 0) == 0; }

int sign_distance(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw InputError("sign vectors differ in length");
  int r = 0;
  for (std::size_t i = 0; i < a.size(); ++i) r += std::abs(a[i] - b[i]);
  return r;
}

std::vector<std::vector<int>> all_sign_vectors(std::size_t length) {
  if (length > 20) throw CapacityError("sign-vector enumeration limited to length 20");
  std::vector<std::vector<int>> out;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << length); ++bits) {
    std::vector<int> s(length);
    for (std::size_t i = 0; i < length; ++i) s[i] = (bits >> i) & 1U ? 1 : -1;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::vector<int>> balanced_sign_vectors(std::size_t m) {
  std::vector<std::vector<int>> out;
  for (auto& s : all_sign_vectors(m)) {
    if (is_balanced(s)) out.push_back(std::move(s));
  }
  return out;
}

std::uint64_t tau_id(const std::vector<int>& tau) {
  std::uint64_t id = 0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] == 1) id |= std::uint64_t{1} << i;
  }
  return id;
}

double assouad_density(const AssouadFamily& fam, const std::vector<int>& sigma, std::span<const double> x) {
  require_same_dim(fam.d, x.size(), "assouad_density");
  if (sigma.size() != fam.m) throw InputError("sign vector length must equal m");
  const double z = cone_normalizer(fam.d, fam.rho);
  Point shifted(fam.d);
  double f = 0.0;
  for (std::size_t i = 0; i < fam.m; ++i) {
    for (std::size_t a = 0; a < fam.d; ++a) shifted[a] = fam.centers[i][a] + fam.shifts[i][a];
    const double mass = fam.ball_mass(i, sigma);
    for (std::span<const double> c : {fam.centers[i], std::span<const double>(shifted)}) {
      const double r = std::sqrt(squared_distance(x, c));
      if (r <= fam.rho) f += mass * (fam.rho - r) / z;
    }
  }
  return f;
}

Codebook q_sigma(const AssouadFamily& fam, const std::vector<int>& sigma) {
  if (sigma.size() != fam.m) throw InputError("sign vector length must equal m");
  if (!is_balanced(sigma)) throw InputError("q_sigma needs a balanced sign vector");
  PointSet pts(fam.d);
  pts.reserve(fam.k);
  Point p(fam.d);
  for (std::size_t i = 0; i < fam.m; ++i) {
    if (sigma[i] == 1) {
      pts.push_back(fam.centers[i]);
      for (std::size_t a = 0; a < fam.d; ++a) p[a] = fam.centers[i][a] + fam.shifts[i][a];
      pts.push_back(p);
    } else if (sigma[i] == -1) {
      for (std::size_t a = 0; a < fam.d; ++a) p[a] = fam.centers[i][a] + 0.5 * fam.shifts[i][a];
      pts.push_back(p);
    } else {
      throw InputError("sign vector entries must be +1 or -1");
    }
  }
  return Codebook(std::move(pts));
}

// --- variant dispatch ----------------------------------------------------------

std::size_t dim(const SourceDistribution& P) {
  return std::visit([](const auto& p) { return p.dim(); }, P);
}

double support_radius(const SourceDistribution& P) {
  return std::visit([](const auto& p) { return p.radius; }, P);
}

std::string kind_name(const SourceDistribution& P) {
  struct Visitor {
    std::string operator()(const FiniteSupportDist&) const { return "finite"; }
    std::string operator()(const TruncatedGaussianMixture&) const { return "mixture"; }
    std::string operator()(const ConeMixture& c) const { return c.family ? "assouad" : "cone-mixture"; }
  };
  return std::visit(Visitor{}, P);
}

namespace {

void sample_into(const FiniteSupportDist& P, std::size_t n, Stream& s, PointSet& out) {
  const auto cum = cumulative_of(P.weights);
  for (std::size_t i = 0; i < n; ++i) out.push_back(P.atoms[draw_index(cum, s.uniform())]);
}

// Acceptance rate of proposing uniformly in B(0, M) and accepting with
// probability phi(x) / sup_B phi. Beats plain rejection when sigma >> M.
double ball_proposal_acceptance(const TruncatedGaussianMixture& P, std::size_t c) {
  const double dd = static_cast<double>(P.dim());
  const double s2 = P.sigma * P.sigma;
  const double gap = std::max(0.0, norm(P.means[c]) - P.radius);
  const double log_vol = 0.5 * dd * std::log(std::numbers::pi) - std::lgamma(0.5 * dd + 1.0) + dd * std::log(P.radius);
  const double log_peak = -gap * gap / (2.0 * s2) - 0.5 * dd * std::log(2.0 * std::numbers::pi * s2);
  return P.normalizers[c] * std::exp(-log_vol - log_peak);
}

void sample_into(const TruncatedGaussianMixture& P, std::size_t n, Stream& s, PointSet& out) {
  const auto cum = cumulative_of(P.weights);
  const std::size_t d = P.dim();
  const double s2 = P.sigma * P.sigma;
  std::vector<bool> via_ball(P.means.size());
  std::vector<double> gap(P.means.size());
  for (std::size_t c = 0; c < P.means.size(); ++c) {
    via_ball[c] = ball_proposal_acceptance(P, c) > P.normalizers[c];
    gap[c] = std::max(0.0, norm(P.means[c]) - P.radius);
  }
  Point x(d), dir(d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = draw_index(cum, s.uniform());
    std::size_t tries = 0;
    for (;;) {
      if (via_ball[c]) {
        random_direction(s, dir);
        const double r = P.radius * std::pow(s.uniform(), 1.0 / static_cast<double>(d));
        for (std::size_t a = 0; a < d; ++a) x[a] = r * dir[a];
        const double log_ratio = (gap[c] * gap[c] - squared_distance(x, P.means[c])) / (2.0 * s2);
        if (s.uniform() < std::exp(log_ratio)) break;
      } else {
        for (std::size_t a = 0; a < d; ++a) x[a] = P.means[c][a] + P.sigma * s.normal();
        if (norm(x) <= P.radius) break;
      }
      if (++tries > 100000000) {
        throw NumericError("mixture rejection sampler stalled", {{"component", static_cast<double>(c)}});
      }
    }
    out.push_back(x);
  }
}

void sample_into(const ConeMixture& P, std::size_t n, Stream& s, PointSet& out) {
  const auto cum = cumulative_of(P.masses);
  const std::size_t d = P.dim();
  Point dir(d), x(d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = draw_index(cum, s.uniform());
    const double r = P.rho * P.sampler->fraction(s.uniform());
    random_direction(s, dir);
    for (std::size_t a = 0; a < d; ++a) x[a] = P.centers[b][a] + r * dir[a];
    out.push_back(x);
  }
}

}  // namespace

PointSet sample(const SourceDistribution& P, std::size_t n, Stream& stream) {
  if (n == 0) throw InputError("sample size must be at least 1");
  PointSet out(dim(P));
  out.reserve(n);
  std::visit([&](const auto& p) { sample_into(p, n, stream, out); }, P);
  return out;
}

PointSet sample_parallel(const SourceDistribution& P, std::size_t n, std::uint64_t seed, unsigned threads) {
  if (n == 0) throw InputError("sample size must be at least 1");
  const std::size_t chunks = chunk_count(n);
  std::vector<PointSet> parts(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t lo = c * kMonteCarloChunk;
    const std::size_t len = std::min(kMonteCarloChunk, n - lo);
    Stream s(derive_seed(seed, {stream_tag::kChunk, c}));
    parts[c] = sample(P, len, s);
  });
  PointSet out(dim(P));
  out.reserve(n);
  for (const auto& part : parts) {
    for (std::size_t i = 0; i < part.size(); ++i) out.push_back(part[i]);
  }
  return out;
}

}  // namespace vqlab
