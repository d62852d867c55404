#include "vqlab/risk.hpp"

#include <cmath>
#include <functional>
#include <optional>

#include "vqlab/error.hpp"
#include "vqlab/rng.hpp"

namespace vqlab {

namespace {

// Code point whose open cell contains the whole ball B(z, rho), if any.
std::optional<std::size_t> whole_cell(const Codebook& c, std::span<const double> z, double rho) {
  const Nearest near = nearest_index(c, z);
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (j == near.index) continue;
    const double sep = std::sqrt(squared_distance(c[near.index], c[j]));
    if (sep == 0.0) continue;
    const double dist = (squared_distance(z, c[j]) - near.squared_distance) / (2.0 * sep);
    if (!(dist > rho)) return std::nullopt;
  }
  return near.index;
}

void draw_in_ball(const ConeMixture& P, std::size_t b, Stream& s, std::span<double> x) {
  const std::size_t d = P.dim();
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      x[a] = s.normal();
      n2 += x[a] * x[a];
    }
  } while (n2 < 1e-300);
  const double r = P.rho * P.sampler->fraction(s.uniform()) / std::sqrt(n2);
  for (std::size_t a = 0; a < d; ++a) x[a] = P.centers[b][a] + r * x[a];
}

// Chunked Monte Carlo mean of f over `draws` points produced by `draw`.
MeanEstimate chunked_mean(std::size_t draws, std::uint64_t seed, unsigned threads,
                          const std::function<PointSet(Stream&, std::size_t)>& draw,
                          const std::function<double(std::span<const double>)>& f) {
  if (draws < 2) throw InputError("Monte Carlo budget must be at least 2 draws");
  const std::size_t chunks = chunk_count(draws);
  std::vector<MomentAccumulator> acc(chunks);
  parallel_for(chunks, threads, [&](std::size_t ch) {
    Stream s(derive_seed(seed, {stream_tag::kChunk, ch}));
    const std::size_t len = std::min(kMonteCarloChunk, draws - ch * kMonteCarloChunk);
    const PointSet xs = draw(s, len);
    for (std::size_t i = 0; i < xs.size(); ++i) acc[ch].add(f(xs[i]));
  });
  MomentAccumulator total;
  for (const auto& a : acc) total.merge(a);
  return total.estimate();
}

RiskEstimate finite_risk(const Codebook& c, const FiniteSupportDist& P) {
  CompensatedSum s;
  for (std::size_t i = 0; i < P.atoms.size(); ++i) s.add(P.weights[i] * contrast(c, P.atoms[i]));
  return {s.value(), 0.0, true};
}

// Sum over balls of mass * E_ball[g]; exact where `exact_ball` answers,
// stratified Monte Carlo in the remaining balls.
RiskEstimate cone_expectation(const ConeMixture& P, const Budget& budget,
                              const std::function<std::optional<double>(std::size_t)>& exact_ball,
                              const std::function<double(std::span<const double>)>& g) {
  CompensatedSum value;
  double var = 0.0;
  bool exact = true;
  for (std::size_t b = 0; b < P.centers.size(); ++b) {
    if (auto e = exact_ball(b)) {
      value.add(P.masses[b] * *e);
      continue;
    }
    exact = false;
    const auto est = chunked_mean(
        budget.draws, derive_seed(budget.seed, {stream_tag::kBall, b}), budget.threads,
        [&](Stream& s, std::size_t len) {
          PointSet xs(len, P.dim());
          for (std::size_t i = 0; i < len; ++i) draw_in_ball(P, b, s, xs[i]);
          return xs;
        },
        g);
    value.add(P.masses[b] * est.mean);
    var += P.masses[b] * P.masses[b] * est.std_error * est.std_error;
  }
  return {value.value(), std::sqrt(var), exact};
}

std::optional<double> ball_risk(const Codebook& c, const ConeMixture& P, std::size_t b) {
  auto cell = whole_cell(c, P.centers[b], P.rho);
  if (!cell) return std::nullopt;
  return P.ball_second_moment + squared_distance(P.centers[b], c[*cell]);
}

}  // namespace

RiskEstimate true_risk(const Codebook& c, const SourceDistribution& P, const Budget& budget) {
  require_same_dim(c.dim(), dim(P), "true_risk");
  if (const auto* f = std::get_if<FiniteSupportDist>(&P)) return finite_risk(c, *f);
  if (const auto* cone = std::get_if<ConeMixture>(&P)) {
    return cone_expectation(
        *cone, budget, [&](std::size_t b) { return ball_risk(c, *cone, b); },
        [&](std::span<const double> x) { return contrast(c, x); });
  }
  const auto est = chunked_mean(
      budget.draws, budget.seed, budget.threads, [&](Stream& s, std::size_t len) { return sample(P, len, s); },
      [&](std::span<const double> x) { return contrast(c, x); });
  return {est.mean, est.std_error, false};
}

double true_risk_by_cells(const Codebook& c, const FiniteSupportDist& P) {
  require_same_dim(c.dim(), P.dim(), "true_risk_by_cells");
  const std::size_t k = c.size(), d = c.dim();
  const Assignment a = assign(c, P.atoms);
  std::vector<double> mass(k, 0.0);
  PointSet mean(k, d);
  for (std::size_t i = 0; i < P.atoms.size(); ++i) {
    const std::size_t l = a.labels[i];
    mass[l] += P.weights[i];
    for (std::size_t t = 0; t < d; ++t) mean[l][t] += P.weights[i] * P.atoms[i][t];
  }
  CompensatedSum total;
  for (std::size_t l = 0; l < k; ++l) {
    if (mass[l] == 0.0) continue;
    for (std::size_t t = 0; t < d; ++t) mean[l][t] /= mass[l];
    total.add(mass[l] * squared_distance(c[l], mean[l]));
  }
  for (std::size_t i = 0; i < P.atoms.size(); ++i) {
    total.add(P.weights[i] * squared_distance(P.atoms[i], mean[a.labels[i]]));
  }
  return total.value();
}

RiskEstimate excess_loss(const Codebook& c, const Codebook& c_star, const SourceDistribution& P,
                         const Budget& budget) {
  require_same_dim(c.dim(), c_star.dim(), "excess_loss");
  require_same_dim(c.dim(), dim(P), "excess_loss");
  auto diff = [&](std::span<const double> x) { return contrast(c, x) - contrast(c_star, x); };
  if (const auto* f = std::get_if<FiniteSupportDist>(&P)) {
    CompensatedSum s;
    for (std::size_t i = 0; i < f->atoms.size(); ++i) s.add(f->weights[i] * diff(f->atoms[i]));
    return {s.value(), 0.0, true};
  }
  if (const auto* cone = std::get_if<ConeMixture>(&P)) {
    return cone_expectation(
        *cone, budget,
        [&](std::size_t b) -> std::optional<double> {
          auto a = ball_risk(c, *cone, b);
          auto s = ball_risk(c_star, *cone, b);
          if (!a || !s) return std::nullopt;
          return *a - *s;
        },
        diff);
  }
  const auto est = chunked_mean(
      budget.draws, budget.seed, budget.threads, [&](Stream& s, std::size_t len) { return sample(P, len, s); },
      diff);
  return {est.mean, est.std_error, false};
}

CellStats cell_stats(const Codebook& c, const SourceDistribution& P, const Budget& budget) {
  require_same_dim(c.dim(), dim(P), "cell_stats");
  const std::size_t k = c.size(), d = c.dim();
  CellStats out;
  out.masses.assign(k, 0.0);
  out.mass_std_errors.assign(k, 0.0);
  out.centroids = PointSet(k, d);
  out.defined.assign(k, false);
  std::vector<CompensatedSum> mass(k);
  std::vector<std::vector<CompensatedSum>> moment(k, std::vector<CompensatedSum>(d));
  std::size_t count = 0;
  if (const auto* f = std::get_if<FiniteSupportDist>(&P)) {
    for (std::size_t i = 0; i < f->atoms.size(); ++i) {
      const std::size_t l = nearest_index(c, f->atoms[i]).index;
      mass[l].add(f->weights[i]);
      for (std::size_t t = 0; t < d; ++t) moment[l][t].add(f->weights[i] * f->atoms[i][t]);
    }
    out.exact = true;
  } else {
    if (budget.draws < 2) throw InputError("Monte Carlo budget must be at least 2 draws");
    const std::size_t chunks = chunk_count(budget.draws);
    std::vector<std::vector<double>> part_mass(chunks, std::vector<double>(k, 0.0));
    std::vector<std::vector<double>> part_moment(chunks, std::vector<double>(k * d, 0.0));
    parallel_for(chunks, budget.threads, [&](std::size_t ch) {
      Stream s(derive_seed(budget.seed, {stream_tag::kChunk, ch}));
      const std::size_t len = std::min(kMonteCarloChunk, budget.draws - ch * kMonteCarloChunk);
      const PointSet xs = sample(P, len, s);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t l = nearest_index(c, xs[i]).index;
        part_mass[ch][l] += 1.0;
        for (std::size_t t = 0; t < d; ++t) part_moment[ch][l * d + t] += xs[i][t];
      }
    });
    for (std::size_t ch = 0; ch < chunks; ++ch) {
      for (std::size_t l = 0; l < k; ++l) {
        mass[l].add(part_mass[ch][l]);
        for (std::size_t t = 0; t < d; ++t) moment[l][t].add(part_moment[ch][l * d + t]);
      }
    }
    count = budget.draws;
  }
  for (std::size_t l = 0; l < k; ++l) {
    const double m = mass[l].value();
    if (m > 0.0) {
      out.defined[l] = true;
      for (std::size_t t = 0; t < d; ++t) out.centroids[l][t] = moment[l][t].value() / m;
    }
    if (count > 0) {
      const double n = static_cast<double>(count);
      out.masses[l] = m / n;
      out.mass_std_errors[l] = std::sqrt(out.masses[l] * (1.0 - out.masses[l]) / n);
    } else {
      out.masses[l] = m;
    }
  }
  return out;
}

double contrast_difference_variance(const Codebook& c, const Codebook& c_prime, const FiniteSupportDist& P) {
  CompensatedSum m1;
  for (std::size_t i = 0; i < P.atoms.size(); ++i) {
    m1.add(P.weights[i] * (contrast(c, P.atoms[i]) - contrast(c_prime, P.atoms[i])));
  }
  const double mean = m1.value();
  CompensatedSum v;
  for (std::size_t i = 0; i < P.atoms.size(); ++i) {
    const double dev = contrast(c, P.atoms[i]) - contrast(c_prime, P.atoms[i]) - mean;
    v.add(P.weights[i] * dev * dev);
  }
  return v.value();
}

}  // namespace vqlab
