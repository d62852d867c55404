#include "vqlab/erm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "vqlab/error.hpp"
#include "vqlab/numeric.hpp"
#include "vqlab/risk.hpp"
#include "vqlab/rng.hpp"

namespace vqlab {

int default_restarts(std::size_t k, std::size_t n) {
  const double r = 10.0 * static_cast<double>(k) * std::log(static_cast<double>(std::max<std::size_t>(n, 2)));
  return std::max(1, static_cast<int>(std::ceil(r)));
}

namespace {

struct Run {
  PointSet centers;
  double risk = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> trace;
};

PointSet initial_centers(const PointSet& pts, std::size_t k, InitRule rule, Stream& s) {
  const std::size_t n = pts.size();
  PointSet c(pts.dim());
  c.reserve(k);
  auto is_new = [&](std::span<const double> p) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (squared_distance(c[j], p) == 0.0) return false;
    }
    return true;
  };
  if (rule == InitRule::RandomAtoms) {
    // Partial Fisher-Yates over indices, skipping positions already chosen.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < n && c.size() < k; ++i) {
      const std::size_t j = i + s.index(n - i);
      std::swap(order[i], order[j]);
      if (is_new(pts[order[i]])) c.push_back(pts[order[i]]);
    }
  } else {
    c.push_back(pts[s.index(n)]);
    std::vector<double> dmin(n);
    for (std::size_t i = 0; i < n; ++i) dmin[i] = squared_distance(pts[i], c[0]);
    while (c.size() < k) {
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (dmin[i] > dmin[far]) far = i;
      }
      if (dmin[far] == 0.0) break;
      c.push_back(pts[far]);
      for (std::size_t i = 0; i < n; ++i) dmin[i] = std::min(dmin[i], squared_distance(pts[i], c[c.size() - 1]));
    }
  }
  // Fewer distinct positions than k: duplicate; respawning splits them later.
  while (c.size() < k) c.push_back(pts[s.index(n)]);
  return c;
}

Run run_once(const PointSet& pts, std::span<const double> w, double total_w, std::size_t k, const LloydConfig& cfg,
             Stream& s) {
  const std::size_t n = pts.size(), d = pts.dim();
  Run run;
  run.centers = initial_centers(pts, k, cfg.init, s);
  std::vector<std::size_t> labels(n, k), prev(n, k);
  std::vector<double> gamma(n);
  std::vector<double> mass(k);
  PointSet sums(k, d);
  double prev_risk = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_iters; ++it) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = squared_distance(pts[i], run.centers[0]);
      for (std::size_t j = 1; j < k; ++j) {
        const double dj = squared_distance(pts[i], run.centers[j]);
        if (dj < bd) {
          bd = dj;
          best = j;
        }
      }
      labels[i] = best;
      gamma[i] = bd;
      acc.add(w[i] * bd);
    }
    const double risk = acc.value() / total_w;
    run.trace.push_back(risk);
    run.risk = risk;
    run.iterations = it + 1;
    if (it > 0 && labels == prev) break;
    if (risk == 0.0) break;
    if (std::isfinite(prev_risk) && prev_risk - risk <= cfg.rel_tol * prev_risk) break;
    if (it + 1 == cfg.max_iters) break;
    prev = labels;
    prev_risk = risk;

    // Centroid step.
    std::fill(mass.begin(), mass.end(), 0.0);
    std::fill(sums[0].data(), sums[0].data() + k * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      mass[labels[i]] += w[i];
      for (std::size_t t = 0; t < d; ++t) sums[labels[i]][t] += w[i] * pts[i][t];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (mass[j] > 0.0) {
        for (std::size_t t = 0; t < d; ++t) run.centers[j][t] = sums[j][t] / mass[j];
        continue;
      }
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (gamma[i] > gamma[far]) far = i;
      }
      std::copy(pts[far].begin(), pts[far].end(), run.centers[j].begin());
      gamma[far] = 0.0;
    }
  }
  return run;
}

}  // namespace

ErmResult lloyd_weighted(const PointSet& points, std::span<const double> weights, std::size_t k,
                         const LloydConfig& cfg, std::uint64_t seed) {
  if (k < 2) throw InputError("lloyd needs k >= 2");
  if (points.size() < k) throw InputError("lloyd needs at least k sample points");
  if (weights.size() != points.size()) throw InputError("lloyd: weight count does not match point count");
  if (cfg.max_iters < 1 || cfg.rel_tol < 0.0) throw InputError("lloyd: invalid configuration");
  CompensatedSum tw;
  for (double v : weights) tw.add(v);
  const double total_w = tw.value();
  const int restarts = cfg.restarts > 0 ? cfg.restarts : default_restarts(k, points.size());
  std::vector<Run> runs(static_cast<std::size_t>(restarts));
  parallel_for(runs.size(), cfg.threads, [&](std::size_t r) {
    Stream s(derive_seed(seed, {stream_tag::kRestart, r}));
    runs[r] = run_once(points, weights, total_w, k, cfg, s);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].risk < runs[best].risk) best = r;
  }
  return ErmResult{Codebook(std::move(runs[best].centers)), runs[best].risk, runs[best].iterations, restarts, false,
                   std::move(runs[best].trace)};
}

ErmResult lloyd(const PointSet& sample, std::size_t k, const LloydConfig& cfg, std::uint64_t seed) {
  if (sample.size() < k) throw InputError("lloyd needs n >= k");
  const std::vector<double> w(sample.size(), 1.0);
  return lloyd_weighted(sample, w, k, cfg, seed);
}

bool exact_guard(std::size_t distinct, std::size_t k) {
  return (distinct <= 14 && k <= 3) || (distinct <= 9 && k <= 4);
}

Collapsed collapse_duplicates(const PointSet& sample) {
  Collapsed out{PointSet(sample.dim()), {}};
  std::map<std::vector<double>, std::size_t> seen;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    std::vector<double> key(sample[i].begin(), sample[i].end());
    auto [it, inserted] = seen.emplace(std::move(key), out.points.size());
    if (inserted) {
      out.points.push_back(sample[i]);
      out.counts.push_back(1.0);
    } else {
      out.counts[it->second] += 1.0;
    }
  }
  return out;
}

namespace {

// Depth-first enumeration of restricted-growth label strings with
// branch-and-bound on the within-group sum of squares.
class PartitionSearch {
 public:
  PartitionSearch(const PointSet& pts, std::span<const double> w, std::size_t k)
      : pts_(pts), w_(w), k_(k), d_(pts.dim()), labels_(pts.size()), best_labels_(pts.size()) {}

  std::vector<std::size_t> run() {
    std::vector<double> mass(k_, 0.0);
    std::vector<double> mean(k_ * d_, 0.0);
    visit(0, 0, 0.0, mass, mean);
    return best_labels_;
  }

 private:
  void visit(std::size_t i, std::size_t used, double cost, std::vector<double>& mass, std::vector<double>& mean) {
    if (cost >= best_) return;
    const std::size_t n = pts_.size();
    if (n - i < k_ - used) return;
    if (i == n) {
      best_ = cost;
      best_labels_ = labels_;
      return;
    }
    const std::size_t limit = std::min(used + 1, k_);
    const auto x = pts_[i];
    for (std::size_t g = 0; g < limit; ++g) {
      const double W = mass[g];
      double add = 0.0;
      if (W > 0.0) {
        double dist = 0.0;
        for (std::size_t t = 0; t < d_; ++t) {
          const double diff = x[t] - mean[g * d_ + t];
          dist += diff * diff;
        }
        add = W * w_[i] / (W + w_[i]) * dist;
      }
      std::vector<double> saved(mean.begin() + static_cast<long>(g * d_), mean.begin() + static_cast<long>((g + 1) * d_));
      for (std::size_t t = 0; t < d_; ++t) mean[g * d_ + t] = (W * mean[g * d_ + t] + w_[i] * x[t]) / (W + w_[i]);
      mass[g] = W + w_[i];
      labels_[i] = g;
      visit(i + 1, g == used ? used + 1 : used, cost + add, mass, mean);
      mass[g] = W;
      std::copy(saved.begin(), saved.end(), mean.begin() + static_cast<long>(g * d_));
    }
  }

  const PointSet& pts_;
  std::span<const double> w_;
  std::size_t k_, d_;
  std::vector<std::size_t> labels_, best_labels_;
  double best_ = std::numeric_limits<double>::infinity();
};

}  // namespace

ErmResult exact_erm_weighted(const PointSet& points, std::span<const double> weights, std::size_t k) {
  if (k < 2) throw InputError("exact_erm needs k >= 2");
  if (points.empty()) throw InputError("exact_erm needs a nonempty sample");
  if (weights.size() != points.size()) throw InputError("exact_erm: weight count does not match point count");
  const Collapsed distinct = [&] {
    // Merge duplicates while carrying the given weights.
    Collapsed c{PointSet(points.dim()), {}};
    std::map<std::vector<double>, std::size_t> seen;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::vector<double> key(points[i].begin(), points[i].end());
      auto [it, inserted] = seen.emplace(std::move(key), c.points.size());
      if (inserted) {
        c.points.push_back(points[i]);
        c.counts.push_back(weights[i]);
      } else {
        c.counts[it->second] += weights[i];
      }
    }
    return c;
  }();
  const std::size_t u = distinct.points.size();
  if (!exact_guard(u, k)) {
    throw CapacityError("exact_erm guard exceeded: " + std::to_string(u) + " distinct points with k = " +
                        std::to_string(k));
  }
  const std::size_t d = points.dim();
  PointSet centers(d);
  if (u <= k) {
    for (std::size_t i = 0; i < u; ++i) centers.push_back(distinct.points[i]);
    while (centers.size() < k) centers.push_back(distinct.points[0]);
  } else {
    PartitionSearch search(distinct.points, distinct.counts, k);
    const auto labels = search.run();
    std::vector<double> mass(k, 0.0);
    PointSet sums(k, d);
    for (std::size_t i = 0; i < u; ++i) {
      mass[labels[i]] += distinct.counts[i];
      for (std::size_t t = 0; t < d; ++t) sums[labels[i]][t] += distinct.counts[i] * distinct.points[i][t];
    }
    for (std::size_t g = 0; g < k; ++g) {
      for (std::size_t t = 0; t < d; ++t) sums[g][t] /= mass[g];
    }
    centers = std::move(sums);
  }
  Codebook cb(std::move(centers));
  CompensatedSum risk, tw;
  for (std::size_t i = 0; i < points.size(); ++i) {
    risk.add(weights[i] * contrast(cb, points[i]));
    tw.add(weights[i]);
  }
  return ErmResult{std::move(cb), risk.value() / tw.value(), 1, 1, true, {}};
}

ErmResult exact_erm(const PointSet& sample, std::size_t k) {
  const std::vector<double> w(sample.size(), 1.0);
  return exact_erm_weighted(sample, w, k);
}

ErmResult solve_erm(const PointSet& sample, std::size_t k, const LloydConfig& cfg, std::uint64_t seed) {
  if (sample.size() < k) throw InputError("ERM needs n >= k");
  const Collapsed c = collapse_duplicates(sample);
  if (exact_guard(c.points.size(), k)) return exact_erm(sample, k);
  return lloyd(sample, k, cfg, seed);
}

ReferenceOptimum reference_optimum(const SourceDistribution& P, std::size_t k, const ReferenceEffort& effort) {
  LloydConfig cfg;
  cfg.restarts = std::max(1, effort.runs);
  cfg.threads = effort.threads;
  if (const auto* f = std::get_if<FiniteSupportDist>(&P)) {
    if (exact_guard(f->atoms.size(), k)) {
      auto r = exact_erm_weighted(f->atoms, f->weights, k);
      return {std::move(r.codebook), r.empirical_risk, 0.0, true, "exact-enumeration"};
    }
    auto r = lloyd_weighted(f->atoms, f->weights, k, cfg, derive_seed(effort.seed, {stream_tag::kReference}));
    return {std::move(r.codebook), r.empirical_risk, 0.0, false, "lloyd-on-atoms"};
  }

  Budget budget{effort.risk_draws, derive_seed(effort.seed, {stream_tag::kEvaluation}), effort.threads};
  const auto* cone = std::get_if<ConeMixture>(&P);
  if (cone && cone->family && cone->family->k == k) {
    // Every balanced Q_sigma' is a candidate; their risks are exact.
    std::optional<ReferenceOptimum> best;
    for (const auto& s : balanced_sign_vectors(cone->family->m)) {
      Codebook q = q_sigma(*cone->family, s);
      const auto r = true_risk(q, P, budget);
      if (!best || r.value < best->risk) {
        best = ReferenceOptimum{std::move(q), r.value, r.std_error, r.exact, "assouad-q-sigma"};
      }
    }
    return *best;
  }

  const PointSet xs = sample_parallel(P, effort.sample_size, derive_seed(effort.seed, {stream_tag::kReference}),
                                      effort.threads);
  auto r = lloyd(xs, k, cfg, derive_seed(effort.seed, {stream_tag::kErm}));
  const auto risk = true_risk(r.codebook, P, budget);
  return {std::move(r.codebook), risk.value, risk.std_error, false, "lloyd-on-sample"};
}

}  // namespace vqlab
