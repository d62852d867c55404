#include "vqlab/margin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vqlab/erm.hpp"
#include "vqlab/error.hpp"
#include "vqlab/numeric.hpp"
#include "vqlab/rng.hpp"

namespace vqlab {

std::vector<double> make_t_grid(std::size_t count, double t_max) {
  if (count == 0 || !(t_max > 0.0)) throw InputError("t grid needs count >= 1 and t_max > 0");
  std::vector<double> t(count + 1);
  for (std::size_t j = 0; j <= count; ++j) t[j] = t_max * static_cast<double>(j) / static_cast<double>(count);
  t[count] = t_max;
  return t;
}

PCurve p_curve(const SourceDistribution& P, const std::vector<Codebook>& codebooks, const std::vector<double>& t_grid,
               const Budget& budget) {
  if (codebooks.empty()) throw InputError("p_curve needs at least one codebook");
  for (std::size_t j = 1; j < t_grid.size(); ++j) {
    if (!(t_grid[j] > t_grid[j - 1])) throw InputError("t grid must be strictly increasing");
  }
  PCurve out;
  out.t = t_grid;
  out.estimate.assign(t_grid.size(), 0.0);
  out.std_error.assign(t_grid.size(), 0.0);

  PointSet xs;
  std::vector<double> w;
  if (const auto* f = std::get_if<FiniteSupportDist>(&P)) {
    xs = f->atoms;
    w = f->weights;
    out.exact = true;
    out.draws = 0;
  } else {
    xs = sample_parallel(P, budget.draws, budget.seed, budget.threads);
    w.assign(xs.size(), 1.0 / static_cast<double>(xs.size()));
    out.draws = xs.size();
  }
  for (const auto& c : codebooks) {
    require_same_dim(c.dim(), xs.dim(), "p_curve");
    std::vector<std::pair<double, double>> dist(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dist[i] = {boundary_distance(c, xs[i]), w[i]};
    std::sort(dist.begin(), dist.end());
    CompensatedSum acc;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
      while (pos < dist.size() && dist[pos].first <= t_grid[j]) acc.add(dist[pos++].second);
      out.estimate[j] = std::max(out.estimate[j], std::min(1.0, acc.value()));
    }
  }
  if (!out.exact) {
    const double N = static_cast<double>(out.draws);
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
      const double p = out.estimate[j];
      out.std_error[j] = std::sqrt(p * (1.0 - p) / N);
    }
  }
  return out;
}

namespace {

void check_margin_inputs(double B, double p_min, double M) {
  if (!(B > 0.0) || !(p_min > 0.0)) {
    throw DegenerateCodebookError("margin check needs B > 0 and p_min > 0");
  }
  if (!(M > 0.0)) throw InputError("margin check needs M > 0");
}

}  // namespace

MarginReport margin_check(const MarginInputs& in) {
  check_margin_inputs(in.B, in.p_min, in.M);
  MarginReport r;
  r.B = in.B;
  r.p_min = in.p_min;
  r.M = in.M;
  r.slope_bound = in.B * in.p_min / (128.0 * in.M * in.M);
  r.curve = in.curve;
  const auto& t = r.curve.t;
  r.verdicts.resize(t.size());
  bool prefix = true;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double tol = r.curve.exact ? 0.0 : kStatTolerance * r.curve.std_error[j];
    r.verdicts[j] = r.curve.estimate[j] <= r.slope_bound * t[j] + tol;
    if (t[j] > 2.0 * in.M) continue;
    if (prefix && r.verdicts[j]) {
      r.r0_hat = t[j];
    } else {
      prefix = false;
    }
  }
  r.satisfied = r.r0_hat > 0.0;
  r.caveats.push_back(
      "boundary distances use the bisector-hyperplane surrogate, which over-counts neighborhood mass; "
      "the check is conservative");
  if (!r.curve.exact) r.caveats.push_back("Monte Carlo curve; verdicts use a 3 standard error tolerance");
  return r;
}

MarginReport margin_check_analytic(const std::function<double(double)>& p, double B, double p_min, double M,
                                   double t_max) {
  check_margin_inputs(B, p_min, M);
  if (!(t_max > 0.0)) throw InputError("analytic margin check needs t_max > 0");
  MarginReport r;
  r.B = B;
  r.p_min = p_min;
  r.M = M;
  r.slope_bound = B * p_min / (128.0 * M * M);
  auto holds = [&](double t) { return p(t) <= r.slope_bound * t; };

  // Geometric scan from t_max * 1e-12 upward for the first failure.
  constexpr int kScan = 4000;
  const double lo_t = t_max * 1e-12;
  double last_ok = 0.0;
  std::optional<double> first_bad;
  for (int j = 0; j <= kScan; ++j) {
    const double t = lo_t * std::pow(t_max / lo_t, static_cast<double>(j) / kScan);
    if (holds(t)) {
      last_ok = t;
    } else {
      first_bad = t;
      break;
    }
  }
  if (!first_bad) {
    r.r0_hat = t_max;
  } else if (last_ok == 0.0) {
    r.r0_hat = 0.0;
  } else {
    double a = last_ok, b = *first_bad;
    for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
      const double mid = 0.5 * (a + b);
      (holds(mid) ? a : b) = mid;
    }
    r.r0_hat = a;
  }
  r.satisfied = r.r0_hat > 0.0;
  r.curve.exact = true;
  r.curve.t = {0.0, r.r0_hat};
  r.curve.estimate = {p(0.0), p(r.r0_hat)};
  r.curve.std_error = {0.0, 0.0};
  r.verdicts = {p(0.0) <= 0.0, holds(r.r0_hat)};
  return r;
}

// --- finite certificate -----------------------------------------------------

namespace {

struct Partition {
  std::vector<std::size_t> labels;
  double cost = 0.0;
};

// All partitions of n items into exactly g nonempty groups, in canonical
// (restricted growth) labeling.
template <typename F>
void for_each_partition(std::size_t n, std::size_t g, F&& visit) {
  std::vector<std::size_t> labels(n, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (n - i < g - used) return;
    if (i == n) {
      if (used == g) visit(labels);
      return;
    }
    const std::size_t limit = std::min(used + 1, g);
    for (std::size_t l = 0; l < limit; ++l) {
      labels[i] = l;
      rec(i + 1, l == used ? used + 1 : used);
    }
  };
  rec(0, 0);
}

PointSet centroids_of(const FiniteSupportDist& P, const std::vector<std::size_t>& labels, std::size_t g) {
  const std::size_t d = P.dim();
  PointSet c(g, d);
  std::vector<double> mass(g, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    mass[labels[i]] += P.weights[i];
    for (std::size_t t = 0; t < d; ++t) c[labels[i]][t] += P.weights[i] * P.atoms[i][t];
  }
  for (std::size_t j = 0; j < g; ++j) {
    for (std::size_t t = 0; t < d; ++t) c[j][t] /= mass[j];
  }
  return c;
}

double partition_cost(const FiniteSupportDist& P, const std::vector<std::size_t>& labels, const PointSet& c) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < labels.size(); ++i) acc.add(P.weights[i] * squared_distance(P.atoms[i], c[labels[i]]));
  return acc.value();
}

double min_partition_cost(const FiniteSupportDist& P, std::size_t g) {
  if (g == 0) throw InputError("partition into zero groups");
  double best = std::numeric_limits<double>::infinity();
  for_each_partition(P.atoms.size(), g, [&](const std::vector<std::size_t>& labels) {
    best = std::min(best, partition_cost(P, labels, centroids_of(P, labels, g)));
  });
  return best;
}

Codebook canonical(PointSet c) {
  auto rows = c.rows();
  std::sort(rows.begin(), rows.end());
  return Codebook::from_rows(rows);
}

}  // namespace

FiniteCertificate certify_finite(const FiniteSupportDist& P, std::size_t k) {
  const std::size_t n = P.atoms.size();
  if (k < 2) throw InputError("certificate needs k >= 2");
  if (n <= k) throw InputError("certificate needs more atoms than code points");
  if (!exact_guard(n, k)) throw CapacityError("too many atoms for exact certification");
  FiniteCertificate cert;
  cert.M = P.radius;

  std::vector<Partition> parts;
  for_each_partition(n, k, [&](const std::vector<std::size_t>& labels) {
    const PointSet c = centroids_of(P, labels, k);
    parts.push_back({labels, partition_cost(P, labels, c)});
  });
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : parts) best = std::min(best, p.cost);
  cert.risk = best;
  cert.risk_k_minus_1 = min_partition_cost(P, k - 1);
  const double tol = 1e-12 * std::max(1.0, best);

  double eps = cert.risk_k_minus_1 - best;
  for (const auto& p : parts) {
    const PointSet cp = centroids_of(P, p.labels, k);
    if (p.cost <= best + tol) {
      Codebook cb = canonical(cp);
      bool seen = false;
      for (const auto& o : cert.optima) seen = seen || set_distance(o, cb) <= 1e-12;
      if (!seen) cert.optima.push_back(std::move(cb));
      continue;
    }
    // A stationary partition: every atom sits in a nearest cell (ties kept).
    bool consistent = true;
    for (std::size_t i = 0; i < n && consistent; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) nearest = std::min(nearest, squared_distance(P.atoms[i], cp[j]));
      consistent = squared_distance(P.atoms[i], cp[p.labels[i]]) <= nearest + kTieTolerance;
    }
    if (consistent) {
      ++cert.stationary_partitions;
      eps = std::min(eps, p.cost - best);
    }
  }
  cert.epsilon = eps;

  cert.B = std::numeric_limits<double>::infinity();
  cert.p_min = std::numeric_limits<double>::infinity();
  for (const auto& o : cert.optima) {
    cert.B = std::min(cert.B, min_pairwise_distance(o));
    for (std::size_t j = 0; j < k; ++j) {
      CompensatedSum mass;
      for (std::size_t i = 0; i < n; ++i) {
        if (squared_distance(P.atoms[i], o[j]) <= contrast(o, P.atoms[i]) + kTieTolerance) mass.add(P.weights[i]);
      }
      cert.p_min = std::min(cert.p_min, mass.value());
    }
  }
  if (!(cert.B > 0.0) || !(cert.p_min > 0.0)) throw DegenerateCodebookError("optimal codebook with B = 0 or p_min = 0");
  cert.slope_bound = cert.B * cert.p_min / (128.0 * cert.M * cert.M);

  // p(t) is a step function; the condition first breaks at a breakpoint.
  std::vector<double> breaks;
  for (const auto& o : cert.optima) {
    for (std::size_t i = 0; i < n; ++i) breaks.push_back(boundary_distance(o, P.atoms[i]));
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const double cap = std::nextafter(2.0 * cert.M, 0.0);
  cert.r0 = cap;
  for (double t : breaks) {
    if (t >= cap) break;
    double p = 0.0;
    for (const auto& o : cert.optima) {
      CompensatedSum mass;
      for (std::size_t i = 0; i < n; ++i) {
        if (boundary_distance(o, P.atoms[i]) <= t) mass.add(P.weights[i]);
      }
      p = std::max(p, mass.value());
    }
    if (p > cert.slope_bound * t) {
      cert.r0 = t > 0.0 ? std::nextafter(t, 0.0) : 0.0;
      break;
    }
  }
  cert.margin_satisfied = cert.r0 > 0.0;
  if (cert.margin_satisfied && cert.epsilon > 0.0) {
    cert.kappa0 = kappa0(cert.epsilon, cert.p_min, cert.B, cert.r0, cert.M, k);
  }
  return cert;
}

// --- epsilon search -----------------------------------------------------------

EpsilonSearchResult epsilon_search(const SourceDistribution& P, std::size_t k, int attempts, const Budget& budget) {
  if (attempts < 10) throw InputError("epsilon_search needs attempts >= 10");
  PointSet xs;
  std::vector<double> w;
  if (const auto* f = std::get_if<FiniteSupportDist>(&P)) {
    xs = f->atoms;
    w = f->weights;
  } else {
    xs = sample_parallel(P, budget.draws, derive_seed(budget.seed, {stream_tag::kSample}), budget.threads);
    w.assign(xs.size(), 1.0);
  }
  LloydConfig cfg;
  cfg.restarts = 1;
  cfg.max_iters = 1000;
  cfg.rel_tol = 0.0;
  std::vector<std::optional<Codebook>> runs(static_cast<std::size_t>(attempts));
  parallel_for(runs.size(), budget.threads, [&](std::size_t a) {
    runs[a] = lloyd_weighted(xs, w, k, cfg, derive_seed(budget.seed, {stream_tag::kAttempt, a})).codebook;
  });

  Budget eval = budget;
  eval.seed = derive_seed(budget.seed, {stream_tag::kEvaluation});
  std::vector<StationaryClass> classes;
  std::vector<double> risks;
  for (auto& c : runs) risks.push_back(true_risk(*c, P, eval).value);
  std::size_t best = 0;
  for (std::size_t a = 1; a < runs.size(); ++a) {
    if (risks[a] < risks[best]) best = a;
  }
  const double B = min_pairwise_distance(*runs[best]);
  // Greedy clustering in attempt order, with the best codebook seeding class 0.
  std::vector<std::size_t> order(runs.size());
  for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
  std::swap(order[0], order[best]);
  for (std::size_t a : order) {
    bool placed = false;
    for (auto& cl : classes) {
      if (set_distance(cl.representative, *runs[a]) < B / 4.0) {
        ++cl.count;
        placed = true;
        break;
      }
    }
    if (!placed) {
      const auto r = true_risk(*runs[a], P, eval);
      classes.push_back({*runs[a], r.value, r.std_error, 1});
    }
  }
  EpsilonSearchResult out;
  out.caveats.push_back("heuristic: only stationary classes reached from the sampled initializations are seen");
  for (std::size_t j = 1; j < classes.size(); ++j) {
    const double gap = classes[j].risk - classes[0].risk;
    if (!out.epsilon_hat || gap < *out.epsilon_hat) out.epsilon_hat = gap;
    const double se = std::hypot(classes[j].risk_std_error, classes[0].risk_std_error);
    if (se > 0.0 && gap <= kStatTolerance * se) {
      out.caveats.push_back("a non-optimal class is within 3 standard errors of the best class");
    }
  }
  if (!out.epsilon_hat) out.caveats.push_back("not-found: every attempt reached the best class");
  out.classes = std::move(classes);
  return out;
}

double kappa0(double epsilon, double p_min, double B, double r0, double M, std::size_t k) {
  if (!(epsilon > 0.0) || !(p_min > 0.0) || !(B > 0.0) || !(r0 > 0.0) || !(M > 0.0) || k == 0) {
    throw InputError("kappa0 needs positive inputs");
  }
  const double kd = static_cast<double>(k);
  return 4.0 * kd * M * M * std::max(1.0 / epsilon, 64.0 * M * M / (p_min * B * B * r0 * r0));
}

FastRateBound theorem31_bound(double kappa0_value, std::size_t k, std::size_t card_mbar, double M, double n,
                              double x, std::optional<double> C0) {
  if (!(n >= 1.0) || !(x > 0.0) || card_mbar < 1 || !(kappa0_value > 0.0) || !(M > 0.0)) {
    throw InputError("bound needs n >= 1, x > 0, |Mbar| >= 1, kappa0 > 0, M > 0");
  }
  const double entropy = static_cast<double>(k) + std::log(static_cast<double>(card_mbar));
  const double K = 32.0 * M * M * kappa0_value;
  const double Xi = 18432.0 * std::numbers::pi * entropy;
  FastRateBound b;
  b.proof_form = 2.0 * K * Xi / n + (9.0 * K + 128.0 * M * M) * x / (2.0 * n);
  if (C0) b.display_form = *C0 * kappa0_value * entropy * M * M / n + (9.0 * kappa0_value + 4.0) * 16.0 * M * M * x / n;
  return b;
}

// --- Prop-style checks --------------------------------------------------------

namespace {

// Uniform point of the d-ball of radius r.
void uniform_in_ball(Stream& s, double r, std::span<double> out) {
  double nrm = 0.0;
  for (auto& v : out) {
    v = s.normal();
    nrm += v * v;
  }
  nrm = std::sqrt(nrm);
  const double scale = r * std::pow(s.uniform(), 1.0 / static_cast<double>(out.size())) / nrm;
  for (auto& v : out) v *= scale;
}

bool inside_ball(const PointSet& c, double M) {
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (norm(c[j]) > M) return false;
  }
  return true;
}

PointSet random_codebook(std::size_t k, std::size_t d, double M, Stream& s) {
  PointSet c(k, d);
  for (std::size_t j = 0; j < k; ++j) uniform_in_ball(s, M, c[j]);
  return c;
}

void require_certified(const FiniteCertificate& cert) {
  if (cert.optima.empty()) throw InputError("check needs a certified optimum");
}

}  // namespace

Codebook nearest_optimum(const Codebook& c, const std::vector<Codebook>& optima) {
  if (optima.empty()) throw InputError("nearest_optimum needs at least one optimum");
  std::optional<Codebook> best;
  double bd = std::numeric_limits<double>::infinity();
  for (const auto& o : optima) {
    Codebook aligned = align_labels(c, o);
    const double dist = codebook_distance(c, aligned);
    if (dist < bd) {
      bd = dist;
      best = std::move(aligned);
    }
  }
  return *best;
}

CheckResult local_convexity_check(const FiniteSupportDist& P, const FiniteCertificate& cert, std::size_t trials,
                                  std::uint64_t seed) {
  require_certified(cert);
  CheckResult out;
  if (!cert.margin_satisfied) {
    out.caveats.push_back("margin condition not certified; check refused");
    return out;
  }
  const std::size_t k = cert.optima[0].size(), d = cert.optima[0].dim();
  const double guard = cert.B * cert.r0 / (4.0 * std::sqrt(2.0) * cert.M);
  out.worst_margin = std::numeric_limits<double>::infinity();
  Stream s(derive_seed(seed, {stream_tag::kTrial}));
  std::vector<double> step(k * d);
  const std::size_t max_proposals = 1000 * std::max<std::size_t>(trials, 1);
  for (std::size_t proposals = 0; out.trials < trials && proposals < max_proposals; ++proposals) {
    const Codebook& star = cert.optima[s.index(cert.optima.size())];
    uniform_in_ball(s, guard, step);
    PointSet c = star.points();
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t t = 0; t < d; ++t) c[j][t] += step[j * d + t];
    }
    if (!inside_ball(c, cert.M)) {
      ++out.rejected_draws;
      continue;
    }
    const Codebook cb(std::move(c));
    const double dist = codebook_distance(cb, star);
    if (dist > guard) continue;
    const double ell = true_risk(cb, P).value - true_risk(star, P).value;
    const double slack = ell - 0.5 * cert.p_min * dist * dist;
    ++out.trials;
    if (slack >= -1e-14) ++out.passed;
    out.worst_margin = std::min(out.worst_margin, slack);
  }
  if (out.trials < trials) out.caveats.push_back("proposal limit reached before the requested trial count");
  return out;
}

CheckResult variance_link_check(const FiniteSupportDist& P, const FiniteCertificate& cert, std::size_t trials,
                                std::uint64_t seed) {
  require_certified(cert);
  CheckResult out;
  if (!(cert.kappa0 > 0.0)) {
    out.caveats.push_back("kappa0 not certified; check refused");
    return out;
  }
  const std::size_t k = cert.optima[0].size(), d = cert.optima[0].dim();
  const double M = cert.M;
  out.worst_margin = std::numeric_limits<double>::infinity();
  Stream s(derive_seed(seed, {stream_tag::kTrial}));
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Codebook c(random_codebook(k, d, M, s));
    const Codebook star = nearest_optimum(c, cert.optima);
    const double dist2 = std::pow(codebook_distance(c, star), 2);
    const double var = contrast_difference_variance(c, star, P);
    const double ell = true_risk(c, P).value - cert.risk;
    const double left = dist2 - var / (16.0 * M * M);
    const double right = cert.kappa0 * ell - dist2;
    const double slack = std::min(left, right);
    ++out.trials;
    if (left >= -1e-14 && right >= -1e-14 * std::max(1.0, cert.kappa0)) ++out.passed;
    out.worst_margin = std::min(out.worst_margin, slack);
  }
  return out;
}

CheckResult variance_link_check_mc(const SourceDistribution& P, const std::vector<Codebook>& optima,
                                   std::size_t trials, const Budget& budget) {
  if (optima.empty()) throw InputError("check needs at least one optimum");
  const std::size_t k = optima[0].size(), d = optima[0].dim();
  const double M = support_radius(P);
  const PointSet xs = sample_parallel(P, budget.draws, derive_seed(budget.seed, {stream_tag::kSample}), budget.threads);
  const double N = static_cast<double>(xs.size());
  CheckResult out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  Stream s(derive_seed(budget.seed, {stream_tag::kTrial}));
  std::vector<double> diff(xs.size());
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Codebook c(random_codebook(k, d, M, s));
    const Codebook star = nearest_optimum(c, optima);
    CompensatedSum mean;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      diff[i] = contrast(c, xs[i]) - contrast(star, xs[i]);
      mean.add(diff[i]);
    }
    const double mu = mean.value() / N;
    CompensatedSum m2, m4;
    for (double v : diff) {
      const double e = (v - mu) * (v - mu);
      m2.add(e);
      m4.add(e * e);
    }
    const double var = m2.value() / N;
    const double var_se = std::sqrt(std::max(0.0, m4.value() / N - var * var) / N);
    const double dist2 = std::pow(codebook_distance(c, star), 2);
    const double slack = dist2 - (var - kStatTolerance * var_se) / (16.0 * M * M);
    ++out.trials;
    if (slack >= 0.0) ++out.passed;
    out.worst_margin = std::min(out.worst_margin, slack);
  }
  return out;
}

}  // namespace vqlab
