#include "vqlab/minimax.hpp"

#include <algorithm>
#include <cmath>

#include "vqlab/error.hpp"
#include "vqlab/numeric.hpp"
#include "vqlab/rng.hpp"

namespace vqlab {

IdentityReport distortion_identity_check(const AssouadFamily& fam, const std::vector<int>& sigma,
                                         const std::vector<int>& sigma_prime, const Budget& budget) {
  if (!is_balanced(sigma) || !is_balanced(sigma_prime)) throw InputError("identity check needs balanced signs");
  const ConeMixture P = fam.distribution(sigma);
  const Codebook q = q_sigma(fam, sigma);
  const Codebook qp = q_sigma(fam, sigma_prime);
  IdentityReport r;
  r.rho = sign_distance(sigma, sigma_prime);
  r.predicted = fam.Delta * fam.Delta * fam.delta * r.rho / (8.0 * static_cast<double>(fam.m));

  const PointSet xs = sample_parallel(P, budget.draws, derive_seed(budget.seed, {stream_tag::kSample}), budget.threads);
  MomentAccumulator acc;
  for (std::size_t i = 0; i < xs.size(); ++i) acc.add(contrast(qp, xs[i]) - contrast(q, xs[i]));
  const MeanEstimate e = acc.estimate();
  r.mc_gap = e.mean;
  r.mc_std_error = e.std_error;

  const RiskEstimate ex = excess_loss(qp, q, P, budget);
  r.exact_available = ex.exact;
  r.exact_gap = ex.value;
  r.discrepancy = r.mc_gap - r.predicted;
  if (r.mc_std_error > 0.0) {
    r.within_tolerance = std::fabs(r.discrepancy) <= 3.0 * r.mc_std_error;
  } else {
    r.within_tolerance = std::fabs(r.discrepancy) <= 1e-12 * std::max(1.0, std::fabs(r.predicted));
  }
  return r;
}

HellingerRecord hellinger(const AssouadFamily& fam, const std::vector<int>& tau, const std::vector<int>& tau_prime,
                          std::size_t n) {
  if (tau.size() != tau_prime.size() || 2 * tau.size() != fam.m) throw InputError("tau length must be m/2");
  const auto s = sigma_of_tau(tau), sp = sigma_of_tau(tau_prime);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < s.size(); ++i) flipped += s[i] != sp[i];
  const double m = static_cast<double>(fam.m);
  const double root = std::sqrt(1.0 + fam.delta) - std::sqrt(1.0 - fam.delta);
  HellingerRecord h;
  h.n = n;
  h.tau_distance = sign_distance(tau, tau_prime);
  // Each flipped coordinate moves two balls of mass 1/(2m) (1 +- delta).
  h.h2_single = static_cast<double>(flipped) * 2.0 * (1.0 / (2.0 * m)) * root * root;
  h.h2_product = 2.0 - 2.0 * std::pow(1.0 - h.h2_single / 2.0, static_cast<double>(n));
  h.bound = 4.0 * static_cast<double>(n) * fam.delta * fam.delta / m;
  h.bound_applies = h.tau_distance == 2;
  h.within_bound = h.h2_product <= h.bound;
  return h;
}

SlowRateResult slow_rate_experiment(const SlowRateConfig& cfg) {
  if (cfg.n_grid.empty()) throw InputError("slow-rate experiment needs an n grid");
  for (std::size_t j = 0; j < cfg.n_grid.size(); ++j) {
    if (2 * cfg.n_grid[j] < 3 * cfg.k) throw InputError("every n must be at least 3k/2");
    if (j && cfg.n_grid[j] <= cfg.n_grid[j - 1]) throw InputError("n grid must be strictly increasing");
  }
  if (cfg.reps == 0) throw InputError("slow-rate experiment needs reps >= 1");
  if (cfg.reps * cfg.n_grid.back() > cfg.max_work) {
    throw CapacityError("reps * n_max exceeds the experiment guard");
  }
  if (cfg.delta_mode == DeltaMode::Fixed && !(cfg.delta_fixed >= 0.0 && cfg.delta_fixed <= 1.0 / 3.0)) {
    throw InputError("fixed delta must lie in [0, 1/3]");
  }

  std::vector<AssouadFamily> fams;
  for (std::size_t n : cfg.n_grid) {
    const std::size_t m = 2 * cfg.k / 3;
    double delta = assouad_delta_for_n(m, n);
    if (cfg.delta_mode == DeltaMode::Fixed) delta = cfg.delta_fixed;
    if (cfg.delta_mode == DeltaMode::Zero) delta = 0.0;
    // The construction needs delta > 0; masses only depend on the stored value.
    AssouadFamily fam = build_assouad(cfg.k, cfg.d, cfg.M, delta > 0.0 ? delta : 1.0 / 3.0);
    fam.delta = delta;
    fams.push_back(std::move(fam));
  }

  SlowRateResult out;
  out.m = fams[0].m;
  out.Delta = fams[0].Delta;
  out.rho = fams[0].rho;
  const std::size_t tasks = cfg.n_grid.size() * cfg.reps;
  out.records.resize(tasks);
  LloydConfig erm = cfg.erm;
  erm.threads = 1;

  parallel_for(tasks, cfg.threads, [&](std::size_t task) {
    const std::size_t j = task / cfg.reps, rep = task % cfg.reps;
    const std::size_t n = cfg.n_grid[j];
    const AssouadFamily& fam = fams[j];
    const std::uint64_t base = derive_seed(cfg.seed, {stream_tag::kTrial, n, rep});
    Stream tau_stream(derive_seed(base, {stream_tag::kTau}));
    std::vector<int> tau(fam.m / 2);
    for (auto& t : tau) t = tau_stream.uniform() < 0.5 ? 1 : -1;
    const SourceDistribution P = fam.distribution(sigma_of_tau(tau));

    Stream sample_stream(derive_seed(base, {stream_tag::kSample}));
    const PointSet xs = sample(P, n, sample_stream);
    const ErmResult fit = solve_erm(xs, cfg.k, erm, derive_seed(base, {stream_tag::kErm}));

    ReferenceEffort effort;
    effort.seed = derive_seed(base, {stream_tag::kReference});
    effort.threads = 1;
    effort.risk_draws = cfg.eval_draws;
    const ReferenceOptimum ref = reference_optimum(P, cfg.k, effort);
    const RiskEstimate risk =
        true_risk(fit.codebook, P, Budget{cfg.eval_draws, derive_seed(base, {stream_tag::kEvaluation}), 1});

    SlowRateRecord& rec = out.records[task];
    rec.n = n;
    rec.rep = rep;
    rec.tau_id = tau_id(tau);
    rec.delta = fam.delta;
    rec.excess_loss = risk.value - ref.risk;
    rec.std_error = std::hypot(risk.std_error, ref.risk_std_error);
    rec.erm_mode = fit.mode();
  });

  std::vector<double> xs;
  std::vector<std::vector<double>> groups;
  for (std::size_t j = 0; j < cfg.n_grid.size(); ++j) {
    std::vector<double> g;
    for (std::size_t rep = 0; rep < cfg.reps; ++rep) g.push_back(out.records[j * cfg.reps + rep].excess_loss);
    SlowRateSummary s;
    s.n = cfg.n_grid[j];
    s.delta = fams[j].delta;
    s.mean = mean_of(g);
    s.std_error = std_error_of(g);
    s.median = median_of(g);
    s.max_over_tau = *std::max_element(g.begin(), g.end());
    const double kd = static_cast<double>(cfg.k), dd = static_cast<double>(cfg.d);
    s.floor_shape = cfg.M * cfg.M * std::sqrt(std::pow(kd, 1.0 - 4.0 / dd) / static_cast<double>(s.n));
    out.summaries.push_back(s);
    xs.push_back(static_cast<double>(s.n));
    groups.push_back(std::move(g));
  }
  if (cfg.n_grid.size() >= 2) {
    try {
      out.slope = fit_loglog_slope(xs, groups, cfg.bootstrap, derive_seed(cfg.seed, {stream_tag::kBootstrap}));
    } catch (const NumericError&) {
      out.slope.reset();
    }
  }
  return out;
}

}  // namespace vqlab
