#include "vqlab/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "vqlab/error.hpp"
#include "vqlab/numeric.hpp"
#include "vqlab/rng.hpp"

namespace vqlab {

MarginAssessment assess_margin(const SourceDistribution& P, std::size_t k, const ReferenceEffort& effort,
                               std::size_t grid_points, std::optional<double> t_max, std::size_t draws) {
  const double M = support_radius(P);
  const auto* f = std::get_if<FiniteSupportDist>(&P);
  if (f && f->atoms.size() > k && exact_guard(f->atoms.size(), k)) {
    FiniteCertificate cert = certify_finite(*f, k);
    MarginInputs in{cert.B, cert.p_min, M, p_curve(P, cert.optima, make_t_grid(grid_points, t_max.value_or(2.0 * M)))};
    MarginReport report = margin_check(in);
    report.r0_hat = cert.r0;
    report.satisfied = cert.margin_satisfied;
    report.epsilon_hat = cert.epsilon;
    if (cert.kappa0 > 0.0) report.kappa0 = cert.kappa0;
    report.caveats.push_back("exact certificate: r0, epsilon and kappa0 come from enumerating all partitions");
    ReferenceOptimum ref{cert.optima[0], cert.risk, 0.0, true, "exact-enumeration"};
    std::vector<Codebook> optima = cert.optima;
    return {std::move(report), std::move(cert), std::move(optima), std::move(ref)};
  }

  ReferenceOptimum ref = reference_optimum(P, k, effort);
  std::vector<Codebook> optima{ref.codebook};
  const double B = min_pairwise_distance(ref.codebook);
  const CellStats cs =
      cell_stats(ref.codebook, P, Budget{draws, derive_seed(effort.seed, {stream_tag::kEvaluation}), effort.threads});
  const double p_min = *std::min_element(cs.masses.begin(), cs.masses.end());
  if (!(B > 0.0) || !(p_min > 0.0)) throw DegenerateCodebookError("reference codebook has B = 0 or an empty cell");
  const auto grid = make_t_grid(grid_points, t_max.value_or(B / 8.0));
  PCurve curve = p_curve(P, optima, grid, Budget{draws, derive_seed(effort.seed, {stream_tag::kSample}), effort.threads});
  MarginReport report = margin_check(MarginInputs{B, p_min, M, std::move(curve)});
  if (!ref.certified) report.caveats.push_back("optimal codebook is a Lloyd reference, not certified");
  return {std::move(report), std::nullopt, std::move(optima), std::move(ref)};
}

FastRateResult fast_rate_experiment(const FastRateConfig& cfg) {
  if (cfg.n_grid.empty()) throw InputError("rate experiment needs an n grid");
  for (std::size_t j = 0; j < cfg.n_grid.size(); ++j) {
    if (cfg.n_grid[j] < cfg.k) throw InputError("every n must be at least k");
    if (j && cfg.n_grid[j] <= cfg.n_grid[j - 1]) throw InputError("n grid must be strictly increasing");
  }
  if (cfg.reps == 0) throw InputError("rate experiment needs reps >= 1");
  if (cfg.reps * cfg.n_grid.back() > cfg.max_work) throw CapacityError("reps * n_max exceeds the experiment guard");

  ReferenceEffort effort = cfg.reference;
  effort.seed = derive_seed(cfg.seed, {stream_tag::kReference});
  effort.threads = cfg.threads;
  MarginAssessment ma = assess_margin(cfg.P, cfg.k, effort, cfg.margin_grid_points, cfg.margin_t_max, cfg.margin_draws);
  if (!ma.report.satisfied && !cfg.force) throw MarginRefused(ma.report);

  FastRateResult out;
  out.forced = !ma.report.satisfied;
  out.reference_method = ma.reference.method;
  out.reference_certified = ma.reference.certified;
  out.reference_risk = ma.reference.risk;
  out.kappa0 = ma.report.kappa0 ? ma.report.kappa0 : cfg.kappa0;
  out.card_mbar = ma.certificate ? ma.certificate->optima.size() : cfg.card_mbar.value_or(1);
  const double M = support_radius(cfg.P);

  // Continuous sources without exact risks: paired differences on one large
  // evaluation sample, against a reference fitted to that same sample.
  const auto* cone = std::get_if<ConeMixture>(&cfg.P);
  const bool exact_path = std::holds_alternative<FiniteSupportDist>(cfg.P) || (cone && cone->family);
  PointSet eval;
  std::optional<Codebook> eval_ref;
  if (!exact_path) {
    eval = sample_parallel(cfg.P, effort.sample_size, derive_seed(effort.seed, {stream_tag::kEvaluation}), cfg.threads);
    LloydConfig rc = cfg.erm;
    rc.restarts = std::max(1, effort.runs);
    rc.threads = cfg.threads;
    eval_ref = lloyd(eval, cfg.k, rc, derive_seed(effort.seed, {stream_tag::kErm})).codebook;
    out.reference_method = "lloyd-on-evaluation-sample";
    out.reference_certified = false;
    out.reference_risk = empirical_risk(*eval_ref, eval);
  }

  const std::size_t tasks = cfg.n_grid.size() * cfg.reps;
  out.records.resize(tasks);
  LloydConfig erm = cfg.erm;
  erm.threads = 1;
  parallel_for(tasks, cfg.threads, [&](std::size_t task) {
    const std::size_t j = task / cfg.reps, rep = task % cfg.reps;
    const std::size_t n = cfg.n_grid[j];
    const std::uint64_t base = derive_seed(cfg.seed, {stream_tag::kTrial, n, rep});
    Stream s(derive_seed(base, {stream_tag::kSample}));
    const PointSet xs = sample(cfg.P, n, s);
    const ErmResult fit = solve_erm(xs, cfg.k, erm, derive_seed(base, {stream_tag::kErm}));
    FastRateRecord& rec = out.records[task];
    rec.n = n;
    rec.rep = rep;
    rec.erm_mode = fit.mode();
    if (exact_path) {
      const RiskEstimate r = true_risk(fit.codebook, cfg.P,
                                       Budget{effort.risk_draws, derive_seed(base, {stream_tag::kEvaluation}), 1});
      rec.excess_loss = r.value - ma.reference.risk;
      rec.std_error = std::hypot(r.std_error, ma.reference.risk_std_error);
    } else {
      MomentAccumulator acc;
      for (std::size_t i = 0; i < eval.size(); ++i) acc.add(contrast(fit.codebook, eval[i]) - contrast(*eval_ref, eval[i]));
      const MeanEstimate e = acc.estimate();
      rec.excess_loss = e.mean;
      rec.std_error = e.std_error;
    }
  });

  std::vector<double> xs;
  std::vector<std::vector<double>> groups;
  std::size_t within = 0;
  for (std::size_t j = 0; j < cfg.n_grid.size(); ++j) {
    FastRateSummary s;
    s.n = cfg.n_grid[j];
    if (out.kappa0) {
      const auto b = theorem31_bound(*out.kappa0, cfg.k, out.card_mbar, M, static_cast<double>(s.n), cfg.x, cfg.C0);
      s.bound = b.proof_form;
      s.bound_display = b.display_form;
    }
    std::vector<double> g;
    for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
      auto& rec = out.records[j * cfg.reps + rep];
      rec.bound = s.bound;
      if (s.bound && rec.excess_loss <= *s.bound) ++within;
      g.push_back(rec.excess_loss);
    }
    s.mean = mean_of(g);
    s.std_error = std_error_of(g);
    s.median = median_of(g);
    out.summaries.push_back(s);
    xs.push_back(static_cast<double>(s.n));
    groups.push_back(std::move(g));
  }
  if (out.kappa0) out.bound_non_violation = static_cast<double>(within) / static_cast<double>(tasks);
  if (cfg.n_grid.size() >= 2) {
    try {
      out.slope = fit_loglog_slope(xs, groups, cfg.bootstrap, derive_seed(cfg.seed, {stream_tag::kBootstrap}));
    } catch (const NumericError&) {
      out.slope.reset();
    }
  }
  out.margin = std::move(ma.report);
  out.certificate = std::move(ma.certificate);
  return out;
}

}  // namespace vqlab
