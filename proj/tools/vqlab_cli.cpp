#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "vqlab/distributions.hpp"
#include "vqlab/erm.hpp"
#include "vqlab/error.hpp"
#include "vqlab/experiment.hpp"
#include "vqlab/margin.hpp"
#include "vqlab/minimax.hpp"
#include "vqlab/serialize.hpp"

namespace fs = std::filesystem;
using namespace vqlab;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned threads = 1;
  bool force = false;
};

// Config document plus the effective seed; hashed into every output.
struct Context {
  json config;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool force = false;
  fs::path out;
  fs::path base_dir;
  std::string hash;
};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InputError("unknown key \"" + key + "\" in " + where);
  }
}

Context load(const Common& c) {
  std::ifstream in(c.config_path);
  if (!in) throw InputError("cannot open config " + c.config_path);
  Context ctx;
  ctx.config = json::parse(in);
  if (!ctx.config.is_object()) throw InputError("config must be a JSON object");
  ctx.seed = c.seed ? *c.seed : ctx.config.value("seed", std::uint64_t{0});
  ctx.config["seed"] = ctx.seed;
  ctx.threads = std::max(1u, c.threads);
  ctx.force = c.force;
  ctx.out = c.out_dir;
  ctx.base_dir = fs::path(c.config_path).parent_path();
  ctx.hash = config_hash(ctx.config);
  return ctx;
}

json stamp(const Context& ctx, json body) {
  body["tool_version"] = kToolVersion;
  body["config_hash"] = ctx.hash;
  body["seed"] = ctx.seed;
  return body;
}

void emit_json(const Context& ctx, const std::string& name, const json& body) {
  write_text_file(ctx.out / name, stamp(ctx, body).dump(2) + "\n");
}

std::vector<std::string> stamped(const Context& ctx, std::vector<std::string> fields) {
  fields.push_back(kToolVersion);
  fields.push_back(ctx.hash);
  return fields;
}

std::vector<std::string> header(std::vector<std::string> fields) {
  fields.push_back("tool_version");
  fields.push_back("config_hash");
  return fields;
}

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

LloydConfig erm_config(const json& j) {
  LloydConfig cfg;
  if (j.is_null()) return cfg;
  check_keys(j, {"max_iters", "rel_tol", "restarts", "init"}, "erm");
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  cfg.rel_tol = j.value("rel_tol", cfg.rel_tol);
  cfg.restarts = j.value("restarts", cfg.restarts);
  const std::string init = j.value("init", std::string("random-atoms"));
  if (init == "random-atoms") {
    cfg.init = InitRule::RandomAtoms;
  } else if (init == "spread-greedy") {
    cfg.init = InitRule::SpreadGreedy;
  } else {
    throw InputError("erm.init must be random-atoms or spread-greedy");
  }
  if (cfg.max_iters < 1 || cfg.rel_tol < 0.0 || cfg.restarts < 0) throw InputError("invalid erm settings");
  return cfg;
}

ReferenceEffort reference_effort(const json& j, const Context& ctx) {
  ReferenceEffort e;
  e.seed = ctx.seed;
  e.threads = ctx.threads;
  if (j.is_null()) return e;
  check_keys(j, {"runs", "sample_size", "risk_draws"}, "reference");
  e.runs = j.value("runs", e.runs);
  e.sample_size = j.value("sample_size", e.sample_size);
  e.risk_draws = j.value("risk_draws", e.risk_draws);
  return e;
}

std::vector<std::size_t> n_grid(const json& j) {
  auto g = j.get<std::vector<std::size_t>>();
  if (g.empty()) throw InputError("n_grid must be nonempty");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (g[i] <= g[i - 1]) throw InputError("n_grid must be strictly increasing");
  }
  return g;
}

json slope_json(const std::optional<SlopeFit>& s) {
  if (!s) return nullptr;
  return {{"slope", s->slope},
          {"intercept", s->intercept},
          {"ci", {s->ci_low, s->ci_high}},
          {"resamples", s->resamples},
          {"resamples_dropped", s->resamples_dropped}};
}

json erm_result_json(const ErmResult& r) {
  return {{"codebook", codebook_to_json(r.codebook)},
          {"empirical_risk", r.empirical_risk},
          {"iterations", r.iterations},
          {"restarts_used", r.restarts_used},
          {"certified_exact", r.certified_exact},
          {"mode", r.mode()}};
}

// --- subcommands --------------------------------------------------------------

int cmd_fit(const Context& ctx) {
  check_keys(ctx.config, {"distribution", "k", "sample_size", "sample_csv", "erm", "seed"}, "config");
  const auto k = ctx.config.at("k").get<std::size_t>();
  PointSet xs;
  if (ctx.config.contains("sample_csv")) {
    fs::path p = ctx.config.at("sample_csv").get<std::string>();
    xs = read_points_csv(p.is_absolute() ? p : ctx.base_dir / p);
  } else {
    const auto P = distribution_from_json(ctx.config.at("distribution"), ctx.base_dir);
    const auto n = ctx.config.at("sample_size").get<std::size_t>();
    Stream s(derive_seed(ctx.seed, {stream_tag::kSample}));
    xs = sample(P, n, s);
  }
  LloydConfig cfg = erm_config(ctx.config.value("erm", json()));
  cfg.threads = ctx.threads;
  const ErmResult r = solve_erm(xs, k, cfg, derive_seed(ctx.seed, {stream_tag::kErm}));
  json body = erm_result_json(r);
  body["n"] = xs.size();
  emit_json(ctx, "codebook.json", body);
  std::cout << stamp(ctx, body).dump(2) << "\n";
  return 0;
}

int cmd_diagnose(const Context& ctx) {
  check_keys(ctx.config, {"distribution", "k", "codebooks", "margin", "reference", "epsilon", "seed"}, "config");
  const auto P = distribution_from_json(ctx.config.at("distribution"), ctx.base_dir);
  const auto k = ctx.config.at("k").get<std::size_t>();
  const json mj = ctx.config.value("margin", json::object());
  check_keys(mj, {"grid_points", "t_max", "draws"}, "margin");
  const auto grid_points = mj.value("grid_points", std::size_t{32});
  const auto draws = mj.value("draws", std::size_t{200000});
  std::optional<double> t_max;
  if (mj.contains("t_max")) t_max = mj.at("t_max").get<double>();
  const ReferenceEffort effort = reference_effort(ctx.config.value("reference", json()), ctx);

  json body;
  MarginReport report;
  if (ctx.config.contains("codebooks")) {
    std::vector<Codebook> cbs;
    for (const auto& c : ctx.config.at("codebooks")) cbs.push_back(codebook_from_json(c));
    double B = std::numeric_limits<double>::infinity(), p_min = B;
    const Budget budget{draws, derive_seed(ctx.seed, {stream_tag::kEvaluation}), ctx.threads};
    for (const auto& c : cbs) {
      B = std::min(B, min_pairwise_distance(c));
      const auto cs = cell_stats(c, P, budget);
      p_min = std::min(p_min, *std::min_element(cs.masses.begin(), cs.masses.end()));
    }
    const auto grid = make_t_grid(grid_points, t_max.value_or(2.0 * support_radius(P)));
    PCurve curve = p_curve(P, cbs, grid, Budget{draws, derive_seed(ctx.seed, {stream_tag::kSample}), ctx.threads});
    report = margin_check(MarginInputs{B, p_min, support_radius(P), std::move(curve)});
    report.caveats.push_back("optimal codebooks supplied by the user");
  } else {
    MarginAssessment ma = assess_margin(P, k, effort, grid_points, t_max, draws);
    report = ma.report;
    if (ma.certificate) body["certificate"] = certificate_to_json(*ma.certificate);
    body["reference"] = {{"codebook", codebook_to_json(ma.reference.codebook)},
                         {"risk", ma.reference.risk},
                         {"certified", ma.reference.certified},
                         {"method", ma.reference.method}};
  }
  if (ctx.config.contains("epsilon")) {
    const json ej = ctx.config.at("epsilon");
    check_keys(ej, {"attempts", "draws"}, "epsilon");
    const Budget eb{ej.value("draws", std::size_t{100000}), derive_seed(ctx.seed, {stream_tag::kAttempt}), ctx.threads};
    const auto es = epsilon_search(P, k, ej.value("attempts", 20), eb);
    json classes = json::array();
    for (const auto& c : es.classes) {
      classes.push_back({{"codebook", codebook_to_json(c.representative)},
                         {"risk", c.risk},
                         {"risk_std_error", c.risk_std_error},
                         {"count", c.count}});
    }
    body["epsilon_search"] = {{"epsilon_hat", es.epsilon_hat ? json(*es.epsilon_hat) : json("not-found")},
                              {"classes", classes},
                              {"caveats", es.caveats}};
    if (!report.epsilon_hat && es.epsilon_hat) report.epsilon_hat = es.epsilon_hat;
  }
  body["margin"] = margin_report_to_json(report);
  body["distribution"] = distribution_to_json(P);
  emit_json(ctx, "margin_report.json", body);

  CsvWriter csv(header({"t", "estimate", "stderr", "slope_bound_t"}));
  for (std::size_t j = 0; j < report.curve.t.size(); ++j) {
    csv.row(stamped(ctx, {format_double(report.curve.t[j]), format_double(report.curve.estimate[j]),
                          format_double(report.curve.std_error[j]),
                          format_double(report.slope_bound * report.curve.t[j])}));
  }
  write_text_file(ctx.out / "p_curve.csv", csv.str());
  std::cout << stamp(ctx, body["margin"]).dump(2) << "\n";
  return 0;
}

int cmd_rate(const Context& ctx) {
  check_keys(ctx.config,
             {"distribution", "k", "n_grid", "reps", "erm", "reference", "bootstrap", "x", "C0", "margin", "kappa0",
              "card_mbar", "seed"},
             "config");
  FastRateConfig cfg{distribution_from_json(ctx.config.at("distribution"), ctx.base_dir)};
  cfg.k = ctx.config.at("k").get<std::size_t>();
  cfg.n_grid = n_grid(ctx.config.at("n_grid"));
  cfg.reps = ctx.config.value("reps", std::size_t{64});
  if (cfg.reps < 8) throw InputError("reps must be at least 8 for slope fitting");
  cfg.seed = ctx.seed;
  cfg.threads = ctx.threads;
  cfg.erm = erm_config(ctx.config.value("erm", json()));
  cfg.reference = reference_effort(ctx.config.value("reference", json()), ctx);
  cfg.bootstrap = ctx.config.value("bootstrap", cfg.bootstrap);
  cfg.x = ctx.config.value("x", cfg.x);
  if (ctx.config.contains("C0")) cfg.C0 = ctx.config.at("C0").get<double>();
  if (ctx.config.contains("kappa0")) cfg.kappa0 = ctx.config.at("kappa0").get<double>();
  if (ctx.config.contains("card_mbar")) cfg.card_mbar = ctx.config.at("card_mbar").get<std::size_t>();
  const json mj = ctx.config.value("margin", json::object());
  check_keys(mj, {"grid_points", "t_max", "draws"}, "margin");
  cfg.margin_grid_points = mj.value("grid_points", cfg.margin_grid_points);
  cfg.margin_draws = mj.value("draws", cfg.margin_draws);
  if (mj.contains("t_max")) cfg.margin_t_max = mj.at("t_max").get<double>();
  cfg.force = ctx.force;

  FastRateResult r;
  try {
    r = fast_rate_experiment(cfg);
  } catch (const MarginRefused& e) {
    const json body = {{"error", e.what()}, {"margin", margin_report_to_json(e.report())}};
    emit_json(ctx, "margin_report.json", body);
    std::cout << stamp(ctx, body).dump(2) << "\n";
    return kExitNumeric;
  }

  CsvWriter csv(header({"n", "rep", "excess_loss", "stderr", "erm_mode", "bound"}));
  for (const auto& rec : r.records) {
    csv.row(stamped(ctx, {std::to_string(rec.n), std::to_string(rec.rep), format_double(rec.excess_loss),
                          format_double(rec.std_error), rec.erm_mode, opt_str(rec.bound)}));
  }
  write_text_file(ctx.out / "rate_records.csv", csv.str());

  json per_n = json::array();
  for (const auto& s : r.summaries) {
    per_n.push_back({{"n", s.n},
                     {"mean", s.mean},
                     {"std_error", s.std_error},
                     {"median", s.median},
                     {"bound", s.bound ? json(*s.bound) : json(nullptr)},
                     {"bound_display", s.bound_display ? json(*s.bound_display) : json(nullptr)}});
  }
  json body = {{"slope", slope_json(r.slope)},
               {"summaries", per_n},
               {"margin", margin_report_to_json(r.margin)},
               {"reference", {{"method", r.reference_method}, {"certified", r.reference_certified},
                              {"risk", r.reference_risk}}},
               {"kappa0", r.kappa0 ? json(*r.kappa0) : json(nullptr)},
               {"card_mbar", r.card_mbar},
               {"x", cfg.x},
               {"bound_non_violation", r.bound_non_violation ? json(*r.bound_non_violation) : json(nullptr)},
               {"forced", r.forced},
               {"records", r.records.size()},
               {"seed_derivation", "per (n, rep): derive_seed(seed, {8, n, rep})"}};
  if (r.certificate) body["certificate"] = certificate_to_json(*r.certificate);
  emit_json(ctx, "rate_summary.json", body);
  std::cout << stamp(ctx, {{"slope", slope_json(r.slope)}, {"records", r.records.size()}}).dump(2) << "\n";
  return 0;
}

int cmd_minimax(const Context& ctx) {
  check_keys(ctx.config,
             {"k", "d", "M", "n_grid", "reps", "erm", "delta_mode", "delta", "eval_draws", "bootstrap", "hellinger",
              "identity", "seed"},
             "config");
  SlowRateConfig cfg;
  cfg.k = ctx.config.value("k", cfg.k);
  cfg.d = ctx.config.value("d", cfg.d);
  cfg.M = ctx.config.value("M", cfg.M);
  cfg.n_grid = n_grid(ctx.config.at("n_grid"));
  cfg.reps = ctx.config.value("reps", cfg.reps);
  if (cfg.reps < 8) throw InputError("reps must be at least 8 for slope fitting");
  cfg.seed = ctx.seed;
  cfg.threads = ctx.threads;
  cfg.erm = erm_config(ctx.config.value("erm", json()));
  cfg.eval_draws = ctx.config.value("eval_draws", cfg.eval_draws);
  cfg.bootstrap = ctx.config.value("bootstrap", cfg.bootstrap);
  const std::string mode = ctx.config.value("delta_mode", std::string("tuned"));
  if (mode == "tuned") {
    cfg.delta_mode = DeltaMode::Tuned;
  } else if (mode == "zero") {
    cfg.delta_mode = DeltaMode::Zero;
  } else if (mode == "fixed") {
    cfg.delta_mode = DeltaMode::Fixed;
    cfg.delta_fixed = ctx.config.at("delta").get<double>();
  } else {
    throw InputError("delta_mode must be tuned, zero or fixed");
  }

  const SlowRateResult r = slow_rate_experiment(cfg);
  CsvWriter csv(header({"n", "rep", "tau_id", "excess_loss", "erm_mode", "stderr", "delta"}));
  for (const auto& rec : r.records) {
    csv.row(stamped(ctx, {std::to_string(rec.n), std::to_string(rec.rep), std::to_string(rec.tau_id),
                          format_double(rec.excess_loss), rec.erm_mode, format_double(rec.std_error),
                          format_double(rec.delta)}));
  }
  write_text_file(ctx.out / "minimax_records.csv", csv.str());

  json per_n = json::array();
  for (const auto& s : r.summaries) {
    per_n.push_back({{"n", s.n},
                     {"delta", s.delta},
                     {"mean", s.mean},
                     {"random_tau_mean_is_lower_proxy", true},
                     {"std_error", s.std_error},
                     {"median", s.median},
                     {"max_over_tau", s.max_over_tau},
                     {"floor_shape", s.floor_shape}});
  }

  // Hellinger records for every pair of tau vectors at distance 2.
  const json hj = ctx.config.value("hellinger", json::object());
  check_keys(hj, {"n"}, "hellinger");
  const auto hn = hj.value("n", std::vector<std::size_t>{8, 128});
  json hellinger_records = json::array();
  const std::size_t m = 2 * cfg.k / 3;
  for (std::size_t n : hn) {
    const AssouadFamily fam = build_assouad(cfg.k, cfg.d, cfg.M, assouad_delta_for_n(m, n));
    const auto taus = all_sign_vectors(m / 2);
    for (std::size_t a = 0; a < taus.size(); ++a) {
      for (std::size_t b = a + 1; b < taus.size(); ++b) {
        if (sign_distance(taus[a], taus[b]) != 2) continue;
        const HellingerRecord h = hellinger(fam, taus[a], taus[b], n);
        hellinger_records.push_back({{"n", n},
                                     {"delta", fam.delta},
                                     {"tau", tau_id(taus[a])},
                                     {"tau_prime", tau_id(taus[b])},
                                     {"h2_single", h.h2_single},
                                     {"h2_product", h.h2_product},
                                     {"bound", h.bound},
                                     {"within_bound", h.within_bound}});
      }
    }
  }

  // Distortion identity on every balanced pair at the smallest n.
  const json ij = ctx.config.value("identity", json::object());
  check_keys(ij, {"draws", "n"}, "identity");
  const auto id_n = ij.value("n", std::size_t{8});
  const AssouadFamily fam = build_assouad(cfg.k, cfg.d, cfg.M, assouad_delta_for_n(m, id_n));
  const Budget ib{ij.value("draws", std::size_t{200000}), derive_seed(ctx.seed, {stream_tag::kEvaluation}), ctx.threads};
  json identity = json::array();
  const auto balanced = balanced_sign_vectors(m);
  for (const auto& s : balanced) {
    for (const auto& sp : balanced) {
      const IdentityReport ir = distortion_identity_check(fam, s, sp, ib);
      identity.push_back({{"sigma", s},
                          {"sigma_prime", sp},
                          {"rho", ir.rho},
                          {"predicted", ir.predicted},
                          {"mc_gap", ir.mc_gap},
                          {"mc_std_error", ir.mc_std_error},
                          {"exact_gap", ir.exact_gap},
                          {"within_tolerance", ir.within_tolerance}});
    }
  }

  json body = {{"slope", slope_json(r.slope)},
               {"summaries", per_n},
               {"m", r.m},
               {"Delta", r.Delta},
               {"rho", r.rho},
               {"delta_mode", mode},
               {"hellinger", hellinger_records},
               {"identity", identity},
               {"records", r.records.size()},
               {"seed_derivation", "per (n, rep): derive_seed(seed, {8, n, rep})"}};
  emit_json(ctx, "minimax_summary.json", body);
  std::cout << stamp(ctx, {{"slope", slope_json(r.slope)}, {"records", r.records.size()}}).dump(2) << "\n";
  return 0;
}

int cmd_mixture_check(const Context& ctx) {
  check_keys(ctx.config, {"distribution", "seed"}, "config");
  const auto P = distribution_from_json(ctx.config.at("distribution"), ctx.base_dir);
  const auto* mix = std::get_if<TruncatedGaussianMixture>(&P);
  if (!mix) throw InputError("mixture-check needs a distribution of kind mixture");
  const json body = {{"report", mixture_report_to_json(mixture_condition_check(*mix))},
                     {"distribution", distribution_to_json(P)}};
  emit_json(ctx, "mixture_check.json", body);
  std::cout << stamp(ctx, body["report"]).dump(2) << "\n";
  return 0;
}

int cmd_oracle(const Context& ctx) {
  check_keys(ctx.config, {"points", "points_csv", "k", "seed"}, "config");
  const auto k = ctx.config.at("k").get<std::size_t>();
  PointSet xs;
  if (ctx.config.contains("points_csv")) {
    fs::path p = ctx.config.at("points_csv").get<std::string>();
    xs = read_points_csv(p.is_absolute() ? p : ctx.base_dir / p);
  } else {
    xs = points_from_json(ctx.config.at("points"));
  }
  const ErmResult r = exact_erm(xs, k);
  json body = erm_result_json(r);
  body["risk"] = r.empirical_risk;
  body["n"] = xs.size();
  emit_json(ctx, "oracle.json", body);
  std::cout << stamp(ctx, body).dump(2) << "\n";
  return 0;
}

json error_json(const std::string& kind, const std::string& what) { return {{"error", kind}, {"message", what}}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vector quantization lab"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "master seed (overrides the config)");
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--threads", common.threads, "worker count")->check(CLI::PositiveNumber);
    sub->add_flag("--force", common.force, "run despite a failed margin precondition");
  };
  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Context&);
  };
  const Sub subs[] = {
      {"fit", "ERM on a sample or a CSV file", cmd_fit},
      {"diagnose", "margin report for a distribution", cmd_diagnose},
      {"rate", "fast-rate experiment", cmd_rate},
      {"minimax", "slow-rate experiment, Hellinger and identity checks", cmd_minimax},
      {"mixture-check", "mixture condition report", cmd_mixture_check},
      {"oracle", "exact ERM on a tiny input", cmd_oracle},
  };
  std::vector<CLI::App*> apps;
  for (const auto& s : subs) {
    apps.push_back(app.add_subcommand(s.name, s.help));
    add_common(apps.back());
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const Context ctx = load(common);
    for (std::size_t i = 0; i < apps.size(); ++i) {
      if (apps[i]->parsed()) return subs[i].run(ctx);
    }
  } catch (const InputError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CapacityError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    json body = error_json("numeric", e.what());
    body["diagnostics"] = e.diagnostics();
    std::cout << body.dump(2) << "\n";
    return kExitNumeric;
  } catch (const DegenerateCodebookError& e) {
    std::cout << error_json("degenerate-codebook", e.what()).dump(2) << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
