#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "vqlab/erm.hpp"
#include "vqlab/error.hpp"
#include "vqlab/margin.hpp"

using namespace vqlab;

namespace {

const FiniteCertificate& fixture_certificate() {
  static const FiniteCertificate cert = certify_finite(fixtures::six_atoms(), 3);
  return cert;
}

Codebook mixture_codebook() { return Codebook(fixtures::triangle_means(0.5)); }

}  // namespace

TEST(PCurve, ZeroAtZeroForContinuousSource) {
  const SourceDistribution P = fixtures::small_sigma_mixture(0.05);
  const auto c = p_curve(P, {mixture_codebook()}, make_t_grid(8, 0.5), Budget{50000, 1, 1});
  EXPECT_EQ(c.t[0], 0.0);
  EXPECT_EQ(c.estimate[0], 0.0);
}

TEST(PCurve, FiniteAtomsOffBoundaries) {
  const SourceDistribution P = fixtures::six_atoms();
  const auto& cert = fixture_certificate();
  const auto c = p_curve(P, cert.optima, {0.0, 0.1, 0.3, 0.5});
  EXPECT_TRUE(c.exact);
  for (double v : c.estimate) EXPECT_EQ(v, 0.0);
}

TEST(PCurve, WholeSupportAtTwoM) {
  const SourceDistribution P = fixtures::small_sigma_mixture(0.05);
  const auto c = p_curve(P, {mixture_codebook()}, make_t_grid(4, 2.0), Budget{20000, 2, 1});
  EXPECT_NEAR(c.estimate.back(), 1.0, 3 * c.std_error.back() + 1e-12);
}

TEST(PCurve, MonotoneAndBounded) {
  const SourceDistribution P = TruncatedGaussianMixture::create(PointSet::from_rows({{0.0, 0.0}}), {1.0}, 100.0, 1.0);
  const Codebook two = Codebook::from_rows({{-0.4, 0.0}, {0.4, 0.0}});
  const auto c = p_curve(P, {two, mixture_codebook()}, make_t_grid(40, 1.0), Budget{50000, 3, 1});
  for (std::size_t j = 1; j < c.t.size(); ++j) EXPECT_GE(c.estimate[j], c.estimate[j - 1]);
  for (double v : c.estimate) EXPECT_LE(v, 1.0);
}

TEST(PCurve, StdErrorShrinksWithBudget) {
  const SourceDistribution P = TruncatedGaussianMixture::create(PointSet::from_rows({{0.0, 0.0}}), {1.0}, 100.0, 1.0);
  const Codebook two = Codebook::from_rows({{-0.4, 0.0}, {0.4, 0.0}});
  const auto a = p_curve(P, {two}, {0.0, 0.2}, Budget{20000, 4, 1});
  const auto b = p_curve(P, {two}, {0.0, 0.2}, Budget{80000, 5, 1});
  EXPECT_NEAR(a.std_error[1] / b.std_error[1], 2.0, 0.1);
}

TEST(MarginCheck, FiniteFixtureSatisfied) {
  const auto& cert = fixture_certificate();
  const auto curve = p_curve(fixtures::six_atoms(), cert.optima, make_t_grid(64, 2.0));
  const auto r = margin_check(MarginInputs{cert.B, cert.p_min, 1.0, curve});
  EXPECT_TRUE(r.satisfied);
  EXPECT_GT(r.r0_hat, 0.0);
  EXPECT_LE(r.r0_hat, cert.r0);
  EXPECT_FALSE(r.caveats.empty());
}

TEST(MarginCheck, MixtureRadiusAtLeastBTildeOverEight) {
  const auto mix = fixtures::small_sigma_mixture(0.01);
  ASSERT_TRUE(mixture_condition_check(mix).satisfied);
  const SourceDistribution P = mix;
  const Codebook c = reference_optimum(P, 3, ReferenceEffort{10, 50000, 1, 1, 50000}).codebook;
  const auto cs = cell_stats(c, P, Budget{100000, 2, 1});
  const double bt8 = mix.mean_separation() / 8;
  const auto grid = make_t_grid(32, bt8);
  const auto curve = p_curve(P, {c}, grid, Budget{200000, 3, 1});
  const auto r = margin_check(
      MarginInputs{min_pairwise_distance(c), *std::min_element(cs.masses.begin(), cs.masses.end()), 1.0, curve});
  EXPECT_TRUE(r.satisfied);
  EXPECT_GE(r.r0_hat, bt8 - grid[1]);
}

TEST(MarginCheck, NearUniformDiscViolatedAtSmallT) {
  const SourceDistribution P = TruncatedGaussianMixture::create(PointSet::from_rows({{0.0, 0.0}}), {1.0}, 100.0, 1.0);
  const Codebook two = Codebook::from_rows({{-0.42, 0.0}, {0.42, 0.0}});
  const auto curve = p_curve(P, {two}, make_t_grid(10, 0.5), Budget{100000, 6, 1});
  const auto r = margin_check(MarginInputs{0.84, 0.5, 1.0, curve});
  EXPECT_FALSE(r.verdicts[1]);
  EXPECT_FALSE(r.satisfied);
  EXPECT_EQ(r.r0_hat, 0.0);
}

TEST(MarginCheck, DegenerateInputsThrow) {
  EXPECT_THROW(margin_check(MarginInputs{0.0, 0.3, 1.0, {}}), DegenerateCodebookError);
  EXPECT_THROW(margin_check(MarginInputs{0.5, 0.0, 1.0, {}}), DegenerateCodebookError);
}

TEST(MarginCheck, AnalyticPowerLaw) {
  const double B = 1.2, p_min = 0.3, M = 1.0;
  for (double q : {1.5, 2.0, 3.0}) {
    for (double Q : {0.01, 1.0, 50.0}) {
      const auto r = margin_check_analytic([&](double t) { return Q * std::pow(t, q); }, B, p_min, M, 2.0 * M);
      const double expect = std::pow(p_min * B / (128 * M * M * Q), 1 / (q - 1));
      if (expect >= 2.0) continue;
      EXPECT_NEAR(r.r0_hat, expect, 0.01 * expect) << q << " " << Q;
    }
  }
}

TEST(Certificate, FixtureValues) {
  const auto& cert = fixture_certificate();
  ASSERT_EQ(cert.optima.size(), 1u);
  EXPECT_NEAR(cert.risk, 0.01, 1e-15);
  EXPECT_NEAR(cert.B, 0.7 * std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(cert.p_min, 1.0 / 3.0, 1e-15);
  // Inner atoms sit 0.6 sin(60 deg) from the nearest bisector.
  EXPECT_NEAR(cert.r0, 0.6 * std::sin(std::numbers::pi / 3), 1e-12);
  EXPECT_LT(cert.r0, 0.6 * std::sin(std::numbers::pi / 3));
  EXPECT_GT(cert.epsilon, 0.0);
  EXPECT_LE(cert.epsilon, cert.risk_k_minus_1 - cert.risk);
  EXPECT_TRUE(cert.margin_satisfied);
  EXPECT_NEAR(cert.kappa0, kappa0(cert.epsilon, cert.p_min, cert.B, cert.r0, 1.0, 3), 1e-9);
}

TEST(EpsilonSearch, LineWithTwoStationaryClasses) {
  const SourceDistribution P = FiniteSupportDist::uniform(PointSet::from_rows({{0.0}, {1.0}, {2.5}}));
  const auto r = epsilon_search(P, 2, 20, Budget{1000, 1, 1});
  ASSERT_TRUE(r.epsilon_hat.has_value());
  EXPECT_EQ(r.classes.size(), 2u);
  // Risks 0.5/3 against 2 * 0.75^2 / 3 by atom enumeration.
  EXPECT_NEAR(*r.epsilon_hat, (1.125 - 0.5) / 3, 1e-12);
}

TEST(EpsilonSearch, NotFoundWhenOnlyOneClass) {
  const SourceDistribution P = FiniteSupportDist::uniform(PointSet::from_rows({{0.0}, {1.0}, {10.0}}));
  const auto r = epsilon_search(P, 2, 12, Budget{1000, 2, 1});
  EXPECT_FALSE(r.epsilon_hat.has_value());
  EXPECT_FALSE(r.caveats.empty());
}

TEST(EpsilonSearch, TooFewAttempts) {
  EXPECT_THROW(epsilon_search(fixtures::six_atoms(), 3, 5), InputError);
}

TEST(Kappa0, Branches) {
  EXPECT_NEAR(kappa0(1e12, 0.5, 1.0, 0.5, 1.0, 2), 4 * 2 * 64 / (0.5 * 0.25), 1e-9);
  EXPECT_DOUBLE_EQ(kappa0(1.0, 1.0, 8.0, 1.0, 1.0, 2), 8.0);
  EXPECT_THROW(kappa0(0.0, 1.0, 1.0, 1.0, 1.0, 2), InputError);
  EXPECT_THROW(kappa0(1.0, 1.0, 1.0, -1.0, 1.0, 2), InputError);
}

TEST(Kappa0, FixtureHandEvaluation) {
  // eps = 0.25, p_min = 1/3, B = 1.2, r0 = 0.5, M = 1, k = 3:
  // 64 / (1/3 * 1.44 * 0.25) = 533.33.. > 4, kappa0 = 12 * 533.33..
  EXPECT_NEAR(kappa0(0.25, 1.0 / 3, 1.2, 0.5, 1.0, 3), 12.0 * 64.0 / (1.44 * 0.25 / 3.0), 1e-9);
}

TEST(Kappa0, MonotoneDirections) {
  const double base = kappa0(0.1, 0.3, 1.0, 0.4, 1.0, 3);
  EXPECT_GE(base, kappa0(0.2, 0.3, 1.0, 0.4, 1.0, 3));
  EXPECT_GE(base, kappa0(0.1, 0.4, 1.0, 0.4, 1.0, 3));
  EXPECT_GE(base, kappa0(0.1, 0.3, 1.1, 0.4, 1.0, 3));
  EXPECT_GE(base, kappa0(0.1, 0.3, 1.0, 0.5, 1.0, 3));
  EXPECT_LE(base, kappa0(0.1, 0.3, 1.0, 0.4, 1.0, 4));
  EXPECT_LE(base, kappa0(0.1, 0.3, 1.0, 0.4, 1.1, 3));
}

TEST(Bound, DecaysWithN) {
  EXPECT_LT(theorem31_bound(8, 2, 1, 1, 1e6, std::log(100.0)).proof_form,
            theorem31_bound(8, 2, 1, 1, 1e3, std::log(100.0)).proof_form);
}

TEST(Bound, LinearInLargeKappa) {
  const double a = theorem31_bound(1e4, 3, 2, 1, 1e4, std::log(100.0)).proof_form;
  const double b = theorem31_bound(2e4, 3, 2, 1, 1e4, std::log(100.0)).proof_form;
  EXPECT_GE(b / a, 1.9);
  EXPECT_LE(b / a, 2.1);
}

TEST(Bound, FixtureHandEvaluation) {
  // K = 256, Xi = 18432 pi * 2: 2 K Xi / n + (9 K + 128) x / (2 n).
  const double x = std::log(100.0);
  const double expect = 2.0 * 256 * 18432 * std::numbers::pi * 2 / 1e4 + (9.0 * 256 + 128) * x / 2e4;
  const auto b = theorem31_bound(8, 2, 1, 1, 1e4, x);
  EXPECT_NEAR(b.proof_form, expect, 1e-9);
  EXPECT_NEAR(b.proof_form, 5930.12, 0.01);
  EXPECT_FALSE(b.display_form.has_value());
  const auto d = theorem31_bound(8, 2, 1, 1, 1e4, x, 1.0);
  EXPECT_NEAR(*d.display_form, 8.0 * 2 / 1e4 + 76.0 * 16 * x / 1e4, 1e-12);
}

TEST(Bound, MonotoneDirections) {
  const double x = std::log(100.0);
  const double base = theorem31_bound(50, 3, 2, 1, 1000, x).proof_form;
  EXPECT_LT(base, theorem31_bound(60, 3, 2, 1, 1000, x).proof_form);
  EXPECT_LT(base, theorem31_bound(50, 4, 2, 1, 1000, x).proof_form);
  EXPECT_LT(base, theorem31_bound(50, 3, 3, 1, 1000, x).proof_form);
  EXPECT_LT(base, theorem31_bound(50, 3, 2, 1.1, 1000, x).proof_form);
  EXPECT_LT(base, theorem31_bound(50, 3, 2, 1, 1000, 2 * x).proof_form);
  EXPECT_THROW(theorem31_bound(50, 3, 0, 1, 1000, x), InputError);
}

TEST(LocalConvexity, FixtureAllPass) {
  const auto& cert = fixture_certificate();
  const auto r = local_convexity_check(fixtures::six_atoms(), cert, 1000, 7);
  EXPECT_EQ(r.trials, 1000u);
  EXPECT_EQ(r.passed, 1000u);
  EXPECT_GE(r.worst_margin, -1e-14);
}

TEST(LocalConvexity, OptimumItself) {
  const auto& cert = fixture_certificate();
  const auto P = SourceDistribution(fixtures::six_atoms());
  EXPECT_EQ(true_risk(cert.optima[0], P).value - cert.risk, 0.0);
}

TEST(LocalConvexity, RefusesUncertifiedMargin) {
  FiniteCertificate cert = fixture_certificate();
  cert.margin_satisfied = false;
  const auto r = local_convexity_check(fixtures::six_atoms(), cert, 10, 1);
  EXPECT_EQ(r.trials, 0u);
  EXPECT_FALSE(r.caveats.empty());
}

TEST(VarianceLink, FixtureAllPass) {
  const auto& cert = fixture_certificate();
  const auto r = variance_link_check(fixtures::six_atoms(), cert, 1000, 8);
  EXPECT_EQ(r.trials, 1000u);
  EXPECT_EQ(r.passed, 1000u);
}

TEST(VarianceLink, OptimumIsItsOwnNearest) {
  const auto& cert = fixture_certificate();
  const Codebook& c = cert.optima[0];
  const Codebook star = nearest_optimum(c, cert.optima);
  EXPECT_EQ(codebook_distance(c, star), 0.0);
  EXPECT_EQ(contrast_difference_variance(c, star, fixtures::six_atoms()), 0.0);
}

TEST(VarianceLink, LeftInequalityMonteCarlo) {
  const SourceDistribution P = fixtures::small_sigma_mixture(0.02);
  const auto r = variance_link_check_mc(P, {mixture_codebook()}, 50, Budget{20000, 3, 1});
  EXPECT_EQ(r.passed, r.trials);
}
