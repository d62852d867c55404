#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vqlab/error.hpp"
#include "vqlab/minimax.hpp"

using namespace vqlab;

namespace {

// Integral of (sqrt f - sqrt g)^2 over the union of the balls of both laws.
double numeric_h2(const AssouadFamily& fam, const std::vector<int>& s, const std::vector<int>& sp) {
  const ConeMixture P = fam.distribution(s);
  double total = 0.0;
  for (std::size_t b = 0; b < P.centers.size(); ++b) {
    total += oracle::integrate_disc(
        [&](double x, double y) {
          const Point p{x, y};
          const double d = std::sqrt(assouad_density(fam, s, p)) - std::sqrt(assouad_density(fam, sp, p));
          return d * d;
        },
        P.centers[b][0], P.centers[b][1], P.rho);
  }
  return total;
}

}  // namespace

TEST(DistortionIdentity, SameSigmaGivesZero) {
  const auto fam = build_assouad(3, 2, 1.0, 0.25);
  const auto r = distortion_identity_check(fam, {1, -1}, {1, -1}, Budget{20000, 1, 1});
  EXPECT_EQ(r.rho, 0);
  EXPECT_EQ(r.mc_gap, 0.0);
  EXPECT_EQ(r.exact_gap, 0.0);
  EXPECT_TRUE(r.within_tolerance);
}

TEST(DistortionIdentity, SmallestBalancedGapAtMTwo) {
  const auto fam = build_assouad(3, 2, 1.0, assouad_delta_for_n(2, 8));
  ASSERT_DOUBLE_EQ(fam.delta, 0.25);
  const auto r = distortion_identity_check(fam, {1, -1}, {-1, 1}, Budget{200000, 2, 1});
  EXPECT_EQ(r.rho, 4);
  // rho = 2 is not reachable with balanced signs at m = 2; the rho = 4 gap
  // doubles Delta^2 delta / (4 m) = 3.8147e-4.
  EXPECT_NEAR(fam.Delta * fam.Delta * fam.delta / 8, 3.8147e-4, 1e-8);
  EXPECT_NEAR(r.predicted, 2 * 3.8147e-4, 2e-8);
  EXPECT_TRUE(r.within_tolerance) << r.mc_gap << " vs " << r.predicted << " se " << r.mc_std_error;
  EXPECT_TRUE(r.exact_available);
  EXPECT_NEAR(r.exact_gap, r.predicted, 1e-15);
}

TEST(DistortionIdentity, LinearInRho) {
  const auto fam = build_assouad(6, 2, 1.0, 0.2);
  const std::vector<int> s{1, 1, -1, -1};
  const auto r4 = distortion_identity_check(fam, s, {1, -1, 1, -1}, Budget{10000, 3, 1});
  const auto r8 = distortion_identity_check(fam, s, {-1, -1, 1, 1}, Budget{10000, 4, 1});
  ASSERT_EQ(r4.rho, 4);
  ASSERT_EQ(r8.rho, 8);
  EXPECT_NEAR(r8.exact_gap / r4.exact_gap, 2.0, 1e-9);
}

TEST(DistortionIdentity, AllBalancedPairsExactAtMTwo) {
  const auto fam = build_assouad(3, 2, 1.0, 0.3);
  for (const auto& s : balanced_sign_vectors(2)) {
    for (const auto& sp : balanced_sign_vectors(2)) {
      const auto r = distortion_identity_check(fam, s, sp, Budget{1000, 5, 1});
      EXPECT_NEAR(r.exact_gap, r.predicted, 1e-15);
    }
  }
}

TEST(DistortionIdentity, UnbalancedRejected) {
  const auto fam = build_assouad(3, 2, 1.0, 0.3);
  EXPECT_THROW(distortion_identity_check(fam, {1, 1}, {1, -1}, Budget{}), InputError);
}

TEST(QSigmaOptimality, MinimalAmongFamily) {
  for (std::size_t k : {3u, 6u}) {
    const auto fam = build_assouad(k, 2, 1.0, 0.2);
    const auto all = balanced_sign_vectors(fam.m);
    for (const auto& s : all) {
      const SourceDistribution P = fam.distribution(s);
      const double own = true_risk(q_sigma(fam, s), P).value;
      for (const auto& sp : all) {
        if (sp == s) continue;
        EXPECT_GT(true_risk(q_sigma(fam, sp), P).value, own);
      }
    }
  }
}

TEST(Hellinger, SameTauIsZero) {
  const auto fam = build_assouad(3, 2, 1.0, 0.25);
  const auto h = hellinger(fam, {1}, {1}, 8);
  EXPECT_EQ(h.h2_single, 0.0);
  EXPECT_EQ(h.h2_product, 0.0);
}

TEST(Hellinger, MassAlgebraValues) {
  const auto fam = build_assouad(3, 2, 1.0, 0.25);
  const auto h = hellinger(fam, {1}, {-1}, 8);
  const double expect = std::pow(std::sqrt(1.25) - std::sqrt(0.75), 2);
  EXPECT_NEAR(h.h2_single, expect, 1e-15);
  EXPECT_NEAR(h.h2_single, 0.063508, 1e-6);
  EXPECT_NEAR(h.h2_product, 2 - 2 * std::pow(1 - expect / 2, 8), 1e-14);
  EXPECT_NEAR(h.h2_product, 0.45504, 1e-5);
  EXPECT_DOUBLE_EQ(h.bound, 1.0);
  EXPECT_TRUE(h.bound_applies);
  EXPECT_TRUE(h.within_bound);
}

TEST(Hellinger, ClosedFormMatchesQuadrature) {
  const auto fam = build_assouad(3, 2, 1.0, 0.25);
  const auto h = hellinger(fam, {1}, {-1}, 8);
  EXPECT_NEAR(h.h2_single, numeric_h2(fam, sigma_of_tau({1}), sigma_of_tau({-1})), 1e-6);
}

TEST(SlowRate, SmallRun) {
  SlowRateConfig cfg;
  cfg.n_grid = {64, 256};
  cfg.reps = 8;
  cfg.seed = 3;
  cfg.bootstrap = 50;
  const auto r = slow_rate_experiment(cfg);
  ASSERT_EQ(r.records.size(), 16u);
  for (const auto& rec : r.records) {
    EXPECT_GE(rec.excess_loss, -1e-12);
    EXPECT_EQ(rec.erm_mode, "lloyd");
  }
  ASSERT_EQ(r.summaries.size(), 2u);
  EXPECT_NEAR(r.summaries[0].delta, std::sqrt(2.0) / 16, 1e-15);
  EXPECT_GT(r.summaries[0].floor_shape, r.summaries[1].floor_shape);
  EXPECT_GE(r.summaries[0].max_over_tau, r.summaries[0].mean);
}

TEST(SlowRate, ThreadCountDoesNotMatter) {
  SlowRateConfig cfg;
  cfg.n_grid = {32, 64};
  cfg.reps = 8;
  cfg.seed = 4;
  cfg.bootstrap = 20;
  cfg.threads = 1;
  const auto a = slow_rate_experiment(cfg);
  cfg.threads = 3;
  const auto b = slow_rate_experiment(cfg);
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].excess_loss, b.records[i].excess_loss);
}

TEST(SlowRate, Preconditions) {
  SlowRateConfig cfg;
  cfg.n_grid = {4};
  EXPECT_THROW(slow_rate_experiment(cfg), InputError);
  cfg.n_grid = {64, 1 << 20};
  cfg.reps = 1000;
  EXPECT_THROW(slow_rate_experiment(cfg), CapacityError);
}
