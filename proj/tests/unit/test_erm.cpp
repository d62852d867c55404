#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "vqlab/erm.hpp"
#include "vqlab/error.hpp"

using namespace vqlab;

namespace {

std::vector<oracle::Vec> to_vec(const PointSet& p) {
  std::vector<oracle::Vec> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.emplace_back(p[i].begin(), p[i].end());
  return out;
}

PointSet random_sample(std::mt19937_64& g, std::size_t n, std::size_t d) {
  std::normal_distribution<double> nd;
  std::vector<Point> rows(n, Point(d));
  for (auto& r : rows) {
    for (auto& v : r) v = nd(g);
  }
  return PointSet::from_rows(rows);
}

}  // namespace

TEST(Lloyd, DistinctPointsGiveZeroRisk) {
  const PointSet xs = PointSet::from_rows({{0, 0}, {1, 0}, {0, 3}});
  const auto r = lloyd(xs, 3, LloydConfig{}, 1);
  EXPECT_EQ(r.empirical_risk, 0.0);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Lloyd, NeedsAtLeastKPoints) {
  EXPECT_THROW(lloyd(PointSet::from_rows({{0.0}, {1.0}}), 3, LloydConfig{}, 1), InputError);
}

TEST(Lloyd, RiskTraceIsMonotone) {
  std::mt19937_64 g(4);
  for (int trial = 0; trial < 30; ++trial) {
    LloydConfig cfg;
    cfg.restarts = 3;
    cfg.init = trial % 2 ? InitRule::SpreadGreedy : InitRule::RandomAtoms;
    const auto r = lloyd(random_sample(g, 200, 2), 4, cfg, static_cast<std::uint64_t>(trial));
    for (std::size_t i = 1; i < r.risk_trace.size(); ++i) EXPECT_LE(r.risk_trace[i], r.risk_trace[i - 1] * (1 + 1e-15));
  }
}

TEST(Lloyd, OutputSatisfiesCentroidCondition) {
  std::mt19937_64 g(5);
  const PointSet xs = random_sample(g, 300, 2);
  LloydConfig cfg;
  cfg.restarts = 5;
  cfg.rel_tol = 0.0;
  cfg.max_iters = 1000;
  const auto r = lloyd(xs, 3, cfg, 3);
  // Replacing a code point by its cell centroid cannot lower the risk.
  const auto a = assign(r.codebook, xs);
  auto rows = r.codebook.rows();
  for (std::size_t j = 0; j < 3; ++j) {
    Point mu(2, 0.0);
    double cnt = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (a.labels[i] != j) continue;
      mu[0] += xs[i][0];
      mu[1] += xs[i][1];
      cnt += 1;
    }
    ASSERT_GT(cnt, 0);
    auto moved = rows;
    moved[j] = {mu[0] / cnt, mu[1] / cnt};
    EXPECT_GE(empirical_risk(Codebook::from_rows(moved), xs), r.empirical_risk - 1e-12);
  }
}

TEST(Lloyd, ThreadCountDoesNotMatter) {
  std::mt19937_64 g(6);
  const PointSet xs = random_sample(g, 500, 3);
  LloydConfig a, b;
  a.restarts = b.restarts = 12;
  a.threads = 1;
  b.threads = 4;
  const auto ra = lloyd(xs, 4, a, 99), rb = lloyd(xs, 4, b, 99);
  EXPECT_EQ(ra.empirical_risk, rb.empirical_risk);
  EXPECT_EQ(ra.codebook.points().data(), rb.codebook.points().data());
}

TEST(Lloyd, FewerPositionsThanCodePoints) {
  // Duplicate initial centers leave a cell empty on the first step.
  const PointSet xs = PointSet::from_rows({{0, 0}, {0, 0}, {0, 0}, {10, 0}, {10, 0}});
  LloydConfig cfg;
  cfg.restarts = 20;
  const auto r = lloyd(xs, 3, cfg, 4);
  EXPECT_NEAR(r.empirical_risk, 0.0, 1e-15);
}

TEST(DefaultRestarts, ScalesWithKLogN) {
  EXPECT_EQ(default_restarts(3, 100), static_cast<int>(std::ceil(30 * std::log(100.0))));
}

TEST(ExactErm, ThreeCollinearPoints) {
  const auto r = exact_erm(PointSet::from_rows({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}), 2);
  EXPECT_TRUE(r.certified_exact);
  EXPECT_NEAR(r.empirical_risk, 1.0 / 6.0, 1e-15);
  const auto rows = r.codebook.rows();
  const bool a = std::fabs(rows[0][0] - 0.5) < 1e-15 && rows[1][0] == 2.0;
  const bool b = std::fabs(rows[1][0] - 1.5) < 1e-15 && rows[0][0] == 0.0;
  EXPECT_TRUE(a || b);
}

TEST(ExactErm, NEqualsK) {
  EXPECT_EQ(exact_erm(PointSet::from_rows({{0.0}, {4.0}, {7.0}}), 3).empirical_risk, 0.0);
}

TEST(ExactErm, GuardIsEnforced) {
  std::mt19937_64 g(1);
  EXPECT_THROW(exact_erm(random_sample(g, 15, 2), 3), CapacityError);
  EXPECT_THROW(exact_erm(random_sample(g, 10, 2), 4), CapacityError);
  EXPECT_NO_THROW(exact_erm(random_sample(g, 14, 2), 3));
  EXPECT_NO_THROW(exact_erm(random_sample(g, 9, 2), 4));
}

TEST(ExactErm, DuplicatesCollapse) {
  // 600 draws on 6 atoms are exactly solvable.
  Stream s(3);
  const PointSet xs = sample(SourceDistribution(fixtures::six_atoms()), 600, s);
  const auto r = exact_erm(xs, 3);
  EXPECT_TRUE(r.certified_exact);
  const auto c = collapse_duplicates(xs);
  EXPECT_EQ(c.points.size(), 6u);
  EXPECT_NEAR(r.empirical_risk, oracle::brute_erm_risk(to_vec(c.points), c.counts, 3), 1e-14);
}

TEST(ExactErm, MatchesBruteForceLabelings) {
  std::mt19937_64 g(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = trial % 2 ? 3 : 4;
    const PointSet xs = random_sample(g, k == 3 ? 9 : 8, 2);
    const std::vector<double> w(xs.size(), 1.0);
    EXPECT_NEAR(exact_erm(xs, k).empirical_risk, oracle::brute_erm_risk(to_vec(xs), w, k), 1e-12);
  }
}

TEST(ExactErm, OrderInvariantAndBelowLloyd) {
  std::mt19937_64 g(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto rows = random_sample(g, 12, 2).rows();
    const double base = exact_erm(PointSet::from_rows(rows), 3).empirical_risk;
    std::shuffle(rows.begin(), rows.end(), g);
    EXPECT_NEAR(exact_erm(PointSet::from_rows(rows), 3).empirical_risk, base, 1e-13);
    EXPECT_LE(base, lloyd(PointSet::from_rows(rows), 3, LloydConfig{}, 2).empirical_risk + 1e-13);
  }
}

TEST(ExactErm, AgreesWithLloydFiftyRestarts) {
  std::mt19937_64 g(10);
  int agree = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const PointSet xs = random_sample(g, 10, 2);
    LloydConfig cfg;
    cfg.restarts = 50;
    agree += std::fabs(lloyd(xs, 3, cfg, 5).empirical_risk - exact_erm(xs, 3).empirical_risk) <= 1e-9;
  }
  EXPECT_GE(agree, 19);
}

TEST(SolveErm, PicksRegime) {
  std::mt19937_64 g(11);
  EXPECT_EQ(solve_erm(random_sample(g, 12, 2), 3, LloydConfig{}, 1).mode(), "exact");
  EXPECT_EQ(solve_erm(random_sample(g, 40, 2), 3, LloydConfig{}, 1).mode(), "lloyd");
}

TEST(ReferenceOptimum, TwoAtoms) {
  const SourceDistribution P = FiniteSupportDist::uniform(PointSet::from_rows({{-1.0}, {1.0}}));
  const auto r = reference_optimum(P, 2);
  EXPECT_TRUE(r.certified);
  EXPECT_LT(set_distance(r.codebook, Codebook::from_rows({{-1.0}, {1.0}})), 1e-15);
}

TEST(ReferenceOptimum, AssouadReturnsQSigma) {
  const auto fam = build_assouad(3, 2, 1.0, 0.25);
  for (const auto& s : balanced_sign_vectors(2)) {
    const auto r = reference_optimum(fam.distribution(s), 3);
    EXPECT_EQ(r.method, "assouad-q-sigma");
    EXPECT_LT(set_distance(r.codebook, q_sigma(fam, s)), 1e-15);
  }
}

TEST(ReferenceOptimum, MixtureNearMeans) {
  const auto mix = fixtures::small_sigma_mixture(0.01);
  ReferenceEffort e;
  e.sample_size = 50000;
  e.runs = 10;
  const auto r = reference_optimum(mix, 3, e);
  EXPECT_FALSE(r.certified);
  const Codebook means(mix.means);
  EXPECT_LE(set_distance(r.codebook, means), mix.mean_separation() / 16);
}
