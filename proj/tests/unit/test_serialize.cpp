#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "vqlab/error.hpp"
#include "vqlab/serialize.hpp"

using namespace vqlab;

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.125}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Csv, QuotesSpecialFields) {
  CsvWriter w({"a", "b"});
  w.row({"plain", "x,y"});
  w.row({"say \"hi\"", "two\nlines"});
  EXPECT_EQ(w.str(), "a,b\nplain,\"x,y\"\n\"say \"\"hi\"\"\",\"two\nlines\"\n");
  EXPECT_THROW(w.row({"only one"}), InputError);
}

TEST(ConfigHash, StableAndSensitive) {
  const json a = {{"k", 3}, {"seed", 1}};
  const json b = json::parse(R"({"seed": 1, "k": 3})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_NE(config_hash(a), config_hash(json{{"k", 3}, {"seed", 2}}));
}

TEST(DistributionJson, FiniteRoundTrip) {
  const SourceDistribution P = fixtures::six_atoms();
  const auto Q = distribution_from_json(distribution_to_json(P));
  const auto& f = std::get<FiniteSupportDist>(P);
  const auto& g = std::get<FiniteSupportDist>(Q);
  EXPECT_EQ(f.atoms.data(), g.atoms.data());
  EXPECT_EQ(f.weights, g.weights);
  EXPECT_EQ(f.radius, g.radius);
}

TEST(DistributionJson, MixtureRoundTrip) {
  const SourceDistribution P = fixtures::small_sigma_mixture(0.01);
  const auto Q = distribution_from_json(distribution_to_json(P));
  const auto& f = std::get<TruncatedGaussianMixture>(P);
  const auto& g = std::get<TruncatedGaussianMixture>(Q);
  EXPECT_EQ(f.means.data(), g.means.data());
  EXPECT_EQ(f.sigma, g.sigma);
  EXPECT_EQ(f.normalizers, g.normalizers);
}

TEST(DistributionJson, AssouadFromTau) {
  const json j = {{"kind", "assouad"}, {"k", 3}, {"d", 2}, {"M", 1.0}, {"delta", 0.25}, {"tau", {1}}};
  const auto P = distribution_from_json(j);
  EXPECT_EQ(kind_name(P), kind_name(distribution_from_json(distribution_to_json(P))));
}

TEST(DistributionJson, Rejects) {
  EXPECT_THROW(distribution_from_json(json{{"kind", "banana"}}), InputError);
  EXPECT_THROW(distribution_from_json(json{{"atoms", {{0.0}}}}), InputError);
  const json unbalanced = {{"kind", "assouad"}, {"k", 3}, {"d", 2}, {"delta", 0.25}, {"sigma", {1, 1}}};
  EXPECT_THROW(distribution_from_json(unbalanced), InputError);
}

TEST(PointsCsv, SkipsHeader) {
  const auto dir = std::filesystem::temp_directory_path() / "vqlab_serialize_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "pts.csv";
  {
    std::ofstream out(path);
    out << "x,y\n0.5, 1\n\n-2,3e-1\n";
  }
  const auto p = read_points_csv(path);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.dim(), 2u);
  EXPECT_EQ(p[1][0], -2.0);
  EXPECT_EQ(p[1][1], 0.3);

  {
    std::ofstream out(path);
    out << "1,2\n3\n";
  }
  EXPECT_THROW(read_points_csv(path), InputError);

  const json j = {{"kind", "finite"}, {"atoms_csv", "pts.csv"}};
  {
    std::ofstream out(path);
    out << "0,0\n1,0\n";
  }
  const auto P = distribution_from_json(j, dir);
  EXPECT_EQ(std::get<FiniteSupportDist>(P).atoms.size(), 2u);
  std::filesystem::remove_all(dir);
}
