#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(VQLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vqlab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path config(const json& j, const std::string& name = "config.json") {
    const auto p = dir_ / name;
    std::ofstream(p) << j.dump();
    return p;
  }

  fs::path dir_;
};

const json kSixAtoms = {
    {"kind", "finite"},
    {"radius", 1.0},
    {"atoms",
     {{0.0, 0.6}, {0.0, 0.8}, {-0.5196152422706632, -0.3}, {-0.6928203230275509, -0.4},
      {0.5196152422706632, -0.3}, {0.6928203230275509, -0.4}}}};

}  // namespace

TEST_F(Cli, OracleOnThreePoints) {
  const auto cfg = config({{"points", {{0.0}, {1.0}, {2.0}}}, {"k", 2}});
  const auto r = run("oracle --config " + cfg.string() + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j.at("risk").get<double>(), 1.0 / 6.0, 1e-15);
  EXPECT_EQ(j.at("tool_version"), "0.1.0");
  EXPECT_EQ(j.at("config_hash").get<std::string>().size(), 16u);
  EXPECT_TRUE(fs::exists(dir_ / "oracle.json"));
}

TEST_F(Cli, UsageErrors) {
  const auto bad_key = config({{"points", {{0.0}, {1.0}}}, {"k", 2}, {"bogus", 1}});
  EXPECT_EQ(run("oracle --config " + bad_key.string()).code, 2);
  const auto ok = config({{"points", {{0.0}, {1.0}, {2.0}}}, {"k", 2}}, "ok.json");
  EXPECT_EQ(run("oracle --config " + ok.string() + " --no-such-flag").code, 2);
  EXPECT_EQ(run("oracle --config " + (dir_ / "missing.json").string()).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  const auto k1 = config({{"points", {{0.0}, {1.0}}}, {"k", 1}}, "k1.json");
  EXPECT_EQ(run("oracle --config " + k1.string()).code, 2);
  const auto too_big = config({{"points", json::array()}, {"k", 3}}, "big.json");
  EXPECT_EQ(run("oracle --config " + too_big.string()).code, 2);
}

TEST_F(Cli, DiagnoseFiniteFixture) {
  const auto cfg = config({{"distribution", kSixAtoms}, {"k", 3}});
  const auto r = run("diagnose --config " + cfg.string() + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto csv = slurp(dir_ / "p_curve.csv");
  std::istringstream lines(csv);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  EXPECT_EQ(header.rfind("t,estimate,stderr,slope_bound_t", 0), 0u);
  EXPECT_EQ(first.rfind("0,0,0,0,", 0), 0u) << first;
  const auto report = json::parse(slurp(dir_ / "margin_report.json"));
  EXPECT_TRUE(report.contains("config_hash"));
}

TEST_F(Cli, RateRecordCount) {
  const auto cfg = config({{"distribution", kSixAtoms}, {"k", 3}, {"n_grid", {16, 32}}, {"reps", 8}, {"bootstrap", 20}});
  const auto r = run("rate --config " + cfg.string() + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto csv = slurp(dir_ / "rate_records.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 8);
  const auto few = config({{"distribution", kSixAtoms}, {"k", 3}, {"n_grid", {16, 32}}, {"reps", 4}}, "few.json");
  EXPECT_EQ(run("rate --config " + few.string() + " --out " + dir_.string()).code, 2);
}

TEST_F(Cli, RateRefusalExitCode) {
  const json disc = {{"kind", "mixture"}, {"means", {{0.0, 0.0}}}, {"sigma", 100.0}, {"radius", 1.0}};
  const auto cfg = config({{"distribution", disc},
                           {"k", 2},
                           {"n_grid", {16, 32}},
                           {"reps", 8},
                           {"reference", {{"runs", 2}, {"sample_size", 20000}, {"risk_draws", 20000}}},
                           {"margin", {{"draws", 20000}}}});
  const auto r = run("rate --config " + cfg.string() + " --out " + dir_.string());
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(fs::exists(dir_ / "margin_report.json"));
}

TEST_F(Cli, MixtureCheck) {
  const json mix = {{"kind", "mixture"},
                    {"means", {{0.0, 0.5}, {-0.4330127018922193, -0.25}, {0.4330127018922193, -0.25}}},
                    {"sigma", 0.01},
                    {"radius", 1.0}};
  const auto cfg = config({{"distribution", mix}});
  const auto r = run("mixture-check --config " + cfg.string() + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = json::parse(slurp(dir_ / "mixture_check.json"));
  EXPECT_TRUE(j.contains("config_hash"));
}

TEST_F(Cli, ThreadCountDoesNotChangeBytes) {
  const auto cfg = config({{"distribution", kSixAtoms}, {"k", 3}, {"n_grid", {16, 32}}, {"reps", 8}, {"bootstrap", 20}});
  const auto a = dir_ / "a";
  const auto b = dir_ / "b";
  ASSERT_EQ(run("rate --config " + cfg.string() + " --seed 11 --threads 1 --out " + a.string()).code, 0);
  ASSERT_EQ(run("rate --config " + cfg.string() + " --seed 11 --threads 3 --out " + b.string()).code, 0);
  EXPECT_EQ(slurp(a / "rate_records.csv"), slurp(b / "rate_records.csv"));
  EXPECT_EQ(slurp(a / "rate_summary.json"), slurp(b / "rate_summary.json"));
  const auto c = dir_ / "c";
  ASSERT_EQ(run("rate --config " + cfg.string() + " --seed 12 --threads 1 --out " + c.string()).code, 0);
  EXPECT_NE(slurp(a / "rate_records.csv"), slurp(c / "rate_records.csv"));
}

TEST_F(Cli, ShippedConfigsRun) {
  const fs::path configs = VQLAB_CONFIG_DIR;
  const std::pair<const char*, const char*> cases[] = {
      {"oracle", "oracle.json"}, {"mixture-check", "mixture_check.json"}, {"fit", "fit_mixture.json"}};
  for (const auto& [sub, name] : cases) {
    const auto r = run(std::string(sub) + " --config " + (configs / name).string() + " --out " + dir_.string());
    EXPECT_EQ(r.code, 0) << name;
  }
}
