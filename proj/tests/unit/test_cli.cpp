#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "auxref/cli.hpp"

namespace auxref {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string f; std::getline(ss, f, sep);) out.push_back(f);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("auxref_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, VerifyAllPasses) {
  const auto r = run({"verify", "--suite", "all", "--d", "2,4,8", "--trials", "50", "--seed", "42"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
}

TEST_F(CliTest, VerifyUnknownSuiteIsUsageError) {
  EXPECT_EQ(run({"verify", "--suite", "nosuch"}).code, 2);
}

TEST_F(CliTest, VerifyFailingToleranceExitsOne) {
  EXPECT_EQ(run({"verify", "--suite", "thm1", "--d", "4", "--trials", "3", "--tol", "0"}).code, 1);
}

TEST_F(CliTest, VerifyJsonFormat) {
  const auto r = run({"verify", "--suite", "thm1", "--d", "8", "--trials", "1", "--seed", "7",
                      "--json", path("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(path("r.json")));
  EXPECT_EQ(j.at("schema"), 1);
  EXPECT_EQ(j.at("suite"), "thm1");
  EXPECT_TRUE(j.at("checks").is_array());
  EXPECT_FALSE(j.at("checks").empty());
  EXPECT_EQ(j.at("passed"), true);
  for (const auto& c : j.at("checks")) {
    EXPECT_TRUE(c.contains("name"));
    EXPECT_TRUE(c.contains("max_error"));
    EXPECT_TRUE(c.contains("passed"));
  }
}

TEST_F(CliTest, BenchWritesCsv) {
  const auto r = run({"bench", "--d", "64", "--k", "64", "--batch", "256", "--reps", "10",
                      "--out", path("b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(path("b.csv")));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "method,d,k,batch,reps,threads,mean_ms,std_ms,checksum");
  const auto chain = split(rows[1], ',');
  const auto aux = split(rows[2], ',');
  ASSERT_EQ(chain.size(), 9u);
  ASSERT_EQ(aux.size(), 9u);
  EXPECT_EQ(chain[0], "chain");
  EXPECT_EQ(aux[0], "auxiliary");
  const double a = std::stod(chain[8]);
  const double b = std::stod(aux[8]);
  EXPECT_LE(std::abs(a - b), 1e-6 * std::max(std::abs(a), std::abs(b)));
}

TEST_F(CliTest, BenchSmokePrintsSpeedup) {
  const auto r = run({"bench", "--d", "2", "--k", "1", "--batch", "1", "--reps", "3"});
  EXPECT_EQ(r.code, 0);
  const auto pos = r.out.find("speedup chain/auxiliary: ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_GT(std::stod(r.out.substr(pos + 25)), 0.0);
}

TEST_F(CliTest, BenchRejectsFewReps) { EXPECT_EQ(run({"bench", "--reps", "1"}).code, 2); }

TEST_F(CliTest, UnwritablePathExitsOne) {
  EXPECT_EQ(run({"bench", "--d", "2", "--k", "1", "--batch", "1", "--reps", "3", "--out",
                 path("missing/dir/b.csv")})
                .code,
            1);
  EXPECT_EQ(run({"train", "--d", "4", "--steps", "2", "--out", path("missing/t.csv")}).code, 1);
}

TEST_F(CliTest, TrainReachesLowLoss) {
  const auto r = run({"train", "--d", "8", "--steps", "3000", "--lr", "0.1", "--batch", "64",
                      "--target-k", "8", "--seed", "0", "--out", path("t.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pos = r.out.find("final loss: ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LT(std::stod(r.out.substr(pos + 12)), 1e-3);
  const auto rows = lines(slurp(path("t.csv")));
  EXPECT_EQ(rows.front(), "step,loss,grad_norm");
  EXPECT_EQ(rows.size(), 3002u);
}

TEST_F(CliTest, TrainZeroStepSize) {
  ASSERT_EQ(run({"train", "--d", "4", "--steps", "1", "--lr", "0", "--out", path("t.csv")}).code,
            0);
  const auto rows = lines(slurp(path("t.csv")));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(split(rows[1], ',')[1], split(rows[2], ',')[1]);
}

TEST_F(CliTest, TrainIsDeterministic) {
  const std::vector<std::string> base{"train", "--d", "6", "--steps", "50", "--seed", "3", "--out"};
  auto a = base;
  a.push_back(path("a.csv"));
  auto b = base;
  b.push_back(path("b.csv"));
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST_F(CliTest, InvertConstrained) {
  const auto r = run({"invert", "--d", "4", "--seed", "42", "--constrained", "--tol", "1e-7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pos = r.out.find("iterations: ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LE(std::stoi(r.out.substr(pos + 12)), 10);
  EXPECT_NE(r.out.find("[00/"), std::string::npos);
}

TEST_F(CliTest, InvertOrthogonal) {
  EXPECT_EQ(run({"invert", "--d", "2", "--seed", "0", "--orthogonal"}).code, 0);
}

TEST_F(CliTest, InvertForcedNonConvergence) {
  const auto r = run({"invert", "--d", "4", "--max-iters", "1", "--tol", "1e-12"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("residual"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"nosuch"}).code, 2);
  EXPECT_EQ(run({"verify", "--bogus"}).code, 2);
  EXPECT_EQ(run({"invert", "--constrained", "--orthogonal"}).code, 2);
  EXPECT_EQ(run({"train", "--d", "abc"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

}  // namespace
}  // namespace auxref
