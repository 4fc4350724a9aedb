// Drives the built pmpnet binary end to end.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pmpnet/io.hpp"

namespace {

namespace fs = std::filesystem;

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(pmpnet::io::read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pmpnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" PMPNET_CLI "' -q " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  void write(const std::string& name, const std::string& text) const {
    pmpnet::io::write_atomic(dir_ / name, text);
  }

  std::string stderr_text() const { return pmpnet::io::read_file(dir_ / "stderr.txt"); }

  fs::path dir_;
};

constexpr const char* kQuick = R"("optimizer": {"adam_iterations": 40, "polish_iterations": 5})";

TEST_F(Cli, TrainWritesModelAndMetricsRow) {
  write("run.json", std::string(R"({"method": "method1", "problem": 1, "I": 6, "seed": 42, )") + kQuick +
                        ", \"n_time\": 10}");
  ASSERT_EQ(run("train -c run.json -o out"), 0) << stderr_text();
  EXPECT_TRUE(fs::exists(dir_ / "out/method1_ocp1_I6_seed42.json"));
  const auto rows = read_csv(dir_ / "out/metrics.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "exp");
  EXPECT_EQ(rows[1][1], "method1");
  EXPECT_EQ(rows[1][15], "42");
  ASSERT_EQ(run("train -c run.json -o out --seed 7"), 0);
  EXPECT_EQ(read_csv(dir_ / "out/metrics.csv").size(), 3u);
}

TEST_F(Cli, SameSeedGivesIdenticalModelFiles) {
  write("run.json", std::string(R"({"method": "fourier-layer", "problem": 2, "M": 3, "N": 3, "I": 4, )") +
                        kQuick + ", \"n_time\": 10}");
  ASSERT_EQ(run("train -c run.json --model-out a.json"), 0) << stderr_text();
  ASSERT_EQ(run("train -c run.json --model-out b.json"), 0);
  EXPECT_EQ(pmpnet::io::read_file(dir_ / "a.json"), pmpnet::io::read_file(dir_ / "b.json"));
}

TEST_F(Cli, ConfigErrorsExitWithTwo) {
  write("m.json", R"({"method": "method1", "problem": 1, "I": 6, "M": 4})");
  EXPECT_EQ(run("train -c m.json"), 2);
  EXPECT_NE(stderr_text().find("does not take M"), std::string::npos);

  write("u.json", R"({"method": "method1", "problem": 1, "I": 6, "optimizer": {"rate": 1}})");
  EXPECT_EQ(run("train -c u.json"), 2);
  EXPECT_NE(stderr_text().find("optimizer.rate"), std::string::npos);

  write("r.json", R"({"problem": 1, "I": 6})");
  EXPECT_EQ(run("train -c r.json"), 2);
  EXPECT_NE(stderr_text().find("'method'"), std::string::npos);

  EXPECT_EQ(run("train --method direct --problem 3 --M 4 --N 4 --I 2"), 2);
  EXPECT_EQ(run("surfaces -m missing.json"), 2);
  EXPECT_EQ(run("reproduce 29"), 2);
  EXPECT_EQ(run("train --no-such-flag"), 2);
}

TEST_F(Cli, SurfacesAndTrajectoriesAgree) {
  ASSERT_EQ(run("train --exp 20 --adam-iterations 30 --no-polish --model-out m.json"), 0) << stderr_text();
  ASSERT_EQ(run("surfaces -m m.json --out s.csv"), 0) << stderr_text();
  const auto s = read_csv(dir_ / "s.csv");
  ASSERT_EQ(s.size(), 1u + 101u * 41u);
  EXPECT_EQ(s[0], (std::vector<std::string>{"t", "x0", "u_hat", "x_hat", "lambda_hat", "u_star", "x_star",
                                            "ape_u", "ape_x"}));
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i][0] == "0") {
      EXPECT_EQ(s[i][3], s[i][1]);
    }
    if (!s[i][7].empty()) {
      EXPECT_GE(std::stod(s[i][7]), 0.0);
    }
  }

  ASSERT_EQ(run("trajectories -m m.json --x0 0,20,41 --out t.csv"), 0) << stderr_text();
  EXPECT_NE(stderr_text().find("outside"), std::string::npos);
  const auto tr = read_csv(dir_ / "t.csv");
  ASSERT_EQ(tr.size(), 1u + 3u * 101u);
  EXPECT_EQ(tr[0].back(), "extrapolated");
  // x0 = 20 is the 21st training value: rows 1 + 20·101 onward in the surface.
  for (std::size_t k = 0; k < 101; ++k) {
    auto row = tr[1 + 101 + k];
    EXPECT_EQ(row.back(), "0");
    row.pop_back();
    EXPECT_EQ(row, s[1 + 20 * 101 + k]);
  }
  EXPECT_EQ(tr[1 + 202][9], "1");
}

TEST_F(Cli, OracleWritesCsvAndSidecar) {
  ASSERT_EQ(run("oracle --problem 1 --x0 0.5,1 --n-time 20 -o o"), 0) << stderr_text();
  const auto rows = read_csv(dir_ / "o/oracle_ocp1.csv");
  EXPECT_EQ(rows.size(), 1u + 2u * 21u);
  const auto side = nlohmann::json::parse(pmpnet::io::read_file(dir_ / "o/oracle_ocp1.json"));
  ASSERT_EQ(side["solutions"].size(), 2u);
  EXPECT_NEAR(side["solutions"][1]["J_star"].get<double>(), std::tanh(1.0), 1e-15);
  EXPECT_EQ(side["solutions"][1]["source"], "closed-form");
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  const std::string cmd = "PMPNET_OUTPUT_DIR=envdir";
  const std::string full = "cd '" + dir_.string() + "' && " + cmd + " '" PMPNET_CLI "' oracle --problem 2 --x0 1 > /dev/null";
  ASSERT_EQ(std::system(full.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "envdir/oracle_ocp2.csv"));
}

TEST_F(Cli, ReproduceRowsCarryReferenceValuesAndBands) {
  const int code = run("reproduce 2 26 27 28 --adam-iterations 5 --no-polish --n-time 4 -o r");
  EXPECT_EQ(code, 4);  // exp 2 cannot meet its band after five steps
  const auto rows = read_csv(dir_ / "r/reproduce.csv");
  ASSERT_EQ(rows.size(), 5u);
  const auto& h = rows[0];
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(h.begin(), h.end(), name) - h.begin());
  };
  EXPECT_EQ(rows[1][col("paper_train_rmse_u")], "7.09e-05");
  EXPECT_EQ(rows[1][col("band")], "fail");
  EXPECT_EQ(rows[1][col("status")], "ok");
  for (std::size_t i = 2; i <= 4; ++i) EXPECT_EQ(rows[i][col("method")], "direct");
  EXPECT_EQ(rows[2][col("band")], "n/a");
  EXPECT_TRUE(fs::exists(dir_ / "r/models/exp28.json"));
}

TEST_F(Cli, ReproduceAllHasTwentyEightRows) {
  run("reproduce all --adam-iterations 1 --no-polish --n-time 2 -o r");
  EXPECT_EQ(read_csv(dir_ / "r/reproduce.csv").size(), 29u);
}

}  // namespace
