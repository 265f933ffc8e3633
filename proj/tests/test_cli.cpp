#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mjls/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = mjls::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string scenario(const std::string& name) { return std::string(MJLS_SCENARIO_DIR) + "/" + name + ".json"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("mjls_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = root_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  fs::path root_;
};

const char* kScalar = R"({
  "format_version": 1,
  "name": "scalar",
  "model": {
    "modes": [
      {"A": [[1.2]], "B": [[1.0]], "C": [[1.0], [0.0]], "D": [[0.0], [1.0]], "D1": [[1.0]]},
      {"A": [[0.6]], "B": [[0.5]], "C": [[1.0], [0.0]], "D": [[0.0], [1.0]], "D1": [[0.5]]}
    ],
    "transition": [[0.7, 0.3], [0.4, 0.6]],
    "channels": [{"stay_good": 0.9, "recover": 0.8}],
    "terminal_weight": [[0.0]]
  },
  "game": {"gamma_factor": 1.2},
  "simulation": {"x0": [1.0], "r0": 1, "steps": 30, "trials": 200, "seed": 11,
                 "disturbance": {"type": "worst_case"}},
  "sweep": {"channel": 1, "field": "recover", "grid": [0.5, 0.8, 0.95]}
})";

}  // namespace

TEST_F(CliTest, CheckPrintsExampleWitness) {
  const CliRun r = run({"check", "--scenario", scenario("fig1_blue")});
  EXPECT_EQ(r.code, mjls::cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("witness path: 1 1 1"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST_F(CliTest, CheckFailsOnBadTransitionRow) {
  std::string text = kScalar;
  text.replace(text.find("[0.7, 0.3]"), 10, "[0.7, 0.2]");
  const std::string path = write("bad.json", text);
  const CliRun r = run({"check", "--scenario", path});
  EXPECT_EQ(r.code, mjls::cli::kExitInputError);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos) << r.out;
  EXPECT_EQ(run({"solve", "--scenario", path, "--out", (root_ / "o").string()}).code, mjls::cli::kExitInputError);
}

TEST_F(CliTest, InputErrorsExitOne) {
  EXPECT_EQ(run({"solve", "--scenario", (root_ / "missing.json").string()}).code, mjls::cli::kExitInputError);
  EXPECT_EQ(run({"solve"}).code, mjls::cli::kExitInputError);
  EXPECT_EQ(run({"frobnicate", "--scenario", scenario("fig2")}).code, mjls::cli::kExitInputError);
  const CliRun r = run({"check", "--scenario", write("syntax.json", "{\n  \"name\": \"x\",\n  oops\n}")});
  EXPECT_EQ(r.code, mjls::cli::kExitInputError);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_EQ(run({"check", "--scenario", scenario("fig1_blue"), "--max-channels", "1"}).code,
            mjls::cli::kExitInputError);
}

TEST_F(CliTest, FiniteSolveOnBlueSetConverges) {
  const fs::path out = root_ / "blue";
  const CliRun r = run({"solve", "--scenario", scenario("fig1_blue"), "--horizon", "200", "--out", out.string()});
  ASSERT_EQ(r.code, mjls::cli::kExitOk) << r.err;
  const auto rows = read_csv(out / "value.csv");
  ASSERT_EQ(rows.size(), 200u);
  double prev = 0.0;
  for (const auto& row : rows) {
    EXPECT_EQ(row[2], "ok");
    const double c = std::stod(row[1]);
    EXPECT_GE(c, prev - 1e-12);
    prev = c;
  }
  EXPECT_LT(std::abs(std::stod(rows[199][1]) - std::stod(rows[150][1])), 1e-6 * prev);
  EXPECT_TRUE(fs::exists(out / "gains_1_0.csv"));
  EXPECT_TRUE(fs::exists(out / "gains_2_3.csv"));
}

TEST_F(CliTest, PoorChannelsExitTwo) {
  const fs::path out = root_ / "fig2";
  const CliRun r = run({"solve", "--scenario", scenario("fig2"), "--out", out.string()});
  EXPECT_EQ(r.code, mjls::cli::kExitAnalytic) << r.out;
  const auto rows = read_csv(out / "value.csv");
  ASSERT_FALSE(rows.empty());
  EXPECT_NE(rows.back()[2], "ok");
  EXPECT_EQ(run({"gamma-c", "--scenario", scenario("fig5"), "--out", out.string()}).code, mjls::cli::kExitAnalytic);
}

TEST_F(CliTest, EveryCommandWritesItsFiles) {
  const std::string path = write("scalar.json", kScalar);
  const fs::path out = root_ / "out";
  for (const char* cmd : {"solve", "gamma-c", "sweep", "simulate"}) {
    const CliRun r = run({cmd, "--scenario", path, "--out", out.string()});
    EXPECT_EQ(r.code, mjls::cli::kExitOk) << cmd << ": " << r.err;
  }
  for (const char* f : {"value.csv", "gains_1_0.csv", "gains_2_1.csv", "gamma_c.csv", "gamma_c_brackets.csv",
                        "sweep.csv", "trajectory.csv", "summary.csv", "summary_totals.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_EQ(read_csv(out / "value.csv").size(), 1u);
  EXPECT_EQ(read_csv(out / "trajectory.csv").size(), 31u);
  EXPECT_EQ(read_csv(out / "summary.csv").size(), 31u);
  EXPECT_EQ(read_csv(out / "sweep.csv").size(), 3u);
}

TEST_F(CliTest, OutputsDoNotDependOnThreadCount) {
  const std::string path = write("scalar.json", kScalar);
  for (const char* cmd : {"solve", "gamma-c", "sweep", "simulate"}) {
    const fs::path a = root_ / (std::string(cmd) + "_1"), b = root_ / (std::string(cmd) + "_3");
    ASSERT_EQ(run({cmd, "--scenario", path, "--out", a.string(), "--threads", "1"}).code, 0) << cmd;
    ASSERT_EQ(run({cmd, "--scenario", path, "--out", b.string(), "--threads", "3"}).code, 0) << cmd;
    for (const auto& entry : fs::directory_iterator(a))
      EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << cmd << " " << entry.path().filename();
  }
}

TEST_F(CliTest, SeedOverrideChangesTrajectory) {
  const std::string path = write("scalar.json", kScalar);
  ASSERT_EQ(run({"simulate", "--scenario", path, "--out", (root_ / "a").string(), "--seed", "1"}).code, 0);
  ASSERT_EQ(run({"simulate", "--scenario", path, "--out", (root_ / "b").string(), "--seed", "2"}).code, 0);
  EXPECT_NE(slurp(root_ / "a" / "summary.csv"), slurp(root_ / "b" / "summary.csv"));
}
