#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "mjls/scenario.hpp"

using namespace mjls;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "format_version": 1,
  "name": "small",
  "model": {
    "modes": [
      {"A": [[0.5]], "B": [[1.0]], "C": [[1.0], [0.0]], "D": [[0.0], [1.0]], "D1": [[1.0]]}
    ],
    "transition": [[1.0]],
    "channels": [{"stay_good": 0.9, "recover": 0.8}],
    "terminal_weight": [[0.0]]
  },
  "game": {"gamma": 3.0, "horizon": 20},
  "simulation": {"x0": [1.0], "r0": 1, "steps": 10, "trials": 4, "seed": 7,
                 "disturbance": {"type": "table", "samples": [[0.1], [0.2]]}}
})";

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST(Scenario, ParsesSmallFile) {
  const Scenario s = parse_scenario(kSmall);
  EXPECT_EQ(s.name, "small");
  EXPECT_EQ(s.model.num_modes(), 1);
  EXPECT_EQ(*s.game.gamma, 3.0);
  EXPECT_EQ(*s.game.horizon, 20);
  ASSERT_TRUE(s.simulation.has_value());
  EXPECT_EQ(s.simulation->r0, 0);
  EXPECT_EQ(s.simulation->seed, 7u);
  EXPECT_EQ(s.simulation->disturbance.kind, DisturbanceSpec::Kind::Table);
  EXPECT_EQ(s.simulation->disturbance.samples.size(), 2u);
  EXPECT_EQ(s.output_directory, ".");
}

TEST(Scenario, EveryShippedScenarioRoundTrips) {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(MJLS_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    const Scenario a = load_scenario(entry.path().string());
    const Scenario b = parse_scenario(serialize_scenario(a));
    EXPECT_TRUE(same_scenario(a, b)) << entry.path();
    EXPECT_EQ(serialize_scenario(a), serialize_scenario(b)) << entry.path();
  }
  EXPECT_EQ(seen, 6);
}

TEST(Scenario, SameScenarioIsExact) {
  const Scenario a = parse_scenario(kSmall);
  const Scenario b = parse_scenario(replace(kSmall, "\"gamma\": 3.0", "\"gamma\": 3.0000000000000004"));
  EXPECT_FALSE(same_scenario(a, b));
  EXPECT_TRUE(same_scenario(a, parse_scenario(serialize_scenario(a))));
}

TEST(Scenario, SyntaxErrorReportsLineAndColumn) {
  const std::string msg = error_of(replace(kSmall, "\"transition\": [[1.0]],", "\"transition\": [[1.0]]"));
  EXPECT_NE(msg.find("line 9, column"), std::string::npos) << msg;
}

TEST(Scenario, DimensionErrorPointsAtField) {
  const std::string msg = error_of(replace(kSmall, "\"D1\": [[1.0]]", "\"D1\": [[1.0], [2.0]]"));
  EXPECT_NE(msg.find("line 6 (/model/modes/0/D1)"), std::string::npos) << msg;
}

TEST(Scenario, ProbabilityOutOfRangeIsRejected) {
  const std::string msg = error_of(replace(kSmall, "\"stay_good\": 0.9", "\"stay_good\": 1.5"));
  EXPECT_NE(msg.find("line 9 (/model/channels/0/stay_good)"), std::string::npos) << msg;
}

TEST(Scenario, UnknownFieldIsRejected) {
  const std::string msg = error_of(replace(kSmall, "\"horizon\": 20", "\"horizon\": 20, \"horizn\": 3"));
  EXPECT_NE(msg.find("horizn"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 12"), std::string::npos) << msg;
}

TEST(Scenario, VersionAndSeedChecks) {
  EXPECT_NE(error_of(replace(kSmall, "\"format_version\": 1", "\"format_version\": 2")), "");
  EXPECT_NE(error_of(replace(kSmall, "\"seed\": 7", "\"seed\": -7")), "");
  EXPECT_NE(error_of(replace(kSmall, "\"r0\": 1", "\"r0\": 2")), "");
  EXPECT_NE(error_of(replace(kSmall, "\"horizon\": 20", "\"horizon\": 0")), "");
}

TEST(Scenario, InfiniteHorizonSpellings) {
  EXPECT_FALSE(parse_scenario(replace(kSmall, "\"horizon\": 20", "\"horizon\": \"infinite\"")).game.horizon);
  EXPECT_FALSE(parse_scenario(replace(kSmall, ", \"horizon\": 20", "")).game.horizon);
}

TEST(Scenario, MissingFileIsAnError) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ScenarioError);
}

TEST(Scenario, TableDisturbanceIsZeroPastItsEnd) {
  const Scenario s = parse_scenario(kSmall);
  const DisturbancePolicy p = make_disturbance(s.simulation->disturbance, 5, 1);
  ASSERT_EQ(std::get<WaveformDisturbance>(p).samples.size(), 2u);
  const auto rec = simulate(s.model, GainSchedule(solve_finite_horizon(s.model, 3.0, 5)), p,
                            SimulationConfig{s.simulation->x0, 0, 5, 1});
  EXPECT_EQ(rec.steps[1].disturbance(0), 0.2);
  EXPECT_EQ(rec.steps[4].disturbance(0), 0.0);
}
