#include <gtest/gtest.h>

#include <string>

#include "awarenav/error.hpp"
#include "awarenav/scenario.hpp"

using namespace awarenav;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Config);
    return e.what();
  }
  ADD_FAILURE() << "accepted: " << text;
  return {};
}

}  // namespace

TEST(Scenario, MinimalInlineConfig) {
  const ScenarioConfig c = parse_scenario(R"({
    "name": "tiny", "map_size": [6, 4], "start": [0, 0], "goal": [5, 3],
    "pedestrians": [{"start": [3, 1], "aware": true}],
    "solver": {"k_scenarios": 50}, "sim": {"window_size": 4}
  })");
  EXPECT_EQ(c.name, "tiny");
  EXPECT_EQ(c.grid.width(), 6);
  EXPECT_EQ(c.grid.height(), 4);
  ASSERT_EQ(c.peds.size(), 1u);
  EXPECT_EQ(c.peds[0].g_true, 1);
  EXPECT_EQ(c.peds[0].kind, PedKind::RandomWalk);
  EXPECT_EQ(c.solver.k_scenarios, 50);
}

TEST(Scenario, InlineMapRows) {
  const ScenarioConfig c = parse_scenario(R"({"map": ["...", ".#.", "..."], "start": [0, 0], "goal": [2, 2], "sim": {"window_size": 3}})");
  EXPECT_EQ(c.grid.width(), 3);
  int obstacles = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) obstacles += c.grid.is_free({i, j}) ? 0 : 1;
  }
  EXPECT_EQ(obstacles, 1);
  EXPECT_FALSE(c.grid.is_free({1, 1}));
}

TEST(Scenario, SyntaxErrorsGiveLineAndColumn) {
  const std::string msg = config_error("{\n  \"start\": [0, 0],\n  \"goal\": [1 1]\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Scenario, SemanticErrorsNameTheField) {
  EXPECT_NE(config_error(R"({"map_size": [10, 10], "start": [0, 0], "goal": [10, 10]})").find("/goal"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"map_size": [10, 10], "start": [0, 0], "goal": [4, 4],
                            "pedestrians": [{"start": [2, 2], "stay_prob": 2}]})")
                .find("/pedestrians/0/stay_prob"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"map_size": [10, 10], "start": [0, 0], "goal": [4, 4], "solvr": {}})").find("/solvr"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"map_size": [10, 10], "start": [0, 0], "goal": [4, 4],
                            "pedestrians": [{"kind": "scripted", "start": [1, 1], "path": [[3, 3]]}]})")
                .find("/pedestrians/0/path"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"start": [0, 0], "goal": [4, 4]})").find("/map"), std::string::npos);
  EXPECT_NE(config_error(R"({"map_size": [10, 10], "start": [0, 0], "goal": [4, 4], "solver": {"k_scenarios": 0}})")
                .find("/solver"),
            std::string::npos);
  EXPECT_NE(config_error("[1, 2]").find("object"), std::string::npos);
}

TEST(Scenario, MissingFileIsIo) {
  try {
    load_scenario("/nonexistent/scenario.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Io);
  }
}

TEST(Scenario, ShippedScenarioLoads) {
  const ScenarioConfig c = load_scenario(std::string(AWARENAV_SOURCE_DIR) + "/scenarios/wall_gap.json");
  EXPECT_EQ(c.name, "wall_gap");
  EXPECT_EQ(c.peds.size(), 4u);
  EXPECT_EQ(c.seeds.size(), 25u);
  EXPECT_NO_THROW(c.validate());
}
