#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "awarenav/belief.hpp"
#include "awarenav/despot.hpp"
#include "awarenav/grid.hpp"
#include "awarenav/mdp_planner.hpp"
#include "awarenav/pomdp_model.hpp"
#include "awarenav/tracker.hpp"

namespace awarenav {

enum class PedKind : std::uint8_t { ScriptedPath, RandomWalk };

struct PedestrianSpec {
  int id = 0;
  PedKind kind = PedKind::RandomWalk;
  GridIndex start;
  std::vector<GridIndex> path;  // scripted only; starts after `start`
  bool loop = false;            // scripted: restart at the end instead of leaving the map
  int g_true = -1;
  /// When set, g_true is redrawn per episode: aware with this probability.
  std::optional<double> aware_prob;
  /// (tick, gaze) pairs; from each listed tick on, gaze follows the flag.
  std::vector<std::pair<int, bool>> gaze_script;
  double speed = 1.0;  // cells per tick, at most 1
  double stay_prob = 0.5;
  bool can_exit = false;  // random walk: a border step may leave the map
};

struct SensorSpec {
  double fov_deg = 270.0;
  double range_m = 5.0;
  double vision_sigma_m = 0.05;
  double laser_sigma_m = 0.03;
  double gaze_false_neg = 0.0;
  double clutter_rate = 0.0;  // mean spurious laser returns per tick
};

struct SimParams {
  int window_size = 10;
  /// Consecutive Waits that trigger a replan around pedestrians.
  int stuck_waits = 5;
  /// 0 selects 10 x the shortest-path hop count.
  int tick_cap = 0;
  /// Simulated seconds per tick: one 0.75 m cell at 0.22 m/s.
  double tick_seconds = 0.75 / 0.22;
};

struct ScenarioConfig {
  std::string name = "scenario";
  OccupancyGrid grid{10, 10};
  GridIndex start;
  GridIndex goal;
  std::vector<PedestrianSpec> peds;
  SensorSpec sensors;
  MdpParams mdp;
  ModelParams model;
  DespotParams solver;
  BeliefParams belief;
  TrackerParams tracker;
  SimParams sim;
  std::vector<std::uint64_t> seeds;

  /// Cross-field checks (cells in bounds and free, scripted paths
  /// 8-connected, probabilities in range). Throws Config.
  void validate() const;
};

/// Parse a scenario from JSON text. Relative map paths resolve against
/// base_dir. Syntax errors report line and column; semantic errors name the
/// offending field as a JSON pointer. Throws Config.
ScenarioConfig parse_scenario(std::string_view json_text, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);

}  // namespace awarenav
