#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "awarenav/belief.hpp"
#include "awarenav/despot.hpp"
#include "awarenav/scenario.hpp"
#include "awarenav/tracker.hpp"

namespace awarenav {

/// True pedestrian in the simulated world.
struct WorldPed {
  int id = 0;
  PedKind kind = PedKind::RandomWalk;
  GridIndex pos;
  int g_true = -1;
  bool active = true;  // false once the pedestrian has left the map
  bool gaze_now = false;
  std::vector<GridIndex> route;  // scripted: start followed by the path
  std::size_t route_pos = 0;
  int route_dir = 1;
  bool loop = false;  // walk the route back and forth instead of leaving
  double speed = 1.0;
  double residue = 0.0;
  double stay_prob = 0.5;
  bool can_exit = false;
  std::vector<std::pair<int, bool>> gaze_script;
  /// Live overrides: walk to a target cell, force the gaze signal.
  std::optional<GridIndex> target;
  std::optional<bool> gaze_override;
};

/// Where a pedestrian may step this tick. `blocked` holds cells taken by the
/// robot and other pedestrians; aware pedestrians also avoid `robot_next`.
struct PedStepContext {
  const OccupancyGrid* grid = nullptr;
  GridIndex robot;
  GridIndex robot_next;
  std::vector<GridIndex> blocked;
};

/// Advance one pedestrian by one tick. Scripted pedestrians follow their path
/// (holding position when the next cell is blocked) and leave the map at the
/// end unless looping; random walkers stay with stay_prob, else step to a
/// uniformly chosen open 8-neighbor; a boxed-in walker stays. With can_exit,
/// off-map neighbors count as options and taking one removes the walker.
void pedestrian_step(WorldPed& ped, const PedStepContext& ctx, Rng& rng);

struct SenseResult {
  std::vector<Detection> vision;
  std::vector<Detection> laser;
  std::vector<int> seen_ids;  // pedestrians inside the sensor sector
  int clutter = 0;
};

/// True when `target` lies inside the sensor sector of a robot at `robot`
/// facing `heading` (a unit vector).
bool in_sensor_sector(Vec2 robot, Vec2 heading, Vec2 target, const SensorSpec& sensors) noexcept;

/// Simulated detector outputs for one tick. Pedestrians carry their gaze
/// indicator in gaze_now, which this call refreshes.
SenseResult sense(std::vector<WorldPed>& peds, GridIndex robot, Vec2 heading, double resolution,
                  const SensorSpec& sensors, int tick, double timestamp, Rng& rng);

/// True iff the last m actions were all Wait.
bool avoid_trigger(const std::vector<LocalAction>& history, int m);

struct PedRecord {
  int id = 0;
  GridIndex cell;
  int g_true = -1;
  bool active = true;
  double distance = 0.0;  // meters to the robot when the action was chosen
  bool latched = false;   // a latched track sits on this pedestrian
  std::optional<double> aware_fraction;
};

struct StepRecord {
  int tick = 0;
  GridIndex robot_cell;  // after the action
  int path_index = 0;
  LocalAction action = LocalAction::Go;
  bool replanned = false;
  double reward = 0.0;
  double root_lower = 0.0;
  double root_upper = 0.0;
  std::vector<PedRecord> peds;
  bool collision = false;
  bool reached = false;
};

struct Metrics {
  bool reached = false;
  bool collided = false;
  int ticks = 0;
  std::optional<int> steps_to_goal;
  std::optional<double> min_distance;  // closest approach over the episode, meters
  int replans = 0;
  std::vector<double> wait_dist_aware;
  std::vector<double> wait_dist_nonaware;
};

/// Recompute the metrics from the records alone.
Metrics compute_metrics(const std::vector<StepRecord>& records);

struct EpisodeLog {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<StepRecord> records;
  Metrics metrics;
  std::string end_reason;  // goal, collision, timeout
};

std::string to_json_line(const StepRecord& r);
/// One StepRecord per line.
std::string to_json_lines(const EpisodeLog& log);

/// The executive loop, one tick per step() call: pedestrians move, sensors
/// fire, the tracker and belief update, the solver picks an action, and the
/// robot acts. Deterministic in (config, seed, applied commands).
class EpisodeRunner {
 public:
  EpisodeRunner(ScenarioConfig config, std::uint64_t seed);

  bool done() const noexcept { return done_; }
  const StepRecord& step();

  int tick() const noexcept { return tick_; }
  GridIndex robot_cell() const noexcept { return robot_; }
  int path_index() const noexcept { return path_index_; }
  const GlobalPath& path() const noexcept { return path_; }
  const std::vector<WorldPed>& peds() const noexcept { return peds_; }
  const TrackerBank& tracker() const noexcept { return tracker_; }
  const ScenarioConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<StepRecord>& records() const noexcept { return records_; }
  const std::string& end_reason() const noexcept { return end_reason_; }
  int tick_cap() const noexcept { return tick_cap_; }
  const SolveResult& last_solve() const noexcept { return last_solve_; }

  /// Belief marginals keyed by the world pedestrian each belief slot is
  /// attached to (nullopt for pedestrians outside the belief).
  std::vector<std::optional<PedBeliefSummary>> belief_by_ped() const;

  /// Live commands; applied between ticks. Return an empty string on
  /// success, else the rejection reason.
  std::string set_ped_target(int id, GridIndex cell);
  std::string set_gaze_override(int id, bool on);

  EpisodeLog log() const;

 private:
  struct BeliefKey {
    GridIndex origin;
    int replans = 0;
    std::vector<std::pair<int, bool>> tracks;
    friend bool operator==(const BeliefKey&, const BeliefKey&) = default;
  };

  Vec2 heading() const;
  std::vector<std::size_t> belief_tracks(const LocalWindow& win) const;
  /// Index of the nearest active pedestrian within the association gate.
  std::optional<std::size_t> ped_near(Vec2 pos) const;
  WorldPed* find_ped(int id);

  ScenarioConfig config_;
  std::uint64_t seed_;
  GlobalPath path_;
  int path_index_ = 0;
  GridIndex robot_;
  std::vector<WorldPed> peds_;
  TrackerBank tracker_;
  std::optional<ParticleBelief> belief_;
  std::optional<BeliefKey> belief_key_;
  std::vector<int> belief_track_ids_;
  std::vector<LocalAction> history_;
  std::optional<LocalAction> last_model_action_;
  SolveResult last_solve_;
  std::vector<StepRecord> records_;
  int tick_ = 0;
  int tick_cap_ = 0;
  int replans_ = 0;
  bool done_ = false;
  std::string end_reason_;
};

EpisodeLog run_episode(const ScenarioConfig& config, std::uint64_t seed);

/// Episodes for every seed, spread over `threads` workers (0 = hardware
/// concurrency). Output order follows `seeds` regardless of scheduling.
std::vector<EpisodeLog> run_episodes(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
                                     unsigned threads = 0);

}  // namespace awarenav
