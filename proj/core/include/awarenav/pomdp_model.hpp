#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "awarenav/grid.hpp"
#include "awarenav/mdp_planner.hpp"
#include "awarenav/rng.hpp"

namespace awarenav {

enum class LocalAction : std::uint8_t { Go, Wait, Avoid };

/// Also the tie-break order: Go before Wait before Avoid.
inline constexpr std::array<LocalAction, 3> kLocalActions = {LocalAction::Go, LocalAction::Wait, LocalAction::Avoid};

std::string_view to_string(LocalAction a) noexcept;
std::optional<LocalAction> parse_local_action(std::string_view s) noexcept;

struct PedState {
  GridIndex pos;
  int g = -1;  // awareness, -1 unaware / +1 aware

  friend bool operator==(const PedState&, const PedState&) = default;
};

struct PomdpState {
  int robot_path_index = 0;
  std::vector<PedState> peds;
  int step = 0;

  friend bool operator==(const PomdpState&, const PomdpState&) = default;
};

struct LocalObservation {
  GridIndex robot_cell;
  std::vector<std::optional<GridIndex>> ped_cells;
  std::vector<bool> gaze_flags;

  friend bool operator==(const LocalObservation&, const LocalObservation&) = default;

  /// Compact exact encoding, used as the branch key in the search tree.
  std::vector<std::int32_t> key() const;
};

enum class CollisionShape : std::uint8_t { Step, LinearRamp };

/// When the proximity penalty applies. Approach charges only steps on which
/// the robot itself moved into the radius; Always charges every step. A
/// pedestrian standing on the robot's cell is penalized in both modes.
enum class ProximityRule : std::uint8_t { Approach, Always };

struct RewardParams {
  double w_g = 1.0;
  double w_c = 1.0;
  double w_t = 1.0;
  double r_goal = 1000.0;
  double r_collision = -500.0;
  double r_time = -1.0;
  double avoid_cost = -5.0;
  double rho_aware = 1.125;     // meters, 1.5 cells at 0.75 m
  double rho_nonaware = 1.875;  // meters, 2.5 cells
  CollisionShape shape = CollisionShape::Step;
  ProximityRule proximity = ProximityRule::Approach;

  void validate() const;
};

/// rho_aware for g = +1, rho_nonaware for g = -1; InvalidAwareness otherwise.
double collision_radius(int g, const RewardParams& params);

/// One tick of reward: time, goal on arrival, the Avoid surcharge, and the
/// collision term over `peds` measured from the robot's cell after acting.
double tick_reward(const RewardParams& params, LocalAction a, bool moved, bool reached, GridIndex robot,
                   const std::vector<PedState>& peds, double resolution);

struct TransitionParams {
  double ped_stay_prob = 0.5;
  /// Aware pedestrians never step onto the robot's cell or its Go target.
  bool aware_avoidance = true;

  double ped_move_prob() const noexcept { return 1.0 - ped_stay_prob; }
};

struct ObservationParams {
  double p_miss = 0.05;
  double p_noise = 0.1;
  double p_gfn = 0.1;
  double fov_deg = 270.0;
  double range_m = 5.0;
};

struct ModelParams {
  RewardParams reward;
  TransitionParams transition;
  ObservationParams observation;
  double gamma = 0.95;
  int step_cap = 1000;
};

/// Outcome distribution of one pedestrian over its cell for a single tick.
struct MoveDistribution {
  std::array<std::pair<GridIndex, double>, 9> outcomes{};
  int size = 0;

  double probability_of(GridIndex cell) const noexcept;
  GridIndex sample(double u) const noexcept;
};

struct StepOutcome {
  PomdpState next;
  double reward = 0.0;
  LocalObservation obs;
  bool terminal = false;
};

/// Local-planner POMDP closed over one global path and one local window.
/// The robot state is an index along the path; pedestrians live on the free
/// cells of the window. Immutable after construction.
class PomdpModel {
 public:
  PomdpModel(GlobalPath path, LocalWindow window, ModelParams params = {});

  const GlobalPath& path() const noexcept { return path_; }
  const LocalWindow& window() const noexcept { return window_; }
  const ModelParams& params() const noexcept { return params_; }
  double resolution() const noexcept { return path_.resolution; }

  int last_index() const noexcept { return static_cast<int>(path_.waypoints.size()) - 1; }
  GridIndex robot_cell(int path_index) const;
  GridIndex robot_cell(const PomdpState& s) const { return robot_cell(s.robot_path_index); }
  /// Cell the robot would enter on Go (itself at the end of the path).
  GridIndex go_target(int path_index) const;
  /// Unit heading along the path at an index; the last segment is reused at
  /// the goal.
  Vec2 heading(int path_index) const;

  bool window_free(GridIndex c) const noexcept;
  /// In-window free 8-neighbors in GlobalAction order.
  int free_neighbors(GridIndex c, std::array<GridIndex, 8>& out) const noexcept;

  bool visible(int path_index, GridIndex ped) const noexcept;

  bool is_terminal(const PomdpState& s) const noexcept;
  double collision_radius(int g) const { return awarenav::collision_radius(g, params_.reward); }

  MoveDistribution ped_move_distribution(const PomdpState& s, std::size_t ped) const;

  PomdpState transition(const PomdpState& s, LocalAction a, Rng& rng) const;
  LocalObservation observe(const PomdpState& s_next, LocalAction a, Rng& rng) const;
  double obs_likelihood(const PomdpState& s_next, LocalAction a, const LocalObservation& o) const;
  double reward(const PomdpState& s, LocalAction a, const PomdpState& s_next) const;

  /// transition + reward + observe with one generator; terminal states
  /// self-loop with zero reward.
  StepOutcome step(const PomdpState& s, LocalAction a, Rng& rng) const;

  /// Rollout policy used for the lower bound: Go unless an unaware
  /// pedestrian is within rho_nonaware of the Go target.
  LocalAction default_action(const PomdpState& s) const;

 private:
  GlobalPath path_;
  LocalWindow window_;
  ModelParams params_;
};

}  // namespace awarenav
