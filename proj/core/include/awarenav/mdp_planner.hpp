#pragma once

#include <optional>
#include <vector>

#include "awarenav/grid.hpp"

namespace awarenav {

struct MdpParams {
  double gamma = 0.95;
  double epsilon_vi = 1e-4;
  double step_reward = -1.0;
  double goal_reward = 100.0;
  /// 0 selects 10 * (width + height).
  int max_iterations = 0;

  void validate() const;
  int iteration_cap(const OccupancyGrid& grid) const noexcept {
    return max_iterations > 0 ? max_iterations : 10 * (grid.width() + grid.height());
  }
};

struct ValueField {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major; obstacle cells hold 0
  int iterations_used = 0;
  /// Max-norm change of every sweep, in order. The last entry is the
  /// residual at termination.
  std::vector<double> residuals;

  double at(GridIndex idx) const { return values[static_cast<std::size_t>(idx.j * width + idx.i)]; }
  double final_residual() const noexcept { return residuals.empty() ? 0.0 : residuals.back(); }
};

struct PolicyField {
  int width = 0;
  int height = 0;
  std::vector<std::optional<GlobalAction>> actions;  // nullopt exactly on obstacles

  const std::optional<GlobalAction>& at(GridIndex idx) const {
    return actions[static_cast<std::size_t>(idx.j * width + idx.i)];
  }
  bool in_bounds(GridIndex idx) const noexcept {
    return idx.i >= 0 && idx.j >= 0 && idx.i < width && idx.j < height;
  }
};

struct GlobalPath {
  std::vector<GridIndex> waypoints;
  double resolution = OccupancyGrid::kDefaultResolution;

  std::size_t hops() const noexcept { return waypoints.empty() ? 0 : waypoints.size() - 1; }
};

struct SmoothPath {
  std::vector<Vec2> samples;
  double sample_spacing = 0.0;
};

struct MdpSolution {
  ValueField values;
  PolicyField policy;
};

/// Synchronous value iteration over the 8-connected grid. Blocked moves
/// self-loop with step_reward; the goal is absorbing with value goal_reward.
/// Human cells are treated as free (static planning). Throws InvalidGoal for
/// an occupied goal and EmptyWorld when no cell is free.
MdpSolution value_iteration(const OccupancyGrid& grid, GridIndex goal, const MdpParams& params = {});

/// Greedy policy rollout from start. Throws Unreachable on a cycle, on an
/// undefined policy cell, or when max_len moves are exceeded.
GlobalPath extract_path(const PolicyField& policy, GridIndex start, GridIndex goal, int max_len,
                        double resolution = OccupancyGrid::kDefaultResolution);

/// value_iteration + extract_path on the static map.
GlobalPath plan_path(const OccupancyGrid& grid, GridIndex start, GridIndex goal, const MdpParams& params = {});

/// Plan on a grid carrying Human overlays, which block like obstacles.
/// Throws Unreachable when the overlay seals the goal off.
GlobalPath replan(const OccupancyGrid& grid_with_dynamic, GridIndex start, GridIndex goal,
                  const MdpParams& params = {});

/// Natural cubic spline x(t), y(t) through a knot sequence, with t the
/// cumulative chord length.
class ChordSpline {
 public:
  explicit ChordSpline(std::vector<Vec2> knots);

  double length() const noexcept { return params_.empty() ? 0.0 : params_.back(); }
  const std::vector<double>& knot_params() const noexcept { return params_; }
  Vec2 at(double t) const;

 private:
  double eval(const std::vector<double>& y, const std::vector<double>& m, double t) const;

  std::vector<Vec2> knots_;
  std::vector<double> params_;
  std::vector<double> xs_, ys_, mx_, my_;  // knot values and second derivatives
};

/// Natural cubic spline through the waypoint cell centers, parameterized by
/// cumulative chord length and resampled every sample_spacing meters. The
/// final waypoint is always the last sample.
SmoothPath smooth_path(const GlobalPath& path, double sample_spacing);

}  // namespace awarenav
