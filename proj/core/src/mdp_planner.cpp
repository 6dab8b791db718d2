#include "awarenav/mdp_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "awarenav/error.hpp"

namespace awarenav {

void MdpParams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(Errc::InvalidArgument, "gamma must lie in (0, 1)");
  if (!(epsilon_vi > 0.0)) throw Error(Errc::InvalidArgument, "epsilon_vi must be positive");
  if (max_iterations < 0) throw Error(Errc::InvalidArgument, "max_iterations must be non-negative");
}

MdpSolution value_iteration(const OccupancyGrid& grid, GridIndex goal, const MdpParams& params) {
  params.validate();
  if (!grid.is_free(goal)) throw Error(Errc::InvalidGoal, "goal cell is occupied or out of bounds");
  if (grid.free_count() == 0) throw Error(Errc::EmptyWorld, "grid has no free cells");

  const std::size_t n = grid.cell_count();
  const std::size_t goal_k = grid.linear(goal);

  // successor[k * 8 + a] is the cell reached from k under action a.
  std::vector<std::size_t> successor(n * kGlobalActions.size());
  std::vector<std::size_t> free_cells;
  free_cells.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const GridIndex c = grid.unlinear(k);
    if (!grid.is_free(c)) continue;
    free_cells.push_back(k);
    for (std::size_t a = 0; a < kGlobalActions.size(); ++a) {
      const GridIndex t = step(c, kGlobalActions[a]);
      successor[k * 8 + a] = grid.is_free(t) ? grid.linear(t) : k;
    }
  }

  ValueField vf;
  vf.width = grid.width();
  vf.height = grid.height();
  vf.values.assign(n, 0.0);
  vf.values[goal_k] = params.goal_reward;

  auto backup = [&](const std::vector<double>& v, std::size_t k) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < 8; ++a) {
      best = std::max(best, params.step_reward + params.gamma * v[successor[k * 8 + a]]);
    }
    return best;
  };

  const int cap = params.iteration_cap(grid);
  std::vector<double> next = vf.values;
  for (int it = 0; it < cap; ++it) {
    double residual = 0.0;
    for (std::size_t k : free_cells) {
      if (k == goal_k) continue;
      next[k] = backup(vf.values, k);
      residual = std::max(residual, std::abs(next[k] - vf.values[k]));
    }
    vf.values.swap(next);
    vf.residuals.push_back(residual);
    vf.iterations_used = it + 1;
    if (residual < params.epsilon_vi) break;
  }

  PolicyField pf;
  pf.width = grid.width();
  pf.height = grid.height();
  pf.actions.assign(n, std::nullopt);
  for (std::size_t k : free_cells) {
    std::size_t best_a = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < 8; ++a) {
      const double q = params.step_reward + params.gamma * vf.values[successor[k * 8 + a]];
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    pf.actions[k] = kGlobalActions[best_a];
  }
  return {std::move(vf), std::move(pf)};
}

GlobalPath extract_path(const PolicyField& policy, GridIndex start, GridIndex goal, int max_len, double resolution) {
  if (!policy.in_bounds(start) || !policy.at(start)) throw Error(Errc::Unreachable, "start cell is not free");
  if (!policy.in_bounds(goal) || !policy.at(goal)) throw Error(Errc::Unreachable, "goal cell is not free");

  GlobalPath path;
  path.resolution = resolution;
  path.waypoints.push_back(start);
  std::set<GridIndex> visited{start};
  GridIndex cur = start;
  while (cur != goal) {
    if (static_cast<int>(path.waypoints.size()) > max_len) {
      throw Error(Errc::Unreachable, "path exceeds " + std::to_string(max_len) + " moves");
    }
    const auto& a = policy.at(cur);
    if (!a) throw Error(Errc::Unreachable, "policy undefined along path");
    const GridIndex next = step(cur, *a);
    if (!policy.in_bounds(next) || !policy.at(next) || !visited.insert(next).second) {
      throw Error(Errc::Unreachable, "policy cycles before reaching the goal");
    }
    path.waypoints.push_back(next);
    cur = next;
  }
  return path;
}

GlobalPath plan_path(const OccupancyGrid& grid, GridIndex start, GridIndex goal, const MdpParams& params) {
  if (!grid.is_free(start)) throw Error(Errc::InvalidArgument, "start cell is occupied or out of bounds");
  const MdpSolution sol = value_iteration(grid, goal, params);
  return extract_path(sol.policy, start, goal, static_cast<int>(grid.cell_count()), grid.resolution());
}

GlobalPath replan(const OccupancyGrid& grid_with_dynamic, GridIndex start, GridIndex goal, const MdpParams& params) {
  OccupancyGrid blocked = grid_with_dynamic.humans_as_obstacles();
  // The robot stands on its own cell; an overlay there must not strand it.
  if (grid_with_dynamic.in_bounds(start) && grid_with_dynamic.at(start) == Occupancy::Human) {
    blocked.set(start, Occupancy::Free);
  }
  if (!blocked.is_free(goal)) throw Error(Errc::Unreachable, "goal is covered by the dynamic overlay");
  return plan_path(blocked, start, goal, params);
}

ChordSpline::ChordSpline(std::vector<Vec2> knots) : knots_(std::move(knots)) {
  const std::size_t n = knots_.size();
  if (n == 0) throw Error(Errc::InvalidArgument, "spline needs at least one knot");
  params_.resize(n, 0.0);
  xs_.resize(n);
  ys_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs_[k] = knots_[k].x;
    ys_[k] = knots_[k].y;
    if (k > 0) {
      const double h = distance(knots_[k - 1], knots_[k]);
      if (!(h > 0.0)) throw Error(Errc::InvalidArgument, "spline knots must be distinct");
      params_[k] = params_[k - 1] + h;
    }
  }

  // Thomas algorithm on the interior second derivatives; M_0 = M_{n-1} = 0.
  auto solve = [&](const std::vector<double>& y) {
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;
    const std::size_t inner = n - 2;
    std::vector<double> diag(inner), upper(inner), rhs(inner);
    for (std::size_t r = 0; r < inner; ++r) {
      const std::size_t k = r + 1;
      const double h0 = params_[k] - params_[k - 1];
      const double h1 = params_[k + 1] - params_[k];
      diag[r] = 2.0 * (h0 + h1);
      upper[r] = h1;
      rhs[r] = 6.0 * ((y[k + 1] - y[k]) / h1 - (y[k] - y[k - 1]) / h0);
    }
    for (std::size_t r = 1; r < inner; ++r) {
      const double lower = params_[r + 1] - params_[r];
      const double f = lower / diag[r - 1];
      diag[r] -= f * upper[r - 1];
      rhs[r] -= f * rhs[r - 1];
    }
    for (std::size_t r = inner; r-- > 0;) {
      const double tail = r + 1 < inner ? upper[r] * m[r + 2] : 0.0;
      m[r + 1] = (rhs[r] - tail) / diag[r];
    }
    return m;
  };
  mx_ = solve(xs_);
  my_ = solve(ys_);
}

double ChordSpline::eval(const std::vector<double>& y, const std::vector<double>& m, double t) const {
  const std::size_t n = params_.size();
  if (n == 1) return y[0];
  t = std::clamp(t, 0.0, params_.back());
  auto it = std::upper_bound(params_.begin(), params_.end(), t);
  std::size_t k = it == params_.begin() ? 0 : static_cast<std::size_t>(it - params_.begin()) - 1;
  if (k >= n - 1) k = n - 2;
  const double h = params_[k + 1] - params_[k];
  const double a = (params_[k + 1] - t) / h;
  const double b = (t - params_[k]) / h;
  return a * y[k] + b * y[k + 1] + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0;
}

Vec2 ChordSpline::at(double t) const { return {eval(xs_, mx_, t), eval(ys_, my_, t)}; }

SmoothPath smooth_path(const GlobalPath& path, double sample_spacing) {
  if (!(sample_spacing > 0.0)) throw Error(Errc::InvalidArgument, "sample spacing must be positive");
  if (path.waypoints.empty()) throw Error(Errc::InvalidArgument, "empty path");
  SmoothPath out;
  out.sample_spacing = sample_spacing;
  std::vector<Vec2> knots;
  knots.reserve(path.waypoints.size());
  for (const GridIndex& w : path.waypoints) knots.push_back(grid_to_world(w, path.resolution));
  if (knots.size() == 1) {
    out.samples = knots;
    return out;
  }
  const ChordSpline spline(knots);
  const double length = spline.length();
  const auto count = static_cast<std::size_t>(std::floor(length / sample_spacing));
  for (std::size_t s = 0; s <= count; ++s) {
    const double t = static_cast<double>(s) * sample_spacing;
    if (length - t < 1e-12) break;
    out.samples.push_back(spline.at(t));
  }
  out.samples.push_back(knots.back());
  return out;
}

}  // namespace awarenav
