#include <gtest/gtest.h>

#include <cmath>

#include "awarenav/error.hpp"
#include "awarenav/mdp_planner.hpp"
#include "oracles.hpp"

using namespace awarenav;

namespace {

// Exact fixed point for a cell d hops from the goal: d steps of -1 then the
// absorbing goal value.
double closed_form_value(int d, const MdpParams& p) {
  const double gd = std::pow(p.gamma, d);
  return p.step_reward * (1.0 - gd) / (1.0 - p.gamma) + gd * p.goal_reward;
}

}  // namespace

TEST(ValueIteration, MatchesClosedFormOnRandomGrids) {
  const MdpParams p;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = oracle::random_instance(seed);
    const MdpSolution sol = value_iteration(inst.grid, inst.goal, p);
    for (int j = 0; j < 10; ++j) {
      for (int i = 0; i < 10; ++i) {
        const auto d = oracle::bfs_hops(inst.grid, {i, j}, inst.goal);
        if (!d) continue;
        // Sweeps stop once the change drops below epsilon; the distance to
        // the fixed point is then within epsilon * gamma / (1 - gamma).
        EXPECT_NEAR(sol.values.at({i, j}), closed_form_value(*d, p), p.epsilon_vi * p.gamma / (1.0 - p.gamma))
            << "seed " << seed << " cell " << i << "," << j;
      }
    }
  }
}

TEST(ValueIteration, ResidualsShrinkAndTerminateBelowEpsilon) {
  const MdpParams p;
  const auto inst = oracle::random_instance(7);
  const MdpSolution sol = value_iteration(inst.grid, inst.goal, p);
  ASSERT_FALSE(sol.values.residuals.empty());
  EXPECT_LT(sol.values.final_residual(), p.epsilon_vi);
  for (std::size_t k = 1; k < sol.values.residuals.size(); ++k) {
    EXPECT_LE(sol.values.residuals[k], sol.values.residuals[k - 1] + 1e-12);
  }
  EXPECT_EQ(sol.values.iterations_used, static_cast<int>(sol.values.residuals.size()));
}

TEST(ValueIteration, PolicyUndefinedExactlyOnObstacles) {
  const auto inst = oracle::random_instance(3);
  const MdpSolution sol = value_iteration(inst.grid, inst.goal);
  for (int j = 0; j < 10; ++j) {
    for (int i = 0; i < 10; ++i) {
      EXPECT_EQ(sol.policy.at({i, j}).has_value(), inst.grid.is_free({i, j}));
    }
  }
}

TEST(ValueIteration, RejectsBadInputs) {
  OccupancyGrid g(5, 5);
  g.set({2, 2}, Occupancy::Obstacle);
  EXPECT_THROW(value_iteration(g, {2, 2}), Error);
  EXPECT_THROW(value_iteration(g, {9, 9}), Error);
  MdpParams bad;
  bad.gamma = 1.0;
  EXPECT_THROW(value_iteration(g, {0, 0}, bad), Error);
}

TEST(PlanPath, HopCountMatchesBfs) {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const auto inst = oracle::random_instance(seed);
    const GlobalPath path = plan_path(inst.grid, inst.start, inst.goal);
    EXPECT_EQ(static_cast<int>(path.hops()), *oracle::bfs_hops(inst.grid, inst.start, inst.goal)) << seed;
    ASSERT_FALSE(path.waypoints.empty());
    EXPECT_EQ(path.waypoints.front(), inst.start);
    EXPECT_EQ(path.waypoints.back(), inst.goal);
    for (std::size_t k = 1; k < path.waypoints.size(); ++k) {
      EXPECT_TRUE(is_neighbor8(path.waypoints[k - 1], path.waypoints[k]));
      EXPECT_TRUE(inst.grid.is_free(path.waypoints[k]));
    }
  }
}

TEST(PlanPath, StartAtGoalIsEmptyMove) {
  const OccupancyGrid g(4, 4);
  const GlobalPath p = plan_path(g, {1, 1}, {1, 1});
  EXPECT_EQ(p.hops(), 0u);
}

TEST(PlanPath, UnreachableGoalThrows) {
  OccupancyGrid g(5, 5);
  for (int j = 0; j < 5; ++j) g.set({2, j}, Occupancy::Obstacle);
  try {
    plan_path(g, {0, 0}, {4, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Unreachable);
  }
}

TEST(Replan, HumansBlockLikeObstacles) {
  const OccupancyGrid g(5, 3);
  // A column of people across the middle leaves no way through.
  const std::vector<GridIndex> wall{{2, 0}, {2, 1}, {2, 2}};
  EXPECT_THROW(replan(g.with_humans(wall), {0, 1}, {4, 1}), Error);
  const std::vector<GridIndex> one{{2, 1}};
  const GlobalPath p = replan(g.with_humans(one), {0, 1}, {4, 1});
  EXPECT_EQ(p.hops(), 4u);
  for (GridIndex c : p.waypoints) EXPECT_NE(c, (GridIndex{2, 1}));
  // The plain planner treats human cells as free.
  EXPECT_EQ(plan_path(g.with_humans(wall), {0, 1}, {4, 1}).hops(), 4u);
}

TEST(SmoothPath, InterpolatesWaypointsAndEndsAtGoal) {
  GlobalPath p;
  p.waypoints = {{0, 0}, {1, 1}, {2, 1}, {3, 2}};
  const SmoothPath s = smooth_path(p, 0.1);
  ASSERT_FALSE(s.samples.empty());
  const Vec2 first = grid_to_world(p.waypoints.front(), p.resolution);
  const Vec2 last = grid_to_world(p.waypoints.back(), p.resolution);
  EXPECT_NEAR(distance(s.samples.front(), first), 0.0, 1e-12);
  EXPECT_NEAR(distance(s.samples.back(), last), 0.0, 1e-12);

  std::vector<Vec2> knots;
  for (GridIndex c : p.waypoints) knots.push_back(grid_to_world(c, p.resolution));
  const ChordSpline sp(knots);
  for (std::size_t k = 0; k < knots.size(); ++k) {
    EXPECT_NEAR(distance(sp.at(sp.knot_params()[k]), knots[k]), 0.0, 1e-9);
  }
}
