#include <gtest/gtest.h>

#include <cmath>

#include "awarenav/despot.hpp"
#include "awarenav/error.hpp"
#include "expectimax.hpp"

using namespace awarenav;

namespace {

DespotParams exhaustive(int depth, int k = 500) {
  DespotParams p;
  p.max_depth = depth;
  p.k_scenarios = k;
  p.time_budget_ms = 60000;
  p.max_trials = 2000;
  return p;
}

}  // namespace

TEST(SampleScenarios, FollowsWeights) {
  ParticleBelief b;
  for (int k = 0; k < 3; ++k) {
    PomdpState s;
    s.robot_path_index = k;
    b.particles.push_back(s);
  }
  b.weights = {0.2, 0.0, 0.8};
  const auto sc = sample_scenarios(b, 5000, 3);
  ASSERT_EQ(sc.size(), 5000u);
  int first = 0;
  for (const Scenario& s : sc) {
    ASSERT_NE(s.initial.robot_path_index, 1);
    if (s.initial.robot_path_index == 0) ++first;
  }
  EXPECT_NEAR(first / 5000.0, 0.2, 3.0 * std::sqrt(0.16 / 5000.0));
  EXPECT_THROW(sample_scenarios(ParticleBelief{}, 3, 0), Error);
  // Same seed, same scenarios.
  const auto again = sample_scenarios(b, 5000, 3);
  for (std::size_t k = 0; k < sc.size(); ++k) EXPECT_EQ(sc[k].seed, again[k].seed);
}

TEST(Bounds, UpperDominatesRolloutsAndTerminalsAreZero) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const exact::Instance inst = exact::make_instance(seed);
    const auto sc = sample_scenarios(inst.belief(), 50, seed);
    for (const Scenario& s : sc) {
      for (int depth : {1, 3, 10}) {
        const double ub = upper_bound_value(s.initial, inst.model, depth, 0.95);
        EXPECT_GE(ub + 1e-9, default_policy_value(s, s.initial, 0, inst.model, depth, 0.95));
      }
    }
  }
  const exact::Instance inst = exact::make_instance(1);
  PomdpState goal;
  goal.robot_path_index = inst.model.last_index();
  EXPECT_EQ(upper_bound_value(goal, inst.model, 5, 0.95), 0.0);
}

TEST(Solve, MatchesExactExpectimaxAtDepthTwo) {
  int agree = 0;
  const int n = 60;
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    const exact::Instance inst = exact::make_instance(seed);
    DespotParams p = exhaustive(2);
    p.seed = seed;
    const SolveResult r = solve(inst.belief(), inst.model, p);
    if (r.action == exact::solve(inst, 2).action) ++agree;
    EXPECT_LE(r.nodes_expanded, 9 * p.k_scenarios);
    EXPECT_LE(r.root_lower, r.root_upper + 1e-9);
  }
  EXPECT_GE(agree, 57);
}

TEST(Solve, RootValueConvergesToExpectimax) {
  // With the regularizer off and every scenario split exactly, the root
  // lower bound is the sample-average value of the optimal policy.
  for (std::uint64_t seed : {2u, 5u, 9u}) {
    const exact::Instance inst = exact::make_instance(seed);
    DespotParams p = exhaustive(2, 4000);
    p.regularization_lambda = 0.0;
    p.seed = seed;
    const SolveResult r = solve(inst.belief(), inst.model, p);
    const exact::Outcome e = exact::solve(inst, 2);
    const double best = std::max({e.q[0], e.q[1], e.q[2]});
    // 4000 scenarios over a two-point prior: a few percent of 500.
    EXPECT_NEAR(r.root_lower, best, 30.0) << seed;
  }
}

TEST(Solve, DeterministicForFixedSeed) {
  const exact::Instance inst = exact::make_instance(4);
  DespotParams p;
  p.max_depth = 6;
  p.k_scenarios = 200;
  p.time_budget_ms = 60000;
  p.seed = 77;
  const SolveResult a = solve(inst.belief(), inst.model, p);
  const SolveResult b = solve(inst.belief(), inst.model, p);
  EXPECT_EQ(a.action, b.action);
  EXPECT_EQ(a.root_lower, b.root_lower);
  EXPECT_EQ(a.root_upper, b.root_upper);
  EXPECT_EQ(a.nodes_expanded, b.nodes_expanded);
  EXPECT_EQ(a.trials, b.trials);
  EXPECT_FALSE(a.budget_exhausted);
}

TEST(Solve, TraceBoundsTighten) {
  const exact::Instance inst = exact::make_instance(6);
  DespotParams p;
  p.max_depth = 8;
  p.k_scenarios = 100;
  p.time_budget_ms = 60000;
  p.trace = true;
  const SolveResult r = solve(inst.belief(), inst.model, p);
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    EXPECT_GE(r.trace[k].lower, r.trace[k - 1].lower - 1e-9);
    EXPECT_LE(r.trace[k].upper, r.trace[k - 1].upper + 1e-9);
    EXPECT_LE(r.trace[k].lower, r.trace[k].upper + 1e-9);
  }
}

TEST(Solve, ZeroBudgetFallsBack) {
  const exact::Instance inst = exact::make_instance(0);
  DespotParams p;
  p.time_budget_ms = 0;
  const SolveResult r = solve(inst.belief(), inst.model, p);
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.trials, 0);
  EXPECT_EQ(r.nodes_expanded, 0);
}

TEST(Solve, ClearPathGoes) {
  const OccupancyGrid grid(10, 10);
  GlobalPath path;
  for (int i = 0; i < 10; ++i) path.waypoints.push_back({i, 4});
  const PomdpModel m(path, local_window(grid, {5, 5}, 10), ModelParams{});
  ParticleBelief b;
  PomdpState s;
  s.robot_path_index = 2;
  s.peds = {{{8, 9}, -1}};
  b.particles = {s};
  b.weights = {1.0};
  DespotParams p;
  p.time_budget_ms = 60000;
  p.k_scenarios = 100;
  EXPECT_EQ(solve(b, m, p).action, LocalAction::Go);
}

TEST(Solve, InvalidParamsRejected) {
  const exact::Instance inst = exact::make_instance(0);
  DespotParams p;
  p.k_scenarios = 0;
  EXPECT_THROW(solve(inst.belief(), inst.model, p), Error);
  p = {};
  p.xi = 1.0;
  EXPECT_THROW(solve(inst.belief(), inst.model, p), Error);
}
