#include <benchmark/benchmark.h>

#include "awarenav/belief.hpp"
#include "awarenav/despot.hpp"
#include "awarenav/mdp_planner.hpp"
#include "awarenav/simulator.hpp"
#include "awarenav/tracker.hpp"

using namespace awarenav;

namespace {

OccupancyGrid cluttered(int n, std::uint64_t seed) {
  OccupancyGrid g(n, n);
  Rng rng(seed);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (rng.bernoulli(0.2)) g.set({i, j}, Occupancy::Obstacle);
    }
  }
  g.set({0, 0}, Occupancy::Free);
  g.set({n - 1, n - 1}, Occupancy::Free);
  return g;
}

// A corridor with three pedestrians of mixed awareness near the robot.
struct LocalProblem {
  PomdpModel model;
  ParticleBelief belief;
};

LocalProblem local_problem(int k) {
  const OccupancyGrid grid(10, 10);
  GlobalPath path;
  for (int i = 0; i < 10; ++i) path.waypoints.push_back({i, 4});
  LocalProblem lp{PomdpModel(path, local_window(grid, {5, 5}, 10), ModelParams{}), {}};
  Rng rng(3);
  for (int m = 0; m < k; ++m) {
    PomdpState s;
    s.robot_path_index = 1;
    s.peds = {{{3, 5}, rng.bernoulli(0.5) ? 1 : -1}, {{5, 3}, 1}, {{6, 6}, -1}};
    lp.belief.particles.push_back(s);
  }
  lp.belief.weights.assign(static_cast<std::size_t>(k), 1.0 / k);
  return lp;
}

}  // namespace

static void BM_ValueIteration(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const OccupancyGrid g = cluttered(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(value_iteration(g, {n - 1, n - 1}));
}
BENCHMARK(BM_ValueIteration)->Arg(10)->Arg(40)->Arg(100);

static void BM_KalmanPredictUpdate(benchmark::State& state) {
  const KalmanParams kp;
  TrackState t;
  t.p = Matrix4::Identity();
  for (auto _ : state) {
    t = kf_predict(t, 0.1, kp);
    t = kf_update(t, {0.5, -0.5}, kp);
    benchmark::DoNotOptimize(t);
  }
}
BENCHMARK(BM_KalmanPredictUpdate);

static void BM_TrackerStep(benchmark::State& state) {
  const int peds = static_cast<int>(state.range(0));
  std::vector<Detection> vision;
  std::vector<Detection> laser;
  for (int k = 0; k < peds; ++k) {
    Detection d;
    d.pos = {0.75 * k, 0.75 * (k % 3)};
    vision.push_back(d);
    d.source = DetectionSource::Laser;
    laser.push_back(d);
  }
  for (auto _ : state) {
    TrackerBank bank;
    for (int t = 0; t < 10; ++t) bank.step(vision, laser, 0.1 * t);
    benchmark::DoNotOptimize(bank.tracks().size());
  }
}
BENCHMARK(BM_TrackerStep)->Arg(4)->Arg(12);

static void BM_BeliefUpdate(benchmark::State& state) {
  const LocalProblem lp = local_problem(static_cast<int>(state.range(0)));
  LocalObservation o;
  o.robot_cell = lp.model.robot_cell(1);
  o.ped_cells = {GridIndex{3, 5}, GridIndex{5, 3}, std::nullopt};
  o.gaze_flags = {false, true, false};
  Rng rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(update_belief(lp.belief, LocalAction::Wait, o, lp.model, rng));
  }
}
BENCHMARK(BM_BeliefUpdate)->Arg(500)->Arg(5000);

static void BM_DespotSolve(benchmark::State& state) {
  const LocalProblem lp = local_problem(5000);
  DespotParams p;
  p.k_scenarios = static_cast<int>(state.range(0));
  p.time_budget_ms = 10000;
  for (auto _ : state) benchmark::DoNotOptimize(solve(lp.belief, lp.model, p));
}
BENCHMARK(BM_DespotSolve)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_EpisodeEmptyMap(benchmark::State& state) {
  ScenarioConfig c;
  c.grid = OccupancyGrid(10, 10);
  c.start = {0, 1};
  c.goal = {7, 7};
  PedestrianSpec p;
  p.start = {5, 5};
  c.peds = {p};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(c, seed++));
}
BENCHMARK(BM_EpisodeEmptyMap)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
