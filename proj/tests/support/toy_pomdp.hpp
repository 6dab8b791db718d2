#pragma once

// A pedestrian confined to two cells, watched by a robot that always waits.
// The exact Bayes filter over the two cells is a two-line recursion, which
// makes it a reference for the particle filter.

#include <array>
#include <optional>
#include <vector>

#include "awarenav/belief.hpp"
#include "awarenav/pomdp_model.hpp"
#include "oracles.hpp"

namespace toy {

using namespace awarenav;

// 3x3 world, middle row walled:
//   A B #
//   # # #
//   R T #
inline constexpr GridIndex kA{0, 2};
inline constexpr GridIndex kB{1, 2};

inline PomdpModel model() {
  OccupancyGrid g(3, 3);
  for (GridIndex c : {GridIndex{0, 1}, GridIndex{1, 1}, GridIndex{2, 1}, GridIndex{2, 0}, GridIndex{2, 2}}) {
    g.set(c, Occupancy::Obstacle);
  }
  GlobalPath path;
  path.waypoints = {{0, 0}, {1, 0}};
  return PomdpModel(path, local_window(g, {1, 1}, 3), ModelParams{});
}

/// Probabilities over {A, B}, written straight from the rules: stay 1/2,
/// else move to the one free neighbor; report the true cell with
/// 1 - p_miss - p_noise, the other cell with p_noise, nothing with p_miss.
struct ExactFilter {
  std::array<double, 2> b{0.5, 0.5};
  double stay = 0.5;
  double p_miss = 0.05;
  double p_noise = 0.1;

  void update(const std::optional<GridIndex>& seen) {
    const std::array<double, 2> pred{stay * b[0] + (1.0 - stay) * b[1], (1.0 - stay) * b[0] + stay * b[1]};
    std::array<double, 2> post{};
    for (int c = 0; c < 2; ++c) {
      const GridIndex cell = c == 0 ? kA : kB;
      double like = p_miss;
      if (seen) like = *seen == cell ? 1.0 - p_miss - p_noise : p_noise;
      post[static_cast<std::size_t>(c)] = pred[static_cast<std::size_t>(c)] * like;
    }
    const double z = post[0] + post[1];
    b = {post[0] / z, post[1] / z};
  }
};

/// Uniform two-cell prior with unaware pedestrians, as a particle set.
inline ParticleBelief uniform_prior(int k) {
  ParticleBelief pb;
  for (int m = 0; m < k; ++m) {
    PomdpState s;
    s.peds = {{m % 2 == 0 ? kA : kB, -1}};
    pb.particles.push_back(s);
  }
  pb.weights.assign(static_cast<std::size_t>(k), 1.0 / k);
  return pb;
}

/// Mean total-variation distance between the particle filter and the exact
/// filter over `steps` ticks of a simulated run.
inline double mean_tv(int k, std::uint64_t seed, int steps = 10) {
  const PomdpModel m = model();
  Rng world(derive_seed(seed, 1));
  Rng filt(derive_seed(seed, 2));
  PomdpState truth;
  truth.peds = {{kA, -1}};
  ParticleBelief pb = uniform_prior(k);
  ExactFilter exact;
  double total = 0.0;
  for (int t = 0; t < steps; ++t) {
    truth = m.transition(truth, LocalAction::Wait, world);
    const LocalObservation o = m.observe(truth, LocalAction::Wait, world);
    pb = update_belief(pb, LocalAction::Wait, o, m, filt);
    exact.update(o.ped_cells[0]);
    std::vector<double> est(2, 0.0);
    for (std::size_t p = 0; p < pb.size(); ++p) est[pb.particles[p].peds[0].pos == kA ? 0 : 1] += pb.weights[p];
    total += oracle::tv_distance(est, {exact.b[0], exact.b[1]});
  }
  return total / steps;
}

}  // namespace toy
