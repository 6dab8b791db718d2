#pragma once

// Reference computations the tests compare the library against. They are
// written from the problem definitions directly and share no code paths with
// the implementations under test.

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "awarenav/grid.hpp"
#include "awarenav/rng.hpp"

namespace oracle {

using awarenav::GridIndex;
using awarenav::OccupancyGrid;

/// 8-connected breadth-first hop count, or nullopt when unreachable.
inline std::optional<int> bfs_hops(const OccupancyGrid& g, GridIndex s, GridIndex t) {
  const int w = g.width();
  const int h = g.height();
  auto free = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < w && j < h && g.cells()[static_cast<std::size_t>(j * w + i)] ==
                                                     awarenav::Occupancy::Free;
  };
  if (!free(s.i, s.j) || !free(t.i, t.j)) return std::nullopt;
  std::vector<int> dist(static_cast<std::size_t>(w * h), -1);
  std::deque<GridIndex> q{s};
  dist[static_cast<std::size_t>(s.j * w + s.i)] = 0;
  while (!q.empty()) {
    const GridIndex c = q.front();
    q.pop_front();
    if (c == t) return dist[static_cast<std::size_t>(c.j * w + c.i)];
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        const int ni = c.i + di;
        const int nj = c.j + dj;
        if (!free(ni, nj) || dist[static_cast<std::size_t>(nj * w + ni)] >= 0) continue;
        dist[static_cast<std::size_t>(nj * w + ni)] = dist[static_cast<std::size_t>(c.j * w + c.i)] + 1;
        q.push_back({ni, nj});
      }
    }
  }
  return std::nullopt;
}

struct RandomInstance {
  OccupancyGrid grid{10, 10};
  GridIndex start;
  GridIndex goal;
};

/// w x h grid with each cell an obstacle with probability `density`, and a
/// start/goal pair that BFS confirms reachable (redrawn until one exists).
inline RandomInstance random_instance(std::uint64_t seed, int w = 10, int h = 10, double density = 0.2) {
  awarenav::Rng rng(awarenav::derive_seed(seed, 0x6e1d));
  while (true) {
    RandomInstance inst;
    inst.grid = OccupancyGrid(w, h);
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        if (rng.bernoulli(density)) inst.grid.set({i, j}, awarenav::Occupancy::Obstacle);
      }
    }
    for (int tries = 0; tries < 50; ++tries) {
      const GridIndex s{static_cast<int>(rng.index(static_cast<std::size_t>(w))),
                        static_cast<int>(rng.index(static_cast<std::size_t>(h)))};
      const GridIndex t{static_cast<int>(rng.index(static_cast<std::size_t>(w))),
                        static_cast<int>(rng.index(static_cast<std::size_t>(h)))};
      if (s == t) continue;
      if (bfs_hops(inst.grid, s, t)) {
        inst.start = s;
        inst.goal = t;
        return inst;
      }
    }
  }
}

/// Fixed point of the prediction-form discrete Riccati recursion
/// P <- A P A' + Q - A P H' (H P H' + R)^-1 H P A'. Returns the predicted
/// (prior) covariance.
inline Eigen::Matrix4d riccati_prior(const Eigen::Matrix4d& a, const Eigen::Matrix<double, 2, 4>& h,
                                     const Eigen::Matrix4d& q, const Eigen::Matrix2d& r, int iters = 20000) {
  Eigen::Matrix4d p = q;
  for (int k = 0; k < iters; ++k) {
    const Eigen::Matrix2d s = h * p * h.transpose() + r;
    const Eigen::Matrix4d next =
        a * p * a.transpose() + q - a * p * h.transpose() * s.inverse() * h * p * a.transpose();
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = 0.5 * (next + next.transpose());
    if (change < 1e-15) break;
  }
  return p;
}

/// Total variation distance between two distributions on the same support.
inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) d += std::abs(p[k] - q[k]);
  return 0.5 * d;
}

}  // namespace oracle
