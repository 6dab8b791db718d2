#include "awarenav/belief.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "awarenav/error.hpp"

namespace awarenav {

namespace {

GridIndex cell_of(Vec2 p, double res) {
  return {static_cast<int>(std::floor(p.x / res)), static_cast<int>(std::floor(p.y / res))};
}

// Closest free window cell to `c` (Euclidean, ties to the lower cell).
GridIndex nearest_free(GridIndex c, const PomdpModel& model) {
  const LocalWindow& win = model.window();
  c = win.clamp(c);
  if (model.window_free(c)) return c;
  std::optional<GridIndex> best;
  int best_d2 = 0;
  for (int r = 1; r < win.size; ++r) {
    for (int dj = -r; dj <= r; ++dj) {
      for (int di = -r; di <= r; ++di) {
        if (std::max(std::abs(di), std::abs(dj)) != r) continue;
        const GridIndex n{c.i + di, c.j + dj};
        if (!model.window_free(n)) continue;
        const int d2 = di * di + dj * dj;
        if (!best || d2 < best_d2 || (d2 == best_d2 && n < *best)) {
          best = n;
          best_d2 = d2;
        }
      }
    }
    // Ring r + 1 lies at least r + 1 away.
    if (best && (r + 1) * (r + 1) > best_d2) break;
  }
  return best ? *best : c;
}

}  // namespace

ParticleBelief init_belief(const std::vector<Track>& tracks, int robot_path_index, const PomdpModel& model, int k,
                           Rng& rng, double p_aware_prior) {
  if (k <= 0) throw Error(Errc::InvalidParticleCount, "belief needs at least one particle");
  if (p_aware_prior < 0.0 || p_aware_prior > 1.0) throw Error(Errc::InvalidArgument, "p_aware_prior outside [0, 1]");

  const double res = model.resolution();
  const LocalWindow& win = model.window();

  // Square root of each track's position covariance. Eigen-decomposition
  // tolerates the singular (point-mass) case that a Cholesky would reject.
  std::vector<Matrix2> roots;
  roots.reserve(tracks.size());
  for (const Track& t : tracks) {
    const Matrix2 pos_cov = t.state.p.topLeftCorner<2, 2>();
    Eigen::SelfAdjointEigenSolver<Matrix2> es(0.5 * (pos_cov + pos_cov.transpose()));
    const Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    roots.push_back(es.eigenvectors() * ev.asDiagonal());
  }

  ParticleBelief b;
  b.particles.resize(static_cast<std::size_t>(k));
  b.weights.assign(static_cast<std::size_t>(k), 1.0 / k);
  for (PomdpState& s : b.particles) {
    s.robot_path_index = robot_path_index;
    s.step = 0;
    s.peds.resize(tracks.size());
    for (std::size_t n = 0; n < tracks.size(); ++n) {
      const Vec2 mean = tracks[n].state.position();
      const Eigen::Vector2d z(rng.normal(0.0, 1.0), rng.normal(0.0, 1.0));
      const Eigen::Vector2d d = roots[n] * z;
      GridIndex c = win.clamp(cell_of({mean.x + d.x(), mean.y + d.y()}, res));
      if (!model.window_free(c)) c = nearest_free(cell_of(mean, res), model);
      s.peds[n].pos = c;
      const bool aware = tracks[n].gaze.latched || rng.uniform() < p_aware_prior;
      s.peds[n].g = aware ? 1 : -1;
    }
  }
  return b;
}

std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, std::size_t n, double u0) {
  std::vector<std::size_t> idx;
  idx.reserve(n);
  if (weights.empty() || n == 0) return idx;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double stride = total / static_cast<double>(n);
  double target = u0 * stride;
  double acc = weights[0];
  std::size_t j = 0;
  for (std::size_t m = 0; m < n; ++m) {
    while (target >= acc && j + 1 < weights.size()) acc += weights[++j];
    idx.push_back(j);
    target += stride;
  }
  return idx;
}

ParticleBelief update_belief(const ParticleBelief& b, LocalAction a, const LocalObservation& o,
                             const PomdpModel& model, Rng& rng) {
  if (b.empty()) throw Error(Errc::EmptyBelief, "cannot update an empty belief");
  const std::size_t k = b.size();

  std::vector<PomdpState> propagated(k);
  std::vector<double> w(k);
  double total = 0.0;
  for (std::size_t m = 0; m < k; ++m) {
    propagated[m] = model.transition(b.particles[m], a, rng);
    w[m] = b.weights[m] * model.obs_likelihood(propagated[m], a, o);
    total += w[m];
  }
  if (!(total > 0.0)) throw Error(Errc::DegenerateBelief, "observation has zero likelihood under every particle");

  const std::vector<std::size_t> pick = systematic_resample(w, k, rng.uniform());
  ParticleBelief out;
  out.particles.reserve(k);
  for (std::size_t m : pick) out.particles.push_back(propagated[m]);
  out.weights.assign(k, 1.0 / static_cast<double>(k));
  return out;
}

double effective_sample_size(const ParticleBelief& b) noexcept {
  double sq = 0.0;
  for (double w : b.weights) sq += w * w;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

std::vector<PedBeliefSummary> summarize(const ParticleBelief& b) {
  if (b.empty()) return {};
  const std::size_t n_peds = b.particles.front().peds.size();
  std::vector<PedBeliefSummary> out(n_peds);
  std::vector<std::map<GridIndex, double>> hist(n_peds);
  double total = 0.0;
  for (std::size_t m = 0; m < b.size(); ++m) {
    const double w = b.weights[m];
    total += w;
    for (std::size_t n = 0; n < n_peds; ++n) {
      const PedState& p = b.particles[m].peds[n];
      hist[n][p.pos] += w;
      if (p.g == 1) out[n].aware_fraction += w;
    }
  }
  // Dividing by the same running sum makes an all-aware belief report
  // exactly 1.
  if (total <= 0.0) return out;
  for (std::size_t n = 0; n < n_peds; ++n) {
    out[n].aware_fraction /= total;
    for (auto& [c, w] : hist[n]) w /= total;
    out[n].cells.assign(hist[n].begin(), hist[n].end());
  }
  return out;
}

}  // namespace awarenav
