#pragma once

#include <cstdint>
#include <vector>

#include "awarenav/pomdp_model.hpp"
#include "awarenav/rng.hpp"
#include "awarenav/tracker.hpp"

namespace awarenav {

struct BeliefParams {
  int k_particles = 5000;
  /// Probability that a pedestrian whose gaze has not latched is aware.
  double p_aware_prior = 0.1;
};

struct ParticleBelief {
  std::vector<PomdpState> particles;
  std::vector<double> weights;

  std::size_t size() const noexcept { return particles.size(); }
  bool empty() const noexcept { return particles.empty(); }

  friend bool operator==(const ParticleBelief&, const ParticleBelief&) = default;
};

/// Particles over the tracked pedestrians. Each pedestrian cell is drawn from
/// the track's Gaussian position estimate, discretized and clamped into the
/// window (a draw on an obstacle falls back to the free cell nearest the
/// mean); latched tracks are aware in every particle. Throws
/// InvalidParticleCount for k = 0.
ParticleBelief init_belief(const std::vector<Track>& tracks, int robot_path_index, const PomdpModel& model, int k,
                           Rng& rng, double p_aware_prior = BeliefParams{}.p_aware_prior);

/// Sequential importance resampling: propagate, weight by the observation
/// likelihood, normalize, and systematically resample to the same size.
/// Throws DegenerateBelief when no particle explains the observation.
ParticleBelief update_belief(const ParticleBelief& b, LocalAction a, const LocalObservation& o,
                             const PomdpModel& model, Rng& rng);

double effective_sample_size(const ParticleBelief& b) noexcept;

/// Indices drawn by systematic resampling with offset u0 in [0, 1).
std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, std::size_t n, double u0);

struct PedBeliefSummary {
  std::vector<std::pair<GridIndex, double>> cells;  // sorted by cell
  double aware_fraction = 0.0;
};

/// Per-pedestrian marginal cell histogram and aware mass.
std::vector<PedBeliefSummary> summarize(const ParticleBelief& b);

}  // namespace awarenav
