#pragma once

#include <cstdint>
#include <vector>

#include "awarenav/belief.hpp"
#include "awarenav/pomdp_model.hpp"

namespace awarenav {

struct Scenario {
  int index = 0;
  PomdpState initial;
  /// Root of the per-depth random streams; depth d draws from
  /// Rng(derive_seed(seed, d)).
  std::uint64_t seed = 0;
};

struct DespotParams {
  int k_scenarios = 500;
  int max_depth = 10;
  double gamma = 0.95;
  /// Ceiling per solve in CPU milliseconds of the solving thread. 0 skips
  /// the search entirely.
  int time_budget_ms = 100;
  /// Deterministic work cap. Runs are reproducible whenever this binds
  /// before the time budget does.
  int max_trials = 200;
  double regularization_lambda = 0.01;
  /// Target gap fraction used by the excess-uncertainty descent.
  double xi = 0.95;
  /// Stop once the root gap falls below this.
  double gap_tolerance = 1e-6;
  std::uint64_t seed = 0;
  bool trace = false;

  void validate() const;
};

struct TraceEntry {
  int trial = 0;
  double lower = 0.0;
  double upper = 0.0;
};

struct SolveResult {
  LocalAction action = LocalAction::Wait;
  double root_lower = 0.0;
  double root_upper = 0.0;
  /// Regularized lower value of the returned action, and the default
  /// policy's value at the root it is compared against.
  double action_value = 0.0;
  double default_value = 0.0;
  std::array<double, 3> action_lower{};  // per action, regularized
  std::int64_t nodes_expanded = 0;
  int trials = 0;
  bool fallback = false;  // no search ran; action is the default
  bool budget_exhausted = false;
  std::vector<TraceEntry> trace;
};

/// k scenarios drawn from the belief weights; scenario seeds are derived from
/// (seed, index). Throws EmptyBelief.
std::vector<Scenario> sample_scenarios(const ParticleBelief& b, int k, std::uint64_t seed);

/// Average discounted return of the model's default policy over the given
/// scenarios, each starting at `depth` and truncated after depth_remaining
/// steps. Scenario states are taken from `states`.
double default_policy_lower_bound(const std::vector<Scenario>& scenarios, const std::vector<PomdpState>& states,
                                  int depth, const PomdpModel& model, int depth_remaining, double gamma);

/// Rollout return of one determinized scenario.
double default_policy_value(const Scenario& scenario, const PomdpState& state, int depth, const PomdpModel& model,
                            int depth_remaining, double gamma);

/// Best case for one state: the earliest possible arrival with nothing but
/// time cost on the way, or the cheapest early termination, whichever is
/// larger. Terminal states are worth 0.
double upper_bound_value(const PomdpState& state, const PomdpModel& model, int depth_remaining, double gamma);

double upper_bound(const std::vector<PomdpState>& states, const PomdpModel& model, int depth_remaining, double gamma);

SolveResult solve(const std::vector<Scenario>& scenarios, const PomdpModel& model, const DespotParams& params);

/// sample_scenarios + solve.
SolveResult solve(const ParticleBelief& b, const PomdpModel& model, const DespotParams& params);

}  // namespace awarenav
