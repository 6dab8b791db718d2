#include "awarenav/despot.hpp"

#include <chrono>
#include <cmath>
#include <map>

#if defined(__unix__) || defined(__APPLE__)
#include <time.h>
#endif

#include "awarenav/error.hpp"

namespace awarenav {

namespace {

// CPU time consumed by the calling thread. The search budget is charged
// against this so that a solve sharing a core with other solves does the
// same work as one running alone.
double thread_cpu_ms() {
#if defined(CLOCK_THREAD_CPUTIME_ID)
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) * 1e3 + static_cast<double>(ts.tv_nsec) * 1e-6;
#else
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch()).count();
#endif
}

}  // namespace

void DespotParams::validate() const {
  if (k_scenarios < 1) throw Error(Errc::InvalidArgument, "k_scenarios must be at least 1");
  if (max_depth < 1) throw Error(Errc::InvalidArgument, "max_depth must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(Errc::InvalidArgument, "gamma must lie in (0, 1]");
  if (time_budget_ms < 0 || max_trials < 0) throw Error(Errc::InvalidArgument, "search budgets must be nonnegative");
  if (regularization_lambda < 0.0) throw Error(Errc::InvalidArgument, "regularization_lambda must be nonnegative");
  if (!(xi >= 0.0 && xi < 1.0)) throw Error(Errc::InvalidArgument, "xi must lie in [0, 1)");
}

std::vector<Scenario> sample_scenarios(const ParticleBelief& b, int k, std::uint64_t seed) {
  if (b.empty()) throw Error(Errc::EmptyBelief, "cannot sample scenarios from an empty belief");
  if (k < 1) throw Error(Errc::InvalidArgument, "need at least one scenario");
  std::vector<double> cdf(b.size());
  double acc = 0.0;
  for (std::size_t m = 0; m < b.size(); ++m) {
    acc += b.weights[m];
    cdf[m] = acc;
  }
  Rng rng(derive_seed(seed, 0x5ce7a210ULL));
  std::vector<Scenario> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto m = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), b.size() - 1);
    out.push_back({s, b.particles[m], derive_seed(seed, static_cast<std::uint64_t>(s) + 1)});
  }
  return out;
}

double default_policy_value(const Scenario& scenario, const PomdpState& state, int depth, const PomdpModel& model,
                            int depth_remaining, double gamma) {
  PomdpState s = state;
  double value = 0.0;
  double disc = 1.0;
  for (int t = 0; t < depth_remaining; ++t) {
    if (model.is_terminal(s)) break;
    const LocalAction a = model.default_action(s);
    Rng rng(derive_seed(scenario.seed, static_cast<std::uint64_t>(depth + t)));
    StepOutcome out = model.step(s, a, rng);
    value += disc * out.reward;
    disc *= gamma;
    s = std::move(out.next);
  }
  return value;
}

double default_policy_lower_bound(const std::vector<Scenario>& scenarios, const std::vector<PomdpState>& states,
                                  int depth, const PomdpModel& model, int depth_remaining, double gamma) {
  if (scenarios.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < scenarios.size(); ++m) {
    total += default_policy_value(scenarios[m], states[m], depth, model, depth_remaining, gamma);
  }
  return total / static_cast<double>(scenarios.size());
}

double upper_bound_value(const PomdpState& state, const PomdpModel& model, int depth_remaining, double gamma) {
  if (model.is_terminal(state)) return 0.0;
  const RewardParams& rp = model.params().reward;
  const int horizon = std::min(depth_remaining, model.params().step_cap - state.step);
  if (horizon <= 0) return 0.0;
  const int to_goal = model.last_index() - state.robot_path_index;
  const double time = rp.w_t * rp.r_time;
  const double crash = rp.w_c * rp.r_collision;

  double best = -std::numeric_limits<double>::infinity();
  double time_sum = 0.0;
  double disc = 1.0;
  for (int t = 0; t < horizon; ++t) {
    time_sum += disc * time;
    // Ending the episode on this step, by arrival or by a hard collision,
    // stops the time cost from accruing further.
    if (t + 1 == to_goal) best = std::max(best, time_sum + disc * rp.w_g * rp.r_goal);
    best = std::max(best, time_sum + disc * crash);
    disc *= gamma;
  }
  return std::max(best, time_sum);
}

double upper_bound(const std::vector<PomdpState>& states, const PomdpModel& model, int depth_remaining, double gamma) {
  if (states.empty()) return 0.0;
  double total = 0.0;
  for (const PomdpState& s : states) total += upper_bound_value(s, model, depth_remaining, gamma);
  return total / static_cast<double>(states.size());
}

namespace {

struct VNode {
  std::vector<int> scen;
  std::vector<PomdpState> states;
  int depth = 0;
  int parent_q = -1;
  double weight = 0.0;  // gamma^depth * |scen| / K
  double l0 = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double mu = 0.0;
  bool expanded = false;
  std::array<int, 3> q{-1, -1, -1};
};

struct QNode {
  int parent = -1;
  double reward = 0.0;  // sum over scenarios of gamma^depth * r / K
  std::vector<int> children;
  double lower = 0.0;
  double upper = 0.0;
  double mu = 0.0;
};

class Tree {
 public:
  Tree(const std::vector<Scenario>& scenarios, const PomdpModel& model, const DespotParams& params)
      : scenarios_(scenarios), model_(model), params_(params), k_(static_cast<double>(scenarios.size())) {
    VNode root;
    root.depth = 0;
    root.scen.resize(scenarios.size());
    root.states.reserve(scenarios.size());
    for (std::size_t m = 0; m < scenarios.size(); ++m) {
      root.scen[m] = static_cast<int>(m);
      root.states.push_back(scenarios[m].initial);
    }
    init_bounds(root);
    v_.push_back(std::move(root));
  }

  VNode& root() { return v_[0]; }
  std::int64_t expanded() const noexcept { return expanded_; }

  void trial() {
    int cur = 0;
    while (true) {
      const VNode& v = v_[static_cast<std::size_t>(cur)];
      if (v.depth >= params_.max_depth) break;
      const bool open = v.upper - v.lower > 0.0;
      // The root is always expanded so every action carries a value.
      if (!v.expanded && (open || cur == 0)) {
        expand(cur);
      } else if (!open) {
        break;
      }
      const int next = choose_child(cur);
      if (next < 0) break;
      cur = next;
    }
    backup(cur);
  }

  QNode& q(int idx) { return q_[static_cast<std::size_t>(idx)]; }

 private:
  void init_bounds(VNode& v) {
    const int remaining = params_.max_depth - v.depth;
    const double disc = std::pow(params_.gamma, v.depth);
    double lo = 0.0;
    double up = 0.0;
    for (std::size_t m = 0; m < v.scen.size(); ++m) {
      const Scenario& sc = scenarios_[static_cast<std::size_t>(v.scen[m])];
      lo += default_policy_value(sc, v.states[m], v.depth, model_, remaining, params_.gamma);
      up += upper_bound_value(v.states[m], model_, remaining, params_.gamma);
    }
    v.weight = disc * static_cast<double>(v.scen.size()) / k_;
    v.l0 = disc * lo / k_;
    v.lower = v.l0;
    v.mu = v.l0;
    // The rollout sees the scenario state, so it can beat a bound that is
    // computed per state only through rounding; keep the pair ordered.
    v.upper = std::max(disc * up / k_, v.lower);
  }

  void expand(int vi) {
    ++expanded_;
    v_[static_cast<std::size_t>(vi)].expanded = true;
    for (std::size_t ai = 0; ai < kLocalActions.size(); ++ai) {
      const LocalAction a = kLocalActions[ai];
      const VNode& v = v_[static_cast<std::size_t>(vi)];
      const int depth = v.depth;
      QNode qn;
      qn.parent = vi;
      std::map<std::vector<std::int32_t>, VNode> groups;
      double reward = 0.0;
      for (std::size_t m = 0; m < v.scen.size(); ++m) {
        const Scenario& sc = scenarios_[static_cast<std::size_t>(v.scen[m])];
        Rng rng(derive_seed(sc.seed, static_cast<std::uint64_t>(depth)));
        StepOutcome out = model_.step(v.states[m], a, rng);
        reward += out.reward;
        VNode& child = groups[out.obs.key()];
        child.scen.push_back(v.scen[m]);
        child.states.push_back(std::move(out.next));
      }
      qn.reward = std::pow(params_.gamma, depth) * reward / k_;
      const int qi = static_cast<int>(q_.size());
      for (auto& [key, child] : groups) {
        child.depth = depth + 1;
        child.parent_q = qi;
        init_bounds(child);
        qn.children.push_back(static_cast<int>(v_.size()));
        v_.push_back(std::move(child));
      }
      q_.push_back(std::move(qn));
      v_[static_cast<std::size_t>(vi)].q[ai] = qi;
      refresh_q(qi);
    }
  }

  void refresh_q(int qi) {
    QNode& qn = q_[static_cast<std::size_t>(qi)];
    const bool at_root = qn.parent == 0;
    qn.lower = qn.upper = qn.reward;
    // The root's own size is common to every action, so it is not charged.
    qn.mu = qn.reward - (at_root ? 0.0 : params_.regularization_lambda);
    for (int c : qn.children) {
      const VNode& ch = v_[static_cast<std::size_t>(c)];
      qn.lower += ch.lower;
      qn.upper += ch.upper;
      qn.mu += ch.mu;
    }
  }

  void refresh_v(int vi) {
    VNode& v = v_[static_cast<std::size_t>(vi)];
    if (!v.expanded) return;
    double lo = -std::numeric_limits<double>::infinity();
    double up = -std::numeric_limits<double>::infinity();
    double mu = -std::numeric_limits<double>::infinity();
    for (int qi : v.q) {
      const QNode& qn = q_[static_cast<std::size_t>(qi)];
      lo = std::max(lo, qn.lower);
      up = std::max(up, qn.upper);
      mu = std::max(mu, qn.mu);
    }
    v.lower = std::max(v.lower, lo);
    v.upper = std::max(std::min(v.upper, up), v.lower);
    v.mu = std::max(v.l0, mu);
  }

  int choose_child(int vi) {
    const VNode& v = v_[static_cast<std::size_t>(vi)];
    int best_q = -1;
    double best_u = -std::numeric_limits<double>::infinity();
    for (int qi : v.q) {
      if (q_[static_cast<std::size_t>(qi)].upper > best_u) {
        best_u = q_[static_cast<std::size_t>(qi)].upper;
        best_q = qi;
      }
    }
    const VNode& r = v_[0];
    const double root_gap = r.upper - r.lower;
    int best = -1;
    double best_e = 0.0;
    for (int c : q_[static_cast<std::size_t>(best_q)].children) {
      const VNode& ch = v_[static_cast<std::size_t>(c)];
      const double e = (ch.upper - ch.lower) - params_.xi * ch.weight * root_gap;
      if (e > best_e) {
        best_e = e;
        best = c;
      }
    }
    return best;
  }

  void backup(int vi) {
    while (vi >= 0) {
      refresh_v(vi);
      const int qi = v_[static_cast<std::size_t>(vi)].parent_q;
      if (qi < 0) break;
      refresh_q(qi);
      vi = q_[static_cast<std::size_t>(qi)].parent;
    }
  }

  const std::vector<Scenario>& scenarios_;
  const PomdpModel& model_;
  const DespotParams& params_;
  double k_;
  std::vector<VNode> v_;
  std::vector<QNode> q_;
  std::int64_t expanded_ = 0;
};

}  // namespace

SolveResult solve(const std::vector<Scenario>& scenarios, const PomdpModel& model, const DespotParams& params) {
  params.validate();
  if (scenarios.empty()) throw Error(Errc::EmptyBelief, "solve needs at least one scenario");

  Tree tree(scenarios, model, params);
  SolveResult res;
  res.default_value = tree.root().l0;

  if (params.time_budget_ms == 0 || params.max_trials == 0) {
    res.fallback = true;
    res.action = LocalAction::Wait;
    res.root_lower = tree.root().lower;
    res.root_upper = tree.root().upper;
    res.action_value = res.default_value;
    return res;
  }

  const double deadline = thread_cpu_ms() + params.time_budget_ms;
  while (res.trials < params.max_trials) {
    const VNode& r = tree.root();
    if (r.expanded && r.upper - r.lower <= params.gap_tolerance) break;
    if (thread_cpu_ms() >= deadline) {
      res.budget_exhausted = true;
      break;
    }
    tree.trial();
    ++res.trials;
    if (params.trace) res.trace.push_back({res.trials, tree.root().lower, tree.root().upper});
  }

  const VNode& r = tree.root();
  res.root_lower = r.lower;
  res.root_upper = r.upper;
  res.nodes_expanded = tree.expanded();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t ai = 0; ai < kLocalActions.size(); ++ai) {
    const double v = tree.q(r.q[ai]).mu;
    res.action_lower[ai] = v;
    if (v > best) {
      best = v;
      res.action = kLocalActions[ai];
    }
  }
  res.action_value = best;
  return res;
}

SolveResult solve(const ParticleBelief& b, const PomdpModel& model, const DespotParams& params) {
  params.validate();
  return solve(sample_scenarios(b, params.k_scenarios, params.seed), model, params);
}

}  // namespace awarenav
