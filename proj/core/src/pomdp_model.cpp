#include "awarenav/pomdp_model.hpp"

#include <cmath>
#include <numbers>

#include "awarenav/error.hpp"

namespace awarenav {

std::string_view to_string(LocalAction a) noexcept {
  switch (a) {
    case LocalAction::Go: return "Go";
    case LocalAction::Wait: return "Wait";
    case LocalAction::Avoid: return "Avoid";
  }
  return "?";
}

std::optional<LocalAction> parse_local_action(std::string_view s) noexcept {
  for (LocalAction a : kLocalActions) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

std::vector<std::int32_t> LocalObservation::key() const {
  std::vector<std::int32_t> k;
  k.reserve(2 + ped_cells.size() * 3);
  k.push_back(robot_cell.i);
  k.push_back(robot_cell.j);
  for (std::size_t p = 0; p < ped_cells.size(); ++p) {
    if (ped_cells[p]) {
      k.push_back(ped_cells[p]->i);
      k.push_back(ped_cells[p]->j);
    } else {
      k.push_back(-1);
      k.push_back(-1);
    }
    k.push_back(p < gaze_flags.size() && gaze_flags[p] ? 1 : 0);
  }
  return k;
}

void RewardParams::validate() const {
  if (w_g < 0.0 || w_c < 0.0 || w_t < 0.0) throw Error(Errc::InvalidArgument, "reward weights must be nonnegative");
  if (!(r_goal > 0.0)) throw Error(Errc::InvalidArgument, "r_goal must be positive");
  if (!(r_collision < 0.0)) throw Error(Errc::InvalidArgument, "r_collision must be negative");
  if (!(r_time < 0.0)) throw Error(Errc::InvalidArgument, "r_time must be negative");
  if (avoid_cost > 0.0) throw Error(Errc::InvalidArgument, "avoid_cost must not be positive");
  if (!(rho_aware > 0.0 && rho_aware < rho_nonaware)) {
    throw Error(Errc::InvalidArgument, "collision radii must satisfy 0 < rho_aware < rho_nonaware");
  }
}

double collision_radius(int g, const RewardParams& params) {
  if (g == 1) return params.rho_aware;
  if (g == -1) return params.rho_nonaware;
  throw Error(Errc::InvalidAwareness, "awareness must be -1 or +1, got " + std::to_string(g));
}

double MoveDistribution::probability_of(GridIndex cell) const noexcept {
  double p = 0.0;
  for (int k = 0; k < size; ++k) {
    if (outcomes[static_cast<std::size_t>(k)].first == cell) p += outcomes[static_cast<std::size_t>(k)].second;
  }
  return p;
}

GridIndex MoveDistribution::sample(double u) const noexcept {
  double acc = 0.0;
  for (int k = 0; k < size; ++k) {
    acc += outcomes[static_cast<std::size_t>(k)].second;
    if (u < acc) return outcomes[static_cast<std::size_t>(k)].first;
  }
  // Rounding slack: fall back to the last outcome with positive mass.
  for (int k = size; k-- > 0;) {
    if (outcomes[static_cast<std::size_t>(k)].second > 0.0) return outcomes[static_cast<std::size_t>(k)].first;
  }
  return outcomes[0].first;
}

PomdpModel::PomdpModel(GlobalPath path, LocalWindow window, ModelParams params)
    : path_(std::move(path)), window_(std::move(window)), params_(std::move(params)) {
  if (path_.waypoints.empty()) throw Error(Errc::InvalidArgument, "model needs a non-empty path");
  params_.reward.validate();
  const auto& t = params_.transition;
  if (!(t.ped_stay_prob >= 0.0 && t.ped_stay_prob <= 1.0)) {
    throw Error(Errc::InvalidArgument, "ped_stay_prob must lie in [0, 1]");
  }
  const auto& o = params_.observation;
  if (o.p_miss < 0.0 || o.p_noise < 0.0 || o.p_miss + o.p_noise > 1.0 || o.p_gfn < 0.0 || o.p_gfn > 1.0) {
    throw Error(Errc::InvalidArgument, "observation probabilities out of range");
  }
  if (!(o.fov_deg > 0.0 && o.fov_deg <= 360.0) || !(o.range_m > 0.0)) {
    throw Error(Errc::InvalidArgument, "sensor field of view or range out of range");
  }
  if (!(params_.gamma > 0.0 && params_.gamma <= 1.0)) throw Error(Errc::InvalidArgument, "gamma must lie in (0, 1]");
}

GridIndex PomdpModel::robot_cell(int path_index) const {
  return path_.waypoints[static_cast<std::size_t>(std::clamp(path_index, 0, last_index()))];
}

GridIndex PomdpModel::go_target(int path_index) const { return robot_cell(std::min(path_index + 1, last_index())); }

Vec2 PomdpModel::heading(int path_index) const {
  const int last = last_index();
  if (last == 0) return {1.0, 0.0};
  const int from = std::clamp(path_index, 0, last - 1);
  const GridIndex a = path_.waypoints[static_cast<std::size_t>(from)];
  const GridIndex b = path_.waypoints[static_cast<std::size_t>(from + 1)];
  const double dx = b.i - a.i;
  const double dy = b.j - a.j;
  const double n = std::hypot(dx, dy);
  return {dx / n, dy / n};
}

bool PomdpModel::window_free(GridIndex c) const noexcept {
  return window_.contains(c) && window_.at_global(c) != Occupancy::Obstacle;
}

int PomdpModel::free_neighbors(GridIndex c, std::array<GridIndex, 8>& out) const noexcept {
  int n = 0;
  for (GlobalAction a : kGlobalActions) {
    const GridIndex nb = awarenav::step(c, a);
    if (window_free(nb)) out[static_cast<std::size_t>(n++)] = nb;
  }
  return n;
}

bool PomdpModel::visible(int path_index, GridIndex ped) const noexcept {
  const GridIndex rc = robot_cell(path_index);
  const double dx = (ped.i - rc.i) * resolution();
  const double dy = (ped.j - rc.j) * resolution();
  const double d = std::hypot(dx, dy);
  if (d > params_.observation.range_m) return false;
  if (d == 0.0 || params_.observation.fov_deg >= 360.0) return true;
  const Vec2 h = heading(path_index);
  const double cosang = std::clamp((dx * h.x + dy * h.y) / d, -1.0, 1.0);
  const double angle_deg = std::acos(cosang) * 180.0 / std::numbers::pi;
  return angle_deg <= 0.5 * params_.observation.fov_deg + 1e-9;
}

bool PomdpModel::is_terminal(const PomdpState& s) const noexcept {
  if (s.robot_path_index >= last_index() || s.step >= params_.step_cap) return true;
  const GridIndex rc = robot_cell(s.robot_path_index);
  for (const PedState& p : s.peds) {
    if (p.pos == rc) return true;
  }
  return false;
}

MoveDistribution PomdpModel::ped_move_distribution(const PomdpState& s, std::size_t ped) const {
  const PedState& p = s.peds[ped];
  MoveDistribution dist;
  std::array<GridIndex, 8> nbrs{};
  const int n = free_neighbors(p.pos, nbrs);
  const double stay = n == 0 ? 1.0 : params_.transition.ped_stay_prob;
  dist.outcomes[0] = {p.pos, stay};
  dist.size = 1;
  for (int k = 0; k < n; ++k) {
    dist.outcomes[static_cast<std::size_t>(dist.size++)] = {nbrs[static_cast<std::size_t>(k)],
                                                            (1.0 - stay) / n};
  }

  if (p.g == 1 && params_.transition.aware_avoidance) {
    const GridIndex rc = robot_cell(s.robot_path_index);
    const GridIndex target = go_target(s.robot_path_index);
    double total = 0.0;
    for (int k = 0; k < dist.size; ++k) {
      auto& [cell, prob] = dist.outcomes[static_cast<std::size_t>(k)];
      if (cell == rc || cell == target) prob = 0.0;
      total += prob;
    }
    if (total > 0.0) {
      for (int k = 0; k < dist.size; ++k) dist.outcomes[static_cast<std::size_t>(k)].second /= total;
    } else {
      // Boxed in between the robot and walls: nowhere to go but stay.
      dist.outcomes[0].second = 1.0;
    }
  }
  return dist;
}

PomdpState PomdpModel::transition(const PomdpState& s, LocalAction a, Rng& rng) const {
  if (is_terminal(s)) return s;
  PomdpState next = s;
  // One uniform per pedestrian, drawn before any branching on the action,
  // so a fixed stream determinizes the outcome for every action.
  for (std::size_t k = 0; k < s.peds.size(); ++k) {
    const double u = rng.uniform();
    next.peds[k].pos = ped_move_distribution(s, k).sample(u);
  }
  if (a == LocalAction::Go) next.robot_path_index = std::min(s.robot_path_index + 1, last_index());
  next.step = s.step + 1;
  return next;
}

LocalObservation PomdpModel::observe(const PomdpState& s_next, LocalAction, Rng& rng) const {
  const auto& op = params_.observation;
  LocalObservation o;
  o.robot_cell = robot_cell(s_next.robot_path_index);
  o.ped_cells.resize(s_next.peds.size());
  o.gaze_flags.assign(s_next.peds.size(), false);
  for (std::size_t k = 0; k < s_next.peds.size(); ++k) {
    const PedState& p = s_next.peds[k];
    const double u = rng.uniform();
    const double ug = rng.uniform();
    if (!visible(s_next.robot_path_index, p.pos)) continue;
    if (u < op.p_miss) continue;
    GridIndex reported = p.pos;
    if (u < op.p_miss + op.p_noise) {
      std::array<GridIndex, 8> nbrs{};
      const int n = free_neighbors(p.pos, nbrs);
      if (n > 0) {
        const double frac = (u - op.p_miss) / op.p_noise;
        const int pick = std::min(n - 1, static_cast<int>(frac * n));
        reported = nbrs[static_cast<std::size_t>(pick)];
      }
    }
    o.ped_cells[k] = reported;
    o.gaze_flags[k] = p.g == 1 && ug >= op.p_gfn;
  }
  return o;
}

double PomdpModel::obs_likelihood(const PomdpState& s_next, LocalAction, const LocalObservation& o) const {
  if (o.ped_cells.size() != s_next.peds.size() || o.gaze_flags.size() != s_next.peds.size()) {
    throw Error(Errc::InvalidArgument, "observation does not match the state's pedestrian count");
  }
  if (o.robot_cell != robot_cell(s_next.robot_path_index)) return 0.0;
  const auto& op = params_.observation;
  double likelihood = 1.0;
  for (std::size_t k = 0; k < s_next.peds.size(); ++k) {
    const PedState& p = s_next.peds[k];
    const bool flag = o.gaze_flags[k];
    if (!visible(s_next.robot_path_index, p.pos)) {
      if (o.ped_cells[k] || flag) return 0.0;
      continue;
    }
    if (!o.ped_cells[k]) {
      if (flag) return 0.0;
      likelihood *= op.p_miss;
      continue;
    }
    std::array<GridIndex, 8> nbrs{};
    const int n = free_neighbors(p.pos, nbrs);
    double pc = 0.0;
    if (*o.ped_cells[k] == p.pos) pc += n > 0 ? 1.0 - op.p_miss - op.p_noise : 1.0 - op.p_miss;
    for (int m = 0; m < n; ++m) {
      if (nbrs[static_cast<std::size_t>(m)] == *o.ped_cells[k]) pc += op.p_noise / n;
    }
    const double pg = p.g == 1 ? (flag ? 1.0 - op.p_gfn : op.p_gfn) : (flag ? 0.0 : 1.0);
    likelihood *= pc * pg;
    if (likelihood == 0.0) return 0.0;
  }
  return likelihood;
}

double tick_reward(const RewardParams& rp, LocalAction a, bool moved, bool reached, GridIndex robot,
                   const std::vector<PedState>& peds, double resolution) {
  double r = rp.w_t * rp.r_time;
  if (reached) r += rp.w_g * rp.r_goal;
  if (a == LocalAction::Avoid) r += rp.w_t * rp.avoid_cost;
  for (const PedState& p : peds) {
    if (p.pos == robot) {
      r += rp.w_c * rp.r_collision;
      continue;
    }
    if (!moved && rp.proximity == ProximityRule::Approach) continue;
    const double radius = collision_radius(p.g, rp);
    const double d = cell_distance(robot, p.pos, resolution);
    if (d > radius) continue;
    const double scale = rp.shape == CollisionShape::Step ? 1.0 : 1.0 - d / radius;
    r += rp.w_c * rp.r_collision * scale;
  }
  return r;
}

double PomdpModel::reward(const PomdpState& s, LocalAction a, const PomdpState& s_next) const {
  if (is_terminal(s)) return 0.0;
  return tick_reward(params_.reward, a, s_next.robot_path_index != s.robot_path_index,
                     s_next.robot_path_index >= last_index(), robot_cell(s_next.robot_path_index), s_next.peds,
                     resolution());
}

StepOutcome PomdpModel::step(const PomdpState& s, LocalAction a, Rng& rng) const {
  StepOutcome out;
  if (is_terminal(s)) {
    out.next = s;
    out.obs = observe(s, a, rng);
    out.terminal = true;
    return out;
  }
  out.next = transition(s, a, rng);
  out.reward = reward(s, a, out.next);
  out.obs = observe(out.next, a, rng);
  out.terminal = is_terminal(out.next);
  return out;
}

LocalAction PomdpModel::default_action(const PomdpState& s) const {
  const GridIndex target = go_target(s.robot_path_index);
  for (const PedState& p : s.peds) {
    if (p.g == -1 && cell_distance(target, p.pos, resolution()) <= params_.reward.rho_nonaware) {
      return LocalAction::Wait;
    }
  }
  return LocalAction::Go;
}

}  // namespace awarenav
