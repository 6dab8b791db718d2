#include "awarenav/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <json.hpp>
#include <map>
#include <numbers>
#include <thread>

#include "awarenav/error.hpp"

namespace awarenav {

using nlohmann::json;

namespace {

bool contains(const std::vector<GridIndex>& cells, GridIndex c) {
  return std::find(cells.begin(), cells.end(), c) != cells.end();
}

bool open_for(const WorldPed& ped, const PedStepContext& ctx, GridIndex c) {
  if (!ctx.grid->is_free(c) || c == ctx.robot || contains(ctx.blocked, c)) return false;
  return !(ped.g_true == 1 && c == ctx.robot_next);
}

/// First move of a shortest 8-connected route to `target` through open cells.
std::optional<GridIndex> step_toward(const WorldPed& ped, const PedStepContext& ctx, GridIndex target) {
  const OccupancyGrid& g = *ctx.grid;
  std::vector<int> parent(g.cell_count(), -1);
  std::deque<GridIndex> frontier{ped.pos};
  parent[g.linear(ped.pos)] = static_cast<int>(g.linear(ped.pos));
  while (!frontier.empty()) {
    const GridIndex c = frontier.front();
    frontier.pop_front();
    if (c == target) break;
    for (GlobalAction a : kGlobalActions) {
      const GridIndex n = step(c, a);
      if (!g.in_bounds(n) || parent[g.linear(n)] >= 0 || !open_for(ped, ctx, n)) continue;
      parent[g.linear(n)] = static_cast<int>(g.linear(c));
      frontier.push_back(n);
    }
  }
  if (!g.in_bounds(target) || parent[g.linear(target)] < 0) return std::nullopt;
  GridIndex c = target;
  while (true) {
    const GridIndex p = g.unlinear(static_cast<std::size_t>(parent[g.linear(c)]));
    if (p == ped.pos) return c;
    c = p;
  }
}

}  // namespace

void pedestrian_step(WorldPed& ped, const PedStepContext& ctx, Rng& rng) {
  if (!ped.active) return;
  ped.residue += ped.speed;
  if (ped.residue < 1.0 - 1e-12) return;
  ped.residue -= 1.0;

  if (ped.target) {
    if (ped.pos == *ped.target) return;
    if (auto next = step_toward(ped, ctx, *ped.target)) ped.pos = *next;
    return;
  }

  if (ped.kind == PedKind::ScriptedPath) {
    const auto last = ped.route.size() - 1;
    if (ped.route.size() < 2) return;
    bool at_end = ped.route_dir > 0 ? ped.route_pos >= last : ped.route_pos == 0;
    if (at_end) {
      if (!ped.loop) {
        ped.active = false;
        return;
      }
      ped.route_dir = -ped.route_dir;
    }
    std::size_t nxt = ped.route_dir > 0 ? ped.route_pos + 1 : ped.route_pos - 1;
    if (!open_for(ped, ctx, ped.route[nxt])) {
      // A looping walker turns back instead of waiting on the robot.
      if (!ped.loop || at_end) return;
      ped.route_dir = -ped.route_dir;
      nxt = ped.route_dir > 0 ? ped.route_pos + 1 : ped.route_pos - 1;
      if (!open_for(ped, ctx, ped.route[nxt])) return;
    }
    ped.route_pos = nxt;
    ped.pos = ped.route[nxt];
    return;
  }

  const double u = rng.uniform();
  std::array<GridIndex, 8> options{};
  std::size_t n = 0;
  for (GlobalAction a : kGlobalActions) {
    const GridIndex c = step(ped.pos, a);
    if (open_for(ped, ctx, c) || (ped.can_exit && !ctx.grid->in_bounds(c))) options[n++] = c;
  }
  if (u < ped.stay_prob || n == 0) return;
  const GridIndex next = options[rng.index(n)];
  if (!ctx.grid->in_bounds(next)) {
    ped.active = false;
    return;
  }
  ped.pos = next;
}

bool in_sensor_sector(Vec2 robot, Vec2 heading, Vec2 target, const SensorSpec& sensors) noexcept {
  const double dx = target.x - robot.x;
  const double dy = target.y - robot.y;
  const double d = std::hypot(dx, dy);
  if (d > sensors.range_m) return false;
  if (d == 0.0 || sensors.fov_deg >= 360.0) return true;
  const double cosang = std::clamp((dx * heading.x + dy * heading.y) / d, -1.0, 1.0);
  return std::acos(cosang) * 180.0 / std::numbers::pi <= 0.5 * sensors.fov_deg + 1e-9;
}

SenseResult sense(std::vector<WorldPed>& peds, GridIndex robot, Vec2 heading, double resolution,
                  const SensorSpec& sensors, int tick, double timestamp, Rng& rng) {
  SenseResult out;
  const Vec2 rpos = grid_to_world(robot, resolution);
  for (WorldPed& p : peds) {
    p.gaze_now = false;
    if (!p.active) continue;
    const Vec2 pos = grid_to_world(p.pos, resolution);
    if (!in_sensor_sector(rpos, heading, pos, sensors)) continue;
    out.seen_ids.push_back(p.id);

    bool gazing = false;
    if (p.gaze_override) {
      gazing = *p.gaze_override;
    } else if (p.g_true == 1) {
      // Without a script an aware pedestrian looks at the robot whenever it
      // can see it; a script takes over from its first entry on.
      gazing = p.gaze_script.empty();
      for (const auto& [t, on] : p.gaze_script) {
        if (t <= tick) gazing = on;
      }
    }
    if (gazing && rng.uniform() < sensors.gaze_false_neg) gazing = false;
    p.gaze_now = gazing;

    Detection v;
    v.source = DetectionSource::Vision;
    v.pos = {pos.x + rng.normal(0.0, 1.0) * sensors.vision_sigma_m, pos.y + rng.normal(0.0, 1.0) * sensors.vision_sigma_m};
    v.timestamp = timestamp;
    v.gaze = gazing;
    out.vision.push_back(v);

    Detection l;
    l.source = DetectionSource::Laser;
    l.pos = {pos.x + rng.normal(0.0, 1.0) * sensors.laser_sigma_m, pos.y + rng.normal(0.0, 1.0) * sensors.laser_sigma_m};
    l.timestamp = timestamp;
    out.laser.push_back(l);
  }

  out.clutter = rng.poisson(sensors.clutter_rate);
  const double base = std::atan2(heading.y, heading.x);
  const double half = 0.5 * sensors.fov_deg * std::numbers::pi / 180.0;
  for (int k = 0; k < out.clutter; ++k) {
    const double r = sensors.range_m * std::sqrt(rng.uniform());
    const double ang = base + (2.0 * rng.uniform() - 1.0) * half;
    Detection l;
    l.source = DetectionSource::Laser;
    l.pos = {rpos.x + r * std::cos(ang), rpos.y + r * std::sin(ang)};
    l.timestamp = timestamp;
    l.confidence = 0.5;
    out.laser.push_back(l);
  }
  return out;
}

bool avoid_trigger(const std::vector<LocalAction>& history, int m) {
  if (m <= 0 || history.size() < static_cast<std::size_t>(m)) return false;
  return std::all_of(history.end() - m, history.end(), [](LocalAction a) { return a == LocalAction::Wait; });
}

Metrics compute_metrics(const std::vector<StepRecord>& records) {
  Metrics m;
  m.ticks = static_cast<int>(records.size());
  for (const StepRecord& r : records) {
    if (r.collision) m.collided = true;
    if (r.replanned) ++m.replans;
    const PedRecord* closest = nullptr;
    for (const PedRecord& p : r.peds) {
      if (!p.active) continue;
      if (!closest || p.distance < closest->distance) closest = &p;
      if (!m.min_distance || p.distance < *m.min_distance) m.min_distance = p.distance;
    }
    if (r.action == LocalAction::Wait && closest) {
      (closest->g_true == 1 ? m.wait_dist_aware : m.wait_dist_nonaware).push_back(closest->distance);
    }
  }
  if (!records.empty() && records.back().reached) {
    m.reached = true;
    m.steps_to_goal = records.back().tick;
  }
  return m;
}

std::string to_json_line(const StepRecord& r) {
  json peds = json::array();
  for (const PedRecord& p : r.peds) {
    peds.push_back({{"id", p.id},
                    {"cell", {p.cell.i, p.cell.j}},
                    {"g_true", p.g_true},
                    {"active", p.active},
                    {"distance", p.distance},
                    {"latched", p.latched},
                    {"aware_fraction", p.aware_fraction ? json(*p.aware_fraction) : json(nullptr)}});
  }
  const json j = {{"tick", r.tick},
                  {"robot_cell", {r.robot_cell.i, r.robot_cell.j}},
                  {"path_index", r.path_index},
                  {"action", std::string(to_string(r.action))},
                  {"replanned", r.replanned},
                  {"reward", r.reward},
                  {"bounds", {r.root_lower, r.root_upper}},
                  {"peds", peds},
                  {"collision", r.collision},
                  {"reached", r.reached}};
  return j.dump();
}

std::string to_json_lines(const EpisodeLog& log) {
  std::string out;
  for (const StepRecord& r : log.records) {
    out += to_json_line(r);
    out += '\n';
  }
  return out;
}

EpisodeRunner::EpisodeRunner(ScenarioConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed), tracker_(config_.tracker) {
  config_.validate();
  path_ = plan_path(config_.grid, config_.start, config_.goal, config_.mdp);
  robot_ = config_.start;
  const int hops = static_cast<int>(path_.hops());
  tick_cap_ = config_.sim.tick_cap > 0 ? config_.sim.tick_cap : 10 * std::max(hops, 1);
  for (const PedestrianSpec& spec : config_.peds) {
    WorldPed p;
    p.id = spec.id;
    p.kind = spec.kind;
    p.pos = spec.start;
    p.g_true = spec.g_true;
    if (spec.aware_prob) {
      Rng draw(derive_seed(seed_, 5, static_cast<std::uint64_t>(spec.id)));
      p.g_true = draw.bernoulli(*spec.aware_prob) ? 1 : -1;
    }
    p.route.push_back(spec.start);
    p.route.insert(p.route.end(), spec.path.begin(), spec.path.end());
    p.loop = spec.loop;
    p.speed = spec.speed;
    p.stay_prob = spec.stay_prob;
    p.can_exit = spec.can_exit;
    p.gaze_script = spec.gaze_script;
    std::sort(p.gaze_script.begin(), p.gaze_script.end());
    peds_.push_back(std::move(p));
  }
  if (robot_ == config_.goal) {
    done_ = true;
    end_reason_ = "goal";
  }
}

Vec2 EpisodeRunner::heading() const {
  const int last = static_cast<int>(path_.waypoints.size()) - 1;
  if (last <= 0) return {1.0, 0.0};
  const int from = std::clamp(path_index_, 0, last - 1);
  const GridIndex a = path_.waypoints[static_cast<std::size_t>(from)];
  const GridIndex b = path_.waypoints[static_cast<std::size_t>(from + 1)];
  const double n = std::hypot(b.i - a.i, b.j - a.j);
  return {(b.i - a.i) / n, (b.j - a.j) / n};
}

std::vector<std::size_t> EpisodeRunner::belief_tracks(const LocalWindow& win) const {
  std::vector<std::size_t> out;
  const double res = config_.grid.resolution();
  const auto& tracks = tracker_.tracks();
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    // Coasting tracks stay in the tracker for re-association but leave the
    // belief: only pedestrians observed this tick are planned around.
    if (!tracks[t].observed) continue;
    const Vec2 p = tracks[t].state.position();
    const GridIndex c{static_cast<int>(std::floor(p.x / res)), static_cast<int>(std::floor(p.y / res))};
    if (config_.grid.in_bounds(c) && win.contains(c)) out.push_back(t);
  }
  return out;
}

std::optional<std::size_t> EpisodeRunner::ped_near(Vec2 pos) const {
  std::optional<std::size_t> best;
  double best_d = config_.tracker.association_gate;
  for (std::size_t k = 0; k < peds_.size(); ++k) {
    if (!peds_[k].active) continue;
    const double d = distance(pos, grid_to_world(peds_[k].pos, config_.grid));
    if (d <= best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

WorldPed* EpisodeRunner::find_ped(int id) {
  for (WorldPed& p : peds_) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const StepRecord& EpisodeRunner::step() {
  if (done_) {
    if (records_.empty()) throw Error(Errc::InvalidArgument, "episode finished before its first tick");
    return records_.back();
  }
  ++tick_;
  const auto t = static_cast<std::uint64_t>(tick_);
  Rng ped_rng(derive_seed(seed_, 1, t));
  Rng sense_rng(derive_seed(seed_, 2, t));
  Rng belief_rng(derive_seed(seed_, 3, t));
  const OccupancyGrid& grid = config_.grid;
  const int last = static_cast<int>(path_.waypoints.size()) - 1;

  // World update: pedestrians move around the robot as it stands.
  const GridIndex robot_next = path_.waypoints[static_cast<std::size_t>(std::min(path_index_ + 1, last))];
  for (std::size_t k = 0; k < peds_.size(); ++k) {
    PedStepContext ctx;
    ctx.grid = &grid;
    ctx.robot = robot_;
    ctx.robot_next = robot_next;
    for (std::size_t o = 0; o < peds_.size(); ++o) {
      if (o != k && peds_[o].active) ctx.blocked.push_back(peds_[o].pos);
    }
    pedestrian_step(peds_[k], ctx, ped_rng);
  }

  // Sensing and tracking.
  const double timestamp = tick_ * config_.sim.tick_seconds;
  const SenseResult sensed = sense(peds_, robot_, heading(), grid.resolution(), config_.sensors, tick_, timestamp,
                                   sense_rng);
  tracker_.step(sensed.vision, sensed.laser, timestamp);

  // Belief over the tracked pedestrians inside the local window.
  const LocalWindow win = local_window(grid, robot_, config_.sim.window_size);
  const PomdpModel model(path_, win, config_.model);
  const std::vector<std::size_t> sel = belief_tracks(win);
  const auto& tracks = tracker_.tracks();
  BeliefKey key;
  key.origin = win.origin;
  key.replans = replans_;
  std::vector<Track> chosen;
  for (std::size_t t_idx : sel) {
    key.tracks.emplace_back(tracks[t_idx].id, tracks[t_idx].gaze.latched);
    chosen.push_back(tracks[t_idx]);
  }

  LocalObservation obs;
  obs.robot_cell = robot_;
  obs.ped_cells.resize(chosen.size());
  obs.gaze_flags.assign(chosen.size(), false);
  for (std::size_t n = 0; n < chosen.size(); ++n) {
    if (!chosen[n].observed) continue;
    const Vec2 p = chosen[n].state.position();
    const GridIndex c = win.clamp({static_cast<int>(std::floor(p.x / grid.resolution())),
                                   static_cast<int>(std::floor(p.y / grid.resolution()))});
    if (!model.visible(path_index_, c) || !model.window_free(c)) continue;
    obs.ped_cells[n] = c;
    obs.gaze_flags[n] = chosen[n].gaze.latched;
  }

  // A latch that flips between ticks says nothing about positions: keep the
  // particles and make that pedestrian aware in all of them.
  bool same_tracks = belief_ && belief_key_ && belief_key_->origin == key.origin &&
                     belief_key_->replans == key.replans && belief_key_->tracks.size() == key.tracks.size();
  for (std::size_t n = 0; same_tracks && n < key.tracks.size(); ++n) {
    same_tracks = belief_key_->tracks[n].first == key.tracks[n].first &&
                  (belief_key_->tracks[n].second == key.tracks[n].second || key.tracks[n].second);
  }
  if (same_tracks && !(*belief_key_ == key)) {
    for (std::size_t n = 0; n < key.tracks.size(); ++n) {
      if (!key.tracks[n].second || belief_key_->tracks[n].second) continue;
      for (PomdpState& st : belief_->particles) st.peds[n].g = 1;
    }
  }

  bool fresh = true;
  if (same_tracks && last_model_action_) {
    try {
      belief_ = update_belief(*belief_, *last_model_action_, obs, model, belief_rng);
      fresh = false;
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateBelief) throw;
    }
  }
  if (fresh) {
    belief_ = init_belief(chosen, path_index_, model, config_.belief.k_particles, belief_rng,
                          config_.belief.p_aware_prior);
  }
  belief_key_ = key;
  belief_track_ids_.clear();
  for (const Track& tr : chosen) belief_track_ids_.push_back(tr.id);

  // Decide.
  DespotParams dp = config_.solver;
  dp.gamma = config_.model.gamma;
  dp.seed = derive_seed(seed_, 4, t);
  last_solve_ = solve(*belief_, model, dp);
  LocalAction action = last_solve_.action;
  if (action == LocalAction::Wait && avoid_trigger(history_, config_.sim.stuck_waits)) action = LocalAction::Avoid;

  StepRecord rec;
  rec.tick = tick_;
  rec.root_lower = last_solve_.root_lower;
  rec.root_upper = last_solve_.root_upper;
  const double res = grid.resolution();
  for (const WorldPed& p : peds_) {
    PedRecord pr;
    pr.id = p.id;
    pr.cell = p.pos;
    pr.g_true = p.g_true;
    pr.active = p.active;
    pr.distance = cell_distance(robot_, p.pos, res);
    rec.peds.push_back(pr);
  }
  for (const Track& tr : tracks) {
    if (auto k = ped_near(tr.state.position()); k && tr.gaze.latched) rec.peds[*k].latched = true;
  }
  const std::vector<PedBeliefSummary> marg = summarize(*belief_);
  for (std::size_t n = 0; n < chosen.size() && n < marg.size(); ++n) {
    if (auto k = ped_near(chosen[n].state.position())) rec.peds[*k].aware_fraction = marg[n].aware_fraction;
  }

  // Act.
  bool moved = false;
  if (action == LocalAction::Avoid) {
    std::vector<GridIndex> humans;
    for (const Track& tr : tracks) {
      const Vec2 p = tr.state.position();
      const GridIndex c{static_cast<int>(std::floor(p.x / res)), static_cast<int>(std::floor(p.y / res))};
      if (grid.in_bounds(c) && c != robot_) humans.push_back(c);
    }
    try {
      path_ = replan(grid.with_humans(humans), robot_, config_.goal, config_.mdp);
      path_index_ = 0;
      ++replans_;
      rec.replanned = true;
      // Avoid moves one cell onto the new, pedestrian-free route.
      if (path_.waypoints.size() > 1) {
        path_index_ = 1;
        robot_ = path_.waypoints[1];
        moved = true;
      }
    } catch (const Error& e) {
      if (e.code() != Errc::Unreachable) throw;
    }
    history_.clear();
    last_model_action_ = LocalAction::Wait;
  } else {
    history_.push_back(action);
    last_model_action_ = action;
    if (action == LocalAction::Go && path_index_ < last) {
      ++path_index_;
      robot_ = path_.waypoints[static_cast<std::size_t>(path_index_)];
      moved = true;
    }
  }

  rec.action = action;
  rec.robot_cell = robot_;
  rec.path_index = path_index_;
  std::vector<PedState> truth;
  for (const WorldPed& p : peds_) {
    if (p.active) truth.push_back({p.pos, p.g_true});
  }
  rec.reached = robot_ == config_.goal;
  rec.collision = std::any_of(truth.begin(), truth.end(), [&](const PedState& p) { return p.pos == robot_; });
  rec.reward = tick_reward(config_.model.reward, action, moved, rec.reached, robot_, truth, res);
  records_.push_back(std::move(rec));

  const StepRecord& out = records_.back();
  if (out.collision) {
    done_ = true;
    end_reason_ = "collision";
  } else if (out.reached) {
    done_ = true;
    end_reason_ = "goal";
  } else if (tick_ >= tick_cap_) {
    done_ = true;
    end_reason_ = "timeout";
  }
  return out;
}

std::vector<std::optional<PedBeliefSummary>> EpisodeRunner::belief_by_ped() const {
  std::vector<std::optional<PedBeliefSummary>> out(peds_.size());
  if (!belief_) return out;
  const std::vector<PedBeliefSummary> marg = summarize(*belief_);
  for (std::size_t n = 0; n < belief_track_ids_.size() && n < marg.size(); ++n) {
    for (const Track& tr : tracker_.tracks()) {
      if (tr.id != belief_track_ids_[n]) continue;
      if (auto k = ped_near(tr.state.position())) out[*k] = marg[n];
    }
  }
  return out;
}

std::string EpisodeRunner::set_ped_target(int id, GridIndex cell) {
  WorldPed* p = find_ped(id);
  if (!p) return "unknown pedestrian id " + std::to_string(id);
  if (!p->active) return "pedestrian " + std::to_string(id) + " has left the map";
  if (!config_.grid.in_bounds(cell)) return "target cell outside the map";
  if (!config_.grid.is_free(cell)) return "target cell is an obstacle";
  if (cell == robot_) return "target cell holds the robot";
  for (const WorldPed& o : peds_) {
    if (o.active && o.id != id && o.pos == cell) return "target cell holds pedestrian " + std::to_string(o.id);
  }
  p->target = cell;
  return {};
}

std::string EpisodeRunner::set_gaze_override(int id, bool on) {
  WorldPed* p = find_ped(id);
  if (!p) return "unknown pedestrian id " + std::to_string(id);
  p->gaze_override = on;
  return {};
}

EpisodeLog EpisodeRunner::log() const {
  EpisodeLog out;
  out.scenario = config_.name;
  out.seed = seed_;
  out.records = records_;
  out.metrics = compute_metrics(records_);
  out.end_reason = end_reason_;
  return out;
}

EpisodeLog run_episode(const ScenarioConfig& config, std::uint64_t seed) {
  EpisodeRunner runner(config, seed);
  while (!runner.done()) runner.step();
  return runner.log();
}

std::vector<EpisodeLog> run_episodes(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
                                     unsigned threads) {
  std::vector<EpisodeLog> out(seeds.size());
  if (seeds.empty()) return out;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(seeds.size());
  auto work = [&] {
    for (std::size_t k = next++; k < seeds.size(); k = next++) {
      try {
        out[k] = run_episode(config, seeds[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < threads; ++w) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace awarenav
