#include "awarenav/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "awarenav/error.hpp"

namespace awarenav {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(Errc::Config, "field " + (where.empty() ? std::string("/") : where) + ": " + what);
}

/// Cursor over one JSON object that knows its pointer path and rejects keys
/// nobody asked for, so typos fail loudly instead of silently using defaults.
class Fields {
 public:
  Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) fail(where_, "expected an object");
  }

  std::string at(std::string_view key) const { return where_ + "/" + std::string(key); }

  const json* get(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = obj_.find(std::string(key));
    return it == obj_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(std::string_view key, T& out) {
    const json* v = get(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      fail(at(key), "wrong type");
    }
  }

  void read_number(std::string_view key, double& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number()) fail(at(key), "expected a number");
    out = v->get<double>();
  }

  void read_int(std::string_view key, int& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number_integer()) fail(at(key), "expected an integer");
    out = v->get<int>();
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.contains(it.key())) fail(at(it.key()), "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

GridIndex to_cell(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    fail(where, "expected a cell [i, j]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

std::size_t line_of(std::string_view text, std::size_t byte, std::size_t& column) {
  std::size_t line = 1;
  std::size_t last_nl = 0;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      last_nl = k + 1;
    }
  }
  column = byte >= last_nl ? byte - last_nl + 1 : 1;
  return line;
}

PedestrianSpec parse_ped(const json& j, const std::string& where, int default_id) {
  Fields f(j, where);
  PedestrianSpec p;
  p.id = default_id;
  f.read_int("id", p.id);
  if (const json* k = f.get("kind")) {
    const std::string s = k->is_string() ? k->get<std::string>() : "";
    if (s == "random_walk") {
      p.kind = PedKind::RandomWalk;
    } else if (s == "scripted") {
      p.kind = PedKind::ScriptedPath;
    } else {
      fail(f.at("kind"), "expected \"random_walk\" or \"scripted\"");
    }
  }
  const json* start = f.get("start");
  if (!start) fail(f.at("start"), "missing");
  p.start = to_cell(*start, f.at("start"));
  if (const json* path = f.get("path")) {
    if (!path->is_array()) fail(f.at("path"), "expected an array of cells");
    for (std::size_t k = 0; k < path->size(); ++k) {
      p.path.push_back(to_cell((*path)[k], f.at("path") + "/" + std::to_string(k)));
    }
  }
  f.read("loop", p.loop);
  if (const json* aware = f.get("aware")) {
    if (aware->is_boolean()) {
      p.g_true = aware->get<bool>() ? 1 : -1;
    } else if (aware->is_number()) {
      const double q = aware->get<double>();
      if (!(q >= 0.0 && q <= 1.0)) fail(f.at("aware"), "probability must lie in [0, 1]");
      p.aware_prob = q;
    } else {
      fail(f.at("aware"), "expected a boolean or a probability");
    }
  }
  if (const json* gs = f.get("gaze_script")) {
    if (!gs->is_array()) fail(f.at("gaze_script"), "expected an array of [tick, bool]");
    for (std::size_t k = 0; k < gs->size(); ++k) {
      const json& e = (*gs)[k];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_boolean()) {
        fail(f.at("gaze_script") + "/" + std::to_string(k), "expected [tick, bool]");
      }
      p.gaze_script.emplace_back(e[0].get<int>(), e[1].get<bool>());
    }
  }
  f.read_number("speed", p.speed);
  f.read_number("stay_prob", p.stay_prob);
  f.read("can_exit", p.can_exit);
  f.finish();
  return p;
}

}  // namespace

void ScenarioConfig::validate() const {
  auto check_cell = [&](GridIndex c, const std::string& where) {
    if (!grid.in_bounds(c)) fail(where, "cell outside the map");
    if (!grid.is_free(c)) fail(where, "cell is an obstacle");
  };
  check_cell(start, "/start");
  check_cell(goal, "/goal");
  std::set<int> ids;
  for (std::size_t k = 0; k < peds.size(); ++k) {
    const PedestrianSpec& p = peds[k];
    const std::string where = "/pedestrians/" + std::to_string(k);
    if (!ids.insert(p.id).second) fail(where + "/id", "duplicate pedestrian id");
    check_cell(p.start, where + "/start");
    GridIndex prev = p.start;
    for (std::size_t s = 0; s < p.path.size(); ++s) {
      check_cell(p.path[s], where + "/path/" + std::to_string(s));
      if (!is_neighbor8(prev, p.path[s])) fail(where + "/path/" + std::to_string(s), "path is not 8-connected");
      prev = p.path[s];
    }
    if (p.kind == PedKind::ScriptedPath && p.path.empty()) fail(where + "/path", "scripted pedestrian needs a path");
    if (!(p.speed > 0.0 && p.speed <= 1.0)) fail(where + "/speed", "must lie in (0, 1]");
    if (!(p.stay_prob >= 0.0 && p.stay_prob <= 1.0)) fail(where + "/stay_prob", "must lie in [0, 1]");
  }
  if (!(sensors.fov_deg > 0.0 && sensors.fov_deg <= 360.0)) fail("/sensors/fov_deg", "must lie in (0, 360]");
  if (!(sensors.range_m > 0.0)) fail("/sensors/range_m", "must be positive");
  if (sensors.vision_sigma_m < 0.0 || sensors.laser_sigma_m < 0.0) fail("/sensors", "noise must be nonnegative");
  if (sensors.gaze_false_neg < 0.0 || sensors.gaze_false_neg > 1.0) fail("/sensors/gaze_false_neg", "must lie in [0, 1]");
  if (sensors.clutter_rate < 0.0) fail("/sensors/clutter_rate", "must be nonnegative");
  if (sim.window_size < 3) fail("/sim/window_size", "must be at least 3");
  if (sim.window_size > grid.width() || sim.window_size > grid.height()) fail("/sim/window_size", "larger than the map");
  if (sim.stuck_waits < 1) fail("/sim/stuck_waits", "must be at least 1");
  if (sim.tick_cap < 0) fail("/sim/tick_cap", "must be nonnegative");
  if (!(sim.tick_seconds > 0.0)) fail("/sim/tick_seconds", "must be positive");
  if (belief.k_particles < 1) fail("/belief/k_particles", "must be at least 1");
  if (belief.p_aware_prior < 0.0 || belief.p_aware_prior > 1.0) fail("/belief/p_aware_prior", "must lie in [0, 1]");
  try {
    mdp.validate();
  } catch (const Error& e) {
    fail("/mdp", e.what());
  }
  try {
    model.reward.validate();
  } catch (const Error& e) {
    fail("/reward", e.what());
  }
  try {
    solver.validate();
  } catch (const Error& e) {
    fail("/solver", e.what());
  }
}

ScenarioConfig parse_scenario(std::string_view json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    std::size_t col = 0;
    const std::size_t line = line_of(json_text, e.byte == 0 ? 0 : e.byte - 1, col);
    throw Error(Errc::Config, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                                  "malformed JSON (" + std::string(e.what()) + ")");
  }

  Fields f(root, "");
  ScenarioConfig cfg;
  f.read("name", cfg.name);

  const json* map = f.get("map");
  const json* map_size = f.get("map_size");
  double resolution = OccupancyGrid::kDefaultResolution;
  f.read_number("resolution", resolution);
  if (map && map_size) fail("/map", "give either map or map_size, not both");
  if (map) {
    if (map->is_string()) {
      std::filesystem::path p = map->get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      try {
        cfg.grid = load_map(p.string());
      } catch (const Error& e) {
        fail("/map", e.what());
      }
    } else if (map->is_array()) {
      std::ostringstream text;
      const std::size_t h = map->size();
      const std::size_t w = h == 0 || !(*map)[0].is_string() ? 0 : (*map)[0].get<std::string>().size();
      text << w << ' ' << h << ' ' << resolution << '\n';
      for (std::size_t k = 0; k < h; ++k) {
        if (!(*map)[k].is_string()) fail("/map/" + std::to_string(k), "expected a row string");
        text << (*map)[k].get<std::string>() << '\n';
      }
      try {
        cfg.grid = parse_map(text.str());
      } catch (const Error& e) {
        fail("/map", e.what());
      }
    } else {
      fail("/map", "expected a file name or an array of rows");
    }
  } else if (map_size) {
    if (!map_size->is_array() || map_size->size() != 2 || !(*map_size)[0].is_number_integer() ||
        !(*map_size)[1].is_number_integer()) {
      fail("/map_size", "expected [width, height]");
    }
    try {
      cfg.grid = OccupancyGrid((*map_size)[0].get<int>(), (*map_size)[1].get<int>(), resolution);
    } catch (const Error& e) {
      fail("/map_size", e.what());
    }
  } else {
    fail("/map", "missing (give map or map_size)");
  }

  const json* start = f.get("start");
  if (!start) fail("/start", "missing");
  cfg.start = to_cell(*start, "/start");
  const json* goal = f.get("goal");
  if (!goal) fail("/goal", "missing");
  cfg.goal = to_cell(*goal, "/goal");

  if (const json* peds = f.get("pedestrians")) {
    if (!peds->is_array()) fail("/pedestrians", "expected an array");
    for (std::size_t k = 0; k < peds->size(); ++k) {
      cfg.peds.push_back(parse_ped((*peds)[k], "/pedestrians/" + std::to_string(k), static_cast<int>(k)));
    }
  }

  bool obs_fov_set = false;
  bool obs_range_set = false;
  if (const json* s = f.get("sensors")) {
    Fields g(*s, "/sensors");
    g.read_number("fov_deg", cfg.sensors.fov_deg);
    g.read_number("range_m", cfg.sensors.range_m);
    g.read_number("vision_sigma_m", cfg.sensors.vision_sigma_m);
    g.read_number("laser_sigma_m", cfg.sensors.laser_sigma_m);
    g.read_number("gaze_false_neg", cfg.sensors.gaze_false_neg);
    g.read_number("clutter_rate", cfg.sensors.clutter_rate);
    g.finish();
  }
  if (const json* s = f.get("mdp")) {
    Fields g(*s, "/mdp");
    g.read_number("gamma", cfg.mdp.gamma);
    g.read_number("epsilon_vi", cfg.mdp.epsilon_vi);
    g.read_number("step_reward", cfg.mdp.step_reward);
    g.read_number("goal_reward", cfg.mdp.goal_reward);
    g.read_int("max_iterations", cfg.mdp.max_iterations);
    g.finish();
  }
  if (const json* s = f.get("reward")) {
    Fields g(*s, "/reward");
    RewardParams& r = cfg.model.reward;
    g.read_number("w_g", r.w_g);
    g.read_number("w_c", r.w_c);
    g.read_number("w_t", r.w_t);
    g.read_number("r_goal", r.r_goal);
    g.read_number("r_collision", r.r_collision);
    g.read_number("r_time", r.r_time);
    g.read_number("avoid_cost", r.avoid_cost);
    g.read_number("rho_aware", r.rho_aware);
    g.read_number("rho_nonaware", r.rho_nonaware);
    if (const json* v = g.get("shape")) {
      const std::string s2 = v->is_string() ? v->get<std::string>() : "";
      if (s2 == "step") {
        r.shape = CollisionShape::Step;
      } else if (s2 == "linear_ramp") {
        r.shape = CollisionShape::LinearRamp;
      } else {
        fail("/reward/shape", "expected \"step\" or \"linear_ramp\"");
      }
    }
    if (const json* v = g.get("proximity")) {
      const std::string s2 = v->is_string() ? v->get<std::string>() : "";
      if (s2 == "approach") {
        r.proximity = ProximityRule::Approach;
      } else if (s2 == "always") {
        r.proximity = ProximityRule::Always;
      } else {
        fail("/reward/proximity", "expected \"approach\" or \"always\"");
      }
    }
    g.finish();
  }
  if (const json* s = f.get("transition")) {
    Fields g(*s, "/transition");
    g.read_number("ped_stay_prob", cfg.model.transition.ped_stay_prob);
    g.read("aware_avoidance", cfg.model.transition.aware_avoidance);
    g.finish();
  }
  if (const json* s = f.get("observation")) {
    Fields g(*s, "/observation");
    ObservationParams& o = cfg.model.observation;
    g.read_number("p_miss", o.p_miss);
    g.read_number("p_noise", o.p_noise);
    g.read_number("p_gfn", o.p_gfn);
    obs_fov_set = g.get("fov_deg") != nullptr;
    obs_range_set = g.get("range_m") != nullptr;
    g.read_number("fov_deg", o.fov_deg);
    g.read_number("range_m", o.range_m);
    g.finish();
  }
  if (!obs_fov_set) cfg.model.observation.fov_deg = cfg.sensors.fov_deg;
  if (!obs_range_set) cfg.model.observation.range_m = cfg.sensors.range_m;

  if (const json* s = f.get("solver")) {
    Fields g(*s, "/solver");
    g.read_int("k_scenarios", cfg.solver.k_scenarios);
    g.read_int("max_depth", cfg.solver.max_depth);
    g.read_number("gamma", cfg.solver.gamma);
    g.read_int("time_budget_ms", cfg.solver.time_budget_ms);
    g.read_int("max_trials", cfg.solver.max_trials);
    g.read_number("regularization_lambda", cfg.solver.regularization_lambda);
    g.read_number("xi", cfg.solver.xi);
    g.finish();
  }
  cfg.model.gamma = cfg.solver.gamma;
  if (const json* s = f.get("belief")) {
    Fields g(*s, "/belief");
    g.read_int("k_particles", cfg.belief.k_particles);
    g.read_number("p_aware_prior", cfg.belief.p_aware_prior);
    g.finish();
  }
  if (const json* s = f.get("tracker")) {
    Fields g(*s, "/tracker");
    g.read_number("fusion_gate", cfg.tracker.fusion_gate);
    g.read_number("association_gate", cfg.tracker.association_gate);
    g.read_int("miss_limit", cfg.tracker.miss_limit);
    g.read_number("gaze_threshold_s", cfg.tracker.gaze_threshold_s);
    double sigma = std::sqrt(cfg.tracker.kalman.r(0, 0));
    g.read_number("measurement_sigma_m", sigma);
    cfg.tracker.kalman.r = Matrix2::Identity() * sigma * sigma;
    g.finish();
  }
  if (const json* s = f.get("sim")) {
    Fields g(*s, "/sim");
    g.read_int("window_size", cfg.sim.window_size);
    g.read_int("stuck_waits", cfg.sim.stuck_waits);
    g.read_int("tick_cap", cfg.sim.tick_cap);
    g.read_number("tick_seconds", cfg.sim.tick_seconds);
    g.finish();
  }
  if (const json* s = f.get("seeds")) {
    if (!s->is_array()) fail("/seeds", "expected an array of integers");
    for (std::size_t k = 0; k < s->size(); ++k) {
      if (!(*s)[k].is_number_unsigned()) fail("/seeds/" + std::to_string(k), "expected a nonnegative integer");
      cfg.seeds.push_back((*s)[k].get<std::uint64_t>());
    }
  }
  f.finish();
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open scenario " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string base = std::filesystem::path(path).parent_path().string();
  return parse_scenario(ss.str(), base.empty() ? "." : base);
}

}  // namespace awarenav
