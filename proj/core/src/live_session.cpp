#include "awarenav/live_session.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "awarenav/error.hpp"

namespace awarenav {

using nlohmann::json;

namespace {

json cell_json(GridIndex c) { return json::array({c.i, c.j}); }

json metrics_json(const Metrics& m) {
  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return json(nullptr);
    double s = 0.0;
    for (double x : v) s += x;
    return json(s / static_cast<double>(v.size()));
  };
  return {{"reached", m.reached},
          {"collided", m.collided},
          {"ticks", m.ticks},
          {"steps_to_goal", m.steps_to_goal ? json(*m.steps_to_goal) : json(nullptr)},
          {"min_distance", m.min_distance ? json(*m.min_distance) : json(nullptr)},
          {"replans", m.replans},
          {"wait_count_aware", m.wait_dist_aware.size()},
          {"wait_count_nonaware", m.wait_dist_nonaware.size()},
          {"mean_wait_dist_aware", mean(m.wait_dist_aware)},
          {"mean_wait_dist_nonaware", mean(m.wait_dist_nonaware)}};
}

// Command ids may be strings or integers; both compare by their JSON text.
std::optional<std::string> command_id_of(const json& j) {
  const auto it = j.find("command_id");
  if (it == j.end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return it->dump();
  return std::nullopt;
}

std::optional<GridIndex> cell_of(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != 2) return std::nullopt;
  if (!(*it)[0].is_number_integer() || !(*it)[1].is_number_integer()) return std::nullopt;
  return GridIndex{(*it)[0].get<int>(), (*it)[1].get<int>()};
}

bool is_int(const json& j, const char* key) { return j.contains(key) && j.at(key).is_number_integer(); }

}  // namespace

LiveSession::LiveSession(ScenarioConfig config, std::uint64_t seed, ScenarioLoader loader)
    : loader_(std::move(loader)) {
  if (!loader_) loader_ = [](const std::string& path) { return load_scenario(path); };
  start_episode(std::move(config), seed);
}

void LiveSession::start_episode(ScenarioConfig config, std::uint64_t seed) {
  const std::string name = config.name;
  runner_ = std::make_unique<EpisodeRunner>(std::move(config), seed);
  episode_id_ = name + "/" + std::to_string(seed) + "/" + std::to_string(episode_counter_++);
  script_.clear();
  pending_steps_ = 0;
}

ReceiveResult LiveSession::receive(int client, std::string_view text) {
  ReceiveResult out;
  auto error = [&](const std::string& msg, const std::optional<std::string>& cid = std::nullopt) {
    json e = {{"v", kProtocolVersion}, {"type", "error"}, {"episode", episode_id_}, {"message", msg}};
    if (cid) e["command_id"] = *cid;
    out.replies.push_back(e.dump());
    return out;
  };

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    return error(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) return error("expected a JSON object");
  const auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer() || v->get<long long>() != kProtocolVersion) {
    out.close = true;
    out.close_reason = "unsupported protocol version; expected v=1";
    return out;
  }
  const std::optional<std::string> cid = command_id_of(j);
  if (!cid) return error("missing or invalid command_id");
  const auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string()) return error("missing command type", cid);
  const std::string type = type_it->get<std::string>();

  if (type == "set_ped_target") {
    if (!is_int(j, "id") || !cell_of(j, "cell")) return error("set_ped_target needs integer id and cell [i, j]", cid);
  } else if (type == "toggle_gaze") {
    if (!is_int(j, "id") || !j.contains("on") || !j.at("on").is_boolean()) {
      return error("toggle_gaze needs integer id and boolean on", cid);
    }
  } else if (type == "set_speed") {
    if (!j.contains("ticks_per_s") || !j.at("ticks_per_s").is_number()) {
      return error("set_speed needs numeric ticks_per_s", cid);
    }
  } else if (type == "reset") {
    if (j.contains("scenario") && !j.at("scenario").is_string() && !j.at("scenario").is_null()) {
      return error("reset scenario must be a string", cid);
    }
    if (j.contains("seed") && !j.at("seed").is_number_unsigned()) return error("reset seed must be unsigned", cid);
  } else if (type != "pause" && type != "resume" && type != "step") {
    return error("unknown command type '" + type + "'", cid);
  }

  if (std::find(used_ids_.begin(), used_ids_.end(), std::pair{client, *cid}) != used_ids_.end()) {
    json ack = {{"v", kProtocolVersion}, {"type", "ack"},          {"episode", episode_id_},
                {"command_id", *cid},    {"status", "rejected"}, {"reason", "duplicate command_id"}};
    out.replies.push_back(ack.dump());
    return out;
  }
  used_ids_.emplace_back(client, *cid);
  queue_.push_back({client, *cid, type, std::string(text)});
  return out;
}

void LiveSession::disconnect(int client) {
  std::erase_if(used_ids_, [client](const auto& e) { return e.first == client; });
  std::erase_if(queue_, [client](const Pending& p) { return p.client == client; });
}

std::vector<Outbound> LiveSession::apply(const Pending& p) {
  const json j = json::parse(p.text);
  std::string reason;
  bool record = false;
  std::vector<Outbound> extra;

  if (p.type == "set_ped_target") {
    if (runner_->done()) {
      reason = "episode has ended";
    } else {
      reason = runner_->set_ped_target(j.at("id").get<int>(), *cell_of(j, "cell"));
      record = reason.empty();
    }
  } else if (p.type == "toggle_gaze") {
    if (runner_->done()) {
      reason = "episode has ended";
    } else {
      reason = runner_->set_gaze_override(j.at("id").get<int>(), j.at("on").get<bool>());
      record = reason.empty();
    }
  } else if (p.type == "pause") {
    paused_ = true;
  } else if (p.type == "resume") {
    paused_ = false;
  } else if (p.type == "step") {
    // Stepping a running episode pauses it first.
    paused_ = true;
    if (runner_->done()) {
      reason = "episode has ended";
    } else {
      ++pending_steps_;
    }
  } else if (p.type == "set_speed") {
    const double s = j.at("ticks_per_s").get<double>();
    if (!(std::isfinite(s) && s > 0.0)) {
      reason = "ticks_per_s must be positive";
    } else {
      ticks_per_s_ = s;
    }
  } else if (p.type == "reset") {
    try {
      ScenarioConfig cfg = runner_->config();
      if (j.contains("scenario") && j.at("scenario").is_string()) cfg = loader_(j.at("scenario").get<std::string>());
      const std::uint64_t seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : runner_->seed();
      start_episode(std::move(cfg), seed);
      extra.push_back({std::nullopt, state_message()});
    } catch (const Error& e) {
      reason = e.what();
    }
  }

  if (record) script_.push_back({runner_->tick(), p.text});
  json ack = {{"v", kProtocolVersion},
              {"type", "ack"},
              {"episode", episode_id_},
              {"command_id", p.command_id},
              {"status", reason.empty() ? "applied" : "rejected"}};
  if (!reason.empty()) ack["reason"] = reason;
  std::vector<Outbound> out;
  out.push_back({p.client, ack.dump()});
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

std::vector<Outbound> LiveSession::boundary(bool pace_due) {
  std::vector<Outbound> out;
  while (!queue_.empty()) {
    const Pending p = std::move(queue_.front());
    queue_.pop_front();
    auto msgs = apply(p);
    out.insert(out.end(), msgs.begin(), msgs.end());
  }
  if (runner_->done()) {
    pending_steps_ = 0;
    return out;
  }
  bool run = false;
  if (pending_steps_ > 0) {
    --pending_steps_;
    run = true;
  } else if (!paused_ && pace_due) {
    run = true;
  }
  if (run) {
    auto msgs = advance();
    out.insert(out.end(), msgs.begin(), msgs.end());
  }
  return out;
}

std::vector<Outbound> LiveSession::advance() {
  runner_->step();
  std::vector<Outbound> out;
  out.push_back({std::nullopt, state_message()});
  const json metrics = {{"v", kProtocolVersion},
                        {"type", "metrics"},
                        {"episode", episode_id_},
                        {"tick", runner_->tick()},
                        {"metrics", metrics_json(compute_metrics(runner_->records()))}};
  out.push_back({std::nullopt, metrics.dump()});
  if (runner_->done()) {
    const json end = {{"v", kProtocolVersion},
                      {"type", "episode_end"},
                      {"episode", episode_id_},
                      {"tick", runner_->tick()},
                      {"reason", runner_->end_reason()}};
    out.push_back({std::nullopt, end.dump()});
  }
  return out;
}

std::string LiveSession::snapshot() const { return state_message(); }

std::string LiveSession::state_message() const {
  const EpisodeRunner& r = *runner_;
  const auto& records = r.records();
  json robot = {{"cell", cell_json(r.robot_cell())}, {"path_index", r.path_index()}};
  robot["last_action"] = records.empty() ? json(nullptr) : json(std::string(to_string(records.back().action)));
  robot["last_reward"] = records.empty() ? json(nullptr) : json(records.back().reward);

  const auto beliefs = r.belief_by_ped();
  json peds = json::array();
  json belief = json::array();
  for (std::size_t k = 0; k < r.peds().size(); ++k) {
    const WorldPed& p = r.peds()[k];
    bool latched = false;
    if (!records.empty() && k < records.back().peds.size()) latched = records.back().peds[k].latched;
    peds.push_back({{"id", p.id},
                    {"cell", cell_json(p.pos)},
                    {"g_true", p.g_true},
                    {"active", p.active},
                    {"gaze", p.gaze_now},
                    {"latched", latched},
                    {"aware_fraction", beliefs[k] ? json(beliefs[k]->aware_fraction) : json(nullptr)}});
    if (!beliefs[k]) continue;
    json cells = json::array();
    for (const auto& [c, w] : beliefs[k]->cells) cells.push_back({c.i, c.j, w});
    belief.push_back({{"id", p.id}, {"cells", cells}, {"aware_fraction", beliefs[k]->aware_fraction}});
  }
  json path = json::array();
  for (GridIndex c : r.path().waypoints) path.push_back(cell_json(c));
  json bounds = records.empty() ? json(nullptr)
                                : json{{"lower", records.back().root_lower}, {"upper", records.back().root_upper}};
  const json j = {{"v", kProtocolVersion}, {"type", "state"},        {"episode", episode_id_},
                  {"tick", r.tick()},      {"robot", robot},         {"peds", peds},
                  {"belief_summary", belief}, {"path", path},        {"bounds", bounds},
                  {"goal", cell_json(r.config().goal)}, {"done", r.done()}};
  return j.dump();
}

std::vector<std::string> replay_states(const ScenarioConfig& config, std::uint64_t seed,
                                       const std::vector<ScriptEntry>& script, int max_ticks) {
  LiveSession s(config, seed);
  std::vector<std::string> states;
  auto collect = [&states](const std::vector<Outbound>& msgs) {
    for (const Outbound& m : msgs) {
      if (json::parse(m.text).at("type") == "state") states.push_back(m.text);
    }
  };
  const int replay_client = -1;
  int n = 0;
  std::size_t next = 0;
  collect(s.boundary(false));
  for (int t = 0; t < max_ticks && !s.episode_done(); ++t) {
    while (next < script.size() && script[next].tick == s.runner().tick()) {
      // Re-stamp the id so the replay never trips duplicate detection.
      json cmd = json::parse(script[next].command);
      cmd["command_id"] = "replay-" + std::to_string(n++);
      s.receive(replay_client, cmd.dump());
      ++next;
    }
    const json step = {{"v", kProtocolVersion}, {"type", "step"}, {"command_id", "replay-" + std::to_string(n++)}};
    s.receive(replay_client, step.dump());
    collect(s.boundary(false));
  }
  return states;
}

}  // namespace awarenav
