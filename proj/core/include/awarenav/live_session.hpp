#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "awarenav/scenario.hpp"
#include "awarenav/simulator.hpp"

namespace awarenav {

inline constexpr int kProtocolVersion = 1;

/// A text frame for one client (`to` set) or for every client.
struct Outbound {
  std::optional<int> to;
  std::string text;
};

/// What the transport must do with one inbound frame.
struct ReceiveResult {
  std::vector<std::string> replies;  // sent back to the same client, in order
  bool close = false;
  std::string close_reason;
};

/// One applied command, as recorded for replay. `tick` is the episode tick
/// at whose boundary the command took effect.
struct ScriptEntry {
  int tick = 0;
  std::string command;  // the original JSON text
};

/// Loads the scenario named by a reset command. The default resolves file
/// paths with load_scenario.
using ScenarioLoader = std::function<ScenarioConfig(const std::string&)>;

/// Transport-free v1 protocol endpoint around one running episode.
/// Frames arrive through receive() at any time; their effects are queued and
/// applied only inside boundary(), between ticks. Not thread-safe: the owner
/// serializes calls.
class LiveSession {
 public:
  LiveSession(ScenarioConfig config, std::uint64_t seed, ScenarioLoader loader = {});

  ReceiveResult receive(int client, std::string_view text);
  /// Forget per-connection state (used command ids).
  void disconnect(int client);

  /// One tick boundary: drain the command queue (acks go to their senders),
  /// then advance one tick if a step is pending or `pace_due` while running.
  /// Every tick broadcasts a state and a metrics message; the last tick of
  /// an episode also broadcasts episode_end.
  std::vector<Outbound> boundary(bool pace_due);

  /// Current state message, sent to a client when it connects.
  std::string snapshot() const;

  bool paused() const noexcept { return paused_; }
  double ticks_per_s() const noexcept { return ticks_per_s_; }
  bool episode_done() const noexcept { return runner_->done(); }
  bool has_pending_work() const noexcept { return !queue_.empty() || pending_steps_ > 0; }
  const std::string& episode_id() const noexcept { return episode_id_; }
  const EpisodeRunner& runner() const noexcept { return *runner_; }
  /// Commands applied so far in the current episode.
  const std::vector<ScriptEntry>& script() const noexcept { return script_; }

 private:
  struct Pending {
    int client = 0;
    std::string command_id;
    std::string type;
    std::string text;
  };

  std::vector<Outbound> apply(const Pending& p);
  std::vector<Outbound> advance();
  void start_episode(ScenarioConfig config, std::uint64_t seed);
  std::string state_message() const;

  ScenarioLoader loader_;
  std::unique_ptr<EpisodeRunner> runner_;
  std::string episode_id_;
  int episode_counter_ = 0;
  std::deque<Pending> queue_;
  std::vector<std::pair<int, std::string>> used_ids_;
  std::vector<ScriptEntry> script_;
  bool paused_ = false;
  int pending_steps_ = 0;
  double ticks_per_s_ = 1.0;
};

/// Replays a recorded script against a fresh session in step mode and
/// returns every state message in order.
std::vector<std::string> replay_states(const ScenarioConfig& config, std::uint64_t seed,
                                       const std::vector<ScriptEntry>& script, int max_ticks);

}  // namespace awarenav
