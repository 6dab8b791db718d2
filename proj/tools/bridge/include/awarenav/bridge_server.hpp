#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "awarenav/live_session.hpp"

namespace awarenav {

/// WebSocket transport for a LiveSession. Network I/O runs on its own
/// thread; the simulation loop in run() owns the session and talks to the
/// I/O side only through the inbound queue and posted sends.
class BridgeServer {
 public:
  /// Binds immediately; port 0 picks a free port.
  BridgeServer(LiveSession& session, std::uint16_t port, const std::string& address = "127.0.0.1");
  ~BridgeServer();

  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  std::uint16_t port() const noexcept;

  /// Simulation loop; returns after stop().
  void run();
  /// Safe from any thread.
  void stop();

 private:
  struct Impl;
  struct Event {
    enum Kind { Connect, Frame, Disconnect } kind;
    int client = 0;
    std::string text;
  };

  void push(Event e);
  void handle(const Event& e);
  void dispatch(const std::vector<Outbound>& out);

  LiveSession& session_;
  std::unique_ptr<Impl> impl_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Event> inbound_;
  std::atomic<bool> stopping_{false};
  std::thread io_thread_;
};

}  // namespace awarenav
