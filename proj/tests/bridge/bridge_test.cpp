#include <gtest/gtest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>
#include <thread>

#include "awarenav/bridge_server.hpp"

using namespace awarenav;
using nlohmann::json;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

ScenarioConfig world() {
  ScenarioConfig c;
  c.name = "bridge";
  c.grid = OccupancyGrid(10, 10);
  c.start = {0, 1};
  c.goal = {7, 7};
  PedestrianSpec a;
  a.start = {4, 4};
  c.peds = {a};
  c.solver.k_scenarios = 100;
  c.solver.max_depth = 6;
  c.belief.k_particles = 300;
  return c;
}

class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
    ws_.text(true);
  }

  void send(const json& j) { ws_.write(asio::buffer(j.dump())); }
  void send_raw(const std::string& s) { ws_.write(asio::buffer(s)); }

  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }

  /// Read until a message of `type` arrives.
  json read_until(const std::string& type) {
    for (;;) {
      json j = read();
      if (j.at("type") == type) return j;
    }
  }

  websocket::stream<tcp::socket>& ws() { return ws_; }

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

struct Server {
  LiveSession session{world(), 3};
  BridgeServer server{session, 0};
  std::thread loop{[this] { server.run(); }};

  ~Server() {
    server.stop();
    loop.join();
  }
};

}  // namespace

TEST(Bridge, SnapshotStepAndAck) {
  Server s;
  Client c(s.server.port());
  const json snap = c.read();
  EXPECT_EQ(snap.at("type"), "state");
  EXPECT_EQ(snap.at("v"), 1);

  c.send({{"v", 1}, {"type", "pause"}, {"command_id", "p"}});
  const json ack = c.read_until("ack");
  EXPECT_EQ(ack.at("command_id"), "p");
  EXPECT_EQ(ack.at("status"), "applied");

  c.send({{"v", 1}, {"type", "step"}, {"command_id", "s1"}});
  c.send({{"v", 1}, {"type", "step"}, {"command_id", "s2"}});
  std::vector<int> ticks;
  while (ticks.size() < 2) {
    const json j = c.read();
    if (j.at("type") == "state") ticks.push_back(j.at("tick").get<int>());
  }
  EXPECT_EQ(ticks[1], ticks[0] + 1);

  c.send_raw("{oops");
  EXPECT_EQ(c.read_until("error").at("type"), "error");
  // Still open after the error.
  c.send({{"v", 1}, {"type", "step"}, {"command_id", "s3"}});
  EXPECT_EQ(c.read_until("state").at("tick").get<int>(), ticks[1] + 1);
}

TEST(Bridge, VersionMismatchClosesWithReason) {
  Server s;
  Client c(s.server.port());
  c.read();
  c.send({{"v", 2}, {"type", "pause"}, {"command_id", "x"}});
  beast::error_code ec;
  for (;;) {
    beast::flat_buffer buf;
    c.ws().read(buf, ec);
    if (ec) break;
  }
  EXPECT_EQ(ec, websocket::error::closed);
  EXPECT_EQ(c.ws().reason().reason, "unsupported protocol version; expected v=1");
}

TEST(Bridge, BroadcastReachesEveryClient) {
  Server s;
  Client a(s.server.port());
  Client b(s.server.port());
  a.read();
  b.read();
  a.send({{"v", 1}, {"type", "step"}, {"command_id", "s"}});
  const int ta = a.read_until("state").at("tick").get<int>();
  EXPECT_EQ(b.read_until("state").at("tick").get<int>(), ta);
}
