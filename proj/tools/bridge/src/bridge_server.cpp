#include "awarenav/bridge_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <map>
#include <optional>

namespace awarenav {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

// Everything in Impl runs on the single I/O thread.
struct BridgeServer::Impl {
  struct Conn : std::enable_shared_from_this<Conn> {
    Conn(tcp::socket s, Impl& owner, int id) : ws(std::move(s)), impl(owner), id(id) {}

    void start() {
      ws.text(true);
      ws.async_accept([self = shared_from_this()](beast::error_code ec) {
        if (ec) return;
        self->impl.conns[self->id] = self;
        self->impl.server.push({Event::Connect, self->id, {}});
        self->read();
      });
    }

    void read() {
      ws.async_read(buf, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
          self->drop();
          return;
        }
        self->impl.server.push({Event::Frame, self->id, beast::buffers_to_string(self->buf.data())});
        self->buf.consume(self->buf.size());
        self->read();
      });
    }

    void send(std::string text) {
      if (closing) return;
      outq.push_back(std::move(text));
      if (outq.size() == 1) write();
    }

    void write() {
      ws.async_write(asio::buffer(outq.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
          self->drop();
          return;
        }
        self->outq.pop_front();
        if (!self->outq.empty()) {
          self->write();
        } else if (self->close_reason) {
          self->finish_close();
        }
      });
    }

    void close(std::string reason) {
      if (close_reason) return;
      close_reason = std::move(reason);
      if (outq.empty()) finish_close();
    }

    void finish_close() {
      closing = true;
      ws.async_close(websocket::close_reason(websocket::close_code::policy_error, *close_reason),
                     [self = shared_from_this()](beast::error_code) { self->drop(); });
    }

    void drop() {
      if (impl.conns.erase(id) > 0) impl.server.push({Event::Disconnect, id, {}});
    }

    websocket::stream<tcp::socket> ws;
    Impl& impl;
    int id;
    beast::flat_buffer buf;
    std::deque<std::string> outq;
    std::optional<std::string> close_reason;
    bool closing = false;
  };

  Impl(BridgeServer& s, const std::string& address, std::uint16_t port)
      : server(s), acceptor(ioc, tcp::endpoint(asio::ip::make_address(address), port)) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket sock) {
      if (ec) return;
      std::make_shared<Conn>(std::move(sock), *this, next_id++)->start();
      accept();
    });
  }

  BridgeServer& server;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::map<int, std::shared_ptr<Conn>> conns;
  int next_id = 1;
};

BridgeServer::BridgeServer(LiveSession& session, std::uint16_t port, const std::string& address)
    : session_(session), impl_(std::make_unique<Impl>(*this, address, port)) {
  impl_->accept();
  io_thread_ = std::thread([this] { impl_->ioc.run(); });
}

BridgeServer::~BridgeServer() {
  stop();
  if (io_thread_.joinable()) io_thread_.join();
}

std::uint16_t BridgeServer::port() const noexcept { return impl_->acceptor.local_endpoint().port(); }

void BridgeServer::stop() {
  if (stopping_.exchange(true)) return;
  cv_.notify_all();
  impl_->ioc.stop();
}

void BridgeServer::push(Event e) {
  {
    std::lock_guard lock(mu_);
    inbound_.push_back(std::move(e));
  }
  cv_.notify_all();
}

void BridgeServer::handle(const Event& e) {
  switch (e.kind) {
    case Event::Connect:
      dispatch({{e.client, session_.snapshot()}});
      break;
    case Event::Disconnect:
      session_.disconnect(e.client);
      break;
    case Event::Frame: {
      const ReceiveResult r = session_.receive(e.client, e.text);
      std::vector<Outbound> out;
      for (const std::string& s : r.replies) out.push_back({e.client, s});
      dispatch(out);
      if (r.close) {
        asio::post(impl_->ioc, [this, id = e.client, reason = r.close_reason] {
          if (auto it = impl_->conns.find(id); it != impl_->conns.end()) it->second->close(reason);
        });
      }
      break;
    }
  }
}

void BridgeServer::dispatch(const std::vector<Outbound>& out) {
  for (const Outbound& m : out) {
    asio::post(impl_->ioc, [this, m] {
      if (m.to) {
        if (auto it = impl_->conns.find(*m.to); it != impl_->conns.end()) it->second->send(m.text);
      } else {
        for (auto& [id, c] : impl_->conns) c->send(m.text);
      }
    });
  }
}

void BridgeServer::run() {
  using clock = std::chrono::steady_clock;
  auto period = [this] {
    return std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / session_.ticks_per_s()));
  };
  auto next = clock::now() + period();
  while (!stopping_) {
    std::deque<Event> events;
    {
      std::unique_lock lock(mu_);
      cv_.wait_until(lock, std::min(next, clock::now() + std::chrono::milliseconds(50)),
                     [this] { return stopping_ || !inbound_.empty(); });
      events.swap(inbound_);
    }
    if (stopping_) break;
    for (const Event& e : events) handle(e);

    // Between two ticks every moment is the same boundary, so queued
    // commands are applied as soon as they arrive.
    const auto now = clock::now();
    const bool due = now >= next && !session_.paused();
    if (due || session_.has_pending_work()) dispatch(session_.boundary(due));
    if (due || session_.paused()) next = now + period();
  }
}

}  // namespace awarenav
