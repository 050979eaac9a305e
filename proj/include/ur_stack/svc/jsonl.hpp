#ifndef UR_STACK_SVC_JSONL_HPP
#define UR_STACK_SVC_JSONL_HPP

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <optional>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ur_stack/net/socket.hpp"

namespace urstack::svc {

using Json = nlohmann::json;

// Destination for server-pushed messages (topic streams, action feedback).
class Sink {
 public:
  virtual ~Sink() = default;
  virtual void push(const Json& msg) = 0;
};

// In-process sink backed by a thread-safe queue. Used by tests and by the
// CLI's client side.
class QueueSink : public Sink {
 public:
  void push(const Json& msg) override {
    {
      std::lock_guard lk(mu_);
      q_.push_back(msg);
    }
    cv_.notify_all();
  }

  // Pops the next message, waiting up to the timeout. Empty optional on
  // timeout.
  std::optional<Json> pop(std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
    std::unique_lock lk(mu_);
    if (!cv_.wait_for(lk, timeout, [&] { return !q_.empty(); })) return std::nullopt;
    Json m = std::move(q_.front());
    q_.pop_front();
    return m;
  }

  std::optional<Json> try_pop() {
    std::lock_guard lk(mu_);
    if (q_.empty()) return std::nullopt;
    Json m = std::move(q_.front());
    q_.pop_front();
    return m;
  }

  std::size_t size() const {
    std::lock_guard lk(mu_);
    return q_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Json> q_;
};

// Sink writing one JSON object per line to a socket.
class SocketSink : public Sink {
 public:
  explicit SocketSink(std::shared_ptr<net::TcpSocket> sock) : sock_(std::move(sock)) {}

  void push(const Json& msg) override {
    std::string line = msg.dump() + "\n";
    std::lock_guard lk(mu_);
    try {
      sock_->send_all(line.data(), line.size());
    } catch (const net::SocketError&) {
      // peer gone; drop silently, the read loop notices and unsubscribes
    }
  }

 private:
  std::shared_ptr<net::TcpSocket> sock_;
  std::mutex mu_;
};

// JSON-lines request/response server. Each accepted connection gets a read
// thread; every parsed line is handed to the handler together with the
// connection's sink. The handler's return value, if not null, is sent back
// as the direct reply.
class JsonlTcpServer {
 public:
  using Handler = std::function<Json(const Json&, std::shared_ptr<Sink>)>;
  // Called when a connection closes, so handlers can drop its subscriptions.
  using Disconnect = std::function<void(std::shared_ptr<Sink>)>;

  JsonlTcpServer(int port, Handler handler, Disconnect on_disconnect = {})
      : listener_(port), handler_(std::move(handler)), on_disconnect_(std::move(on_disconnect)) {
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  ~JsonlTcpServer() { stop(); }

  int port() const { return listener_.port(); }

  void stop() {
    if (stopping_.exchange(true)) return;
    listener_.close();
    {
      std::lock_guard lk(mu_);
      for (auto& c : conns_) c->sock->close();
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> ts;
    {
      std::lock_guard lk(mu_);
      for (auto& c : conns_)
        if (c->thread.joinable()) ts.push_back(std::move(c->thread));
    }
    for (auto& t : ts) t.join();
  }

 private:
  struct ConnState {
    std::shared_ptr<net::TcpSocket> sock;
    std::shared_ptr<SocketSink> sink;
    std::thread thread;
  };

  void accept_loop() {
    while (!stopping_) {
      net::TcpSocket s = listener_.accept();
      if (!s.valid()) break;
      auto c = std::make_shared<ConnState>();
      c->sock = std::make_shared<net::TcpSocket>(std::move(s));
      c->sink = std::make_shared<SocketSink>(c->sock);
      c->thread = std::thread([this, c] { read_loop(*c); });
      std::lock_guard lk(mu_);
      conns_.push_back(c);
    }
  }

  void read_loop(ConnState& c) {
    std::string buf;
    char chunk[4096];
    while (!stopping_) {
      std::size_t k = c.sock->recv_some(chunk, sizeof chunk);
      if (k == 0) break;
      buf.append(chunk, k);
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, nl);
        buf.erase(0, nl + 1);
        if (line.empty()) continue;
        handle_line(c, line);
      }
    }
    if (on_disconnect_) on_disconnect_(c.sink);
  }

  void handle_line(ConnState& c, const std::string& line) {
    Json reply;
    try {
      Json req = Json::parse(line);
      reply = handler_(req, c.sink);
    } catch (const std::exception& e) {
      reply = Json{{"error", e.what()}};
    }
    if (!reply.is_null()) c.sink->push(reply);
  }

  net::TcpListener listener_;
  Handler handler_;
  Disconnect on_disconnect_;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::vector<std::shared_ptr<ConnState>> conns_;
};

// Blocking JSON-lines client used by the CLI subcommands.
class JsonlClient {
 public:
  JsonlClient(const std::string& host, int port)
      : sock_(net::TcpSocket::connect_to(host, port)) {}

  void send(const Json& msg) {
    std::string line = msg.dump() + "\n";
    sock_.send_all(line.data(), line.size());
  }

  // Next message, or empty optional when the connection closes.
  std::optional<Json> next(std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      std::size_t nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (line.empty()) continue;
        return Json::parse(line);
      }
      if (std::chrono::steady_clock::now() > deadline) return std::nullopt;
      char chunk[4096];
      std::size_t k = sock_.recv_some(chunk, sizeof chunk);
      if (k == 0) return std::nullopt;
      buf_.append(chunk, k);
    }
  }

 private:
  net::TcpSocket sock_;
  std::string buf_;
};

}  // namespace urstack::svc

#endif  // UR_STACK_SVC_JSONL_HPP
