#ifndef UR_STACK_SIM_RTDE_SERVER_HPP
#define UR_STACK_SIM_RTDE_SERVER_HPP

#include <atomic>
#include <chrono>
#include <memory>
#include <thread>
#include <vector>

#include "ur_stack/net/socket.hpp"
#include "ur_stack/sim/controller.hpp"

namespace urstack::sim {

// TCP front end for a Controller: the register protocol on one port, the
// dashboard line protocol on another. In wall-clock mode it also owns the
// tick loop; in virtual-time mode ticks stay with the caller.
class RtdeServer {
 public:
  RtdeServer(std::shared_ptr<Controller> ctrl, int rtde_port, int dashboard_port)
      : ctrl_(std::move(ctrl)),
        listener_(rtde_port),
        dash_listener_(dashboard_port) {}

  ~RtdeServer() { stop(); }

  int rtde_port() const { return listener_.port(); }
  int dashboard_port() const { return dash_listener_.port(); }

  void start(bool run_clock) {
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    dash_thread_ = std::thread([this] { dashboard_loop(); });
    if (run_clock) clock_thread_ = std::thread([this] { clock_loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) return;
    listener_.close();
    dash_listener_.close();
    if (accept_thread_.joinable()) accept_thread_.join();
    if (dash_thread_.joinable()) dash_thread_.join();
    if (clock_thread_.joinable()) clock_thread_.join();
    for (auto& t : conn_threads_)
      if (t.joinable()) t.join();
  }

 private:
  void accept_loop() {
    while (running_) {
      net::TcpSocket sock = listener_.accept();
      if (!sock.valid()) return;
      auto shared = std::make_shared<net::TcpSocket>(std::move(sock));
      conn_threads_.emplace_back([this, shared] { serve_connection(shared); });
    }
  }

  void serve_connection(std::shared_ptr<net::TcpSocket> sock) {
    int id = ctrl_->open_connection();
    try {
      std::uint8_t buf[4096];
      while (running_) {
        bool idle = true;
        std::size_t k = sock->recv_nonblocking(buf, sizeof buf);
        if (k > 0) {
          ctrl_->deliver(id, wire::Bytes(buf, buf + k));
          idle = false;
        }
        wire::Bytes out = ctrl_->take_outgoing(id);
        if (!out.empty()) {
          sock->send_all(out.data(), out.size());
          idle = false;
        }
        if (idle) std::this_thread::sleep_for(std::chrono::microseconds(200));
      }
    } catch (const net::SocketError&) {
      // peer gone
    }
    ctrl_->close_connection(id);
  }

  void dashboard_loop() {
    while (running_) {
      net::TcpSocket sock = dash_listener_.accept();
      if (!sock.valid()) return;
      try {
        std::string line;
        char c;
        while (running_ && sock.recv_some(&c, 1) == 1) {
          if (c == '\r') continue;
          if (c != '\n') {
            line += c;
            continue;
          }
          std::string reply = ctrl_->dashboard_handle_line(line) + "\n";
          sock.send_all(reply.data(), reply.size());
          line.clear();
        }
      } catch (const net::SocketError&) {
      }
    }
  }

  void clock_loop() {
    using clock = std::chrono::steady_clock;
    auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / ctrl_->frequency()));
    auto next = clock::now() + period;
    while (running_) {
      ctrl_->tick();
      std::this_thread::sleep_until(next);
      next += period;
    }
  }

  std::shared_ptr<Controller> ctrl_;
  net::TcpListener listener_;
  net::TcpListener dash_listener_;
  std::atomic<bool> running_{false};
  std::thread accept_thread_, dash_thread_, clock_thread_;
  std::vector<std::thread> conn_threads_;
};

}  // namespace urstack::sim

#endif  // UR_STACK_SIM_RTDE_SERVER_HPP
