#ifndef UR_STACK_CLIENT_TRANSPORT_HPP
#define UR_STACK_CLIENT_TRANSPORT_HPP

#include <memory>
#include <string>

#include "ur_stack/net/socket.hpp"
#include "ur_stack/sim/controller.hpp"
#include "ur_stack/wire/codec.hpp"

namespace urstack::client {

// Byte-stream link to a controller. Loopback binds directly to an
// in-process Controller (deterministic, virtual time); Tcp speaks to a
// served one.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(const wire::Bytes& data) = 0;
  virtual wire::Bytes receive() = 0;  // non-blocking drain
  virtual void close() = 0;
};

class LoopbackTransport : public Transport {
 public:
  explicit LoopbackTransport(std::shared_ptr<sim::Controller> ctrl)
      : ctrl_(std::move(ctrl)), conn_(ctrl_->open_connection()) {}

  ~LoopbackTransport() override { close(); }

  void send(const wire::Bytes& data) override {
    if (!open_) throw net::SocketError("transport closed");
    ctrl_->deliver(conn_, data);
  }

  wire::Bytes receive() override {
    if (!open_) return {};
    return ctrl_->take_outgoing(conn_);
  }

  void close() override {
    if (open_) {
      ctrl_->close_connection(conn_);
      open_ = false;
    }
  }

  sim::Controller& controller() { return *ctrl_; }

 private:
  std::shared_ptr<sim::Controller> ctrl_;
  int conn_;
  bool open_ = true;
};

class TcpTransport : public Transport {
 public:
  TcpTransport(const std::string& host, int port)
      : sock_(net::TcpSocket::connect_to(host, port)) {}

  void send(const wire::Bytes& data) override { sock_.send_all(data.data(), data.size()); }

  wire::Bytes receive() override {
    wire::Bytes out;
    std::uint8_t buf[4096];
    while (true) {
      std::size_t k = sock_.recv_nonblocking(buf, sizeof buf);
      if (k == 0) break;
      out.insert(out.end(), buf, buf + k);
      if (k < sizeof buf) break;
    }
    return out;
  }

  void close() override { sock_.close(); }

 private:
  net::TcpSocket sock_;
};

}  // namespace urstack::client

#endif  // UR_STACK_CLIENT_TRANSPORT_HPP
