#ifndef UR_STACK_NET_SOCKET_HPP
#define UR_STACK_NET_SOCKET_HPP

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace urstack::net {

class SocketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thin RAII wrapper over a connected TCP socket.
class TcpSocket {
 public:
  TcpSocket() = default;
  explicit TcpSocket(int fd) : fd_(fd) {}
  ~TcpSocket() { close(); }

  TcpSocket(TcpSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  TcpSocket& operator=(TcpSocket&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  TcpSocket(const TcpSocket&) = delete;
  TcpSocket& operator=(const TcpSocket&) = delete;

  static TcpSocket connect_to(const std::string& host, int port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw SocketError("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd);
      throw SocketError("bad address: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      ::close(fd);
      throw SocketError("connect to " + host + ":" + std::to_string(port) + " failed: " +
                        std::strerror(errno));
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return TcpSocket(fd);
  }

  bool valid() const { return fd_ >= 0; }

  void send_all(const void* data, std::size_t n) {
    const char* p = static_cast<const char*>(data);
    while (n > 0) {
      ssize_t k = ::send(fd_, p, n, MSG_NOSIGNAL);
      if (k <= 0) throw SocketError("send failed");
      p += k;
      n -= static_cast<std::size_t>(k);
    }
  }

  // Blocking read, up to n bytes; 0 on orderly close.
  std::size_t recv_some(void* data, std::size_t n) {
    ssize_t k = ::recv(fd_, data, n, 0);
    if (k < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) return 0;
      throw SocketError("recv failed");
    }
    return static_cast<std::size_t>(k);
  }

  // Non-blocking poll read; returns bytes read (0 if none ready).
  std::size_t recv_nonblocking(void* data, std::size_t n) {
    ssize_t k = ::recv(fd_, data, n, MSG_DONTWAIT);
    if (k < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) return 0;
      throw SocketError("recv failed");
    }
    if (k == 0) throw SocketError("connection closed");
    return static_cast<std::size_t>(k);
  }

  void close() {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  explicit TcpListener(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw SocketError("socket() failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      ::close(fd_);
      throw SocketError("bind to port " + std::to_string(port) + " failed: " +
                        std::strerror(errno));
    }
    if (::listen(fd_, 16) != 0) {
      ::close(fd_);
      throw SocketError("listen failed");
    }
  }

  ~TcpListener() { close(); }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  // Bound port (useful with port 0).
  int port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
  }

  // Blocks; returns an invalid socket if the listener was closed.
  TcpSocket accept() {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) return TcpSocket();
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return TcpSocket(fd);
  }

  void close() {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
};

}  // namespace urstack::net

#endif  // UR_STACK_NET_SOCKET_HPP
