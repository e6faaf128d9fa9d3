#include "swarmlink/udp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "swarmlink/error.hpp"
#include "swarmlink/wire.hpp"

namespace swarmlink::net {
namespace {

sockaddr_in localhost(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

[[noreturn]] void throw_io(const std::string& what) {
  throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

}  // namespace

UdpSocket UdpSocket::bind_localhost(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw_io("socket");
  int rcvbuf = 1 << 20;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof(rcvbuf));
  const sockaddr_in addr = localhost(port);
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    ::close(fd);
    if (err == EADDRINUSE) {
      Error e(ErrorCode::PortBindConflict, "port " + std::to_string(port) + " is already bound");
      e.port = port;
      throw e;
    }
    errno = err;
    throw_io("bind port " + std::to_string(port));
  }
  return UdpSocket(fd, port);
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
}

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    port_ = other.port_;
    other.fd_ = -1;
  }
  return *this;
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpSocket::send_to(std::uint16_t port, std::span<const std::uint8_t> frame) const {
  const sockaddr_in addr = localhost(port);
  for (;;) {
    const ssize_t n = ::sendto(fd_, frame.data(), frame.size(), 0,
                               reinterpret_cast<const sockaddr*>(&addr), sizeof(addr));
    if (n >= 0) return;
    if (errno == EINTR) continue;
    // Nobody listening yet: the lockstep resend covers it.
    if (errno == ECONNREFUSED) return;
    throw_io("sendto port " + std::to_string(port));
  }
}

std::optional<std::vector<std::uint8_t>> UdpSocket::try_receive() const {
  std::vector<std::uint8_t> buf(wire::kMaxDatagram);
  for (;;) {
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), MSG_DONTWAIT);
    if (n >= 0) {
      buf.resize(static_cast<std::size_t>(n));
      return buf;
    }
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == ECONNREFUSED) return std::nullopt;
    throw_io("recv");
  }
}

std::optional<std::vector<std::uint8_t>> UdpSocket::receive(
    std::chrono::milliseconds timeout) const {
  if (auto got = try_receive()) return got;
  pollfd p{fd_, POLLIN, 0};
  const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (rc < 0 && errno != EINTR) throw_io("poll");
  if (rc <= 0) return std::nullopt;
  return try_receive();
}

}  // namespace swarmlink::net
