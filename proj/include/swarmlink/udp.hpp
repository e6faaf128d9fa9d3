#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace swarmlink::net {

/// Datagram socket bound to 127.0.0.1:port. Address reuse is never enabled,
/// so a second bind of the same port fails with PortBindConflict.
class UdpSocket {
 public:
  static UdpSocket bind_localhost(std::uint16_t port);

  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;
  ~UdpSocket();

  int fd() const { return fd_; }
  std::uint16_t port() const { return port_; }

  void send_to(std::uint16_t port, std::span<const std::uint8_t> frame) const;

  /// Reads one pending datagram without blocking.
  std::optional<std::vector<std::uint8_t>> try_receive() const;

  /// Waits up to `timeout` for one datagram.
  std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout) const;

 private:
  UdpSocket(int fd, std::uint16_t port) : fd_(fd), port_(port) {}

  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace swarmlink::net
