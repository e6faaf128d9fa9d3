#pragma once

// Simulator-side view of the per-vehicle datagram channels.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace swarmlink::sim {

using Clock = std::chrono::steady_clock;

struct Datagram {
  std::size_t vehicle = 0;  // channel the datagram arrived on
  std::vector<std::uint8_t> bytes;
};

class VehicleLink {
 public:
  virtual ~VehicleLink() = default;

  virtual std::size_t size() const = 0;

  /// Sends one frame to the autopilot owning channel `vehicle`.
  virtual void send(std::size_t vehicle, std::span<const std::uint8_t> frame) = 0;

  /// Next datagram from any channel, or nullopt once `deadline` passes.
  virtual std::optional<Datagram> receive(Clock::time_point deadline) = 0;
};

}  // namespace swarmlink::sim
