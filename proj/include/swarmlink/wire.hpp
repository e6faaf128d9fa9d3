#pragma once

// Simulator <-> autopilot datagram protocol.
//
// Every frame starts with a fixed header:
//   magic "SWL1" (4 bytes) | version u8 | msg_type u8 | vehicle_id u16 | tick u64
// followed by a message-specific payload. Integers are little-endian, reals are
// IEEE-754 binary64 little-endian. Encodings are canonical: equal messages
// produce equal bytes and every accepted frame re-encodes to itself.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "swarmlink/vec3.hpp"

namespace swarmlink::wire {

inline constexpr std::array<std::uint8_t, 4> kMagic = {'S', 'W', 'L', '1'};
inline constexpr std::uint8_t kProtocolVersion = 1;

inline constexpr std::uint32_t kDefaultBaseIn = 9002;
inline constexpr std::uint32_t kDefaultBaseOut = 9003;
inline constexpr std::uint32_t kDefaultStride = 10;
inline constexpr std::uint32_t kMinPort = 1024;
inline constexpr std::uint32_t kMaxPort = 65535;

enum class MsgType : std::uint8_t {
  StateReport = 1,
  ActuatorCommand = 2,
  Shutdown = 3,
};

inline constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 2 + 8;
inline constexpr std::size_t kNeighborSize = 2 + 6 * 8;
inline constexpr std::size_t kStateReportFixedSize = kHeaderSize + 8 + 6 * 8 + 4;
inline constexpr std::size_t kActuatorCommandSize = kHeaderSize + 3 * 8;
inline constexpr std::size_t kShutdownSize = kHeaderSize;
inline constexpr std::size_t kMaxDatagram = 65507;

struct PortPair {
  std::uint32_t instance = 0;
  std::uint16_t input_port = 0;   // autopilot listens here for state
  std::uint16_t output_port = 0;  // simulator listens here for commands

  friend bool operator==(const PortPair&, const PortPair&) = default;
};

/// Ports for autopilot instance n: (base_in + stride*n, base_out + stride*n).
/// Throws Error(PortRangeExceeded) when either port leaves [1024, 65535].
PortPair allocate_ports(std::uint32_t n, std::uint32_t base_in = kDefaultBaseIn,
                        std::uint32_t base_out = kDefaultBaseOut,
                        std::uint32_t stride = kDefaultStride);

struct NeighborState {
  std::uint16_t id = 0;
  Vec3 position;
  Vec3 velocity;

  friend bool operator==(const NeighborState&, const NeighborState&) = default;
};

struct StateReport {
  std::uint16_t vehicle_id = 0;
  std::uint64_t tick = 0;
  double sim_time = 0.0;
  Vec3 own_position;
  Vec3 own_velocity;
  std::vector<NeighborState> neighbors;  // ascending id, never vehicle_id itself

  friend bool operator==(const StateReport&, const StateReport&) = default;
};

struct ActuatorCommand {
  std::uint16_t vehicle_id = 0;
  std::uint64_t tick = 0;
  Vec3 accel;

  friend bool operator==(const ActuatorCommand&, const ActuatorCommand&) = default;
};

struct FrameHeader {
  MsgType type = MsgType::StateReport;
  std::uint16_t vehicle_id = 0;
  std::uint64_t tick = 0;
};

using Bytes = std::vector<std::uint8_t>;

/// Neighbors are sorted by id before encoding. Throws InvalidArgument if the
/// neighbor list repeats an id or contains the reporting vehicle.
Bytes encode_state_report(const StateReport& report);
StateReport decode_state_report(std::span<const std::uint8_t> frame);

Bytes encode_actuator_command(const ActuatorCommand& command);
ActuatorCommand decode_actuator_command(std::span<const std::uint8_t> frame);

Bytes encode_shutdown(std::uint16_t vehicle_id, std::uint64_t tick);

/// Validates magic, version and length of the fixed prefix and returns it;
/// the payload is not inspected.
FrameHeader peek_header(std::span<const std::uint8_t> frame);

}  // namespace swarmlink::wire
