#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace swarmlink {

// Values are shared with the C API status codes in swarmlink.h.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  PortRangeExceeded = 10,
  BadMagic = 11,
  WrongMsgType = 12,
  TruncatedFrame = 13,
  VersionMismatch = 14,
  NonCanonicalFrame = 15,
  NonFiniteState = 20,
  UnknownVehicle = 21,
  TickTimeout = 22,
  PortBindConflict = 23,
  ProtocolError = 24,
  IdleTimeout = 25,
  EmptySwarm = 30,
  MalformedLog = 31,
  ConfigError = 40,
  SpawnFailure = 41,
  ChildCrashed = 42,
  Io = 50,
  Internal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

/// True for the decode failures a peer can provoke with a bad datagram.
constexpr bool is_protocol_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic:
    case ErrorCode::WrongMsgType:
    case ErrorCode::TruncatedFrame:
    case ErrorCode::VersionMismatch:
    case ErrorCode::NonCanonicalFrame:
    case ErrorCode::ProtocolError:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Context attached by the raising site; -1 when not applicable.
  int vehicle_id = -1;
  int port = -1;
  std::int64_t tick = -1;
  int exit_code = -1;

 private:
  ErrorCode code_;
};

}  // namespace swarmlink
