#include "swarmlink/error.hpp"

namespace swarmlink {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PortRangeExceeded: return "PortRangeExceeded";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::WrongMsgType: return "WrongMsgType";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::NonCanonicalFrame: return "NonCanonicalFrame";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::UnknownVehicle: return "UnknownVehicle";
    case ErrorCode::TickTimeout: return "TickTimeout";
    case ErrorCode::PortBindConflict: return "PortBindConflict";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::IdleTimeout: return "IdleTimeout";
    case ErrorCode::EmptySwarm: return "EmptySwarm";
    case ErrorCode::MalformedLog: return "MalformedLog";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::SpawnFailure: return "SpawnFailure";
    case ErrorCode::ChildCrashed: return "ChildCrashed";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace swarmlink
