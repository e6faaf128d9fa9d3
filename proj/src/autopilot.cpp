#include "swarmlink/autopilot.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "swarmlink/config.hpp"
#include "swarmlink/error.hpp"
#include "swarmlink/heading.hpp"
#include "swarmlink/log.hpp"
#include "swarmlink/udp.hpp"

namespace swarmlink::autopilot {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

sim::VehicleState own_state(const wire::StateReport& r, double last_heading) {
  return {r.vehicle_id, r.own_position, r.own_velocity, last_heading};
}

bool report_is_finite(const wire::StateReport& r) {
  if (!std::isfinite(r.sim_time) || !is_finite(r.own_position) || !is_finite(r.own_velocity)) {
    return false;
  }
  for (const auto& n : r.neighbors) {
    if (!is_finite(n.position) || !is_finite(n.velocity)) return false;
  }
  return true;
}

}  // namespace

void AutopilotParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  require(std::isfinite(z_target) && z_target > 0.0, "autopilot.z_target: must be > 0");
  require(std::isfinite(k_p) && k_p > 0.0, "autopilot.k_p: must be > 0");
  require(std::isfinite(k_d) && k_d > 0.0, "autopilot.k_d: must be > 0");
  require(takeoff_z_tolerance > 0.0, "autopilot.takeoff_z_tolerance: must be > 0");
  require(takeoff_vz_tolerance > 0.0, "autopilot.takeoff_vz_tolerance: must be > 0");
  require(entry_speed_fraction > 0.0 && entry_speed_fraction < 1.0,
          "autopilot.entry_speed_fraction: must be in (0, 1)");
  require(idle_timeout > 0.0, "autopilot.idle_timeout: must be > 0");
}

double altitude_hold(const sim::VehicleState& own, const AutopilotParams& params) {
  return params.k_p * (params.z_target - own.position.z) - params.k_d * own.velocity.z;
}

Vec3 takeoff_controller(const sim::VehicleState& own, const AutopilotParams& params,
                        double a_max) {
  const Vec3 a{-params.k_d * own.velocity.x, -params.k_d * own.velocity.y,
               altitude_hold(own, params)};
  return clamp_norm(a, a_max);
}

bool takeoff_complete(const sim::VehicleState& own, const AutopilotParams& params) {
  return std::abs(own.position.z - params.z_target) < params.takeoff_z_tolerance &&
         std::abs(own.velocity.z) < params.takeoff_vz_tolerance;
}

Vec3 track_velocity(const sim::VehicleState& own, const Vec3& desired,
                    const flocking::FlockingParams& flock, const AutopilotParams& params,
                    double a_max) {
  const Vec3 a{flock.k_v * (desired.x - own.velocity.x), flock.k_v * (desired.y - own.velocity.y),
               altitude_hold(own, params)};
  return clamp_norm(a, a_max);
}

Vec3 flock_controller(const wire::StateReport& report, const flocking::FlockingParams& flock,
                      const AutopilotParams& params, double a_max, FlockState& state) {
  state.last_heading = heading_from_velocity(report.own_velocity, state.last_heading);
  const sim::VehicleState own = own_state(report, state.last_heading);

  if (!state.entered &&
      horizontal_norm(report.own_velocity) >= params.entry_speed_fraction * flock.v_cruise) {
    state.entered = true;
  }
  Vec3 desired;
  if (state.entered) {
    desired = flocking::flocking_velocity(own, report.neighbors, flock);
  } else {
    desired = {flock.v_cruise * std::cos(state.entry_heading),
               flock.v_cruise * std::sin(state.entry_heading), 0.0};
  }
  return track_velocity(own, desired, flock, params, a_max);
}

double entry_heading(std::uint64_t seed, std::uint32_t vehicle) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ splitmix64(0xA11CEULL + vehicle));
  // 53 random mantissa bits -> [0, 1).
  const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return 2.0 * std::numbers::pi * unit;
}

Autopilot::Autopilot(std::uint32_t instance, std::uint64_t seed,
                     const flocking::FlockingParams& flock, const AutopilotParams& params,
                     double a_max)
    : instance_(instance), flock_(flock), params_(params), a_max_(a_max) {
  flock_state_.entry_heading = entry_heading(seed, instance);
  flock_state_.last_heading = flock_state_.entry_heading;
}

std::optional<wire::ActuatorCommand> Autopilot::handle(const wire::StateReport& report) {
  if (report.vehicle_id != instance_) {
    throw Error(ErrorCode::ProtocolError, "autopilot " + std::to_string(instance_) +
                                              " received a report for vehicle " +
                                              std::to_string(report.vehicle_id));
  }
  if (last_) {
    if (report.tick == last_->tick) return last_;
    if (report.tick < last_->tick) return std::nullopt;
  }
  if (!report_is_finite(report)) {
    throw Error(ErrorCode::ProtocolError,
                "non-finite state in report for tick " + std::to_string(report.tick));
  }

  const sim::VehicleState own = own_state(report, flock_state_.last_heading);
  if (mode_ == Mode::Takeoff && takeoff_complete(own, params_)) {
    mode_ = Mode::Flock;
    flock_entry_tick_ = report.tick;
  }
  wire::ActuatorCommand cmd;
  cmd.vehicle_id = report.vehicle_id;
  cmd.tick = report.tick;
  cmd.accel = mode_ == Mode::Takeoff
                  ? takeoff_controller(own, params_, a_max_)
                  : flock_controller(report, flock_, params_, a_max_, flock_state_);
  last_ = cmd;
  return cmd;
}

ExitStatus run_autopilot(std::uint32_t instance, const wire::PortPair& ports, std::uint64_t seed,
                         const ExperimentConfig& config) {
  std::optional<net::UdpSocket> socket;
  try {
    socket.emplace(net::UdpSocket::bind_localhost(ports.input_port));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::PortBindConflict) {
      log().error("autopilot {}: PortBindConflict on input port {}", instance, ports.input_port);
      return ExitStatus::PortBindConflict;
    }
    throw;
  }
  log().debug("autopilot {} bound input port {}, commands go to {}", instance, ports.input_port,
              ports.output_port);

  Autopilot pilot(instance, seed, config.flocking, config.autopilot, config.dynamics.a_max);
  const auto idle = std::chrono::milliseconds(std::llround(config.autopilot.idle_timeout * 1000.0));
  auto last_activity = std::chrono::steady_clock::now();

  for (;;) {
    const auto got = socket->receive(std::chrono::milliseconds(100));
    if (!got) {
      if (std::chrono::steady_clock::now() - last_activity >= idle) {
        log().error("autopilot {}: idle for {} s, exiting", instance, config.autopilot.idle_timeout);
        return ExitStatus::IdleTimeout;
      }
      continue;
    }
    last_activity = std::chrono::steady_clock::now();
    try {
      const wire::FrameHeader header = wire::peek_header(*got);
      if (header.type == wire::MsgType::Shutdown) {
        if (got->size() != wire::kShutdownSize) {
          throw Error(ErrorCode::TruncatedFrame, "shutdown frame with trailing bytes");
        }
        log().debug("autopilot {}: shutdown at tick {}", instance, header.tick);
        return ExitStatus::Clean;
      }
      const wire::StateReport report = wire::decode_state_report(*got);
      if (auto cmd = pilot.handle(report)) {
        socket->send_to(ports.output_port, wire::encode_actuator_command(*cmd));
      }
    } catch (const Error& e) {
      if (!is_protocol_error(e.code())) throw;
      log().error("autopilot {}: ProtocolError ({}): {}", instance, error_code_name(e.code()),
                  e.what());
      return ExitStatus::ProtocolError;
    }
  }
}

}  // namespace swarmlink::autopilot
