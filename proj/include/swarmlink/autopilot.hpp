#pragma once

#include <cstdint>
#include <optional>

#include "swarmlink/flocking.hpp"
#include "swarmlink/sim.hpp"
#include "swarmlink/wire.hpp"

namespace swarmlink {
struct ExperimentConfig;
}

namespace swarmlink::autopilot {

enum class Mode { Takeoff, Flock };

struct AutopilotParams {
  double z_target = 10.0;  // m
  double k_p = 2.0;        // 1/s^2
  double k_d = 2.8;        // 1/s
  double takeoff_z_tolerance = 0.2;   // m
  double takeoff_vz_tolerance = 0.1;  // m/s
  double entry_speed_fraction = 0.9;  // of v_cruise
  double idle_timeout = 10.0;         // s

  void validate() const;
};

/// Altitude-hold PD term k_p (z_target - z) - k_d v_z.
double altitude_hold(const sim::VehicleState& own, const AutopilotParams& params);

/// Climb command: PD on altitude, horizontal velocity damped to zero, norm
/// clamped to a_max.
Vec3 takeoff_controller(const sim::VehicleState& own, const AutopilotParams& params,
                        double a_max);

/// The TAKEOFF -> FLOCK condition, evaluated on the reported state.
bool takeoff_complete(const sim::VehicleState& own, const AutopilotParams& params);

/// Horizontal k_v * (desired - v_xy) plus vertical altitude hold, clamped to a_max.
Vec3 track_velocity(const sim::VehicleState& own, const Vec3& desired,
                    const flocking::FlockingParams& flock, const AutopilotParams& params,
                    double a_max);

/// Per-vehicle FLOCK state carried between ticks.
struct FlockState {
  double entry_heading = 0.0;  // rad, drawn once per vehicle
  bool entered = false;        // reached entry speed, rules active
  double last_heading = 0.0;
};

/// FLOCK-mode command for one report. Until the vehicle first reaches
/// entry_speed_fraction * v_cruise it tracks v_cruise along the entry heading;
/// afterwards it tracks flocking_velocity over the reported neighborhood.
Vec3 flock_controller(const wire::StateReport& report, const flocking::FlockingParams& flock,
                      const AutopilotParams& params, double a_max, FlockState& state);

/// Entry heading in [0, 2pi) from a stream keyed only by (seed, vehicle).
double entry_heading(std::uint64_t seed, std::uint32_t vehicle);

/// Decision logic of one autopilot instance, independent of sockets. Reports
/// for an already-answered tick get the cached command back; older ticks are
/// dropped.
class Autopilot {
 public:
  Autopilot(std::uint32_t instance, std::uint64_t seed, const flocking::FlockingParams& flock,
            const AutopilotParams& params, double a_max);

  /// nullopt for stale reports. Throws ProtocolError for reports addressed to
  /// another vehicle or carrying non-finite values.
  std::optional<wire::ActuatorCommand> handle(const wire::StateReport& report);

  Mode mode() const { return mode_; }
  std::optional<std::uint64_t> flock_entry_tick() const { return flock_entry_tick_; }
  const FlockState& flock_state() const { return flock_state_; }

 private:
  std::uint32_t instance_;
  flocking::FlockingParams flock_;
  AutopilotParams params_;
  double a_max_;
  Mode mode_ = Mode::Takeoff;
  FlockState flock_state_;
  std::optional<std::uint64_t> flock_entry_tick_;
  std::optional<wire::ActuatorCommand> last_;
};

/// Exit statuses of the autopilot process.
enum class ExitStatus : int {
  Clean = 0,
  PortBindConflict = 2,
  ProtocolError = 3,
  IdleTimeout = 4,
};

/// Binds ports.input_port, answers every StateReport on ports.output_port and
/// returns when a Shutdown frame arrives, a frame is malformed, or nothing
/// arrives for params.idle_timeout seconds.
ExitStatus run_autopilot(std::uint32_t instance, const wire::PortPair& ports, std::uint64_t seed,
                         const ExperimentConfig& config);

}  // namespace swarmlink::autopilot
