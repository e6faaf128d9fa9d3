#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "swarmlink/link.hpp"
#include "swarmlink/vec3.hpp"
#include "swarmlink/wire.hpp"

namespace swarmlink {
struct ExperimentConfig;
}

namespace swarmlink::sim {

struct VehicleState {
  std::uint16_t vehicle_id = 0;
  Vec3 position;
  Vec3 velocity;
  double last_heading = 0.0;
};

struct DynamicsParams {
  double dt = 0.02;
  double a_max = 4.0;
  double v_max = 4.0;
  double drag_coeff = 0.0;

  /// Throws Error(InvalidArgument) naming the offending field.
  void validate() const;
};

struct WorldState {
  std::uint64_t tick = 0;
  double sim_time = 0.0;  // always tick * dt
  std::vector<VehicleState> vehicles;  // index == vehicle_id
};

/// One semi-implicit Euler step of the point-mass model:
///   v' = clamp(v + (clamp(cmd, a_max) - drag * v) * dt, v_max),  x' = x + v' * dt.
/// Throws Error(NonFiniteState) on NaN/Inf input.
VehicleState step_dynamics(const VehicleState& s, const Vec3& cmd, const DynamicsParams& p);

/// Vehicles j != i within Euclidean distance r (inclusive), ascending id.
std::vector<wire::NeighborState> compute_neighborhood(const WorldState& world, std::size_t i,
                                                      double r);

/// Fleet at rest on a planar grid with ceil(sqrt(n)) columns at z = 0.
WorldState initial_world(std::size_t n, double spacing);

wire::StateReport make_report(const WorldState& world, std::size_t i, double neighbor_radius);

struct LockstepOptions {
  double neighbor_radius = 10.0;
  std::chrono::milliseconds tick_timeout{2000};
  std::chrono::milliseconds first_tick_timeout{5000};
  std::chrono::milliseconds resend_interval{50};
  bool hold_last = false;
};

/// Barrier between the world and the fleet's autopilots. Each advance() sends
/// every vehicle its report, gathers exactly one command per vehicle for the
/// current tick, then integrates all vehicles in ascending id order, so the
/// resulting world never depends on the arrival order.
class Lockstep {
 public:
  Lockstep(WorldState world, DynamicsParams dynamics, LockstepOptions options, VehicleLink& link);

  const WorldState& world() const { return world_; }

  /// Throws Error(TickTimeout) with vehicle_id set when a command is missing
  /// and hold_last is off.
  const WorldState& advance();

  /// Best-effort shutdown frames to every channel.
  void shutdown(int repeats = 3);

 private:
  std::vector<Vec3> gather(const std::vector<wire::Bytes>& reports);

  WorldState world_;
  DynamicsParams dynamics_;
  LockstepOptions options_;
  VehicleLink& link_;
  std::vector<Vec3> last_commands_;
};

/// Opens the simulator's side of the port scheme: one socket per vehicle bound
/// to allocate_ports(n).output_port. Throws PortBindConflict naming the port.
std::unique_ptr<VehicleLink> open_udp_link(const ExperimentConfig& config);

/// Decorator that releases each batch of up to size() datagrams in a seeded
/// random order; used to prove arrival order does not leak into the world.
std::unique_ptr<VehicleLink> make_shuffling_link(std::unique_ptr<VehicleLink> inner,
                                                  std::uint64_t seed);

struct SimulationResult {
  std::filesystem::path states_csv;
  std::uint64_t ticks = 0;
};

/// Runs duration/dt lockstep ticks over `link`, writing states.csv into
/// `out_dir`. Rows are flushed per completed tick.
SimulationResult run_simulation(const ExperimentConfig& config, VehicleLink& link,
                                const std::filesystem::path& out_dir);

/// Same, over UDP sockets bound per the port scheme.
SimulationResult run_simulation(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir);

}  // namespace swarmlink::sim
