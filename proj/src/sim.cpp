#include "swarmlink/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <string>

#include <poll.h>

#include "swarmlink/config.hpp"
#include "swarmlink/csv.hpp"
#include "swarmlink/error.hpp"
#include "swarmlink/heading.hpp"
#include "swarmlink/log.hpp"
#include "swarmlink/metrics.hpp"
#include "swarmlink/udp.hpp"

namespace swarmlink::sim {

void DynamicsParams::validate() const {
  auto require = [](bool ok, const char* field, const char* reason) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, std::string(field) + ": " + reason);
  };
  require(std::isfinite(dt) && dt > 0.0, "dynamics.dt", "must be > 0");
  require(std::isfinite(a_max) && a_max > 0.0, "dynamics.a_max", "must be > 0");
  require(std::isfinite(v_max) && v_max > 0.0, "dynamics.v_max", "must be > 0");
  require(std::isfinite(drag_coeff) && drag_coeff >= 0.0, "dynamics.drag_coeff", "must be >= 0");
}

VehicleState step_dynamics(const VehicleState& s, const Vec3& cmd, const DynamicsParams& p) {
  if (!is_finite(s.position) || !is_finite(s.velocity) || !is_finite(cmd) ||
      !std::isfinite(s.last_heading)) {
    Error e(ErrorCode::NonFiniteState,
            "non-finite state or command for vehicle " + std::to_string(s.vehicle_id));
    e.vehicle_id = s.vehicle_id;
    throw e;
  }
  const Vec3 accel = clamp_norm(cmd, p.a_max);
  VehicleState next = s;
  next.velocity = clamp_norm(s.velocity + (accel - p.drag_coeff * s.velocity) * p.dt, p.v_max);
  next.position = s.position + next.velocity * p.dt;
  next.last_heading = heading_from_velocity(next.velocity, s.last_heading);
  return next;
}

std::vector<wire::NeighborState> compute_neighborhood(const WorldState& world, std::size_t i,
                                                      double r) {
  if (i >= world.vehicles.size()) {
    Error e(ErrorCode::UnknownVehicle, "no vehicle " + std::to_string(i) + " in a fleet of " +
                                           std::to_string(world.vehicles.size()));
    e.vehicle_id = static_cast<int>(i);
    throw e;
  }
  std::vector<wire::NeighborState> out;
  const Vec3 own = world.vehicles[i].position;
  for (std::size_t j = 0; j < world.vehicles.size(); ++j) {
    if (j == i) continue;
    const VehicleState& v = world.vehicles[j];
    if (norm(v.position - own) <= r) {
      out.push_back({v.vehicle_id, v.position, v.velocity});
    }
  }
  return out;
}

WorldState initial_world(std::size_t n, double spacing) {
  WorldState world;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  world.vehicles.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    VehicleState v;
    v.vehicle_id = static_cast<std::uint16_t>(k);
    v.position = {static_cast<double>(k % cols) * spacing,
                  static_cast<double>(k / cols) * spacing, 0.0};
    v.last_heading = initial_heading(k, n);
    world.vehicles.push_back(v);
  }
  return world;
}

wire::StateReport make_report(const WorldState& world, std::size_t i, double neighbor_radius) {
  wire::StateReport r;
  r.neighbors = compute_neighborhood(world, i, neighbor_radius);
  const VehicleState& v = world.vehicles[i];
  r.vehicle_id = v.vehicle_id;
  r.tick = world.tick;
  r.sim_time = world.sim_time;
  r.own_position = v.position;
  r.own_velocity = v.velocity;
  return r;
}

Lockstep::Lockstep(WorldState world, DynamicsParams dynamics, LockstepOptions options,
                   VehicleLink& link)
    : world_(std::move(world)),
      dynamics_(dynamics),
      options_(options),
      link_(link),
      last_commands_(world_.vehicles.size()) {
  dynamics_.validate();
  if (link_.size() != world_.vehicles.size()) {
    throw Error(ErrorCode::InvalidArgument, "link has " + std::to_string(link_.size()) +
                                                " channels for " +
                                                std::to_string(world_.vehicles.size()) +
                                                " vehicles");
  }
}

std::vector<Vec3> Lockstep::gather(const std::vector<wire::Bytes>& reports) {
  const std::size_t n = reports.size();
  std::vector<std::optional<Vec3>> got(n);
  std::size_t missing = n;

  const auto start = Clock::now();
  const auto deadline =
      start + (world_.tick == 0 ? options_.first_tick_timeout : options_.tick_timeout);
  for (std::size_t k = 0; k < n; ++k) link_.send(k, reports[k]);
  auto next_resend = start + options_.resend_interval;

  while (missing > 0) {
    auto dg = link_.receive(std::min(deadline, next_resend));
    if (dg) {
      wire::ActuatorCommand cmd;
      try {
        cmd = wire::decode_actuator_command(dg->bytes);
      } catch (Error& e) {
        e.vehicle_id = static_cast<int>(dg->vehicle);
        throw;
      }
      if (cmd.vehicle_id != dg->vehicle) {
        Error e(ErrorCode::ProtocolError, "command for vehicle " + std::to_string(cmd.vehicle_id) +
                                              " arrived on channel " +
                                              std::to_string(dg->vehicle));
        e.vehicle_id = static_cast<int>(dg->vehicle);
        throw e;
      }
      if (cmd.tick < world_.tick) continue;  // answer to a resent report
      if (cmd.tick > world_.tick) {
        Error e(ErrorCode::ProtocolError, "vehicle " + std::to_string(dg->vehicle) +
                                              " answered future tick " + std::to_string(cmd.tick));
        e.vehicle_id = static_cast<int>(dg->vehicle);
        e.tick = static_cast<std::int64_t>(world_.tick);
        throw e;
      }
      if (!got[dg->vehicle]) {
        got[dg->vehicle] = cmd.accel;
        --missing;
      }
      continue;
    }
    const auto now = Clock::now();
    if (now >= deadline) break;
    if (now >= next_resend) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!got[k]) link_.send(k, reports[k]);
      }
      next_resend = now + options_.resend_interval;
    }
  }

  std::vector<Vec3> commands(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (got[k]) {
      commands[k] = *got[k];
      continue;
    }
    if (!options_.hold_last) {
      Error e(ErrorCode::TickTimeout, "no command from vehicle " + std::to_string(k) +
                                          " for tick " + std::to_string(world_.tick));
      e.vehicle_id = static_cast<int>(k);
      e.tick = static_cast<std::int64_t>(world_.tick);
      throw e;
    }
    log().warn("tick {}: vehicle {} silent, holding its previous command", world_.tick, k);
    commands[k] = last_commands_[k];
  }
  return commands;
}

const WorldState& Lockstep::advance() {
  std::vector<wire::Bytes> reports;
  reports.reserve(world_.vehicles.size());
  for (std::size_t k = 0; k < world_.vehicles.size(); ++k) {
    reports.push_back(wire::encode_state_report(make_report(world_, k, options_.neighbor_radius)));
  }
  const std::vector<Vec3> commands = gather(reports);

  for (std::size_t k = 0; k < world_.vehicles.size(); ++k) {
    world_.vehicles[k] = step_dynamics(world_.vehicles[k], commands[k], dynamics_);
  }
  last_commands_ = commands;
  ++world_.tick;
  world_.sim_time = static_cast<double>(world_.tick) * dynamics_.dt;
  return world_;
}

void Lockstep::shutdown(int repeats) {
  for (int i = 0; i < repeats; ++i) {
    for (std::size_t k = 0; k < world_.vehicles.size(); ++k) {
      try {
        link_.send(k, wire::encode_shutdown(static_cast<std::uint16_t>(k), world_.tick));
      } catch (const Error& e) {
        log().debug("shutdown frame to vehicle {} failed: {}", k, e.what());
      }
    }
  }
}

namespace {

class UdpLink final : public VehicleLink {
 public:
  explicit UdpLink(const ExperimentConfig& config) {
    for (std::uint32_t n = 0; n < config.n_vehicles; ++n) {
      const wire::PortPair p =
          wire::allocate_ports(n, config.ports.base_in, config.ports.base_out, config.ports.stride);
      sockets_.push_back(net::UdpSocket::bind_localhost(p.output_port));
      input_ports_.push_back(p.input_port);
    }
    fds_.resize(sockets_.size());
    for (std::size_t k = 0; k < sockets_.size(); ++k) fds_[k] = {sockets_[k].fd(), POLLIN, 0};
  }

  std::size_t size() const override { return sockets_.size(); }

  void send(std::size_t vehicle, std::span<const std::uint8_t> frame) override {
    sockets_.at(vehicle).send_to(input_ports_[vehicle], frame);
  }

  std::optional<Datagram> receive(Clock::time_point deadline) override {
    for (;;) {
      for (std::size_t i = 0; i < sockets_.size(); ++i) {
        const std::size_t k = (cursor_ + i) % sockets_.size();
        if (auto bytes = sockets_[k].try_receive()) {
          cursor_ = k + 1;
          return Datagram{k, std::move(*bytes)};
        }
      }
      const auto now = Clock::now();
      if (now >= deadline) return std::nullopt;
      const auto wait =
          std::chrono::ceil<std::chrono::milliseconds>(deadline - now).count();
      for (auto& p : fds_) p.revents = 0;
      ::poll(fds_.data(), fds_.size(), static_cast<int>(wait));
    }
  }

 private:
  std::vector<net::UdpSocket> sockets_;
  std::vector<std::uint16_t> input_ports_;
  std::vector<pollfd> fds_;
  std::size_t cursor_ = 0;
};

class ShufflingLink final : public VehicleLink {
 public:
  ShufflingLink(std::unique_ptr<VehicleLink> inner, std::uint64_t seed)
      : inner_(std::move(inner)), rng_(seed) {}

  std::size_t size() const override { return inner_->size(); }

  void send(std::size_t vehicle, std::span<const std::uint8_t> frame) override {
    inner_->send(vehicle, frame);
  }

  std::optional<Datagram> receive(Clock::time_point deadline) override {
    if (pending_.empty()) {
      auto first = inner_->receive(deadline);
      if (!first) return std::nullopt;
      std::vector<Datagram> batch{std::move(*first)};
      while (batch.size() < inner_->size()) {
        auto next = inner_->receive(std::min(deadline, Clock::now() + kBatchWindow));
        if (!next) break;
        batch.push_back(std::move(*next));
      }
      std::shuffle(batch.begin(), batch.end(), rng_);
      for (auto& d : batch) pending_.push_back(std::move(d));
    }
    Datagram d = std::move(pending_.front());
    pending_.pop_front();
    return d;
  }

 private:
  static constexpr std::chrono::milliseconds kBatchWindow{20};

  std::unique_ptr<VehicleLink> inner_;
  std::mt19937_64 rng_;
  std::deque<Datagram> pending_;
};

LockstepOptions lockstep_options(const ExperimentConfig& config) {
  LockstepOptions o;
  o.neighbor_radius = config.flocking.r_neighbor;
  o.hold_last = config.hold_last;
  o.tick_timeout = std::chrono::milliseconds(std::llround(config.tick_timeout * 1000.0));
  o.first_tick_timeout = std::chrono::milliseconds(std::llround(config.connect_window * 1000.0));
  return o;
}

}  // namespace

std::unique_ptr<VehicleLink> open_udp_link(const ExperimentConfig& config) {
  return std::make_unique<UdpLink>(config);
}

std::unique_ptr<VehicleLink> make_shuffling_link(std::unique_ptr<VehicleLink> inner,
                                                  std::uint64_t seed) {
  return std::make_unique<ShufflingLink>(std::move(inner), seed);
}

SimulationResult run_simulation(const ExperimentConfig& config, VehicleLink& link,
                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  SimulationResult result;
  result.states_csv = out_dir / "states.csv";
  std::ofstream out(result.states_csv, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + result.states_csv.string());
  out << csv::kStatesHeader << '\n';
  out.flush();

  const std::uint64_t ticks = config.total_ticks();
  Lockstep lockstep(initial_world(config.n_vehicles, config.grid_spacing), config.dynamics,
                    lockstep_options(config), link);
  metrics::MetricsStream online(config.n_vehicles);
  std::vector<Vec3> qpos(config.n_vehicles), qvel(config.n_vehicles);
  const std::uint64_t progress_every =
      std::max<std::uint64_t>(1, std::llround(10.0 / config.dynamics.dt));

  std::string rows;
  try {
    for (std::uint64_t t = 0; t < ticks; ++t) {
      const WorldState& world = lockstep.world();
      rows.clear();
      csv::append_state_rows(rows, world);
      out.write(rows.data(), static_cast<std::streamsize>(rows.size()));
      out.flush();
      if (!out) throw Error(ErrorCode::Io, "write failed on " + result.states_csv.string());

      // Online metrics see exactly what the CSV carries.
      for (std::size_t k = 0; k < world.vehicles.size(); ++k) {
        const auto& v = world.vehicles[k];
        qpos[k] = {csv::quantize(v.position.x), csv::quantize(v.position.y),
                   csv::quantize(v.position.z)};
        qvel[k] = {csv::quantize(v.velocity.x), csv::quantize(v.velocity.y),
                   csv::quantize(v.velocity.z)};
      }
      const auto sample = online.push(world.tick, csv::quantize(world.sim_time), qpos, qvel);
      if (t % progress_every == 0) {
        log().debug("t={:.2f}s order={:.3f} vs={:.3f} cz={:.2f}", sample.time, sample.order,
                    sample.vs_avg_speed, sample.center.z);
      }

      lockstep.advance();
      result.ticks = t + 1;
    }
  } catch (...) {
    lockstep.shutdown();
    throw;
  }
  lockstep.shutdown();
  return result;
}

SimulationResult run_simulation(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir) {
  std::unique_ptr<VehicleLink> link = open_udp_link(config);
  if (config.fault.shuffle_arrivals) {
    link = make_shuffling_link(std::move(link), config.seed ^ 0x5eedf00dULL);
  }
  return run_simulation(config, *link, out_dir);
}

}  // namespace swarmlink::sim
