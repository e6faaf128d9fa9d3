#include <optional>
#include <random>
#include <set>
#include <thread>

#include "doctest.h"
#include "support.hpp"
#include "swarmlink/autopilot.hpp"
#include "swarmlink/config.hpp"
#include "swarmlink/udp.hpp"

using namespace swarmlink;
using namespace swarmlink::autopilot;

namespace {

wire::StateReport report_at(std::uint16_t id, std::uint64_t tick, Vec3 pos, Vec3 vel) {
  wire::StateReport r;
  r.vehicle_id = id;
  r.tick = tick;
  r.sim_time = static_cast<double>(tick) * 0.02;
  r.own_position = pos;
  r.own_velocity = vel;
  return r;
}

// Vertical double integrator under the PD law, integrated by hand.
// Returns the first tick whose state meets the hand-over test.
std::optional<int> climb_oracle(double kp, double kd, double zt, double a_max, double v_max,
                                double dt, double z_tol, double vz_tol, int max_ticks) {
  double z = 0, vz = 0;
  for (int t = 0; t < max_ticks; ++t) {
    if (std::abs(z - zt) < z_tol && std::abs(vz) < vz_tol) return t;
    double a = kp * (zt - z) - kd * vz;
    if (a > a_max) a = a_max;
    if (a < -a_max) a = -a_max;
    vz += a * dt;
    if (vz > v_max) vz = v_max;
    if (vz < -v_max) vz = -v_max;
    z += vz * dt;
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("takeoff") {
  TEST_CASE("at the setpoint the command vanishes and the mode flips") {
    AutopilotParams p;
    sim::VehicleState s;
    s.position = {3, 4, p.z_target};
    CHECK(test::near(takeoff_controller(s, p, 4.0), {}, 1e-15));
    CHECK(takeoff_complete(s, p));

    Autopilot pilot(0, 1, {}, p, 4.0);
    pilot.handle(report_at(0, 0, s.position, {}));
    CHECK(pilot.mode() == Mode::Flock);
    CHECK(pilot.flock_entry_tick() == 0u);
  }

  TEST_CASE("on the ground the climb command points up") {
    AutopilotParams p;
    const Vec3 a = takeoff_controller({}, p, 4.0);
    CHECK(a.z > 0);
    CHECK(norm(a) <= 4.0 + 1e-12);
  }

  TEST_CASE("horizontal drift is damped during the climb") {
    AutopilotParams p;
    sim::VehicleState s;
    s.velocity = {0.5, -0.2, 0};
    const Vec3 a = takeoff_controller(s, p, 100.0);
    CHECK(a.x < 0);
    CHECK(a.y > 0);
  }

  TEST_CASE("closed loop from the ground hands over at the predicted tick") {
    const ExperimentConfig cfg;
    const AutopilotParams& p = cfg.autopilot;
    const auto predicted = climb_oracle(p.k_p, p.k_d, p.z_target, cfg.dynamics.a_max,
                                        cfg.dynamics.v_max, cfg.dynamics.dt, p.takeoff_z_tolerance,
                                        p.takeoff_vz_tolerance, 10000);
    REQUIRE(predicted.has_value());

    Autopilot pilot(0, cfg.seed, cfg.flocking, p, cfg.dynamics.a_max);
    sim::VehicleState s;
    std::optional<std::uint64_t> entered;
    double peak = 0;
    for (std::uint64_t t = 0; t < 10000 && !entered; ++t) {
      const auto cmd = pilot.handle(report_at(0, t, s.position, s.velocity));
      if (pilot.mode() == Mode::Flock) entered = t;
      s = sim::step_dynamics(s, cmd->accel, cfg.dynamics);
      peak = std::max(peak, s.position.z);
    }
    REQUIRE(entered.has_value());
    CHECK(*entered == static_cast<std::uint64_t>(*predicted));
    CHECK(peak < p.z_target + 0.05);
  }

  TEST_CASE("mode never returns to takeoff") {
    ExperimentConfig cfg;
    Autopilot pilot(0, 3, cfg.flocking, cfg.autopilot, 4.0);
    pilot.handle(report_at(0, 0, {0, 0, 10}, {}));
    REQUIRE(pilot.mode() == Mode::Flock);
    pilot.handle(report_at(0, 1, {0, 0, 0}, {0, 0, -3}));
    CHECK(pilot.mode() == Mode::Flock);
  }
}

TEST_SUITE("flock control") {
  TEST_CASE("tracking the current velocity needs no horizontal thrust") {
    ExperimentConfig cfg;
    sim::VehicleState s;
    s.position = {0, 0, 10};
    s.velocity = {1.2, -0.7, 0};
    const Vec3 a = track_velocity(s, {1.2, -0.7, 0}, cfg.flocking, cfg.autopilot, 4.0);
    CHECK(a.x == 0);
    CHECK(a.y == 0);
  }

  TEST_CASE("first flock command accelerates along the entry heading") {
    ExperimentConfig cfg;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      FlockState st;
      st.entry_heading = entry_heading(seed, 2);
      st.last_heading = st.entry_heading;
      const Vec3 a = flock_controller(report_at(2, 300, {0, 0, 10}, {}), cfg.flocking,
                                      cfg.autopilot, 4.0, st);
      const double c = std::cos(st.entry_heading), s = std::sin(st.entry_heading);
      CHECK(a.x * c + a.y * s > 0);
      CHECK(std::abs(-a.x * s + a.y * c) < 1e-12);
    }
  }

  TEST_CASE("rules take over once entry speed is reached") {
    ExperimentConfig cfg;
    FlockState st;
    st.entry_heading = 0;
    wire::StateReport r = report_at(0, 300, {0, 0, 10}, {0, 1.9, 0});
    flock_controller(r, cfg.flocking, cfg.autopilot, 4.0, st);
    CHECK(st.entered);
    // Alone and moving along +y, the desired velocity is (0, 2): no x thrust.
    const Vec3 a = flock_controller(r, cfg.flocking, cfg.autopilot, 4.0, st);
    CHECK(std::abs(a.x) < 1e-12);
    CHECK(a.y > 0);
  }

  TEST_CASE("commands respect a_max on arbitrary inputs") {
    ExperimentConfig cfg;
    std::mt19937_64 rng(17);
    for (int i = 0; i < 2000; ++i) {
      FlockState st;
      st.entry_heading = test::uniform(rng, 0, 6.28);
      st.entered = rng() % 2;
      wire::StateReport r = test::random_report(rng, 6);
      r.own_position = test::random_vec(rng, 30);
      const Vec3 a = flock_controller(r, cfg.flocking, cfg.autopilot, 4.0, st);
      CHECK(norm(a) <= 4.0 * (1 + 1e-12));
      sim::VehicleState s;
      s.position = r.own_position;
      s.velocity = r.own_velocity;
      CHECK(norm(takeoff_controller(s, cfg.autopilot, 4.0)) <= 4.0 * (1 + 1e-12));
    }
  }

  TEST_CASE("entry headings depend only on seed and vehicle") {
    std::set<double> distinct;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      for (std::uint32_t k = 0; k < 10; ++k) {
        const double h = entry_heading(seed, k);
        CHECK(h >= 0);
        CHECK(h < 2 * std::numbers::pi);
        CHECK(h == entry_heading(seed, k));
        distinct.insert(h);
      }
    }
    CHECK(distinct.size() == 500);
  }
}

TEST_SUITE("autopilot instance") {
  TEST_CASE("same seed and script give the same commands") {
    ExperimentConfig cfg;
    std::mt19937_64 rng(23);
    std::vector<wire::StateReport> script;
    for (std::uint64_t t = 0; t < 600; ++t) {
      wire::StateReport r = test::random_report(rng, 4);
      r.vehicle_id = 1;
      r.neighbors.erase(std::remove_if(r.neighbors.begin(), r.neighbors.end(),
                                       [](auto& n) { return n.id == 1; }),
                        r.neighbors.end());
      r.tick = t;
      r.own_position.z = t < 300 ? t * 0.033 : 10.0;
      script.push_back(r);
    }
    Autopilot a(1, 9, cfg.flocking, cfg.autopilot, 4.0);
    Autopilot b(1, 9, cfg.flocking, cfg.autopilot, 4.0);
    for (const auto& r : script) {
      const auto ca = a.handle(r);
      const auto cb = b.handle(r);
      REQUIRE(ca.has_value());
      CHECK(*ca == *cb);
      CHECK(ca->tick == r.tick);
      CHECK(ca->vehicle_id == 1);
    }
  }

  TEST_CASE("repeats get the cached answer, older ticks are dropped") {
    ExperimentConfig cfg;
    Autopilot pilot(0, 1, cfg.flocking, cfg.autopilot, 4.0);
    const auto first = pilot.handle(report_at(0, 5, {}, {}));
    const auto again = pilot.handle(report_at(0, 5, {9, 9, 9}, {1, 1, 1}));
    CHECK(*first == *again);
    CHECK_FALSE(pilot.handle(report_at(0, 4, {}, {})).has_value());
  }

  TEST_CASE("misaddressed or non-finite reports are protocol errors") {
    ExperimentConfig cfg;
    Autopilot pilot(0, 1, cfg.flocking, cfg.autopilot, 4.0);
    CHECK(test::error_code_of([&] { pilot.handle(report_at(1, 0, {}, {})); }) ==
          ErrorCode::ProtocolError);
    CHECK(test::error_code_of([&] {
            pilot.handle(report_at(0, 0, {std::nan(""), 0, 0}, {}));
          }) == ErrorCode::ProtocolError);
  }
}

TEST_SUITE("autopilot process loop") {
  ExperimentConfig udp_config() {
    ExperimentConfig cfg;
    cfg.autopilot.idle_timeout = 0.4;
    return cfg;
  }

  TEST_CASE("answers reports and exits cleanly on shutdown") {
    const ExperimentConfig cfg = udp_config();
    const wire::PortPair ports{0, 22102, 22103};
    auto sim_side = net::UdpSocket::bind_localhost(ports.output_port);
    ExitStatus status{};
    std::thread pilot([&] { status = run_autopilot(0, ports, 1, cfg); });
    std::optional<wire::ActuatorCommand> got;
    for (int i = 0; i < 40 && !got; ++i) {
      sim_side.send_to(ports.input_port,
                       wire::encode_state_report(report_at(0, 0, {}, {})));
      if (auto b = sim_side.receive(std::chrono::milliseconds(50))) {
        got = wire::decode_actuator_command(*b);
      }
    }
    for (int i = 0; i < 3; ++i) sim_side.send_to(ports.input_port, wire::encode_shutdown(0, 1));
    pilot.join();
    REQUIRE(got.has_value());
    CHECK(got->tick == 0);
    CHECK(got->accel.z > 0);
    CHECK(status == ExitStatus::Clean);
  }

  TEST_CASE("a taken input port gives PortBindConflict") {
    const wire::PortPair ports{0, 22112, 22113};
    auto squatter = net::UdpSocket::bind_localhost(ports.input_port);
    CHECK(run_autopilot(0, ports, 1, udp_config()) == ExitStatus::PortBindConflict);
  }

  TEST_CASE("a malformed frame gives ProtocolError") {
    const wire::PortPair ports{0, 22122, 22123};
    auto sim_side = net::UdpSocket::bind_localhost(ports.output_port);
    ExitStatus status{};
    std::thread pilot([&] { status = run_autopilot(0, ports, 1, udp_config()); });
    const std::vector<std::uint8_t> junk = {'N', 'O', 'P', 'E'};
    for (int i = 0; i < 40; ++i) {
      sim_side.send_to(ports.input_port, junk);
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    pilot.join();
    CHECK(status == ExitStatus::ProtocolError);
  }

  TEST_CASE("silence past the idle timeout exits") {
    const wire::PortPair ports{0, 22132, 22133};
    const auto start = std::chrono::steady_clock::now();
    CHECK(run_autopilot(0, ports, 1, udp_config()) == ExitStatus::IdleTimeout);
    CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(400));
  }
}
