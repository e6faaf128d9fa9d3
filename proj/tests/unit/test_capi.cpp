#include <swarmlink/swarmlink.h>

#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "swarmlink/error.hpp"

extern "C" int capi_c_roundtrip(void);

using swarmlink::ErrorCode;

TEST_CASE("status codes mirror the library error codes") {
  const std::pair<swl_status, ErrorCode> pairs[] = {
      {SWL_OK, ErrorCode::Ok},
      {SWL_ERR_INVALID_ARGUMENT, ErrorCode::InvalidArgument},
      {SWL_ERR_PORT_RANGE_EXCEEDED, ErrorCode::PortRangeExceeded},
      {SWL_ERR_BAD_MAGIC, ErrorCode::BadMagic},
      {SWL_ERR_WRONG_MSG_TYPE, ErrorCode::WrongMsgType},
      {SWL_ERR_TRUNCATED_FRAME, ErrorCode::TruncatedFrame},
      {SWL_ERR_VERSION_MISMATCH, ErrorCode::VersionMismatch},
      {SWL_ERR_NON_CANONICAL_FRAME, ErrorCode::NonCanonicalFrame},
      {SWL_ERR_NON_FINITE_STATE, ErrorCode::NonFiniteState},
      {SWL_ERR_UNKNOWN_VEHICLE, ErrorCode::UnknownVehicle},
      {SWL_ERR_TICK_TIMEOUT, ErrorCode::TickTimeout},
      {SWL_ERR_PORT_BIND_CONFLICT, ErrorCode::PortBindConflict},
      {SWL_ERR_PROTOCOL, ErrorCode::ProtocolError},
      {SWL_ERR_IDLE_TIMEOUT, ErrorCode::IdleTimeout},
      {SWL_ERR_EMPTY_SWARM, ErrorCode::EmptySwarm},
      {SWL_ERR_MALFORMED_LOG, ErrorCode::MalformedLog},
      {SWL_ERR_CONFIG, ErrorCode::ConfigError},
      {SWL_ERR_SPAWN_FAILURE, ErrorCode::SpawnFailure},
      {SWL_ERR_CHILD_CRASHED, ErrorCode::ChildCrashed},
      {SWL_ERR_IO, ErrorCode::Io},
      {SWL_ERR_INTERNAL, ErrorCode::Internal},
  };
  for (const auto& [s, e] : pairs) {
    CHECK(static_cast<int>(s) == static_cast<int>(e));
    CHECK(std::string(swl_status_name(s)) == swarmlink::error_code_name(e));
  }
  CHECK(swl_exit_status(SWL_OK) == 0);
  CHECK(swl_exit_status(SWL_ERR_PORT_BIND_CONFLICT) == 2);
  CHECK(swl_exit_status(SWL_ERR_BAD_MAGIC) == 3);
  CHECK(swl_exit_status(SWL_ERR_CONFIG) == 8);
}

TEST_CASE("header is usable from C") { CHECK(capi_c_roundtrip() == 40); }

TEST_CASE("port allocation") {
  swl_port_pair p{};
  REQUIRE(swl_allocate_ports(3, 9002, 9003, 10, &p) == SWL_OK);
  CHECK(p.input_port == 9032);
  CHECK(p.output_port == 9033);
  CHECK(swl_allocate_ports(7000, 9002, 9003, 10, &p) == SWL_ERR_PORT_RANGE_EXCEEDED);
  CHECK(std::string(swl_last_error()).find("7000") != std::string::npos);
  CHECK(swl_allocate_ports(0, 9002, 9003, 10, nullptr) == SWL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("state report through opaque handles") {
  swl_state_report* r = swl_state_report_new(3, 77, 1.54);
  REQUIRE(r);
  const double pos[3] = {1, 2, 3};
  const double vel[3] = {0.5, 0, -0.5};
  swl_state_report_set_own(r, pos, vel);
  swl_vehicle_snapshot n9{9, {4, 4, 4}, {1, 1, 1}};
  swl_vehicle_snapshot n1{1, {0, 0, 0}, {2, 2, 2}};
  CHECK(swl_state_report_add_neighbor(r, &n9) == SWL_OK);
  CHECK(swl_state_report_add_neighbor(r, &n1) == SWL_OK);

  size_t need = 0;
  REQUIRE(swl_state_report_encode(r, nullptr, 0, &need) == SWL_OK);
  CHECK(need == 76 + 2 * 50);
  std::vector<uint8_t> small(need - 1);
  CHECK(swl_state_report_encode(r, small.data(), small.size(), &need) == SWL_ERR_BUFFER_TOO_SMALL);
  std::vector<uint8_t> buf(need);
  REQUIRE(swl_state_report_encode(r, buf.data(), buf.size(), &need) == SWL_OK);

  swl_state_report* d = nullptr;
  REQUIRE(swl_state_report_decode(buf.data(), buf.size(), &d) == SWL_OK);
  CHECK(swl_state_report_vehicle_id(d) == 3);
  CHECK(swl_state_report_tick(d) == 77);
  CHECK(swl_state_report_sim_time(d) == 1.54);
  swl_vehicle_snapshot own{};
  swl_state_report_own(d, &own);
  CHECK(own.position[2] == 3);
  REQUIRE(swl_state_report_neighbor_count(d) == 2);
  swl_vehicle_snapshot first{};
  REQUIRE(swl_state_report_neighbor(d, 0, &first) == SWL_OK);
  CHECK(first.id == 1);  // canonical ascending order
  CHECK(swl_state_report_neighbor(d, 2, &first) == SWL_ERR_INVALID_ARGUMENT);

  buf[0] = 'Z';
  swl_state_report* bad = nullptr;
  CHECK(swl_state_report_decode(buf.data(), buf.size(), &bad) == SWL_ERR_BAD_MAGIC);
  CHECK(bad == nullptr);
  CHECK(std::strlen(swl_last_error()) > 0);

  swl_state_report_free(r);
  swl_state_report_free(d);
  swl_state_report_free(nullptr);
}

TEST_CASE("metric functions") {
  const double headings[2] = {0.0, 1.5707963267948966};
  double psi = 0;
  REQUIRE(swl_order_metric(headings, 2, &psi) == SWL_OK);
  CHECK(psi == doctest::Approx(0.7071067811865476).epsilon(1e-14));
  CHECK(swl_order_metric(headings, 0, &psi) == SWL_ERR_EMPTY_SWARM);

  const double v[6] = {1, 0, 0, -1, 0, 0};
  double a = -1, c = -1;
  CHECK(swl_avg_speed(v, 2, &a) == SWL_OK);
  CHECK(swl_center_velocity_norm(v, 2, &c) == SWL_OK);
  CHECK(a == 1.0);
  CHECK(c == 0.0);
  double center[3];
  CHECK(swl_geometric_center(v, 2, center) == SWL_OK);
  CHECK(center[0] == 0.0);
}

TEST_CASE("config handles") {
  swl_config* cfg = nullptr;
  REQUIRE(swl_config_load(nullptr, &cfg) == SWL_OK);
  CHECK(swl_config_vehicle_count(cfg) == 5);
  CHECK(swl_config_set(cfg, "n_vehicles", "8") == SWL_OK);
  CHECK(swl_config_vehicle_count(cfg) == 8);
  CHECK(swl_config_set(cfg, "flocking.d_sep", "99") == SWL_ERR_CONFIG);
  CHECK(std::string(swl_last_error()).find("d_sep") != std::string::npos);
  CHECK(swl_config_set(cfg, "bogus", "1") == SWL_ERR_CONFIG);

  const auto dir = test::scratch_dir("capi-config");
  const std::string path = (dir / "c.ini").string();
  REQUIRE(swl_config_write(cfg, path.c_str()) == SWL_OK);
  swl_config* back = nullptr;
  REQUIRE(swl_config_load(path.c_str(), &back) == SWL_OK);
  CHECK(swl_config_vehicle_count(back) == 8);
  uint32_t bi = 0, bo = 0, st = 0;
  swl_config_port_scheme(back, &bi, &bo, &st);
  CHECK(bi == 9002);
  CHECK(bo == 9003);
  CHECK(st == 10);

  swl_config* none = nullptr;
  CHECK(swl_config_load("/nonexistent.ini", &none) == SWL_ERR_CONFIG);
  CHECK(none == nullptr);
  swl_config_free(cfg);
  swl_config_free(back);
}

TEST_CASE("experiment with a missing launcher fails to spawn") {
  swl_config* cfg = nullptr;
  REQUIRE(swl_config_load(nullptr, &cfg) == SWL_OK);
  const auto dir = test::scratch_dir("capi-spawn");
  REQUIRE(swl_config_set(cfg, "output_dir", dir.string().c_str()) == SWL_OK);
  swl_report* report = nullptr;
  CHECK(swl_run_experiment(cfg, "/nonexistent/launcher", &report) == SWL_ERR_SPAWN_FAILURE);
  CHECK(report == nullptr);
  swl_config_free(cfg);
}
