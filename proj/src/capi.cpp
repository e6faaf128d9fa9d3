#include "swarmlink/swarmlink.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "swarmlink/config.hpp"
#include "swarmlink/error.hpp"
#include "swarmlink/harness.hpp"
#include "swarmlink/metrics.hpp"
#include "swarmlink/sim.hpp"
#include "swarmlink/wire.hpp"

using namespace swarmlink;

struct swl_config {
  ExperimentConfig value;
};

struct swl_state_report {
  wire::StateReport value;
};

struct swl_report {
  harness::ExperimentReport value;
  std::string paths[4];
};

namespace {

thread_local std::string g_message;
thread_local int g_vehicle = -1;
thread_local int g_port = -1;

swl_status fail(swl_status status, const std::string& message, int vehicle = -1, int port = -1) {
  g_message = message;
  g_vehicle = vehicle;
  g_port = port;
  return status;
}

swl_status ok() {
  g_message.clear();
  g_vehicle = -1;
  g_port = -1;
  return SWL_OK;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
swl_status guarded(F&& body) {
  try {
    body();
    return ok();
  } catch (const Error& e) {
    return fail(static_cast<swl_status>(e.code()), e.what(), e.vehicle_id, e.port);
  } catch (const std::bad_alloc&) {
    return fail(SWL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SWL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SWL_ERR_INTERNAL, "unknown exception");
  }
}

Vec3 vec(const double v[3]) { return {v[0], v[1], v[2]}; }

void put(double out[3], const Vec3& v) {
  out[0] = v.x;
  out[1] = v.y;
  out[2] = v.z;
}

swl_status copy_frame(const wire::Bytes& bytes, uint8_t* buf, size_t capacity, size_t* written) {
  if (written) *written = bytes.size();
  if (!buf) return ok();
  if (capacity < bytes.size()) {
    return fail(SWL_ERR_BUFFER_TOO_SMALL, "buffer holds " + std::to_string(capacity) +
                                              " bytes, frame needs " +
                                              std::to_string(bytes.size()));
  }
  std::memcpy(buf, bytes.data(), bytes.size());
  return ok();
}

std::vector<Vec3> rows(const double* data, size_t n) {
  std::vector<Vec3> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = vec(data + 3 * i);
  return out;
}

#define SWL_REQUIRE(cond, what) \
  if (!(cond)) return fail(SWL_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* swl_status_name(swl_status status) {
  if (status == SWL_ERR_BUFFER_TOO_SMALL) return "BufferTooSmall";
  return error_code_name(static_cast<ErrorCode>(status));
}

const char* swl_last_error(void) { return g_message.c_str(); }
int swl_last_error_vehicle(void) { return g_vehicle; }
int swl_last_error_port(void) { return g_port; }

int swl_exit_status(swl_status status) {
  if (status == SWL_ERR_BUFFER_TOO_SMALL) return 1;
  return harness::exit_status_for(static_cast<ErrorCode>(status));
}

swl_status swl_allocate_ports(uint32_t n, uint32_t base_in, uint32_t base_out, uint32_t stride,
                              swl_port_pair* out) {
  SWL_REQUIRE(out, "out is NULL");
  return guarded([&] {
    const wire::PortPair p = wire::allocate_ports(n, base_in, base_out, stride);
    *out = {p.instance, p.input_port, p.output_port};
  });
}

swl_status swl_encode_actuator_command(const swl_actuator_command* cmd, uint8_t* buf,
                                       size_t capacity, size_t* written) {
  SWL_REQUIRE(cmd, "cmd is NULL");
  wire::Bytes bytes;
  const swl_status st = guarded([&] {
    bytes = wire::encode_actuator_command({cmd->vehicle_id, cmd->tick, vec(cmd->accel)});
  });
  if (st != SWL_OK) return st;
  return copy_frame(bytes, buf, capacity, written);
}

swl_status swl_decode_actuator_command(const uint8_t* buf, size_t len, swl_actuator_command* out) {
  SWL_REQUIRE(buf || len == 0, "buf is NULL");
  SWL_REQUIRE(out, "out is NULL");
  return guarded([&] {
    const wire::ActuatorCommand c = wire::decode_actuator_command({buf, len});
    out->vehicle_id = c.vehicle_id;
    out->tick = c.tick;
    put(out->accel, c.accel);
  });
}

swl_state_report* swl_state_report_new(uint16_t vehicle_id, uint64_t tick, double sim_time) {
  auto* r = new (std::nothrow) swl_state_report{};
  if (!r) return nullptr;
  r->value.vehicle_id = vehicle_id;
  r->value.tick = tick;
  r->value.sim_time = sim_time;
  return r;
}

void swl_state_report_free(swl_state_report* report) { delete report; }

void swl_state_report_set_own(swl_state_report* report, const double position[3],
                              const double velocity[3]) {
  if (!report) return;
  if (position) report->value.own_position = vec(position);
  if (velocity) report->value.own_velocity = vec(velocity);
}

swl_status swl_state_report_add_neighbor(swl_state_report* report,
                                         const swl_vehicle_snapshot* neighbor) {
  SWL_REQUIRE(report && neighbor, "report or neighbor is NULL");
  return guarded([&] {
    report->value.neighbors.push_back(
        {neighbor->id, vec(neighbor->position), vec(neighbor->velocity)});
  });
}

swl_status swl_state_report_encode(const swl_state_report* report, uint8_t* buf, size_t capacity,
                                   size_t* written) {
  SWL_REQUIRE(report, "report is NULL");
  wire::Bytes bytes;
  const swl_status st = guarded([&] { bytes = wire::encode_state_report(report->value); });
  if (st != SWL_OK) return st;
  return copy_frame(bytes, buf, capacity, written);
}

swl_status swl_state_report_decode(const uint8_t* buf, size_t len, swl_state_report** out) {
  SWL_REQUIRE(buf || len == 0, "buf is NULL");
  SWL_REQUIRE(out, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<swl_state_report>();
    r->value = wire::decode_state_report({buf, len});
    *out = r.release();
  });
}

uint16_t swl_state_report_vehicle_id(const swl_state_report* report) {
  return report ? report->value.vehicle_id : 0;
}

uint64_t swl_state_report_tick(const swl_state_report* report) {
  return report ? report->value.tick : 0;
}

double swl_state_report_sim_time(const swl_state_report* report) {
  return report ? report->value.sim_time : 0.0;
}

void swl_state_report_own(const swl_state_report* report, swl_vehicle_snapshot* out) {
  if (!report || !out) return;
  out->id = report->value.vehicle_id;
  put(out->position, report->value.own_position);
  put(out->velocity, report->value.own_velocity);
}

size_t swl_state_report_neighbor_count(const swl_state_report* report) {
  return report ? report->value.neighbors.size() : 0;
}

swl_status swl_state_report_neighbor(const swl_state_report* report, size_t index,
                                     swl_vehicle_snapshot* out) {
  SWL_REQUIRE(report && out, "report or out is NULL");
  SWL_REQUIRE(index < report->value.neighbors.size(), "neighbor index out of range");
  const wire::NeighborState& n = report->value.neighbors[index];
  out->id = n.id;
  put(out->position, n.position);
  put(out->velocity, n.velocity);
  return ok();
}

swl_status swl_order_metric(const double* headings, size_t n, double* out) {
  SWL_REQUIRE(out && (headings || n == 0), "NULL argument");
  return guarded([&] { *out = metrics::order_metric({headings, n}); });
}

swl_status swl_avg_speed(const double* velocities, size_t n, double* out) {
  SWL_REQUIRE(out && (velocities || n == 0), "NULL argument");
  return guarded([&] { *out = metrics::avg_speed(rows(velocities, n)); });
}

swl_status swl_center_velocity_norm(const double* velocities, size_t n, double* out) {
  SWL_REQUIRE(out && (velocities || n == 0), "NULL argument");
  return guarded([&] { *out = metrics::center_velocity_norm(rows(velocities, n)); });
}

swl_status swl_geometric_center(const double* positions, size_t n, double out[3]) {
  SWL_REQUIRE(out && (positions || n == 0), "NULL argument");
  return guarded([&] { put(out, metrics::geometric_center(rows(positions, n))); });
}

swl_status swl_compute_metrics_file(const char* states_csv, const char* metrics_csv,
                                    size_t* samples) {
  SWL_REQUIRE(states_csv && metrics_csv, "path is NULL");
  return guarded([&] {
    const auto s = metrics::compute_metrics_file(states_csv, metrics_csv);
    if (samples) *samples = s.size();
  });
}

swl_status swl_config_load(const char* path, swl_config** out) {
  SWL_REQUIRE(out, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<swl_config>();
    if (path) c->value = load_config(path);
    *out = c.release();
  });
}

void swl_config_free(swl_config* config) { delete config; }

swl_status swl_config_set(swl_config* config, const char* key, const char* value) {
  SWL_REQUIRE(config && key && value, "NULL argument");
  return guarded([&] { set_config_value(config->value, key, value); });
}

swl_status swl_config_apply_env(swl_config* config) {
  SWL_REQUIRE(config, "config is NULL");
  return guarded([&] { apply_environment_overrides(config->value); });
}

swl_status swl_config_write(const swl_config* config, const char* path) {
  SWL_REQUIRE(config && path, "NULL argument");
  return guarded([&] { write_config_file(config->value, path); });
}

uint32_t swl_config_vehicle_count(const swl_config* config) {
  return config ? config->value.n_vehicles : 0;
}

void swl_config_port_scheme(const swl_config* config, uint32_t* base_in, uint32_t* base_out,
                            uint32_t* stride) {
  if (!config) return;
  if (base_in) *base_in = config->value.ports.base_in;
  if (base_out) *base_out = config->value.ports.base_out;
  if (stride) *stride = config->value.ports.stride;
}

swl_status swl_run_simulator(const swl_config* config, const char* out_dir) {
  SWL_REQUIRE(config && out_dir, "NULL argument");
  return guarded([&] { sim::run_simulation(config->value, out_dir); });
}

int swl_run_autopilot(uint32_t instance, uint16_t input_port, uint16_t output_port,
                      uint64_t seed, const swl_config* config) {
  if (!config) {
    fail(SWL_ERR_INVALID_ARGUMENT, "config is NULL");
    return 1;
  }
  int status = 1;
  const swl_status st = guarded([&] {
    status = static_cast<int>(autopilot::run_autopilot(
        instance, {instance, input_port, output_port}, seed, config->value));
  });
  return st == SWL_OK ? status : swl_exit_status(st);
}

swl_status swl_run_experiment(const swl_config* config, const char* launcher, swl_report** out) {
  SWL_REQUIRE(config && launcher && out, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<swl_report>();
    r->value = harness::run_experiment(config->value, launcher);
    r->paths[SWL_FILE_STATES] = r->value.states_csv.string();
    r->paths[SWL_FILE_METRICS] = r->value.metrics_csv.string();
    r->paths[SWL_FILE_SUMMARY] = r->value.summary_json.string();
    r->paths[SWL_FILE_CONFIG] = r->value.resolved_config.string();
    *out = r.release();
  });
}

void swl_report_free(swl_report* report) { delete report; }

const char* swl_report_path(const swl_report* report, swl_report_file which) {
  if (!report || which < SWL_FILE_STATES || which > SWL_FILE_CONFIG) return nullptr;
  return report->paths[which].c_str();
}

void swl_report_summary(const swl_report* report, swl_summary* out) {
  if (!report || !out) return;
  const harness::Summary& s = report->value.summary;
  out->total_ticks = s.total_ticks;
  out->n_vehicles = s.n_vehicles;
  out->final_third_mean_order = s.final_third_mean_order;
  out->final_third_mean_vs_avg_speed = s.final_third_mean_vs_avg_speed;
  out->final_third_mean_vs_center_norm = s.final_third_mean_vs_center_norm;
  out->mean_vs_avg_speed = s.mean_vs_avg_speed;
  out->min_pairwise_distance = s.min_pairwise_distance;
  out->flock_entry_tick = s.flock_entry_tick;
  out->converged = s.converged ? 1 : 0;
}

size_t swl_report_port_count(const swl_report* report) {
  return report ? report->value.ports.size() : 0;
}

swl_status swl_report_port(const swl_report* report, size_t index, swl_port_pair* out) {
  SWL_REQUIRE(report && out, "NULL argument");
  SWL_REQUIRE(index < report->value.ports.size(), "port index out of range");
  const wire::PortPair& p = report->value.ports[index];
  *out = {p.instance, p.input_port, p.output_port};
  return ok();
}

}  // extern "C"
