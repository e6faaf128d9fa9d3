/*
 * swarmlink C API.
 *
 * Opaque handles are created by *_new / *_load / *_decode / swl_run_experiment
 * and released with the matching *_free. Every call that can fail returns a
 * swl_status; the message of the most recent failure on the calling thread is
 * available from swl_last_error().
 */
#ifndef SWARMLINK_H
#define SWARMLINK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SWL_API
#else
#define SWL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum swl_status {
  SWL_OK = 0,
  SWL_ERR_INVALID_ARGUMENT = 1,
  SWL_ERR_PORT_RANGE_EXCEEDED = 10,
  SWL_ERR_BAD_MAGIC = 11,
  SWL_ERR_WRONG_MSG_TYPE = 12,
  SWL_ERR_TRUNCATED_FRAME = 13,
  SWL_ERR_VERSION_MISMATCH = 14,
  SWL_ERR_NON_CANONICAL_FRAME = 15,
  SWL_ERR_NON_FINITE_STATE = 20,
  SWL_ERR_UNKNOWN_VEHICLE = 21,
  SWL_ERR_TICK_TIMEOUT = 22,
  SWL_ERR_PORT_BIND_CONFLICT = 23,
  SWL_ERR_PROTOCOL = 24,
  SWL_ERR_IDLE_TIMEOUT = 25,
  SWL_ERR_EMPTY_SWARM = 30,
  SWL_ERR_MALFORMED_LOG = 31,
  SWL_ERR_CONFIG = 40,
  SWL_ERR_SPAWN_FAILURE = 41,
  SWL_ERR_CHILD_CRASHED = 42,
  SWL_ERR_IO = 50,
  SWL_ERR_BUFFER_TOO_SMALL = 51,
  SWL_ERR_INTERNAL = 99
} swl_status;

SWL_API const char* swl_status_name(swl_status status);

/* Message of the last failed call on this thread ("" if none). */
SWL_API const char* swl_last_error(void);
/* Vehicle / port named by the last failure, or -1. */
SWL_API int swl_last_error_vehicle(void);
SWL_API int swl_last_error_port(void);

/* Stable process exit status for a status code (0 for SWL_OK). */
SWL_API int swl_exit_status(swl_status status);

/* ---- Port scheme ------------------------------------------------------- */

typedef struct swl_port_pair {
  uint32_t instance;
  uint16_t input_port;
  uint16_t output_port;
} swl_port_pair;

SWL_API swl_status swl_allocate_ports(uint32_t n, uint32_t base_in, uint32_t base_out,
                                      uint32_t stride, swl_port_pair* out);

/* ---- Wire codec -------------------------------------------------------- */

typedef struct swl_vehicle_snapshot {
  uint16_t id;
  double position[3];
  double velocity[3];
} swl_vehicle_snapshot;

typedef struct swl_actuator_command {
  uint16_t vehicle_id;
  uint64_t tick;
  double accel[3];
} swl_actuator_command;

/* With buf == NULL only *written (the frame size) is filled in. */
SWL_API swl_status swl_encode_actuator_command(const swl_actuator_command* cmd, uint8_t* buf,
                                               size_t capacity, size_t* written);
SWL_API swl_status swl_decode_actuator_command(const uint8_t* buf, size_t len,
                                               swl_actuator_command* out);

typedef struct swl_state_report swl_state_report;

SWL_API swl_state_report* swl_state_report_new(uint16_t vehicle_id, uint64_t tick,
                                               double sim_time);
SWL_API void swl_state_report_free(swl_state_report* report);
SWL_API void swl_state_report_set_own(swl_state_report* report, const double position[3],
                                      const double velocity[3]);
SWL_API swl_status swl_state_report_add_neighbor(swl_state_report* report,
                                                 const swl_vehicle_snapshot* neighbor);
SWL_API swl_status swl_state_report_encode(const swl_state_report* report, uint8_t* buf,
                                           size_t capacity, size_t* written);
SWL_API swl_status swl_state_report_decode(const uint8_t* buf, size_t len,
                                           swl_state_report** out);

SWL_API uint16_t swl_state_report_vehicle_id(const swl_state_report* report);
SWL_API uint64_t swl_state_report_tick(const swl_state_report* report);
SWL_API double swl_state_report_sim_time(const swl_state_report* report);
/* Own state, with snapshot.id set to the reporting vehicle. */
SWL_API void swl_state_report_own(const swl_state_report* report, swl_vehicle_snapshot* out);
SWL_API size_t swl_state_report_neighbor_count(const swl_state_report* report);
SWL_API swl_status swl_state_report_neighbor(const swl_state_report* report, size_t index,
                                             swl_vehicle_snapshot* out);

/* ---- Metrics ----------------------------------------------------------- */

SWL_API swl_status swl_order_metric(const double* headings, size_t n, double* out);
/* velocities / positions are n rows of 3 doubles. */
SWL_API swl_status swl_avg_speed(const double* velocities, size_t n, double* out);
SWL_API swl_status swl_center_velocity_norm(const double* velocities, size_t n, double* out);
SWL_API swl_status swl_geometric_center(const double* positions, size_t n, double out[3]);

/* Offline recompute: states.csv -> metrics.csv. *samples may be NULL. */
SWL_API swl_status swl_compute_metrics_file(const char* states_csv, const char* metrics_csv,
                                            size_t* samples);

/* ---- Configuration ----------------------------------------------------- */

typedef struct swl_config swl_config;

/* path == NULL gives the defaults. */
SWL_API swl_status swl_config_load(const char* path, swl_config** out);
SWL_API void swl_config_free(swl_config* config);
/* key is "section.key", or a bare key for top-level entries. */
SWL_API swl_status swl_config_set(swl_config* config, const char* key, const char* value);
/* Applies SWARMLINK_BASE_PORT when set. */
SWL_API swl_status swl_config_apply_env(swl_config* config);
SWL_API swl_status swl_config_write(const swl_config* config, const char* path);
SWL_API uint32_t swl_config_vehicle_count(const swl_config* config);
SWL_API void swl_config_port_scheme(const swl_config* config, uint32_t* base_in,
                                    uint32_t* base_out, uint32_t* stride);

/* ---- Processes --------------------------------------------------------- */

/* Simulator role: binds every output port, runs the lockstep loop and writes
 * out_dir/states.csv. */
SWL_API swl_status swl_run_simulator(const swl_config* config, const char* out_dir);

/* Autopilot role. Returns the process exit status: 0 clean, 2 port bind
 * conflict, 3 protocol error, 4 idle timeout (1 for anything else). */
SWL_API int swl_run_autopilot(uint32_t instance, uint16_t input_port, uint16_t output_port,
                              uint64_t seed, const swl_config* config);

/* ---- Experiments ------------------------------------------------------- */

typedef struct swl_report swl_report;

typedef enum swl_report_file {
  SWL_FILE_STATES = 0,
  SWL_FILE_METRICS = 1,
  SWL_FILE_SUMMARY = 2,
  SWL_FILE_CONFIG = 3
} swl_report_file;

typedef struct swl_summary {
  uint64_t total_ticks;
  uint32_t n_vehicles;
  double final_third_mean_order;
  double final_third_mean_vs_avg_speed;
  double final_third_mean_vs_center_norm;
  double mean_vs_avg_speed;
  double min_pairwise_distance;
  int64_t flock_entry_tick;
  int converged;
} swl_summary;

/* launcher: executable providing the `simulate` and `autopilot` subcommands. */
SWL_API swl_status swl_run_experiment(const swl_config* config, const char* launcher,
                                      swl_report** out);
SWL_API void swl_report_free(swl_report* report);
SWL_API const char* swl_report_path(const swl_report* report, swl_report_file which);
SWL_API void swl_report_summary(const swl_report* report, swl_summary* out);
SWL_API size_t swl_report_port_count(const swl_report* report);
SWL_API swl_status swl_report_port(const swl_report* report, size_t index, swl_port_pair* out);

#ifdef __cplusplus
}
#endif

#endif /* SWARMLINK_H */
