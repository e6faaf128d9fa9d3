#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swarmlink/config.hpp"
#include "swarmlink/error.hpp"
#include "swarmlink/metrics.hpp"

namespace swarmlink::harness {

/// A spawned child process. The destructor kills and reaps a child that is
/// still running, so no child outlives its owner.
class ChildProcess {
 public:
  ChildProcess() = default;
  ChildProcess(const std::filesystem::path& program, const std::vector<std::string>& args);
  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ~ChildProcess();

  int pid() const { return pid_; }
  bool running() const { return pid_ > 0 && !exit_code_; }

  /// Non-blocking reap. Exit code, or 128 + signal for a signalled child.
  std::optional<int> poll();

  /// Blocks up to `timeout`; nullopt if it is still running.
  std::optional<int> wait_for(std::chrono::milliseconds timeout);

  /// SIGTERM, then SIGKILL after `grace`; always reaps.
  int terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(500));

  void kill_now();

 private:
  int pid_ = -1;
  std::optional<int> exit_code_;
};

struct Summary {
  std::uint64_t total_ticks = 0;
  std::uint32_t n_vehicles = 0;
  double final_third_mean_order = 0.0;
  double final_third_mean_vs_avg_speed = 0.0;
  double final_third_mean_vs_center_norm = 0.0;
  double mean_vs_avg_speed = 0.0;
  double min_pairwise_distance = 0.0;
  std::int64_t flock_entry_tick = -1;  // first tick any vehicle met the takeoff-complete test
  bool converged = false;              // final-third mean order >= 0.9
};

inline constexpr double kConvergedOrder = 0.9;

/// Index of the first sample in the final third of `count` samples.
constexpr std::size_t final_third_begin(std::size_t count) { return count - count / 3; }

/// Statistics over metrics.csv (values as printed) and the state log.
Summary summarize(const std::vector<metrics::MetricsSample>& samples, const csv::StateLog& states,
                  const ExperimentConfig& config);

void write_summary(const Summary& summary, const std::filesystem::path& path);
Summary read_summary(const std::filesystem::path& path);

/// First tick at which any vehicle in the log satisfies the takeoff-complete
/// test, or -1.
std::int64_t flock_entry_tick(const csv::StateLog& states,
                              const autopilot::AutopilotParams& params);

struct ExperimentReport {
  std::filesystem::path output_dir;
  std::filesystem::path states_csv;
  std::filesystem::path metrics_csv;
  std::filesystem::path summary_json;
  std::filesystem::path resolved_config;
  std::vector<wire::PortPair> ports;
  Summary summary;
};

/// End-to-end experiment: writes the resolved config, spawns
/// `launcher simulate` then `launcher autopilot` for n = 0..N-1, supervises
/// them, then runs the metrics pass and writes the summary. On any failure
/// every child is torn down, states.csv is cut back to complete ticks and an
/// Error (SpawnFailure, ChildCrashed, PortBindConflict, TickTimeout, ...) is
/// thrown.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& launcher);

/// Exit status the CLI uses for `code`.
int exit_status_for(ErrorCode code);

}  // namespace swarmlink::harness
