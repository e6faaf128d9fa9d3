#include "swarmlink/harness.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "swarmlink/error.hpp"
#include "swarmlink/log.hpp"

extern char** environ;

namespace swarmlink::harness {
namespace {

using namespace std::chrono_literals;

int decode_wait_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return 255;
}

ErrorCode code_for_exit_status(int status) {
  switch (status) {
    case 2: return ErrorCode::PortBindConflict;
    case 3: return ErrorCode::ProtocolError;
    case 4: return ErrorCode::IdleTimeout;
    case 5: return ErrorCode::TickTimeout;
    case 8: return ErrorCode::ConfigError;
    case 10: return ErrorCode::Io;
    default: return ErrorCode::ChildCrashed;
  }
}

}  // namespace

ChildProcess::ChildProcess(const std::filesystem::path& program,
                           const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.push_back(program.string());
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, storage[0].c_str(), nullptr, nullptr, argv.data(), environ);
  if (rc != 0) {
    throw Error(ErrorCode::SpawnFailure,
                "cannot spawn " + storage[0] + ": " + std::strerror(rc));
  }
  pid_ = pid;
}

ChildProcess::ChildProcess(ChildProcess&& other) noexcept
    : pid_(other.pid_), exit_code_(other.exit_code_) {
  other.pid_ = -1;
}

ChildProcess& ChildProcess::operator=(ChildProcess&& other) noexcept {
  if (this != &other) {
    if (running()) kill_now();
    pid_ = other.pid_;
    exit_code_ = other.exit_code_;
    other.pid_ = -1;
  }
  return *this;
}

ChildProcess::~ChildProcess() {
  if (running()) kill_now();
}

std::optional<int> ChildProcess::poll() {
  if (exit_code_ || pid_ <= 0) return exit_code_;
  int status = 0;
  const pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == pid_) exit_code_ = decode_wait_status(status);
  return exit_code_;
}

std::optional<int> ChildProcess::wait_for(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto code = poll()) return code;
    if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(2ms);
  }
}

int ChildProcess::terminate(std::chrono::milliseconds grace) {
  if (auto code = poll()) return *code;
  ::kill(pid_, SIGTERM);
  if (auto code = wait_for(grace)) return *code;
  kill_now();
  return *exit_code_;
}

void ChildProcess::kill_now() {
  if (pid_ <= 0 || exit_code_) return;
  ::kill(pid_, SIGKILL);
  int status = 0;
  while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
  }
  exit_code_ = decode_wait_status(status);
}

int exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Ok: return 0;
    case ErrorCode::PortBindConflict: return 2;
    case ErrorCode::BadMagic:
    case ErrorCode::WrongMsgType:
    case ErrorCode::TruncatedFrame:
    case ErrorCode::VersionMismatch:
    case ErrorCode::NonCanonicalFrame:
    case ErrorCode::ProtocolError: return 3;
    case ErrorCode::IdleTimeout: return 4;
    case ErrorCode::TickTimeout: return 5;
    case ErrorCode::ChildCrashed: return 6;
    case ErrorCode::SpawnFailure: return 7;
    case ErrorCode::ConfigError: return 8;
    case ErrorCode::MalformedLog: return 9;
    case ErrorCode::Io: return 10;
    case ErrorCode::PortRangeExceeded: return 11;
    case ErrorCode::NonFiniteState: return 12;
    case ErrorCode::EmptySwarm: return 13;
    case ErrorCode::UnknownVehicle: return 14;
    case ErrorCode::InvalidArgument:
    case ErrorCode::Internal: return 1;
  }
  return 1;
}

std::int64_t flock_entry_tick(const csv::StateLog& states,
                              const autopilot::AutopilotParams& params) {
  for (std::size_t t = 0; t < states.ticks.size(); ++t) {
    for (std::size_t k = 0; k < states.fleet_size; ++k) {
      const sim::VehicleState v{static_cast<std::uint16_t>(k), states.positions[t][k],
                                states.velocities[t][k], 0.0};
      if (autopilot::takeoff_complete(v, params)) return static_cast<std::int64_t>(states.ticks[t]);
    }
  }
  return -1;
}

Summary summarize(const std::vector<metrics::MetricsSample>& samples, const csv::StateLog& states,
                  const ExperimentConfig& config) {
  Summary s;
  s.total_ticks = samples.size();
  s.n_vehicles = static_cast<std::uint32_t>(states.fleet_size);
  if (!samples.empty()) {
    const std::size_t begin = final_third_begin(samples.size());
    double order = 0.0, speed = 0.0, center = 0.0, all_speed = 0.0;
    for (std::size_t i = begin; i < samples.size(); ++i) {
      order += samples[i].order;
      speed += samples[i].vs_avg_speed;
      center += samples[i].vs_center_norm;
    }
    for (const auto& m : samples) all_speed += m.vs_avg_speed;
    const auto n = static_cast<double>(samples.size() - begin);
    s.final_third_mean_order = order / n;
    s.final_third_mean_vs_avg_speed = speed / n;
    s.final_third_mean_vs_center_norm = center / n;
    s.mean_vs_avg_speed = all_speed / static_cast<double>(samples.size());
  }
  if (states.fleet_size >= 2) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& positions : states.positions) {
      for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
          best = std::min(best, norm(positions[i] - positions[j]));
        }
      }
    }
    s.min_pairwise_distance = best;
  } else {
    s.min_pairwise_distance = -1.0;
  }
  s.flock_entry_tick = flock_entry_tick(states, config.autopilot);
  s.converged = s.final_third_mean_order >= kConvergedOrder;
  return s;
}

void write_summary(const Summary& s, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["total_ticks"] = s.total_ticks;
  j["n_vehicles"] = s.n_vehicles;
  j["final_third_mean_order"] = s.final_third_mean_order;
  j["final_third_mean_vs_avg_speed"] = s.final_third_mean_vs_avg_speed;
  j["final_third_mean_vs_center_norm"] = s.final_third_mean_vs_center_norm;
  j["mean_vs_avg_speed"] = s.mean_vs_avg_speed;
  j["min_pairwise_distance"] = s.min_pairwise_distance;
  j["flock_entry_tick"] = s.flock_entry_tick;
  j["converged"] = s.converged;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Summary read_summary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    Summary s;
    s.total_ticks = j.at("total_ticks").get<std::uint64_t>();
    s.n_vehicles = j.at("n_vehicles").get<std::uint32_t>();
    s.final_third_mean_order = j.at("final_third_mean_order").get<double>();
    s.final_third_mean_vs_avg_speed = j.at("final_third_mean_vs_avg_speed").get<double>();
    s.final_third_mean_vs_center_norm = j.at("final_third_mean_vs_center_norm").get<double>();
    s.mean_vs_avg_speed = j.at("mean_vs_avg_speed").get<double>();
    s.min_pairwise_distance = j.at("min_pairwise_distance").get<double>();
    s.flock_entry_tick = j.at("flock_entry_tick").get<std::int64_t>();
    s.converged = j.at("converged").get<bool>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

namespace {

struct Fleet {
  ChildProcess simulator;
  std::vector<ChildProcess> autopilots;
  std::vector<std::uint32_t> instance_of;  // autopilots[i] runs instance_of[i]
  std::vector<wire::PortPair> ports_of;

  void teardown() {
    simulator.terminate();
    for (auto& a : autopilots) a.terminate(100ms);
  }
};

Error child_failure(const Fleet& fleet, std::size_t index, int status) {
  const std::uint32_t instance = fleet.instance_of[index];
  const ErrorCode code = code_for_exit_status(status);
  std::string what = "autopilot " + std::to_string(instance) + " exited with status " +
                     std::to_string(status);
  if (code == ErrorCode::PortBindConflict) {
    what = "PortBindConflict: autopilot " + std::to_string(instance) + " could not bind port " +
           std::to_string(fleet.ports_of[index].input_port);
  } else if (code == ErrorCode::ChildCrashed) {
    what = "ChildCrashed: " + what;
  }
  Error e(code, what);
  e.vehicle_id = static_cast<int>(instance);
  e.exit_code = status;
  if (code == ErrorCode::PortBindConflict) e.port = fleet.ports_of[index].input_port;
  return e;
}

Error simulator_failure(int status) {
  const ErrorCode code = code_for_exit_status(status);
  Error e(code, std::string(code == ErrorCode::ChildCrashed ? "ChildCrashed: " : "") +
                    "simulator exited with status " + std::to_string(status) + " (" +
                    error_code_name(code) + ")");
  e.exit_code = status;
  return e;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& launcher) {
  check_config(config);
  ExperimentReport report;
  report.output_dir = config.output_dir;
  std::filesystem::create_directories(report.output_dir);
  report.states_csv = report.output_dir / "states.csv";
  report.metrics_csv = report.output_dir / "metrics.csv";
  report.summary_json = report.output_dir / "summary.json";
  report.resolved_config = report.output_dir / "config.resolved.ini";
  for (const auto& p : {report.states_csv, report.metrics_csv, report.summary_json}) {
    std::filesystem::remove(p);
  }
  write_config_file(config, report.resolved_config);

  for (std::uint32_t n = 0; n < config.n_vehicles; ++n) {
    report.ports.push_back(
        wire::allocate_ports(n, config.ports.base_in, config.ports.base_out, config.ports.stride));
  }
  if (!std::filesystem::exists(launcher)) {
    throw Error(ErrorCode::SpawnFailure, "launcher " + launcher.string() + " does not exist");
  }

  Fleet fleet;
  const std::string cfg = report.resolved_config.string();
  auto spawn_autopilot = [&](std::uint32_t n) {
    const wire::PortPair& p = report.ports[n];
    fleet.autopilots.emplace_back(
        launcher, std::vector<std::string>{"autopilot", "--instance", std::to_string(n),
                                           "--input-port", std::to_string(p.input_port),
                                           "--output-port", std::to_string(p.output_port),
                                           "--seed", std::to_string(config.seed), "--config", cfg});
    fleet.instance_of.push_back(n);
    fleet.ports_of.push_back(p);
  };

  const auto started = std::chrono::steady_clock::now();
  try {
    fleet.simulator = ChildProcess(
        launcher, {"simulate", "--config", cfg, "--out", report.output_dir.string()});
    for (std::uint32_t n = 0; n < config.n_vehicles; ++n) {
      spawn_autopilot(n);
      if (config.fault.duplicate_instance == static_cast<int>(n)) spawn_autopilot(n);
    }
  } catch (...) {
    fleet.teardown();
    throw;
  }
  log().info("spawned simulator and {} autopilots (ports {}..{})", fleet.autopilots.size(),
             report.ports.front().input_port, report.ports.back().output_port);

  bool killed = false;
  std::optional<Error> failure;
  for (;;) {
    for (std::size_t i = 0; i < fleet.autopilots.size() && !failure; ++i) {
      const auto code = fleet.autopilots[i].poll();
      if (code && *code != 0) failure = child_failure(fleet, i, *code);
    }
    if (failure) break;
    if (const auto code = fleet.simulator.poll()) {
      if (*code != 0) failure = simulator_failure(*code);
      break;
    }
    if (!killed && config.fault.kill_instance >= 0 &&
        std::chrono::steady_clock::now() - started >=
            std::chrono::duration<double>(config.fault.kill_after)) {
      for (std::size_t i = 0; i < fleet.autopilots.size(); ++i) {
        if (fleet.instance_of[i] == static_cast<std::uint32_t>(config.fault.kill_instance)) {
          log().warn("fault injection: killing autopilot {}", config.fault.kill_instance);
          ::kill(fleet.autopilots[i].pid(), SIGKILL);
        }
      }
      killed = true;
    }
    std::this_thread::sleep_for(2ms);
  }

  if (failure) {
    log().error("{}; tearing down", failure->what());
    fleet.teardown();
    const auto kept = csv::truncate_to_complete_ticks(report.states_csv, config.n_vehicles);
    log().info("states.csv kept {} complete ticks", kept);
    throw *failure;
  }

  const auto grace_end = std::chrono::steady_clock::now() + 3s;
  for (std::size_t i = 0; i < fleet.autopilots.size(); ++i) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        grace_end - std::chrono::steady_clock::now());
    const auto code = fleet.autopilots[i].wait_for(std::max(left, 0ms));
    if (!code) {
      log().warn("autopilot {} ignored shutdown; terminating it", fleet.instance_of[i]);
      fleet.autopilots[i].terminate(100ms);
    } else if (*code != 0) {
      Error e = child_failure(fleet, i, *code);
      fleet.teardown();
      throw e;
    }
  }

  metrics::compute_metrics_file(report.states_csv, report.metrics_csv);
  report.summary = summarize(metrics::read_metrics_csv(report.metrics_csv),
                             csv::read_state_log(report.states_csv), config);
  write_summary(report.summary, report.summary_json);
  return report;
}

}  // namespace swarmlink::harness
