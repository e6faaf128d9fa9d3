#pragma once

// Experiment configuration: an INI-style text file.
//
//   # comment            ; comment
//   n_vehicles = 5       (keys before any [section] belong to the top level)
//   [flocking]
//   d_sep = 3
//
// Every key is optional; unknown sections or keys are rejected. Keys are
// addressed by "section.key" ("n_vehicles" for top-level keys).

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "swarmlink/autopilot.hpp"
#include "swarmlink/flocking.hpp"
#include "swarmlink/sim.hpp"

namespace swarmlink {

struct PortScheme {
  std::uint32_t base_in = wire::kDefaultBaseIn;
  std::uint32_t base_out = wire::kDefaultBaseOut;
  std::uint32_t stride = wire::kDefaultStride;
};

/// Test-only fault injection; everything off by default.
struct FaultInjection {
  int duplicate_instance = -1;  // spawn a second autopilot with this index
  int kill_instance = -1;       // SIGKILL this autopilot ...
  double kill_after = 0.0;      // ... this many wall-clock seconds after spawn
  bool shuffle_arrivals = false;
};

struct ExperimentConfig {
  std::uint32_t n_vehicles = 5;
  double duration = 120.0;  // s of simulated time
  std::uint64_t seed = 1;
  double grid_spacing = 4.0;  // m
  std::string output_dir = "swarmlink-out";
  bool hold_last = false;
  double tick_timeout = 2.0;      // s wall clock per tick
  double connect_window = 5.0;    // s wall clock before the first tick
  PortScheme ports;
  sim::DynamicsParams dynamics;   // dt lives here
  flocking::FlockingParams flocking;
  autopilot::AutopilotParams autopilot;
  FaultInjection fault;

  std::uint64_t total_ticks() const;
};

/// Raw "section.key" -> value pairs as read from a file.
using RawConfig = std::map<std::string, std::string>;

/// Throws Error(ConfigError) on syntax errors, with the line number.
RawConfig parse_config_text(std::string_view text);
RawConfig read_config_file(const std::filesystem::path& path);

/// Applies defaults for missing keys and checks every invariant. Throws
/// Error(ConfigError) whose message starts with the offending field path.
ExperimentConfig validate_config(const RawConfig& raw);

ExperimentConfig load_config(const std::filesystem::path& path);

/// Sets a single "section.key" on an existing config, with the same parsing
/// and checks as a file entry, then re-validates the whole config.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// SWARMLINK_BASE_PORT overrides ports.base_in and sets ports.base_out
/// to base_in + 1.
void apply_environment_overrides(ExperimentConfig& config);

/// Writes every field, reals at round-trip precision, so that loading the
/// file gives back an identical config.
std::string to_config_text(const ExperimentConfig& config);
void write_config_file(const ExperimentConfig& config, const std::filesystem::path& path);

/// Throws Error(ConfigError) if the config breaks an invariant.
void check_config(const ExperimentConfig& config);

}  // namespace swarmlink
