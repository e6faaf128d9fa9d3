// swarmlink command-line front end. Links only the C API.

#include <swarmlink/swarmlink.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

namespace {

int report_failure(const char* what, swl_status st) {
  std::fprintf(stderr, "swarmlink %s: %s: %s\n", what, swl_status_name(st), swl_last_error());
  return swl_exit_status(st);
}

struct ConfigHandle {
  swl_config* ptr = nullptr;
  ~ConfigHandle() { swl_config_free(ptr); }
};

// Loads `path` (defaults when empty), then applies each key=value override.
swl_status load(ConfigHandle& cfg, const std::string& path, const std::vector<std::string>& sets) {
  swl_status st = swl_config_load(path.empty() ? nullptr : path.c_str(), &cfg.ptr);
  if (st != SWL_OK) return st;
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "swarmlink: --set expects key=value, got '%s'\n", kv.c_str());
      return SWL_ERR_CONFIG;
    }
    st = swl_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != SWL_OK) return st;
  }
  return SWL_OK;
}

std::string self_path() {
  std::error_code ec;
  const auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  return ec ? std::string() : p.string();
}

void print_summary(const swl_report* report) {
  swl_summary s{};
  swl_report_summary(report, &s);
  std::printf("output:            %s\n", swl_report_path(report, SWL_FILE_STATES));
  std::printf("metrics:           %s\n", swl_report_path(report, SWL_FILE_METRICS));
  std::printf("summary:           %s\n", swl_report_path(report, SWL_FILE_SUMMARY));
  std::printf("vehicles:          %u\n", s.n_vehicles);
  std::printf("ticks:             %llu\n", static_cast<unsigned long long>(s.total_ticks));
  std::printf("flock entry tick:  %lld\n", static_cast<long long>(s.flock_entry_tick));
  std::printf("order (final 1/3): %.6f\n", s.final_third_mean_order);
  std::printf("V_s   (final 1/3): %.6f m/s\n", s.final_third_mean_vs_avg_speed);
  std::printf("|v_c| (final 1/3): %.6f m/s\n", s.final_third_mean_vs_center_norm);
  std::printf("min separation:    %.6f m\n", s.min_pairwise_distance);
  std::printf("converged:         %s\n", s.converged ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-UAV swarm simulation over a localhost UDP lockstep protocol"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run a full experiment: simulator plus N autopilots");
  run->add_option("-c,--config", config_path, "Experiment config file")->check(CLI::ExistingFile);
  run->add_option("-s,--set", sets, "Override a config key (section.key=value)");
  run->add_option("-o,--out", out_dir, "Output directory");
  std::string vehicles, run_seed, duration;
  run->add_option("-n,--vehicles", vehicles, "Number of vehicles");
  run->add_option("--seed", run_seed, "Experiment seed");
  run->add_option("-t,--duration", duration, "Simulated seconds");

  std::string states_path;
  std::string metrics_path;
  auto* metrics = app.add_subcommand("metrics", "Recompute metrics.csv from a states.csv");
  metrics->add_option("--states", states_path, "Input states.csv")->required();
  metrics->add_option("-o,--out", metrics_path, "Output metrics.csv (default: next to states)");

  auto* ports = app.add_subcommand("ports", "Print the port allocation");
  std::vector<unsigned> instances;
  ports->add_option("-i,--instance", instances, "Instance index (default: every vehicle)");
  ports->add_option("-c,--config", config_path, "Experiment config file")->check(CLI::ExistingFile);
  ports->add_option("-s,--set", sets, "Override a config key (section.key=value)");

  auto* simulate = app.add_subcommand("simulate", "Simulator process (spawned by run)");
  simulate->add_option("-c,--config", config_path, "Resolved config")->required();
  simulate->add_option("-o,--out", out_dir, "Output directory")->required();

  unsigned instance = 0;
  unsigned input_port = 0;
  unsigned output_port = 0;
  unsigned long long seed = 1;
  auto* pilot = app.add_subcommand("autopilot", "Autopilot process (spawned by run)");
  pilot->add_option("--instance", instance, "Vehicle index")->required();
  pilot->add_option("--input-port", input_port, "Port to receive state on")
      ->required()->check(CLI::Range(1, 65535));
  pilot->add_option("--output-port", output_port, "Port to send commands to")
      ->required()->check(CLI::Range(1, 65535));
  pilot->add_option("--seed", seed, "Experiment seed");
  pilot->add_option("-c,--config", config_path, "Resolved config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : swl_exit_status(SWL_ERR_CONFIG);
  }

  if (*run) {
    ConfigHandle cfg;
    swl_status st = load(cfg, config_path, sets);
    if (st == SWL_OK) st = swl_config_apply_env(cfg.ptr);
    const std::pair<const char*, const std::string*> flags[] = {
        {"output_dir", &out_dir}, {"n_vehicles", &vehicles}, {"seed", &run_seed},
        {"duration", &duration}};
    for (const auto& [key, value] : flags) {
      if (st == SWL_OK && !value->empty()) st = swl_config_set(cfg.ptr, key, value->c_str());
    }
    if (st != SWL_OK) return report_failure("run", st);
    const std::string launcher = self_path();
    if (launcher.empty()) return report_failure("run", SWL_ERR_SPAWN_FAILURE);
    swl_report* report = nullptr;
    st = swl_run_experiment(cfg.ptr, launcher.c_str(), &report);
    if (st != SWL_OK) return report_failure("run", st);
    print_summary(report);
    swl_report_free(report);
    return 0;
  }

  if (*metrics) {
    if (metrics_path.empty()) {
      metrics_path = (std::filesystem::path(states_path).parent_path() / "metrics.csv").string();
    }
    size_t samples = 0;
    const swl_status st =
        swl_compute_metrics_file(states_path.c_str(), metrics_path.c_str(), &samples);
    if (st != SWL_OK) return report_failure("metrics", st);
    std::printf("%zu samples -> %s\n", samples, metrics_path.c_str());
    return 0;
  }

  if (*ports) {
    ConfigHandle cfg;
    swl_status st = load(cfg, config_path, sets);
    if (st == SWL_OK) st = swl_config_apply_env(cfg.ptr);
    if (st != SWL_OK) return report_failure("ports", st);
    uint32_t base_in = 0, base_out = 0, stride = 0;
    swl_config_port_scheme(cfg.ptr, &base_in, &base_out, &stride);
    if (instances.empty()) {
      for (uint32_t n = 0; n < swl_config_vehicle_count(cfg.ptr); ++n) instances.push_back(n);
    }
    std::printf("instance,input_port,output_port\n");
    for (const uint32_t n : instances) {
      swl_port_pair p{};
      st = swl_allocate_ports(n, base_in, base_out, stride, &p);
      if (st != SWL_OK) return report_failure("ports", st);
      std::printf("%u,%u,%u\n", p.instance, p.input_port, p.output_port);
    }
    return 0;
  }

  if (*simulate) {
    ConfigHandle cfg;
    swl_status st = load(cfg, config_path, {});
    if (st == SWL_OK) st = swl_run_simulator(cfg.ptr, out_dir.c_str());
    if (st != SWL_OK) return report_failure("simulate", st);
    return 0;
  }

  if (*pilot) {
    ConfigHandle cfg;
    const swl_status st = load(cfg, config_path, {});
    if (st != SWL_OK) return report_failure("autopilot", st);
    const int rc = swl_run_autopilot(instance, static_cast<uint16_t>(input_port),
                                     static_cast<uint16_t>(output_port), seed, cfg.ptr);
    if (rc != 0 && rc != 2 && rc != 3 && rc != 4 && *swl_last_error()) {
      std::fprintf(stderr, "swarmlink autopilot: %s\n", swl_last_error());
    }
    return rc;
  }
  return 1;
}
