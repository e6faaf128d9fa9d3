#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "../unit/support.hpp"
#include "swarmlink/csv.hpp"
#include "swarmlink/harness.hpp"
#include "swarmlink/metrics.hpp"

using namespace swarmlink;

namespace {

const std::filesystem::path kCli = SWARMLINK_CLI;

ExperimentConfig small_config(const std::string& name, std::uint32_t base, std::uint32_t n,
                              double duration) {
  ExperimentConfig c;
  c.n_vehicles = n;
  c.duration = duration;
  c.ports.base_in = base;
  c.ports.base_out = base + 1;
  c.output_dir = test::scratch_dir(name).string();
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

// Live processes whose command line mentions `needle`.
int processes_mentioning(const std::string& needle) {
  int found = 0;
  for (const auto& entry : std::filesystem::directory_iterator("/proc")) {
    const std::string name = entry.path().filename().string();
    if (name.find_first_not_of("0123456789") != std::string::npos) continue;
    std::string cmd = slurp(entry.path() / "cmdline");
    for (char& ch : cmd) ch = ch == '\0' ? ' ' : ch;
    const std::string stat = slurp(entry.path() / "stat");
    const bool zombie = stat.find(") Z ") != std::string::npos;
    if (!zombie && cmd.find(needle) != std::string::npos) ++found;
  }
  return found;
}

int run_cli(const std::string& args) {
  const std::string cmd = "'" + kCli.string() + "' " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("three vehicles for ten seconds") {
  const ExperimentConfig c = small_config("harness-basic", 23002, 3, 10.0);
  const harness::ExperimentReport r = harness::run_experiment(c, kCli);
  CHECK(std::filesystem::exists(r.states_csv));
  CHECK(std::filesystem::exists(r.metrics_csv));
  CHECK(std::filesystem::exists(r.summary_json));
  CHECK(std::filesystem::exists(r.resolved_config));
  CHECK(r.summary.total_ticks == 500);
  CHECK(r.summary.n_vehicles == 3);
  CHECK(count_lines(r.states_csv) == 1 + 3 * 500);
  CHECK(count_lines(r.metrics_csv) == 1 + 500);
  REQUIRE(r.ports.size() == 3);
  CHECK(r.ports[2].input_port == 23022);

  // Summary recomputed from the files matches the reported one exactly.
  const harness::Summary again = harness::summarize(metrics::read_metrics_csv(r.metrics_csv),
                                                    csv::read_state_log(r.states_csv), c);
  const harness::Summary stored = harness::read_summary(r.summary_json);
  for (const harness::Summary* s : {&again, &stored}) {
    CHECK(s->total_ticks == r.summary.total_ticks);
    CHECK(s->final_third_mean_order == r.summary.final_third_mean_order);
    CHECK(s->final_third_mean_vs_avg_speed == r.summary.final_third_mean_vs_avg_speed);
    CHECK(s->mean_vs_avg_speed == r.summary.mean_vs_avg_speed);
    CHECK(s->min_pairwise_distance == r.summary.min_pairwise_distance);
    CHECK(s->flock_entry_tick == r.summary.flock_entry_tick);
    CHECK(s->converged == r.summary.converged);
  }
  CHECK(processes_mentioning(c.output_dir) == 0);

  // Offline recompute through the CLI reproduces metrics.csv byte for byte.
  const auto again_csv = std::filesystem::path(c.output_dir) / "again.csv";
  CHECK(run_cli("metrics --states '" + r.states_csv.string() + "' --out '" +
                again_csv.string() + "'") == 0);
  CHECK(slurp(again_csv) == slurp(r.metrics_csv));
}

TEST_CASE("duplicate instance gives one bind conflict and full teardown") {
  ExperimentConfig c = small_config("harness-dup", 23102, 3, 30.0);
  c.fault.duplicate_instance = 0;
  try {
    harness::run_experiment(c, kCli);
    FAIL("expected PortBindConflict");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PortBindConflict);
    CHECK(e.port == 23102);
    CHECK(e.vehicle_id == 0);
  }
  CHECK(processes_mentioning(c.output_dir) == 0);
}

TEST_CASE("killing an autopilot leaves a log of whole ticks") {
  ExperimentConfig c = small_config("harness-kill", 23202, 4, 600.0);
  c.fault.kill_instance = 2;
  c.fault.kill_after = 0.3;
  try {
    harness::run_experiment(c, kCli);
    FAIL("expected a crash report");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::ChildCrashed || e.code() == ErrorCode::TickTimeout));
  }
  CHECK(processes_mentioning(c.output_dir) == 0);
  const auto states = std::filesystem::path(c.output_dir) / "states.csv";
  REQUIRE(std::filesystem::exists(states));
  const csv::StateLog log = csv::read_state_log(states);
  CHECK(log.fleet_size == 4);
  CHECK(log.ticks.size() > 0);
  CHECK(log.ticks.size() < 30000);
}

TEST_CASE("cli exit codes") {
  const auto dir = test::scratch_dir("harness-cli");
  {
    std::ofstream bad(dir / "bad.ini");
    bad << "[flocking]\nd_sep = 50\n";
  }
  CHECK(run_cli("run --config '" + (dir / "bad.ini").string() + "'") == 8);
  CHECK(run_cli("ports --instance 9") == 0);
  CHECK(run_cli("ports --instance 7000") == 11);
  CHECK(run_cli("metrics --states /nonexistent/states.csv --out /tmp/x.csv") == 10);
  CHECK(run_cli("frobnicate") == 8);
  CHECK(run_cli("run --vehicles 2 --duration 2 --seed 4 --set ports.base_in=23302 "
                "--set ports.base_out=23303 --out '" + (dir / "out").string() + "'") == 0);
  CHECK(std::filesystem::exists(dir / "out" / "summary.json"));
}
