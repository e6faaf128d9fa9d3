#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "swarmlink/config.hpp"

using namespace swarmlink;

namespace {

ExperimentConfig from_text(const std::string& text) {
  return validate_config(parse_config_text(text));
}

std::string config_error_of(const std::string& text) {
  try {
    from_text(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const ExperimentConfig c = from_text("");
  CHECK(c.n_vehicles == 5);
  CHECK(c.duration == 120.0);
  CHECK(c.dynamics.dt == 0.02);
  CHECK(c.ports.base_in == 9002);
  CHECK(c.ports.base_out == 9003);
  CHECK(c.ports.stride == 10);
  CHECK(c.flocking.r_neighbor == 10.0);
  CHECK(c.flocking.d_sep == 3.0);
  CHECK(c.flocking.v_cruise == 2.0);
  CHECK(c.autopilot.z_target == 10.0);
  CHECK(c.autopilot.k_p == 2.0);
  CHECK(c.autopilot.k_d == 2.8);
  CHECK_FALSE(c.hold_last);
  CHECK(c.total_ticks() == 6000);
}

TEST_CASE("sections and comments") {
  const ExperimentConfig c = from_text(
      "# experiment\n"
      "n_vehicles = 7   \n"
      "seed=42\n"
      "; other comment\n"
      "[flocking]\n"
      "d_sep = 2.5\n"
      "[ports]\n"
      "base_in = 20000\n"
      "base_out = 20001\n");
  CHECK(c.n_vehicles == 7);
  CHECK(c.seed == 42);
  CHECK(c.flocking.d_sep == 2.5);
  CHECK(c.ports.base_in == 20000);
}

TEST_CASE("field errors name the field") {
  const std::string both = config_error_of("[flocking]\nd_sep = 10\n");
  CHECK(both.find("d_sep") != std::string::npos);
  CHECK(both.find("r_neighbor") != std::string::npos);
  CHECK(config_error_of("[ports]\nstride = 0\n").find("ports.stride") != std::string::npos);
  CHECK(config_error_of("n_vehicles = 0\n").find("n_vehicles") != std::string::npos);
  CHECK(config_error_of("duration = abc\n").find("duration") != std::string::npos);
  CHECK(config_error_of("[flocking]\nv_cruise = 5\n").find("v_max") != std::string::npos);
  CHECK(config_error_of("[ports]\nstride = 1\n").find("ports.stride") != std::string::npos);
  CHECK(config_error_of("n_vehicles = 7000\n").find("ports") != std::string::npos);
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK(config_error_of("colour = blue\n").find("colour") != std::string::npos);
  CHECK(config_error_of("[nope]\nx = 1\n").find("nope.x") != std::string::npos);
}

TEST_CASE("syntax errors carry the line number") {
  CHECK(config_error_of("seed = 1\njust words\n").find("line 2") != std::string::npos);
  CHECK(config_error_of("[flocking\n").find("line 1") != std::string::npos);
  CHECK(config_error_of("seed = 1\nseed = 2\n").find("seed") != std::string::npos);
}

TEST_CASE("written config loads back identically") {
  ExperimentConfig c;
  c.n_vehicles = 9;
  c.seed = 0xDEADBEEFCAFEull;
  c.duration = 33.3;
  c.flocking.w_sep = 1.0 / 3.0;
  c.hold_last = true;
  c.fault.shuffle_arrivals = true;
  c.output_dir = "/tmp/x y";
  const ExperimentConfig back = from_text(to_config_text(c));
  CHECK(to_config_text(back) == to_config_text(c));
  CHECK(back.flocking.w_sep == c.flocking.w_sep);
  CHECK(back.output_dir == "/tmp/x y");

  const auto dir = test::scratch_dir("config-file");
  write_config_file(c, dir / "c.ini");
  CHECK(to_config_text(load_config(dir / "c.ini")) == to_config_text(c));
}

TEST_CASE("single-key updates are checked as a whole") {
  ExperimentConfig c;
  set_config_value(c, "flocking.d_sep", "2");
  CHECK(c.flocking.d_sep == 2.0);
  CHECK(test::error_code_of([&] { set_config_value(c, "flocking.r_neighbor", "1"); }) ==
        ErrorCode::ConfigError);
  CHECK(c.flocking.r_neighbor == 10.0);
}

TEST_CASE("base port from the environment") {
  ExperimentConfig c;
  ::setenv("SWARMLINK_BASE_PORT", "31000", 1);
  apply_environment_overrides(c);
  ::unsetenv("SWARMLINK_BASE_PORT");
  CHECK(c.ports.base_in == 31000);
  CHECK(c.ports.base_out == 31001);
  ::setenv("SWARMLINK_BASE_PORT", "70000", 1);
  CHECK(test::error_code_of([&] { apply_environment_overrides(c); }) == ErrorCode::ConfigError);
  ::unsetenv("SWARMLINK_BASE_PORT");
}

TEST_CASE("missing file") {
  CHECK(test::error_code_of([] { load_config("/nonexistent.ini"); }) == ErrorCode::ConfigError);
}
