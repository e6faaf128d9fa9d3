#include "swarmlink/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "swarmlink/error.hpp"
#include "swarmlink/log.hpp"

namespace swarmlink {
namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& reason) {
  throw Error(ErrorCode::ConfigError, field + ": " + reason);
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const std::size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const std::size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
    config_error(key, "expected a finite number, got '" + v + "'");
  }
  return d;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    config_error(key, "expected an integer in range, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  config_error(key, "expected true or false, got '" + v + "'");
}

std::string format_double(double d) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field real_field(std::string key, T ExperimentConfig::*member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) { c.*member = parse_double(key, v); },
          [member](const ExperimentConfig& c) { return format_double(c.*member); }};
}

template <typename Sub>
Field real_field(std::string key, Sub ExperimentConfig::*group, double Sub::*member) {
  return {key,
          [key, group, member](ExperimentConfig& c, const std::string& v) {
            (c.*group).*member = parse_double(key, v);
          },
          [group, member](const ExperimentConfig& c) { return format_double((c.*group).*member); }};
}

template <typename Int>
Field int_field(std::string key, Int ExperimentConfig::*member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) { c.*member = parse_int<Int>(key, v); },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

template <typename Sub, typename Int>
Field int_field(std::string key, Sub ExperimentConfig::*group, Int Sub::*member) {
  return {key,
          [key, group, member](ExperimentConfig& c, const std::string& v) {
            (c.*group).*member = parse_int<Int>(key, v);
          },
          [group, member](const ExperimentConfig& c) { return std::to_string((c.*group).*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(int_field("n_vehicles", &ExperimentConfig::n_vehicles));
    f.push_back(real_field("duration", &ExperimentConfig::duration));
    f.push_back(int_field("seed", &ExperimentConfig::seed));
    f.push_back(real_field("dt", &ExperimentConfig::dynamics, &sim::DynamicsParams::dt));
    f.push_back(real_field("grid_spacing", &ExperimentConfig::grid_spacing));
    f.push_back(real_field("z_target", &ExperimentConfig::autopilot, &autopilot::AutopilotParams::z_target));
    f.push_back({"output_dir",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v.empty()) config_error("output_dir", "must not be empty");
                   c.output_dir = v;
                 },
                 [](const ExperimentConfig& c) { return c.output_dir; }});
    f.push_back({"hold_last",
                 [](ExperimentConfig& c, const std::string& v) { c.hold_last = parse_bool("hold_last", v); },
                 [](const ExperimentConfig& c) { return std::string(c.hold_last ? "true" : "false"); }});
    f.push_back(real_field("tick_timeout", &ExperimentConfig::tick_timeout));
    f.push_back(real_field("connect_window", &ExperimentConfig::connect_window));

    f.push_back(int_field("ports.base_in", &ExperimentConfig::ports, &PortScheme::base_in));
    f.push_back(int_field("ports.base_out", &ExperimentConfig::ports, &PortScheme::base_out));
    f.push_back(int_field("ports.stride", &ExperimentConfig::ports, &PortScheme::stride));

    f.push_back(real_field("dynamics.a_max", &ExperimentConfig::dynamics, &sim::DynamicsParams::a_max));
    f.push_back(real_field("dynamics.v_max", &ExperimentConfig::dynamics, &sim::DynamicsParams::v_max));
    f.push_back(real_field("dynamics.drag_coeff", &ExperimentConfig::dynamics, &sim::DynamicsParams::drag_coeff));

    using FP = flocking::FlockingParams;
    f.push_back(real_field("flocking.r_neighbor", &ExperimentConfig::flocking, &FP::r_neighbor));
    f.push_back(real_field("flocking.d_sep", &ExperimentConfig::flocking, &FP::d_sep));
    f.push_back(real_field("flocking.w_sep", &ExperimentConfig::flocking, &FP::w_sep));
    f.push_back(real_field("flocking.w_align", &ExperimentConfig::flocking, &FP::w_align));
    f.push_back(real_field("flocking.w_coh", &ExperimentConfig::flocking, &FP::w_coh));
    f.push_back(real_field("flocking.v_cruise", &ExperimentConfig::flocking, &FP::v_cruise));
    f.push_back(real_field("flocking.k_v", &ExperimentConfig::flocking, &FP::k_v));

    using AP = autopilot::AutopilotParams;
    f.push_back(real_field("autopilot.k_p", &ExperimentConfig::autopilot, &AP::k_p));
    f.push_back(real_field("autopilot.k_d", &ExperimentConfig::autopilot, &AP::k_d));
    f.push_back(real_field("autopilot.takeoff_z_tolerance", &ExperimentConfig::autopilot, &AP::takeoff_z_tolerance));
    f.push_back(real_field("autopilot.takeoff_vz_tolerance", &ExperimentConfig::autopilot, &AP::takeoff_vz_tolerance));
    f.push_back(real_field("autopilot.entry_speed_fraction", &ExperimentConfig::autopilot, &AP::entry_speed_fraction));
    f.push_back(real_field("autopilot.idle_timeout", &ExperimentConfig::autopilot, &AP::idle_timeout));

    f.push_back(int_field("fault.duplicate_instance", &ExperimentConfig::fault, &FaultInjection::duplicate_instance));
    f.push_back(int_field("fault.kill_instance", &ExperimentConfig::fault, &FaultInjection::kill_instance));
    f.push_back(real_field("fault.kill_after", &ExperimentConfig::fault, &FaultInjection::kill_after));
    f.push_back({"fault.shuffle_arrivals",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.fault.shuffle_arrivals = parse_bool("fault.shuffle_arrivals", v);
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.fault.shuffle_arrivals ? "true" : "false");
                 }});
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

void set_raw(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) config_error(key, "unknown key");
  f->set(c, value);
}

}  // namespace

std::uint64_t ExperimentConfig::total_ticks() const {
  return static_cast<std::uint64_t>(std::llround(duration / dynamics.dt));
}

RawConfig parse_config_text(std::string_view text) {
  RawConfig raw;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') config_error(where, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) config_error(where, "empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) config_error(where, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) config_error(where, "missing key");
    const std::string path = section.empty() ? key : section + "." + key;
    if (raw.contains(path)) config_error(path, "given twice (" + where + ")");
    raw[path] = std::string(trim(line.substr(eq + 1)));
  }
  return raw;
}

RawConfig read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void check_config(const ExperimentConfig& c) {
  if (c.n_vehicles < 1) config_error("n_vehicles", "must be >= 1");
  if (c.n_vehicles > 0xFFFF) config_error("n_vehicles", "must fit a 16-bit vehicle id");
  if (!(c.duration > 0.0)) config_error("duration", "must be > 0");
  if (!(c.grid_spacing > 0.0)) config_error("grid_spacing", "must be > 0");
  if (!(c.tick_timeout > 0.0)) config_error("tick_timeout", "must be > 0");
  if (!(c.connect_window > 0.0)) config_error("connect_window", "must be > 0");
  if (c.ports.stride == 0) config_error("ports.stride", "must be a positive integer");
  if (c.ports.base_in == c.ports.base_out) {
    config_error("ports.base_in, ports.base_out", "must differ");
  }
  // Ports of different instances stay distinct exactly when the two bases do
  // not differ by a multiple of the stride.
  const std::uint32_t gap = c.ports.base_in > c.ports.base_out ? c.ports.base_in - c.ports.base_out
                                                               : c.ports.base_out - c.ports.base_in;
  if (c.n_vehicles > 1 && gap % c.ports.stride == 0) {
    config_error("ports.stride", "base_out - base_in must not be a multiple of the stride");
  }
  try {
    wire::allocate_ports(0, c.ports.base_in, c.ports.base_out, c.ports.stride);
    wire::allocate_ports(c.n_vehicles - 1, c.ports.base_in, c.ports.base_out, c.ports.stride);
  } catch (const Error& e) {
    config_error("ports", std::string("instance range does not fit: ") + e.what());
  }
  auto rethrow = [](auto&& check) {
    try {
      check();
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, e.what());
    }
  };
  rethrow([&] { c.dynamics.validate(); });
  rethrow([&] { c.flocking.validate(); });
  rethrow([&] { c.autopilot.validate(); });
  if (c.flocking.v_cruise > c.dynamics.v_max) {
    config_error("flocking.v_cruise, dynamics.v_max", "v_cruise must not exceed v_max");
  }
  if (c.total_ticks() == 0) config_error("duration", "shorter than one tick");
  if (c.fault.duplicate_instance >= static_cast<int>(c.n_vehicles)) {
    config_error("fault.duplicate_instance", "no such instance");
  }
  if (c.fault.kill_instance >= static_cast<int>(c.n_vehicles)) {
    config_error("fault.kill_instance", "no such instance");
  }
}

ExperimentConfig validate_config(const RawConfig& raw) {
  ExperimentConfig c;
  for (const auto& [key, value] : raw) set_raw(c, key, value);
  check_config(c);
  const double rows = static_cast<double>(c.n_vehicles) * static_cast<double>(c.total_ticks());
  if (rows > 1e7) {
    log().warn("state log will hold {:.3g} rows (above the 1e7 budget)", rows);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return validate_config(read_config_file(path));
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  ExperimentConfig next = config;
  set_raw(next, key, value);
  check_config(next);
  config = std::move(next);
}

void apply_environment_overrides(ExperimentConfig& config) {
  const char* base = std::getenv("SWARMLINK_BASE_PORT");
  if (!base || !*base) return;
  const auto in = parse_int<std::uint32_t>("SWARMLINK_BASE_PORT", base);
  ExperimentConfig next = config;
  next.ports.base_in = in;
  next.ports.base_out = in + 1;
  check_config(next);
  config = std::move(next);
}

std::string to_config_text(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const std::size_t dot = f.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : f.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? f.key : f.key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + f.get(config) + "\n";
  }
  return out;
}

void write_config_file(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "# resolved swarmlink experiment config\n" << to_config_text(config);
}

}  // namespace swarmlink
