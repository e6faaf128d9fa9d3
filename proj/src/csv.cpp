#include "swarmlink/csv.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "swarmlink/error.hpp"

namespace swarmlink::csv {
namespace {

[[noreturn]] void malformed(const std::string& why) { throw Error(ErrorCode::MalformedLog, why); }

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_real(std::string_view field, std::size_t line_no) {
  std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    malformed("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view field, std::size_t line_no) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    malformed("line " + std::to_string(line_no) + ": bad integer '" + std::string(field) + "'");
  }
  return v;
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

double quantize(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

void append_state_rows(std::string& out, const sim::WorldState& world) {
  const std::string tick = std::to_string(world.tick);
  const std::string time = format_real(world.sim_time);
  for (const auto& v : world.vehicles) {
    out += tick;
    out += ',';
    out += time;
    out += ',';
    out += std::to_string(v.vehicle_id);
    for (double x : {v.position.x, v.position.y, v.position.z, v.velocity.x, v.velocity.y,
                     v.velocity.z}) {
      out += ',';
      out += format_real(x);
    }
    out += '\n';
  }
}

StateLog parse_state_log(std::string_view text) {
  StateLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  std::size_t expect_vehicle = 0;

  auto close_tick = [&](std::size_t line) {
    if (log.ticks.empty()) return;
    if (log.fleet_size == 0) log.fleet_size = expect_vehicle;
    if (expect_vehicle != log.fleet_size) {
      malformed("line " + std::to_string(line) + ": tick " + std::to_string(log.ticks.back()) +
                " is missing vehicle " + std::to_string(expect_vehicle));
    }
  };

  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        chomp(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!header_seen) {
      if (line != kStatesHeader) malformed("line 1: expected header '" + std::string(kStatesHeader) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 9) {
      malformed("line " + std::to_string(line_no) + ": expected 9 fields, got " +
                std::to_string(f.size()));
    }
    const std::uint64_t tick = parse_uint(f[0], line_no);
    const std::size_t vehicle = parse_uint(f[2], line_no);

    if (log.ticks.empty() || tick != log.ticks.back()) {
      if (!log.ticks.empty()) {
        close_tick(line_no);
        if (tick != log.ticks.back() + 1) {
          malformed("line " + std::to_string(line_no) + ": tick " + std::to_string(tick) +
                    " follows tick " + std::to_string(log.ticks.back()) +
                    " (ticks must be contiguous and increasing)");
        }
      }
      log.ticks.push_back(tick);
      log.times.push_back(parse_real(f[1], line_no));
      log.positions.emplace_back();
      log.velocities.emplace_back();
      expect_vehicle = 0;
    }
    if (vehicle != expect_vehicle || (log.fleet_size != 0 && vehicle >= log.fleet_size)) {
      const std::size_t named = vehicle > expect_vehicle ? expect_vehicle : vehicle;
      malformed("line " + std::to_string(line_no) + ": tick " + std::to_string(tick) +
                (vehicle > expect_vehicle ? " is missing vehicle " : " has unexpected vehicle ") +
                std::to_string(named));
    }
    ++expect_vehicle;
    log.positions.back().push_back({parse_real(f[3], line_no), parse_real(f[4], line_no),
                                    parse_real(f[5], line_no)});
    log.velocities.back().push_back({parse_real(f[6], line_no), parse_real(f[7], line_no),
                                     parse_real(f[8], line_no)});
  }
  if (!header_seen) malformed("empty state log");
  close_tick(line_no);
  return log;
}

StateLog read_state_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_state_log(ss.str());
}

std::uint64_t truncate_to_complete_ticks(const std::filesystem::path& path,
                                         std::size_t fleet_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return 0;
  std::ostringstream ss;
  ss << in.rdbuf();
  in.close();
  const std::string text = ss.str();

  // Keep whole lines only, then whole ticks only.
  std::size_t keep = text.rfind('\n');
  keep = keep == std::string::npos ? 0 : keep + 1;
  std::size_t header_end = text.find('\n');
  if (header_end == std::string::npos || keep <= header_end) {
    std::ofstream(path, std::ios::binary | std::ios::trunc) << kStatesHeader << '\n';
    return 0;
  }
  const std::size_t body_start = header_end + 1;
  std::size_t rows = 0;
  for (std::size_t i = body_start; i < keep; ++i) rows += text[i] == '\n';
  const std::size_t complete_rows = fleet_size == 0 ? 0 : rows - rows % fleet_size;
  std::size_t cut = body_start;
  for (std::size_t r = 0; r < complete_rows; ++r) cut = text.find('\n', cut) + 1;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(cut));
  return fleet_size == 0 ? 0 : complete_rows / fleet_size;
}

}  // namespace swarmlink::csv
