#include "swarmlink/metrics.hpp"

#include <complex>
#include <fstream>
#include <sstream>
#include <string>

#include "swarmlink/error.hpp"

namespace swarmlink::metrics {
namespace {

void require_nonempty(std::size_t n, const char* what) {
  if (n == 0) throw Error(ErrorCode::EmptySwarm, std::string(what) + " of an empty swarm");
}

}  // namespace

double order_metric(std::span<const double> headings) {
  require_nonempty(headings.size(), "order");
  std::complex<double> sum = 0.0;
  for (double theta : headings) sum += std::polar(1.0, theta);
  return std::abs(sum) / static_cast<double>(headings.size());
}

double avg_speed(std::span<const Vec3> velocities) {
  require_nonempty(velocities.size(), "average speed");
  double sum = 0.0;
  for (const Vec3& v : velocities) sum += norm(v);
  return sum / static_cast<double>(velocities.size());
}

double center_velocity_norm(std::span<const Vec3> velocities) {
  require_nonempty(velocities.size(), "center velocity");
  Vec3 sum;
  for (const Vec3& v : velocities) sum += v;
  return norm(sum / static_cast<double>(velocities.size()));
}

Vec3 geometric_center(std::span<const Vec3> positions) {
  require_nonempty(positions.size(), "geometric center");
  Vec3 sum;
  for (const Vec3& p : positions) sum += p;
  return sum / static_cast<double>(positions.size());
}

MetricsStream::MetricsStream(std::size_t fleet_size) : headings_(fleet_size) {
  for (std::size_t k = 0; k < fleet_size; ++k) headings_[k] = initial_heading(k, fleet_size);
}

MetricsSample MetricsStream::push(std::uint64_t tick, double time, std::span<const Vec3> positions,
                                  std::span<const Vec3> velocities) {
  if (positions.size() != headings_.size() || velocities.size() != headings_.size()) {
    throw Error(ErrorCode::InvalidArgument, "metrics stream fed a different fleet size");
  }
  for (std::size_t k = 0; k < headings_.size(); ++k) {
    headings_[k] = heading_from_velocity(velocities[k], headings_[k]);
  }
  MetricsSample s;
  s.tick = tick;
  s.time = time;
  s.order = order_metric(headings_);
  s.vs_avg_speed = avg_speed(velocities);
  s.vs_center_norm = center_velocity_norm(velocities);
  s.center = geometric_center(positions);
  return s;
}

std::vector<MetricsSample> compute_metrics_timeseries(const csv::StateLog& log) {
  std::vector<MetricsSample> out;
  if (log.ticks.empty()) return out;
  MetricsStream stream(log.fleet_size);
  out.reserve(log.ticks.size());
  for (std::size_t t = 0; t < log.ticks.size(); ++t) {
    out.push_back(stream.push(log.ticks[t], log.times[t], log.positions[t], log.velocities[t]));
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsSample> samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  std::string buf;
  buf += csv::kMetricsHeader;
  buf += '\n';
  for (const auto& s : samples) {
    buf += std::to_string(s.tick);
    for (double x : {s.time, s.order, s.vs_avg_speed, s.vs_center_norm, s.center.x, s.center.y,
                     s.center.z}) {
      buf += ',';
      buf += csv::format_real(x);
    }
    buf += '\n';
  }
  out << buf;
  if (!out) throw Error(ErrorCode::Io, "write failed on " + path.string());
}

std::vector<MetricsSample> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv::kMetricsHeader) {
    throw Error(ErrorCode::MalformedLog, path.string() + ": bad metrics header");
  }
  std::vector<MetricsSample> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 8) {
      throw Error(ErrorCode::MalformedLog,
                  path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    }
    MetricsSample s;
    try {
      s.tick = std::stoull(f[0]);
      s.time = std::stod(f[1]);
      s.order = std::stod(f[2]);
      s.vs_avg_speed = std::stod(f[3]);
      s.vs_center_norm = std::stod(f[4]);
      s.center = {std::stod(f[5]), std::stod(f[6]), std::stod(f[7])};
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedLog,
                  path.string() + ":" + std::to_string(line_no) + ": unparsable field");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<MetricsSample> compute_metrics_file(const std::filesystem::path& states_csv,
                                                const std::filesystem::path& metrics_csv) {
  const auto samples = compute_metrics_timeseries(csv::read_state_log(states_csv));
  write_metrics_csv(metrics_csv, samples);
  return samples;
}

}  // namespace swarmlink::metrics
