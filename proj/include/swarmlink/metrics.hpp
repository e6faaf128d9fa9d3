#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "swarmlink/csv.hpp"
#include "swarmlink/heading.hpp"
#include "swarmlink/vec3.hpp"

namespace swarmlink::metrics {

struct MetricsSample {
  std::uint64_t tick = 0;
  double time = 0.0;
  double order = 0.0;           // psi in [0, 1]
  double vs_avg_speed = 0.0;    // mean of |v_i|
  double vs_center_norm = 0.0;  // |mean of v_i|
  Vec3 center;
};

/// |sum_k exp(i theta_k)| / N. Throws Error(EmptySwarm) for no headings.
double order_metric(std::span<const double> headings);

/// (sum_i |v_i|) / N.
double avg_speed(std::span<const Vec3> velocities);

/// |(sum_i v_i) / N|; never exceeds avg_speed.
double center_velocity_norm(std::span<const Vec3> velocities);

/// Component-wise mean position.
Vec3 geometric_center(std::span<const Vec3> positions);

/// Incremental per-tick metrics carrying each vehicle's retained heading.
/// Feeding it the logged states tick by tick reproduces the offline pass.
class MetricsStream {
 public:
  explicit MetricsStream(std::size_t fleet_size);

  MetricsSample push(std::uint64_t tick, double time, std::span<const Vec3> positions,
                     std::span<const Vec3> velocities);

  std::span<const double> headings() const { return headings_; }

 private:
  std::vector<double> headings_;
};

std::vector<MetricsSample> compute_metrics_timeseries(const csv::StateLog& log);

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsSample> samples);

/// Parses a metrics.csv back into samples (values as printed).
std::vector<MetricsSample> read_metrics_csv(const std::filesystem::path& path);

/// states.csv -> metrics.csv; returns the samples that were written.
std::vector<MetricsSample> compute_metrics_file(const std::filesystem::path& states_csv,
                                                const std::filesystem::path& metrics_csv);

}  // namespace swarmlink::metrics
