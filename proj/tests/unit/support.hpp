#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "swarmlink/error.hpp"
#include "swarmlink/vec3.hpp"
#include "swarmlink/wire.hpp"

namespace test {

using swarmlink::Vec3;

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("swarmlink-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale) {
  return {uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
}

inline swarmlink::wire::StateReport random_report(std::mt19937_64& rng, std::size_t max_neighbors) {
  swarmlink::wire::StateReport r;
  r.vehicle_id = static_cast<std::uint16_t>(rng());
  r.tick = rng();
  r.sim_time = uniform(rng, 0, 1e6);
  r.own_position = random_vec(rng, 1e3);
  r.own_velocity = random_vec(rng, 10);
  const std::size_t k = std::uniform_int_distribution<std::size_t>(0, max_neighbors)(rng);
  std::vector<std::uint16_t> ids;
  while (ids.size() < k) {
    const auto id = static_cast<std::uint16_t>(rng());
    if (id == r.vehicle_id) continue;
    bool seen = false;
    for (auto x : ids) seen = seen || x == id;
    if (!seen) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  for (auto id : ids) r.neighbors.push_back({id, random_vec(rng, 1e3), random_vec(rng, 10)});
  return r;
}

inline swarmlink::wire::ActuatorCommand random_command(std::mt19937_64& rng) {
  return {static_cast<std::uint16_t>(rng()), rng(), random_vec(rng, 10)};
}

template <typename F>
swarmlink::ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const swarmlink::Error& e) {
    return e.code();
  }
  return swarmlink::ErrorCode::Ok;
}

template <typename F>
std::string error_message_of(F&& f) {
  try {
    f();
  } catch (const swarmlink::Error& e) {
    return e.what();
  }
  return {};
}

// ---- Reference implementations, written independently of the library. ----

// Mean unit phasor magnitude, real and imaginary parts summed separately.
inline double order_oracle(const std::vector<double>& headings) {
  double re = 0.0;
  double im = 0.0;
  for (double h : headings) {
    re += std::cos(h);
    im += std::sin(h);
  }
  const double n = static_cast<double>(headings.size());
  return std::sqrt((re / n) * (re / n) + (im / n) * (im / n));
}

inline double avg_speed_oracle(const std::vector<Vec3>& v) {
  double sum = 0.0;
  for (const Vec3& x : v) sum += std::sqrt(x.x * x.x + x.y * x.y + x.z * x.z);
  return sum / static_cast<double>(v.size());
}

inline double center_velocity_oracle(const std::vector<Vec3>& v) {
  double sx = 0, sy = 0, sz = 0;
  for (const Vec3& x : v) {
    sx += x.x;
    sy += x.y;
    sz += x.z;
  }
  const double n = static_cast<double>(v.size());
  sx /= n;
  sy /= n;
  sz /= n;
  return std::sqrt(sx * sx + sy * sy + sz * sz);
}

inline Vec3 center_oracle(const std::vector<Vec3>& p) {
  double sx = 0, sy = 0, sz = 0;
  for (const Vec3& x : p) {
    sx += x.x;
    sy += x.y;
    sz += x.z;
  }
  const double n = static_cast<double>(p.size());
  return {sx / n, sy / n, sz / n};
}

// Ids j != i with |p_j - p_i| <= r, by exhaustive pairwise distances.
inline std::vector<std::uint16_t> neighborhood_oracle(const std::vector<Vec3>& p, std::size_t i,
                                                      double r) {
  std::vector<std::uint16_t> out;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j == i) continue;
    const double dx = p[j].x - p[i].x, dy = p[j].y - p[i].y, dz = p[j].z - p[i].z;
    if (dx * dx + dy * dy + dz * dz <= r * r) out.push_back(static_cast<std::uint16_t>(j));
  }
  return out;
}

inline Vec3 rotate_z(const Vec3& v, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

inline bool near(const Vec3& a, const Vec3& b, double tol) {
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol && std::abs(a.z - b.z) <= tol;
}

}  // namespace test
