#pragma once

#include <cstddef>
#include <numbers>

#include "swarmlink/vec3.hpp"

namespace swarmlink {

/// Below this horizontal speed (m/s) a vehicle keeps its previous heading.
inline constexpr double kHeadingSpeedThreshold = 0.05;

/// Heading of the horizontal velocity, or `last` when the vehicle is nearly
/// still horizontally so that the angle would be noise.
inline double heading_from_velocity(const Vec3& v, double last,
                                    double threshold = kHeadingSpeedThreshold) {
  if (horizontal_norm(v) >= threshold) return std::atan2(v.y, v.x);
  return last;
}

/// Heading a vehicle is assumed to have before it ever moves horizontally:
/// evenly spread, so a motionless fleet has zero order.
inline double initial_heading(std::size_t vehicle, std::size_t fleet_size) {
  return 2.0 * std::numbers::pi * static_cast<double>(vehicle) / static_cast<double>(fleet_size);
}

}  // namespace swarmlink
