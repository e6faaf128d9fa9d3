#pragma once

// Reynolds' three rules as pure functions over one vehicle's local view.

#include <span>

#include "swarmlink/sim.hpp"
#include "swarmlink/vec3.hpp"
#include "swarmlink/wire.hpp"

namespace swarmlink::flocking {

struct FlockingParams {
  double r_neighbor = 10.0;  // m
  double d_sep = 3.0;        // m
  double w_sep = 1.5;
  double w_align = 1.0;
  double w_coh = 1.0;
  double v_cruise = 2.0;     // m/s
  double k_v = 2.0;          // 1/s, velocity tracking gain

  /// Checks everything except v_cruise <= v_max, which needs the dynamics.
  void validate() const;
};

/// Neighbors closer than this are treated as coincident.
inline constexpr double kCoincidentDistance = 1e-9;

using Neighbors = std::span<const wire::NeighborState>;

/// Sum of unit(own - p_j) / d^2 over neighbors closer than d_sep. A coincident
/// neighbor contributes +x / kCoincidentDistance^2.
Vec3 separation(const Vec3& own_position, Neighbors neighbors, double d_sep);

/// Mean neighbor velocity minus own velocity; zero for an empty neighborhood.
Vec3 alignment(const Vec3& own_velocity, Neighbors neighbors);

/// Neighbor centroid minus own position; zero for an empty neighborhood.
Vec3 cohesion(const Vec3& own_position, Neighbors neighbors);

/// Desired horizontal velocity
///   u = v + w_sep * separation + w_align * alignment + w_coh * cohesion
/// on the xy components, rescaled to v_cruise. A vanishing u falls back to
/// v_cruise along own.last_heading. The z component is always zero.
Vec3 flocking_velocity(const sim::VehicleState& own, Neighbors neighbors,
                       const FlockingParams& params);

}  // namespace swarmlink::flocking
