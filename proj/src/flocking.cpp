#include "swarmlink/flocking.hpp"

#include <cmath>
#include <string>

#include "swarmlink/error.hpp"

namespace swarmlink::flocking {

void FlockingParams::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  require(std::isfinite(d_sep) && d_sep > 0.0, "flocking.d_sep: must be > 0");
  require(std::isfinite(r_neighbor) && r_neighbor > d_sep,
          "flocking.r_neighbor, flocking.d_sep: r_neighbor must exceed d_sep");
  require(w_sep >= 0.0 && std::isfinite(w_sep), "flocking.w_sep: must be >= 0");
  require(w_align >= 0.0 && std::isfinite(w_align), "flocking.w_align: must be >= 0");
  require(w_coh >= 0.0 && std::isfinite(w_coh), "flocking.w_coh: must be >= 0");
  require(std::isfinite(v_cruise) && v_cruise > 0.0, "flocking.v_cruise: must be > 0");
  require(std::isfinite(k_v) && k_v > 0.0, "flocking.k_v: must be > 0");
}

Vec3 separation(const Vec3& own_position, Neighbors neighbors, double d_sep) {
  Vec3 push;
  for (const auto& n : neighbors) {
    const Vec3 away = own_position - n.position;
    const double d = norm(away);
    if (d >= d_sep) continue;
    if (d < kCoincidentDistance) {
      push += Vec3{1.0, 0.0, 0.0} * (1.0 / (kCoincidentDistance * kCoincidentDistance));
    } else {
      push += away / (d * d * d);
    }
  }
  return push;
}

Vec3 alignment(const Vec3& own_velocity, Neighbors neighbors) {
  if (neighbors.empty()) return {};
  Vec3 sum;
  for (const auto& n : neighbors) sum += n.velocity;
  return sum / static_cast<double>(neighbors.size()) - own_velocity;
}

Vec3 cohesion(const Vec3& own_position, Neighbors neighbors) {
  if (neighbors.empty()) return {};
  Vec3 sum;
  for (const auto& n : neighbors) sum += n.position;
  return sum / static_cast<double>(neighbors.size()) - own_position;
}

Vec3 flocking_velocity(const sim::VehicleState& own, Neighbors neighbors,
                       const FlockingParams& params) {
  const Vec3 u = horizontal(own.velocity + params.w_sep * separation(own.position, neighbors, params.d_sep) +
                            params.w_align * alignment(own.velocity, neighbors) +
                            params.w_coh * cohesion(own.position, neighbors));
  const double n = horizontal_norm(u);
  if (n > 1e-12) return u * (params.v_cruise / n);
  return {params.v_cruise * std::cos(own.last_heading), params.v_cruise * std::sin(own.last_heading),
          0.0};
}

}  // namespace swarmlink::flocking
