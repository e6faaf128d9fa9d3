#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "swarmlink/sim.hpp"
#include "swarmlink/vec3.hpp"

namespace swarmlink::csv {

inline constexpr std::string_view kStatesHeader = "tick,time,vehicle_id,px,py,pz,vx,vy,vz";
inline constexpr std::string_view kMetricsHeader =
    "tick,time,order,vs_avg_speed,vs_center_norm,cx,cy,cz";

/// Real formatting shared by every CSV: 9 significant digits, %g style.
std::string format_real(double v);

/// The double a reader of format_real(v) will see.
double quantize(double v);

/// Appends one state row per vehicle for `world`, in vehicle order.
void append_state_rows(std::string& out, const sim::WorldState& world);

struct StateLog {
  std::size_t fleet_size = 0;
  std::vector<std::uint64_t> ticks;
  std::vector<double> times;
  // positions[t][k] / velocities[t][k] for tick index t and vehicle k.
  std::vector<std::vector<Vec3>> positions;
  std::vector<std::vector<Vec3>> velocities;
};

/// Parses states.csv. Throws Error(MalformedLog) for a bad header, a missing
/// or duplicated vehicle row, a tick sequence that is not contiguous and
/// increasing, or an unparsable field.
StateLog read_state_log(const std::filesystem::path& path);
StateLog parse_state_log(std::string_view text);

/// Cuts a states.csv back to its last complete tick. Returns the number of
/// complete ticks kept.
std::uint64_t truncate_to_complete_ticks(const std::filesystem::path& path,
                                         std::size_t fleet_size);

}  // namespace swarmlink::csv
