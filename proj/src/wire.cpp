#include "swarmlink/wire.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "swarmlink/error.hpp"

namespace swarmlink::wire {
namespace {

class Writer {
 public:
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void vec(const Vec3& v) { f64(v.x); f64(v.y); f64(v.z); }

  void header(MsgType type, std::uint16_t vehicle_id, std::uint64_t tick) {
    out_.insert(out_.end(), kMagic.begin(), kMagic.end());
    u8(kProtocolVersion);
    u8(static_cast<std::uint8_t>(type));
    u16(vehicle_id);
    u64(tick);
  }

  Bytes take() { return std::move(out_); }

 private:
  void put_le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes out_;
};

// Bounds are checked by the callers against the frame length up front.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  double f64() { return std::bit_cast<double>(get_le(8)); }
  Vec3 vec() {
    Vec3 v;
    v.x = f64();
    v.y = f64();
    v.z = f64();
    return v;
  }

  void skip(std::size_t n) { pos_ += n; }

 private:
  std::uint64_t get_le(int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{in_[pos_++]} << (8 * i);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

FrameHeader read_header(std::span<const std::uint8_t> frame) {
  const std::size_t magic_bytes = std::min(frame.size(), kMagic.size());
  if (!std::equal(frame.begin(), frame.begin() + magic_bytes, kMagic.begin())) {
    throw Error(ErrorCode::BadMagic, "frame does not start with SWL1");
  }
  if (frame.size() < kHeaderSize) {
    throw Error(ErrorCode::TruncatedFrame,
                "frame of " + std::to_string(frame.size()) + " bytes is shorter than the header");
  }
  Reader r(frame);
  r.skip(kMagic.size());
  const std::uint8_t version = r.u8();
  if (version != kProtocolVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "protocol version " + std::to_string(version) + ", expected " +
                    std::to_string(kProtocolVersion));
  }
  const std::uint8_t type = r.u8();
  if (type < 1 || type > 3) {
    throw Error(ErrorCode::WrongMsgType, "unknown msg_type " + std::to_string(type));
  }
  FrameHeader h;
  h.type = static_cast<MsgType>(type);
  h.vehicle_id = r.u16();
  h.tick = r.u64();
  return h;
}

void expect_type(const FrameHeader& h, MsgType want) {
  if (h.type != want) {
    throw Error(ErrorCode::WrongMsgType,
                "msg_type " + std::to_string(static_cast<int>(h.type)) + ", expected " +
                    std::to_string(static_cast<int>(want)));
  }
}

}  // namespace

PortPair allocate_ports(std::uint32_t n, std::uint32_t base_in, std::uint32_t base_out,
                        std::uint32_t stride) {
  if (stride == 0) throw Error(ErrorCode::InvalidArgument, "port stride must be positive");
  const std::uint64_t in = std::uint64_t{base_in} + std::uint64_t{stride} * n;
  const std::uint64_t out = std::uint64_t{base_out} + std::uint64_t{stride} * n;
  for (const std::uint64_t p : {in, out}) {
    if (p < kMinPort || p > kMaxPort) {
      Error e(ErrorCode::PortRangeExceeded,
              "instance " + std::to_string(n) + " maps to port " + std::to_string(p) +
                  ", outside [1024, 65535]");
      e.port = static_cast<int>(std::min<std::uint64_t>(p, 0x7fffffff));
      throw e;
    }
  }
  return {n, static_cast<std::uint16_t>(in), static_cast<std::uint16_t>(out)};
}

FrameHeader peek_header(std::span<const std::uint8_t> frame) { return read_header(frame); }

Bytes encode_state_report(const StateReport& report) {
  std::vector<const NeighborState*> sorted;
  sorted.reserve(report.neighbors.size());
  for (const auto& n : report.neighbors) sorted.push_back(&n);
  std::sort(sorted.begin(), sorted.end(),
            [](const NeighborState* a, const NeighborState* b) { return a->id < b->id; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i]->id == report.vehicle_id) {
      throw Error(ErrorCode::InvalidArgument, "state report lists its own vehicle as a neighbor");
    }
    if (i > 0 && sorted[i - 1]->id == sorted[i]->id) {
      throw Error(ErrorCode::InvalidArgument,
                  "state report repeats neighbor " + std::to_string(sorted[i]->id));
    }
  }

  Writer w(kStateReportFixedSize + kNeighborSize * sorted.size());
  w.header(MsgType::StateReport, report.vehicle_id, report.tick);
  w.f64(report.sim_time);
  w.vec(report.own_position);
  w.vec(report.own_velocity);
  w.u32(static_cast<std::uint32_t>(sorted.size()));
  for (const NeighborState* n : sorted) {
    w.u16(n->id);
    w.vec(n->position);
    w.vec(n->velocity);
  }
  return w.take();
}

StateReport decode_state_report(std::span<const std::uint8_t> frame) {
  const FrameHeader h = read_header(frame);
  expect_type(h, MsgType::StateReport);
  if (frame.size() < kStateReportFixedSize) {
    throw Error(ErrorCode::TruncatedFrame, "state report shorter than its fixed part");
  }
  Reader r(frame);
  r.skip(kHeaderSize);
  StateReport report;
  report.vehicle_id = h.vehicle_id;
  report.tick = h.tick;
  report.sim_time = r.f64();
  report.own_position = r.vec();
  report.own_velocity = r.vec();
  const std::uint64_t count = r.u32();
  if (frame.size() != kStateReportFixedSize + count * kNeighborSize) {
    throw Error(ErrorCode::TruncatedFrame,
                "state report length " + std::to_string(frame.size()) +
                    " inconsistent with neighbor count " + std::to_string(count));
  }
  report.neighbors.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    NeighborState& n = report.neighbors[i];
    n.id = r.u16();
    n.position = r.vec();
    n.velocity = r.vec();
    if (n.id == report.vehicle_id || (i > 0 && report.neighbors[i - 1].id >= n.id)) {
      throw Error(ErrorCode::NonCanonicalFrame,
                  "neighbor ids must be strictly ascending and exclude the receiver");
    }
  }
  return report;
}

Bytes encode_actuator_command(const ActuatorCommand& command) {
  Writer w(kActuatorCommandSize);
  w.header(MsgType::ActuatorCommand, command.vehicle_id, command.tick);
  w.vec(command.accel);
  return w.take();
}

ActuatorCommand decode_actuator_command(std::span<const std::uint8_t> frame) {
  const FrameHeader h = read_header(frame);
  expect_type(h, MsgType::ActuatorCommand);
  if (frame.size() != kActuatorCommandSize) {
    throw Error(ErrorCode::TruncatedFrame,
                "actuator command must be " + std::to_string(kActuatorCommandSize) +
                    " bytes, got " + std::to_string(frame.size()));
  }
  Reader r(frame);
  r.skip(kHeaderSize);
  ActuatorCommand c;
  c.vehicle_id = h.vehicle_id;
  c.tick = h.tick;
  c.accel = r.vec();
  return c;
}

Bytes encode_shutdown(std::uint16_t vehicle_id, std::uint64_t tick) {
  Writer w(kShutdownSize);
  w.header(MsgType::Shutdown, vehicle_id, tick);
  return w.take();
}

}  // namespace swarmlink::wire
