#pragma once

// Counter-based random streams. Each trajectory draws from its own stream
// keyed by (seed, stream id), so results do not depend on scheduling.

#include <array>
#include <cstdint>

namespace renewalq {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Source of uniforms on the open interval (0, 1).
class RandomStream {
 public:
  virtual ~RandomStream() = default;
  virtual double uniform() = 0;
};

/// Stream number `stream_id` (with optional `substream`) of the generator
/// keyed by `seed`. Draws are a pure function of (seed, stream_id,
/// substream, draw index).
class CounterStream final : public RandomStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t substream = 0);

  double uniform() override;
  std::uint64_t draws() const { return draw_; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_;
  std::uint32_t substream_;
  std::uint64_t draw_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

}  // namespace renewalq
