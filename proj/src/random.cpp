#include "renewalq/random.hpp"

namespace renewalq {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t stream_id,
                             std::uint32_t substream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_id_(stream_id),
      substream_(substream) {}

double CounterStream::uniform() {
  // Two 32-bit words per double; one Philox block yields two doubles.
  if (used_ >= 4) {
    // Counter layout: (block lo, block hi | substream, stream lo, stream hi).
    // 2^32 blocks per substream is far beyond any single trajectory.
    const std::uint64_t block = draw_ / 2;
    block_ = philox4x32_10({static_cast<std::uint32_t>(block), substream_,
                            static_cast<std::uint32_t>(stream_id_),
                            static_cast<std::uint32_t>(stream_id_ >> 32)},
                           key_);
    used_ = 0;
  }
  const std::uint64_t hi = block_[used_] >> 5;  // 27 bits
  const std::uint64_t lo = block_[used_ + 1] >> 6;  // 26 bits
  used_ += 2;
  ++draw_;
  const std::uint64_t bits = (hi << 26) | lo;  // 53 bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace renewalq
