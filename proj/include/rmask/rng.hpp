#pragma once

#include <array>
#include <cstdint>

namespace rmask {

// Philox4x32-10 block function (Salmon et al., SC'11). Maps a 128-bit
// counter and a 64-bit key to 128 pseudo-random bits; no state is carried
// between calls.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// Purpose tags keep streams used by different subsystems disjoint even when
// they share a seed.
enum class StreamTag : std::uint32_t {
  walk = 0,
  model_init = 1,
  dropout = 2,
  sparsify = 3,
  synthetic = 4,
};

// A sequential view over one counter-based stream. The stream is fully
// identified by (seed, tag, a, b, c); draws advance only the block index, so any
// stream can be reconstructed on any thread without coordination.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, StreamTag tag, std::uint32_t a, std::uint32_t b = 0, std::uint32_t c = 0)
      : CounterRng(seed ^ (static_cast<std::uint64_t>(tag) * 0x9E3779B97F4A7C15ull), a, b, c) {}

  // Raw constructor: the 64-bit key is used as given.
  CounterRng(std::uint64_t key, std::uint32_t a, std::uint32_t b, std::uint32_t c)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)}, a_(a), b_(b), c_(c) {}

  std::uint32_t next_u32() {
    if (used_ == 4) refill();
    return buffer_[used_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be positive. Multiply-shift on 64 bits;
  // the residual bias is below n / 2^64.
  std::uint64_t below(std::uint64_t n) {
    const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  std::uint32_t block_index() const noexcept { return block_; }

 private:
  void refill() {
    buffer_ = philox4x32_10({block_++, a_, b_, c_}, key_);
    used_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t a_, b_, c_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace rmask
