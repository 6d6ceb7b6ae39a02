#pragma once

#include <array>
#include <cstdint>

namespace prophet {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Every draw is a pure function of (seed, stream, draw index), so replica k
// of a simulation can use PhiloxRng(seed, k) and produce the same numbers no
// matter how replicas are scheduled across threads.
class PhiloxRng {
 public:
  explicit PhiloxRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, 0, static_cast<std::uint32_t>(stream),
             static_cast<std::uint32_t>(stream >> 32)} {}

  std::uint64_t next_u64() {
    if (buf_pos_ >= 2) refill();
    return buf_[buf_pos_++];
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }
  result_type operator()() { return next_u64(); }

  // One keyed permutation of a 128-bit counter block; exposed for the
  // known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;  // words 0-1: draw counter, 2-3: stream
  std::uint64_t buf_[2] = {0, 0};
  int buf_pos_ = 2;
};

}  // namespace prophet
