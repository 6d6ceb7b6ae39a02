#include "prophet/rng.hpp"

namespace prophet {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void round_once(std::array<std::uint32_t, 4>& c,
                       const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> PhiloxRng::block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    round_once(ctr, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

void PhiloxRng::refill() {
  const auto out = block(ctr_, key_);
  buf_[0] = out[0] | (static_cast<std::uint64_t>(out[1]) << 32);
  buf_[1] = out[2] | (static_cast<std::uint64_t>(out[3]) << 32);
  buf_pos_ = 0;
  if (++ctr_[0] == 0) ++ctr_[1];
}

}  // namespace prophet
