// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace purlab {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

// SplitMix64 finalizer, used only to scramble child stream ids.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kPhiloxM0, ctr[0], lo0, hi0);
    mulhilo(kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
    : seed_(base_seed), stream_(stream_id) {}

RngStream RngStream::split(std::uint64_t child) const {
  return RngStream(seed_, mix64(stream_ ^ mix64(child + 0x9e3779b97f4a7c15ull)));
}

std::uint64_t RngStream::next_u64() {
  if (buffered_ == 0) {
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                           static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = philox4x32(ctr, key);
    ++block_;
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
  }
  return buffer_[static_cast<std::size_t>(2 - buffered_--)];
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_normal_ = true;
  return r * std::cos(theta);
}

}  // namespace purlab
