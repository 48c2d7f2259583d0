// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace purlab {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3", SC 2011).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream. The key is the 64-bit base seed; the upper
/// half of the counter is the stream id and the lower half counts blocks, so
/// stream t of seed s is a pure function of (s, t) and streams never overlap.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id);

  /// Independent child stream; the mapping (parent, child) -> stream is fixed.
  RngStream split(std::uint64_t child) const;

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
  double normal();

  std::uint64_t base_seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }
  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace purlab
