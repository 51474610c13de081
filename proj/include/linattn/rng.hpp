// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>

namespace linattn {

/// Reproducible counter-based random stream.
///
/// The generator is fixed so that other implementations can reproduce the
/// exact sequence:
///
///   mix64(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
///              z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
///   key      = mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03 + 1))
///   u64[i]   = mix64(key + (i + 1) * 0x9E3779B97F4A7C15),  i = 0, 1, ...
///   uniform  = ((u64 >> 11) + 0.5) * 2^-53, always in (0, 1)
///   normal   = Box-Muller on two consecutive uniforms u1, u2:
///              r = sqrt(-2 ln u1), emit r cos(2 pi u2) then r sin(2 pi u2)
///
/// Distinct stream indices under one seed give independent sequences, which
/// is how per-trial randomness is derived (see substream()).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_index = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;
  double normal() noexcept;

  /// Child stream keyed on (seed, stream_index, index); independent of how
  /// many values this stream has already produced.
  RngStream substream(std::uint64_t index) const noexcept;

  static std::uint64_t mix64(std::uint64_t z) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

}  // namespace linattn
