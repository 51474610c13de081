// SPDX-License-Identifier: Apache-2.0
#include "linattn/rng.hpp"

#include <cmath>
#include <numbers>

namespace linattn {
namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamMul = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kChildSalt = 0xA0761D6478BD642FULL;
}  // namespace

std::uint64_t RngStream::mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_index) noexcept
    : seed_(seed), stream_(stream_index), key_(mix64(mix64(seed) ^ (stream_index * kStreamMul + 1))) {}

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

RngStream RngStream::substream(std::uint64_t index) const noexcept {
  return RngStream(mix64(key_ ^ kChildSalt), index);
}

}  // namespace linattn
