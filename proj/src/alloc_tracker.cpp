// SPDX-License-Identifier: Apache-2.0
#include "linattn/alloc_tracker.hpp"

#include <algorithm>

namespace linattn {
namespace {
thread_local std::size_t g_live = 0;
thread_local std::size_t g_peak = 0;
}  // namespace

namespace alloc_stats {
std::size_t live_bytes() noexcept { return g_live; }
std::size_t peak_bytes() noexcept { return g_peak; }

void on_allocate(std::size_t bytes) noexcept {
  g_live += bytes;
  g_peak = std::max(g_peak, g_live);
}

void on_deallocate(std::size_t bytes) noexcept {
  // Buffers freed on a different thread than they were allocated on would
  // underflow; clamp instead.
  g_live = bytes > g_live ? 0 : g_live - bytes;
}

void reset_peak() noexcept { g_peak = g_live; }
void restore_peak(std::size_t peak) noexcept { g_peak = std::max(g_peak, peak); }
}  // namespace alloc_stats

AllocationScope::AllocationScope() noexcept
    : baseline_(alloc_stats::live_bytes()), outer_peak_(alloc_stats::peak_bytes()) {
  alloc_stats::reset_peak();
}

AllocationScope::~AllocationScope() { alloc_stats::restore_peak(outer_peak_); }

std::size_t AllocationScope::high_water() const noexcept {
  const std::size_t peak = alloc_stats::peak_bytes();
  return peak > baseline_ ? peak - baseline_ : 0;
}

}  // namespace linattn
