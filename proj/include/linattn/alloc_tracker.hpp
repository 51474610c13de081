// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <new>

namespace linattn {

// Per-thread accounting of live matrix buffer bytes. Only buffers allocated
// through TrackingAllocator are counted, which is every Matrix.
namespace alloc_stats {
std::size_t live_bytes() noexcept;
std::size_t peak_bytes() noexcept;
void on_allocate(std::size_t bytes) noexcept;
void on_deallocate(std::size_t bytes) noexcept;
void reset_peak() noexcept;
void restore_peak(std::size_t peak) noexcept;
}  // namespace alloc_stats

template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t count) {
    T* p = static_cast<T*>(::operator new(count * sizeof(T)));
    alloc_stats::on_allocate(count * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t count) noexcept {
    alloc_stats::on_deallocate(count * sizeof(T));
    ::operator delete(p);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

/// Measures the high-water mark of tracked bytes above the level live at
/// construction. Scopes nest; the enclosing peak is restored on exit.
class AllocationScope {
 public:
  AllocationScope() noexcept;
  ~AllocationScope();
  AllocationScope(const AllocationScope&) = delete;
  AllocationScope& operator=(const AllocationScope&) = delete;

  /// Bytes allocated above the baseline at the worst moment so far.
  std::size_t high_water() const noexcept;

 private:
  std::size_t baseline_;
  std::size_t outer_peak_;
};

}  // namespace linattn
