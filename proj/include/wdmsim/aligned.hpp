// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <vector>

namespace wdmsim {

/// Allocator returning 64-byte aligned storage so sample buffers can be handed
/// straight to SIMD FFT plans.
template <typename T>
struct AlignedAllocator
{
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept
  {
  }

  T* allocate(std::size_t n)
  {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept
  {
    return true;
  }
};

using Complex = std::complex<double>;
using CVector = std::vector<Complex, AlignedAllocator<Complex>>;

} // namespace wdmsim
