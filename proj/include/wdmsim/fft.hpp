// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wdmsim/aligned.hpp"

#include <cstddef>
#include <span>

namespace wdmsim {

/// In-place complex DFT of a fixed length, backed by FFTW.
///
/// Plans are built with FFTW_ESTIMATE so that the chosen algorithm, and hence
/// the rounding pattern, does not depend on timing measurements. Buffers must
/// come from AlignedAllocator (CVector). Forward uses exp(-i 2 pi k n / N);
/// neither direction is normalized.
class Fft
{
public:
  explicit Fft(std::size_t n);
  ~Fft();

  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&& other) noexcept;
  Fft& operator=(Fft&& other) noexcept;

  std::size_t size() const { return n_; }

  void forward(std::span<Complex> data) const;
  void inverse(std::span<Complex> data) const;

private:
  void release() noexcept;

  std::size_t n_ = 0;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Angular frequency (rad/s) of DFT bin k for an N-point grid at sample rate fs,
/// using the signed convention k >= N/2 maps to negative frequencies.
double bin_angular_frequency(std::size_t k, std::size_t n, double sample_rate);

/// Frequency in Hz of bin k (signed convention as above).
double bin_frequency(std::size_t k, std::size_t n, double sample_rate);

} // namespace wdmsim
