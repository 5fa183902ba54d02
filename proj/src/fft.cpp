// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/fft.hpp"

#include "wdmsim/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <numbers>
#include <utility>

namespace wdmsim {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

// Plans are made on 64-byte aligned scratch; other alignments go through a copy.
void execute(void* plan, std::span<Complex> data)
{
  auto* p = static_cast<fftw_plan>(plan);
  if (fftw_alignment_of(reinterpret_cast<double*>(data.data())) == 0)
  {
    fftw_execute_dft(p, as_fftw(data.data()), as_fftw(data.data()));
    return;
  }
  CVector tmp(data.begin(), data.end());
  fftw_execute_dft(p, as_fftw(tmp.data()), as_fftw(tmp.data()));
  std::copy(tmp.begin(), tmp.end(), data.begin());
}

} // namespace

Fft::Fft(std::size_t n) : n_(n)
{
  if (n == 0)
    throw InvalidArgument("FFT length must be positive");
  CVector scratch(n);
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(scratch.data()), as_fftw(scratch.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(scratch.data()), as_fftw(scratch.data()),
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!forward_plan_ || !inverse_plan_)
    throw Error("FFTW planning failed");
}

Fft::~Fft() { release(); }

Fft::Fft(Fft&& other) noexcept
    : n_(other.n_), forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      inverse_plan_(std::exchange(other.inverse_plan_, nullptr))
{
}

Fft& Fft::operator=(Fft&& other) noexcept
{
  if (this != &other)
  {
    release();
    n_ = other.n_;
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
  }
  return *this;
}

void Fft::release() noexcept
{
  std::lock_guard lock(planner_mutex());
  if (forward_plan_)
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_)
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  forward_plan_ = inverse_plan_ = nullptr;
}

void Fft::forward(std::span<Complex> data) const
{
  if (data.size() != n_)
    throw InvalidArgument("FFT buffer length mismatch");
  execute(forward_plan_, data);
}

void Fft::inverse(std::span<Complex> data) const
{
  if (data.size() != n_)
    throw InvalidArgument("FFT buffer length mismatch");
  execute(inverse_plan_, data);
}

double bin_frequency(std::size_t k, std::size_t n, double sample_rate)
{
  const auto signed_k = k < (n + 1) / 2 ? static_cast<double>(k)
                                        : static_cast<double>(k) - static_cast<double>(n);
  return signed_k * sample_rate / static_cast<double>(n);
}

double bin_angular_frequency(std::size_t k, std::size_t n, double sample_rate)
{
  return 2.0 * std::numbers::pi * bin_frequency(k, n, sample_rate);
}

} // namespace wdmsim
