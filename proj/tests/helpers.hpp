// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wdmsim/rng.hpp"
#include "wdmsim/signal.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace wdmsim::test {

inline DualPolSignal random_signal(std::size_t n, double sample_rate, std::uint64_t seed,
                                   double variance = 1.0)
{
  CounterRng rng(seed);
  CVector x(n), y(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    x[i] = rng.complex_normal(variance);
    y[i] = rng.complex_normal(variance);
  }
  return {std::move(x), std::move(y), sample_rate, 193.4e12};
}

// O(N^2) reference DFT, forward sign convention exp(-i 2 pi k n / N).
inline std::vector<Complex> naive_dft(std::span<const Complex> in)
{
  const std::size_t n = in.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k)
  {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
    {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) /
                           static_cast<double>(n);
      acc += in[t] * std::polar(1.0, angle);
    }
    out[k] = acc;
  }
  return out;
}

inline double max_abs_diff(std::span<const Complex> a, std::span<const Complex> b)
{
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double energy(std::span<const Complex> a)
{
  double acc = 0.0;
  for (const auto& v : a)
    acc += std::norm(v);
  return acc;
}

} // namespace wdmsim::test
