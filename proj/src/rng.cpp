// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace wdmsim {

std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::initializer_list<std::int64_t> indices)
{
  std::uint64_t key = mix64(master ^ mix64(fnv1a(purpose)));
  for (std::int64_t idx : indices)
    key = mix64(key ^ mix64(static_cast<std::uint64_t>(idx) + 0x9E3779B97F4A7C15ULL));
  return key;
}

double CounterRng::normal()
{
  if (has_cached_)
  {
    has_cached_ = false;
    return cached_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open_zero()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  cached_normal_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

Complex CounterRng::complex_normal(double variance)
{
  const double s = std::sqrt(variance / 2.0);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

} // namespace wdmsim
