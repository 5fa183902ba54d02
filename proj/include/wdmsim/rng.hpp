// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams.
//
// Every random consumer gets its own stream whose key is derived from the
// master seed, a purpose string ("bits", "ase", "biref", ...) and a tuple of
// indices. Draw i of a stream is mix(key + (i + 1) * golden), the SplitMix64
// finalizer, so a stream never depends on how many draws other streams made or
// on thread scheduling.
#pragma once

#include "wdmsim/aligned.hpp"

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace wdmsim {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z)
{
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view text)
{
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text)
  {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Stream key for (master, purpose, indices...). Signed indices are accepted
/// through two's complement so channel offsets like -3 are stable keys.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::initializer_list<std::int64_t> indices = {});

class CounterRng
{
public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64()
  {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }

  /// Standard normal (Box-Muller; the second variate is cached).
  double normal();

  /// Circular complex Gaussian with E|z|^2 = variance.
  Complex complex_normal(double variance);

  std::uint64_t key() const { return key_; }
  std::uint64_t draws() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

} // namespace wdmsim
