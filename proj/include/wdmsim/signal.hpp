// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wdmsim/aligned.hpp"

#include <cstddef>
#include <span>

namespace wdmsim {

/// Sampled complex baseband field in two orthogonal polarizations.
///
/// Samples are in sqrt(W) so |x|^2 + |y|^2 is instantaneous power. The time
/// grid is uniform and treated as circularly periodic by every spectral
/// operation. center_frequency is the absolute optical frequency of the
/// baseband origin (193.4 THz for the reference comb).
class DualPolSignal
{
public:
  /// Throws InvalidArgument on mismatched/empty buffers or a non-positive rate.
  DualPolSignal(CVector x, CVector y, double sample_rate, double center_frequency);

  /// All-zero signal of n samples.
  static DualPolSignal zeros(std::size_t n, double sample_rate, double center_frequency);

  std::size_t size() const { return x_.size(); }
  double sample_rate() const { return sample_rate_; }
  double center_frequency() const { return center_frequency_; }
  double duration() const { return static_cast<double>(size()) / sample_rate_; }

  std::span<const Complex> x() const { return x_; }
  std::span<const Complex> y() const { return y_; }

  // Mutable access for code holding the signal exclusively.
  CVector& x_mut() { return x_; }
  CVector& y_mut() { return y_; }

  /// False if any sample is NaN or infinite.
  bool is_finite() const;

private:
  CVector x_;
  CVector y_;
  double sample_rate_;
  double center_frequency_;
};

/// Multiplies every sample by exp(i 2 pi df t), t = n / fs. Total power is
/// preserved and center_frequency is left unchanged.
/// Throws OutOfBandError unless |df| < sample_rate / 2.
DualPolSignal frequency_shift(const DualPolSignal& sig, double shift_hz);

/// Mean of |x|^2 + |y|^2 in W.
double measure_power(const DualPolSignal& sig);

/// Mean power computed from the DFT (Parseval): sum |X_k|^2 / N^2 over both
/// polarizations.
double spectral_power(const DualPolSignal& sig);

/// Power contained in |f - f_center| <= bandwidth / 2 (baseband frequencies).
double band_power(const DualPolSignal& sig, double f_center, double bandwidth);

/// Band-limited resampling by DFT zero-padding / truncation. The output length
/// is size() * new_rate / sample_rate and must be an integer. When shrinking,
/// content at or beyond the new Nyquist frequency is discarded.
DualPolSignal resample(const DualPolSignal& sig, double new_sample_rate);

} // namespace wdmsim
