// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wdmsim/signal.hpp"
#include "wdmsim/tx.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

namespace wdmsim {

/// Shifts the channel at channel_offset to baseband, applies the matched RRC
/// filter (unit passband gain) and resamples to exactly 2 samples per symbol.
/// The input length times 2 Rs / fs must be an integer.
/// Throws OutOfBandError if the channel does not fit inside the sampled band.
DualPolSignal extract_channel(const DualPolSignal& wdm, double channel_offset, double symbol_rate,
                              double roll_off, int span_symbols = 64);

/// Matched RRC filtering at the input rate (no resampling).
DualPolSignal matched_filter(const DualPolSignal& sig, double symbol_rate, double roll_off,
                             int span_symbols = 64);

/// All-pass exp(-i beta2L w^2 / 2): undoes an accumulated dispersion beta2L.
DualPolSignal cd_compensate(const DualPolSignal& sig, double total_beta2l_ps2);

struct EqualizerConfig
{
  int n_taps = 17;
  /// Start from the least-squares taps fitted to the whole training sequence
  /// instead of identity taps.
  bool least_squares_init = true;
  double mu = 1e-3;
  /// Data-aided passes over the frame before the output pass; pass p uses
  /// mu * mu_decay^p and the output pass mu * mu_decay^training_passes.
  int training_passes = 3;
  double mu_decay = 0.25;
  double ramp_fraction = 0.1;
};

struct EqualizerState
{
  int n_taps = 17;
  double mu = 1e-3;
  std::vector<Complex> xx, xy, yx, yy;
  /// Mean |e|^2 per pass (training passes then the output pass).
  std::vector<double> pass_error_power;
  bool diverged = false;

  static EqualizerState identity(int n_taps, double mu);
};

struct EqualizerResult
{
  CVector x;
  CVector y;
  EqualizerState state;
  int ramp_symbols = 0;
};

/// Data-aided 2x2 butterfly LMS on a 2 samples/symbol input, half-symbol tap
/// spacing, centre tap aligned with sample 2k for output symbol k.
/// w <- w + mu e conj(u) with e = desired - output. The input is rescaled so
/// the mean symbol-instant power is 1 per polarization before equalization.
/// With least_squares_init the adaptation starts from the Wiener solution of
/// the training data, which removes the dependence on a slow convergence from
/// identity taps when the line rotates the polarization.
EqualizerResult lms_equalize(const DualPolSignal& sig, std::span<const Complex> training_x,
                             std::span<const Complex> training_y,
                             const EqualizerConfig& config = {});

struct SnrReport
{
  double snr_db_x = 0.0;
  double snr_db_y = 0.0;
  double snr_db = 0.0;
  int n_symbols = 0;
  Format format = Format::QPSK;
  int guard_front = 0;
  int guard_back = 0;
  int lag_x = 0;
  int lag_y = 0;
};

inline constexpr double kSnrCapDb = 60.0;
inline constexpr int kMinSnrSymbols = 1000;

struct SnrOptions
{
  int skip_front = 0;
  int skip_back = 0;
  int max_lag = 8;
  Format format = Format::QPSK;
};

/// SNR = E|a|^2 / E|r/h - a|^2 with h the least-squares gain of r on a,
/// after a circular lag search. Capped at kSnrCapDb. Throws StatisticsError
/// when fewer than kMinSnrSymbols remain per polarization.
SnrReport estimate_snr(std::span<const Complex> rx_x, std::span<const Complex> rx_y,
                       std::span<const Complex> tx_x, std::span<const Complex> tx_y,
                       const SnrOptions& options = {});

/// Single-polarization helper (returns SNR in dB).
double estimate_snr_single(std::span<const Complex> rx, std::span<const Complex> tx,
                           int skip_front = 0, int skip_back = 0);

/// Standard error (dB) of an SNR estimate pooled over n complex error samples.
double snr_standard_error_db(int n_samples);

struct ReceiverConfig
{
  EqualizerConfig equalizer;
  double guard_fraction = 0.05;
  int filter_span_symbols = 64;
};

/// Full CUT chain: extract_channel -> cd_compensate -> lms_equalize ->
/// estimate_snr, dropping max(ramp, guard) symbols in front and the guard at
/// the back.
SnrReport receive_channel(const DualPolSignal& sig, const ChannelSymbols& truth, Format format,
                          double symbol_rate, double roll_off, double spacing,
                          double total_beta2l_ps2, const ReceiverConfig& config = {},
                          EqualizerResult* equalized = nullptr);

enum class Quadrature
{
  XI,
  XQ,
  YI,
  YQ
};

struct EyeHistogram
{
  int n_phases = 24;
  int n_bins = 0;
  double amplitude_min = -1.5;
  double amplitude_max = 1.5;
  Quadrature quadrature = Quadrature::XI;
  std::vector<std::vector<long>> counts; ///< [phase][bin]
  std::vector<long> symbols_per_phase;
  /// Exact per-phase moments of |amplitude|, not binned.
  std::vector<double> abs_mean;
  std::vector<double> abs_variance;

  /// Phase index of the symbol centre (time offset 0).
  int optimum_phase() const { return n_phases / 2; }
  /// Time offset of a phase in symbol periods, in [-0.5, 0.5).
  double phase_offset(int phase) const;
  double bin_center(int bin) const;
  double optimum_phase_variance() const { return abs_variance[optimum_phase()]; }
};

struct HistogramBins
{
  int count = 120;
  double min = -1.5;
  double max = 1.5;
};

/// Cyclostationary eye histogram. The signal is resampled to n_phases samples
/// per symbol when its rate is not already an integer multiple; phase p
/// samples time (p / n_phases - 1/2) T around each symbol centre. Out-of-range
/// amplitudes are clamped to the edge bins.
EyeHistogram eye_histogram(const DualPolSignal& sig, double symbol_rate, int n_phases = 24,
                           HistogramBins bins = {}, Quadrature quadrature = Quadrature::XI);

void to_json(nlohmann::json& j, const SnrReport& r);
void to_json(nlohmann::json& j, const EyeHistogram& h);
/// CSV rows: phase, bin_center, count.
void write_histogram_csv(std::ostream& os, const EyeHistogram& h);

} // namespace wdmsim
