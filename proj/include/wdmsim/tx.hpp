// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wdmsim/aligned.hpp"
#include "wdmsim/signal.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wdmsim {

enum class Format
{
  QPSK,
  QAM16
};

int bits_per_symbol(Format format);
std::string to_string(Format format);
/// Accepts "QPSK" or "16QAM"/"QAM16" (case-insensitive). Throws InvalidArgument.
Format parse_format(std::string_view text);

/// Unit-average-energy alphabet indexed by the bit label read MSB-first.
///
/// QPSK:  bit0 selects the sign of I, bit1 the sign of Q (0 -> +, 1 -> -), so
///        (0,0) -> (1+i)/sqrt(2).
/// 16QAM: bits (b0,b1) pick I and (b2,b3) pick Q with the per-axis Gray code
///        00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3, all scaled by 1/sqrt(10).
std::vector<Complex> constellation(Format format);

/// Maps a bit sequence (one bit per byte, values 0/1) to symbols.
/// Throws InvalidArgument if the length is not a multiple of bits_per_symbol.
CVector map_symbols(std::span<const std::uint8_t> bits, Format format);

/// Closed-form root-raised-cosine impulse response at t/T (not normalized).
double rrc_impulse(double t_over_symbol, double roll_off);

/// Truncated RRC taps (span_symbols * sps + 1 of them) centred on the middle
/// tap and scaled to unit energy.
std::vector<double> rrc_taps(double roll_off, int samples_per_symbol, int span_symbols);

/// Fraction of the untruncated RRC energy captured by a span of span_symbols.
double rrc_energy_fraction(double roll_off, int samples_per_symbol, int span_symbols);

/// Zero-phase frequency response of the truncated, unit-energy RRC filter on
/// an n-point DFT grid at the given samples-per-symbol (a circular filter).
std::vector<double> rrc_frequency_response(std::size_t n, double roll_off,
                                           int samples_per_symbol, int span_symbols);

/// Upsamples one symbol stream per polarization and applies circular RRC
/// filtering, with symbol k landing on sample k * sps.
/// Preconditions: sps >= 2, even span >= 16. A span that keeps less than
/// 99.99 % of the tap energy triggers warn(); the waveform is still produced.
DualPolSignal rrc_shape(std::span<const Complex> symbols_x, std::span<const Complex> symbols_y,
                        double symbol_rate, double roll_off, int samples_per_symbol,
                        int span_symbols = 64, double center_frequency = 193.4e12);

struct TxSpec
{
  Format format = Format::QPSK;
  double symbol_rate = 32e9;
  double roll_off = 0.15;
  int n_channels = 1;
  double spacing = 50e9;
  double power_dbm = 0.0;
  int n_symbols = 8192;
  std::uint64_t seed = 1;
  int filter_span_symbols = 64;
  double center_frequency = 193.4e12;

  /// Throws InvalidArgument describing the first violated invariant.
  void validate() const;
  /// Occupied optical bandwidth n_channels * spacing.
  double wdm_bandwidth() const { return n_channels * spacing; }
};

/// Smallest power-of-two samples-per-symbol whose rate covers the WDM band plus
/// a 2 (1 + roll_off) Rs guard (never below 2).
int wdm_samples_per_symbol(const TxSpec& spec);

/// Ground-truth symbols and bits of one channel.
struct ChannelSymbols
{
  int index = 0; ///< signed offset index, channel frequency = index * spacing
  CVector x;
  CVector y;
  std::vector<std::uint8_t> bits_x;
  std::vector<std::uint8_t> bits_y;
};

struct SymbolFrame
{
  Format format = Format::QPSK;
  std::vector<ChannelSymbols> channels; ///< ordered by ascending index

  /// Channel with the given offset index. Throws InvalidArgument if absent.
  const ChannelSymbols& channel(int index) const;
};

/// Bit stream of one channel/polarization, keyed by (seed, "bits", index, pol).
std::vector<std::uint8_t> channel_bits(std::uint64_t seed, int channel_index, int polarization,
                                       std::size_t count);

struct WdmWaveform
{
  DualPolSignal signal;
  SymbolFrame frame;
  int samples_per_symbol;
};

/// Builds the comb: independently modulated channels at (k - (N-1)/2) * spacing,
/// each scaled to power_dbm (average over both polarizations) and summed in
/// ascending channel order. samples_per_symbol = 0 selects
/// wdm_samples_per_symbol(spec).
WdmWaveform build_wdm(const TxSpec& spec, int samples_per_symbol = 0);

} // namespace wdmsim
