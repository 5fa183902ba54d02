// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/tx.hpp"

#include "wdmsim/error.hpp"
#include "wdmsim/fft.hpp"
#include "wdmsim/rng.hpp"
#include "wdmsim/units.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace wdmsim {

int bits_per_symbol(Format format) { return format == Format::QPSK ? 2 : 4; }

std::string to_string(Format format) { return format == Format::QPSK ? "QPSK" : "16QAM"; }

Format parse_format(std::string_view text)
{
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "QPSK")
    return Format::QPSK;
  if (upper == "16QAM" || upper == "QAM16" || upper == "16-QAM")
    return Format::QAM16;
  throw InvalidArgument("unknown modulation format '" + std::string(text) + "'");
}

namespace {

// Per-axis Gray code for 16QAM indexed by the two-bit label.
constexpr double kPam4Gray[4] = {-3.0, -1.0, 3.0, 1.0}; // 00, 01, 10, 11

} // namespace

std::vector<Complex> constellation(Format format)
{
  std::vector<Complex> points;
  if (format == Format::QPSK)
  {
    const double a = 1.0 / std::numbers::sqrt2;
    for (int label = 0; label < 4; ++label)
      points.emplace_back((label & 2) ? -a : a, (label & 1) ? -a : a);
  }
  else
  {
    const double s = 1.0 / std::sqrt(10.0);
    for (int label = 0; label < 16; ++label)
      points.emplace_back(kPam4Gray[(label >> 2) & 3] * s, kPam4Gray[label & 3] * s);
  }
  return points;
}

CVector map_symbols(std::span<const std::uint8_t> bits, Format format)
{
  const auto bps = static_cast<std::size_t>(bits_per_symbol(format));
  if (bits.size() % bps != 0)
    throw InvalidArgument("bit count " + std::to_string(bits.size()) +
                          " is not a multiple of " + std::to_string(bps));
  const auto alphabet = constellation(format);
  CVector out(bits.size() / bps);
  for (std::size_t k = 0; k < out.size(); ++k)
  {
    unsigned label = 0;
    for (std::size_t b = 0; b < bps; ++b)
      label = (label << 1) | (bits[k * bps + b] & 1u);
    out[k] = alphabet[label];
  }
  return out;
}

double rrc_impulse(double t, double beta)
{
  constexpr double pi = std::numbers::pi;
  if (t == 0.0)
    return 1.0 - beta + 4.0 * beta / pi;
  if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-12)
  {
    return beta / std::numbers::sqrt2 *
           ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) +
            (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
  }
  const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
  const double den = pi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
  return num / den;
}

namespace {

void check_shaping_args(double roll_off, int sps, int span)
{
  if (!(roll_off > 0.0 && roll_off <= 1.0))
    throw InvalidArgument("roll-off must be in (0, 1]");
  if (sps < 2)
    throw InvalidArgument("samples per symbol must be at least 2");
  if (span < 16 || span % 2 != 0)
    throw InvalidArgument("filter span must be even and at least 16 symbols");
}

std::vector<double> raw_taps(double roll_off, int sps, int span)
{
  const int half = span * sps / 2;
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  for (int i = -half; i <= half; ++i)
    taps[static_cast<std::size_t>(i + half)] = rrc_impulse(static_cast<double>(i) / sps, roll_off);
  return taps;
}

} // namespace

std::vector<double> rrc_taps(double roll_off, int samples_per_symbol, int span_symbols)
{
  check_shaping_args(roll_off, samples_per_symbol, span_symbols);
  auto taps = raw_taps(roll_off, samples_per_symbol, span_symbols);
  double energy = 0.0;
  for (double t : taps)
    energy += t * t;
  const double norm = 1.0 / std::sqrt(energy);
  for (double& t : taps)
    t *= norm;
  return taps;
}

double rrc_energy_fraction(double roll_off, int samples_per_symbol, int span_symbols)
{
  check_shaping_args(roll_off, samples_per_symbol, span_symbols);
  // The closed form has unit continuous-time energy (T = 1) and is band-limited
  // below sps/2, so the sampled energy of the full response is exactly sps.
  double energy = 0.0;
  for (double t : raw_taps(roll_off, samples_per_symbol, span_symbols))
    energy += t * t;
  return energy / samples_per_symbol;
}

std::vector<double> rrc_frequency_response(std::size_t n, double roll_off, int samples_per_symbol,
                                           int span_symbols)
{
  const auto taps = rrc_taps(roll_off, samples_per_symbol, span_symbols);
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto nn = static_cast<std::ptrdiff_t>(n);
  CVector h(n);
  for (std::ptrdiff_t i = -half; i <= half; ++i)
  {
    const auto idx = ((i % nn) + nn) % nn;
    h[static_cast<std::size_t>(idx)] += taps[static_cast<std::size_t>(i + half)];
  }
  const Fft fft(n);
  fft.forward(h);
  std::vector<double> response(n);
  for (std::size_t k = 0; k < n; ++k)
    response[k] = h[k].real(); // symmetric taps: imaginary part is rounding only
  return response;
}

DualPolSignal rrc_shape(std::span<const Complex> symbols_x, std::span<const Complex> symbols_y,
                        double symbol_rate, double roll_off, int samples_per_symbol,
                        int span_symbols, double center_frequency)
{
  check_shaping_args(roll_off, samples_per_symbol, span_symbols);
  if (symbols_x.size() != symbols_y.size() || symbols_x.empty())
    throw InvalidArgument("rrc_shape: polarizations need the same non-zero symbol count");
  if (const double frac = rrc_energy_fraction(roll_off, samples_per_symbol, span_symbols); frac < 0.9999)
  {
    std::ostringstream msg;
    msg << "RRC span of " << span_symbols << " symbols keeps only " << frac * 100.0
        << " % of the tap energy";
    warn(msg.str());
  }

  const auto sps = static_cast<std::size_t>(samples_per_symbol);
  const std::size_t n = symbols_x.size() * sps;
  const auto response = rrc_frequency_response(n, roll_off, samples_per_symbol, span_symbols);
  const Fft fft(n);
  const double scale = 1.0 / static_cast<double>(n);

  auto shape = [&](std::span<const Complex> symbols) {
    CVector buf(n);
    for (std::size_t k = 0; k < symbols.size(); ++k)
      buf[k * sps] = symbols[k];
    fft.forward(buf);
    for (std::size_t k = 0; k < n; ++k)
      buf[k] *= response[k] * scale;
    fft.inverse(buf);
    return buf;
  };
  return {shape(symbols_x), shape(symbols_y), symbol_rate * samples_per_symbol, center_frequency};
}

void TxSpec::validate() const
{
  if (!(symbol_rate > 0.0))
    throw InvalidArgument("tx.symbol_rate must be positive");
  if (!(roll_off > 0.0 && roll_off <= 1.0))
    throw InvalidArgument("tx.roll_off must be in (0, 1]");
  if (n_channels < 1)
    throw InvalidArgument("tx.n_channels must be at least 1");
  if (n_channels % 2 == 0)
    throw InvalidArgument("tx.n_channels must be odd: no central CUT for an even channel count");
  if (spacing < symbol_rate * (1.0 + roll_off))
  {
    std::ostringstream msg;
    msg << "tx.spacing " << spacing / 1e9 << " GHz is below the occupied channel bandwidth "
        << symbol_rate * (1.0 + roll_off) / 1e9 << " GHz (spectral overlap)";
    throw InvalidArgument(msg.str());
  }
  if (n_symbols < 1)
    throw InvalidArgument("tx.n_symbols must be positive");
  if (filter_span_symbols < 16 || filter_span_symbols % 2 != 0)
    throw InvalidArgument("tx.filter_span_symbols must be even and at least 16");
  if (!(center_frequency > 0.0))
    throw InvalidArgument("tx.center_frequency must be positive");
}

int wdm_samples_per_symbol(const TxSpec& spec)
{
  const double needed = spec.wdm_bandwidth() + 2.0 * (1.0 + spec.roll_off) * spec.symbol_rate;
  int sps = 2;
  while (sps * spec.symbol_rate < needed)
    sps *= 2;
  return sps;
}

const ChannelSymbols& SymbolFrame::channel(int index) const
{
  for (const auto& ch : channels)
  {
    if (ch.index == index)
      return ch;
  }
  throw InvalidArgument("no channel with offset index " + std::to_string(index));
}

std::vector<std::uint8_t> channel_bits(std::uint64_t seed, int channel_index, int polarization,
                                       std::size_t count)
{
  CounterRng rng(derive_seed(seed, "bits", {channel_index, polarization}));
  std::vector<std::uint8_t> bits(count);
  for (auto& b : bits)
    b = static_cast<std::uint8_t>(rng.next_u64() >> 63);
  return bits;
}

WdmWaveform build_wdm(const TxSpec& spec, int samples_per_symbol)
{
  spec.validate();
  const int sps = samples_per_symbol > 0 ? samples_per_symbol : wdm_samples_per_symbol(spec);
  const double fs = sps * spec.symbol_rate;
  const double needed = spec.wdm_bandwidth() + 2.0 * (1.0 + spec.roll_off) * spec.symbol_rate;
  if (needed > fs)
    throw OutOfBandError("WDM comb of " + std::to_string(needed / 1e9) +
                         " GHz does not fit the sample rate " + std::to_string(fs / 1e9) + " GHz");

  const std::size_t n = static_cast<std::size_t>(spec.n_symbols) * static_cast<std::size_t>(sps);
  const auto nbits = static_cast<std::size_t>(spec.n_symbols * bits_per_symbol(spec.format));
  const double target_power = units::dbm_to_watt(spec.power_dbm);
  const int half = (spec.n_channels - 1) / 2;

  DualPolSignal comb = DualPolSignal::zeros(n, fs, spec.center_frequency);
  SymbolFrame frame;
  frame.format = spec.format;

  // Fixed ascending-index accumulation keeps the sum bit-reproducible.
  for (int m = -half; m <= half; ++m)
  {
    ChannelSymbols ch;
    ch.index = m;
    ch.bits_x = channel_bits(spec.seed, m, 0, nbits);
    ch.bits_y = channel_bits(spec.seed, m, 1, nbits);
    ch.x = map_symbols(ch.bits_x, spec.format);
    ch.y = map_symbols(ch.bits_y, spec.format);

    DualPolSignal shaped = rrc_shape(ch.x, ch.y, spec.symbol_rate, spec.roll_off, sps,
                                     spec.filter_span_symbols, spec.center_frequency);
    const double gain = std::sqrt(target_power / measure_power(shaped));
    if (m != 0)
      shaped = frequency_shift(shaped, m * spec.spacing);

    auto& cx = comb.x_mut();
    auto& cy = comb.y_mut();
    const auto sx = shaped.x();
    const auto sy = shaped.y();
    for (std::size_t i = 0; i < n; ++i)
    {
      cx[i] += gain * sx[i];
      cy[i] += gain * sy[i];
    }
    frame.channels.push_back(std::move(ch));
  }
  return {std::move(comb), std::move(frame), sps};
}

} // namespace wdmsim
