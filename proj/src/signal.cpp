// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/signal.hpp"

#include "wdmsim/error.hpp"
#include "wdmsim/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace wdmsim {

DualPolSignal::DualPolSignal(CVector x, CVector y, double sample_rate, double center_frequency)
    : x_(std::move(x)), y_(std::move(y)), sample_rate_(sample_rate),
      center_frequency_(center_frequency)
{
  if (x_.empty())
    throw InvalidArgument("signal must contain at least one sample");
  if (x_.size() != y_.size())
    throw InvalidArgument("x and y polarizations differ in length");
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
    throw InvalidArgument("sample rate must be positive");
}

DualPolSignal DualPolSignal::zeros(std::size_t n, double sample_rate, double center_frequency)
{
  return {CVector(n), CVector(n), sample_rate, center_frequency};
}

bool DualPolSignal::is_finite() const
{
  for (std::size_t i = 0; i < size(); ++i)
  {
    if (!std::isfinite(std::norm(x_[i]) + std::norm(y_[i])))
      return false;
  }
  return true;
}

DualPolSignal frequency_shift(const DualPolSignal& sig, double shift_hz)
{
  if (!(std::abs(shift_hz) < sig.sample_rate() / 2.0))
    throw OutOfBandError("frequency shift of " + std::to_string(shift_hz) +
                         " Hz is beyond the Nyquist frequency");
  if (shift_hz == 0.0)
    return sig;

  const std::size_t n = sig.size();
  CVector x(n), y(n);
  const double step = 2.0 * std::numbers::pi * shift_hz / sig.sample_rate();
  const auto sx = sig.x();
  const auto sy = sig.y();
  for (std::size_t i = 0; i < n; ++i)
  {
    const Complex rot = std::polar(1.0, step * static_cast<double>(i));
    x[i] = sx[i] * rot;
    y[i] = sy[i] * rot;
  }
  return {std::move(x), std::move(y), sig.sample_rate(), sig.center_frequency()};
}

double measure_power(const DualPolSignal& sig)
{
  double acc = 0.0;
  const auto x = sig.x();
  const auto y = sig.y();
  for (std::size_t i = 0; i < sig.size(); ++i)
    acc += std::norm(x[i]) + std::norm(y[i]);
  return acc / static_cast<double>(sig.size());
}

double spectral_power(const DualPolSignal& sig)
{
  const std::size_t n = sig.size();
  const Fft fft(n);
  CVector x(sig.x().begin(), sig.x().end());
  CVector y(sig.y().begin(), sig.y().end());
  fft.forward(x);
  fft.forward(y);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    acc += std::norm(x[k]) + std::norm(y[k]);
  const auto nn = static_cast<double>(n);
  return acc / (nn * nn);
}

double band_power(const DualPolSignal& sig, double f_center, double bandwidth)
{
  const std::size_t n = sig.size();
  const Fft fft(n);
  CVector x(sig.x().begin(), sig.x().end());
  CVector y(sig.y().begin(), sig.y().end());
  fft.forward(x);
  fft.forward(y);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k)
  {
    if (std::abs(bin_frequency(k, n, sig.sample_rate()) - f_center) <= bandwidth / 2.0)
      acc += std::norm(x[k]) + std::norm(y[k]);
  }
  const auto nn = static_cast<double>(n);
  return acc / (nn * nn);
}

DualPolSignal resample(const DualPolSignal& sig, double new_sample_rate)
{
  if (!(new_sample_rate > 0.0))
    throw InvalidArgument("resample: rate must be positive");
  const std::size_t n_in = sig.size();
  const double exact = static_cast<double>(n_in) * new_sample_rate / sig.sample_rate();
  const auto n_out = static_cast<std::size_t>(std::llround(exact));
  if (n_out == 0 || std::abs(exact - static_cast<double>(n_out)) > 1e-6)
    throw InvalidArgument("resample: output length is not an integer");
  if (n_out == n_in)
    return {CVector(sig.x().begin(), sig.x().end()), CVector(sig.y().begin(), sig.y().end()),
            new_sample_rate, sig.center_frequency()};

  const Fft fin(n_in);
  const Fft fout(n_out);
  const double scale = 1.0 / static_cast<double>(n_in);
  auto convert = [&](std::span<const Complex> src) {
    CVector spec(src.begin(), src.end());
    fin.forward(spec);
    CVector out(n_out);
    // Strictly below the smaller Nyquist frequency on both sides.
    const std::size_t m = std::min(n_in, n_out);
    const std::size_t half = (m - 1) / 2;
    for (std::size_t k = 0; k <= half; ++k)
      out[k] = spec[k] * scale;
    for (std::size_t k = 1; k <= half; ++k)
      out[n_out - k] = spec[n_in - k] * scale;
    fout.inverse(out);
    return out;
  };
  return {convert(sig.x()), convert(sig.y()), new_sample_rate, sig.center_frequency()};
}

} // namespace wdmsim
