// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/rx.hpp"

#include "wdmsim/error.hpp"
#include "wdmsim/fft.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace wdmsim {

namespace {

int integer_sps(double sample_rate, double symbol_rate)
{
  const double sps = sample_rate / symbol_rate;
  const auto rounded = std::lround(sps);
  if (rounded < 2 || std::abs(sps - static_cast<double>(rounded)) > 1e-9 * sps)
    throw InvalidArgument("sample rate must be an integer multiple (>= 2) of the symbol rate");
  return static_cast<int>(rounded);
}

std::size_t wrap(std::ptrdiff_t i, std::size_t n)
{
  const auto nn = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((i % nn) + nn) % nn);
}

/// Fills the four tap vectors with the least-squares fit of the training
/// symbols from the (normalized) 2 samples/symbol input.
void least_squares_taps(const std::vector<Complex>& ux, const std::vector<Complex>& uy,
                        std::span<const Complex> dx, std::span<const Complex> dy, EqualizerState& st)
{
  const auto nt = static_cast<std::ptrdiff_t>(st.n_taps);
  const std::ptrdiff_t center = nt / 2;
  const std::size_t n = ux.size();
  const Eigen::Index dim = 2 * nt;
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(dim, 2);
  Eigen::VectorXcd u(dim);
  for (std::size_t k = 0; k < dx.size(); ++k)
  {
    const auto base = static_cast<std::ptrdiff_t>(2 * k) - center;
    for (std::ptrdiff_t j = 0; j < nt; ++j)
    {
      const std::size_t idx = wrap(base + j, n);
      u(j) = ux[idx];
      u(nt + j) = uy[idx];
    }
    r.selfadjointView<Eigen::Lower>().rankUpdate(u.conjugate());
    p.col(0) += u.conjugate() * dx[k];
    p.col(1) += u.conjugate() * dy[k];
  }
  r = r.selfadjointView<Eigen::Lower>();
  // A band-limited 2 samples/symbol input leaves directions the data does not
  // determine; a light ridge towards the identity taps keeps them at the
  // centre spike instead of letting them drift.
  const double load = 1e-6 * r.diagonal().real().sum() / static_cast<double>(dim);
  r.diagonal().array() += load;
  p(center, 0) += load;
  p(nt + center, 1) += load;
  const Eigen::MatrixXcd h = r.ldlt().solve(p);
  for (std::ptrdiff_t j = 0; j < nt; ++j)
  {
    const auto uj = static_cast<std::size_t>(j);
    st.xx[uj] = h(j, 0);
    st.xy[uj] = h(nt + j, 0);
    st.yx[uj] = h(j, 1);
    st.yy[uj] = h(nt + j, 1);
  }
}

} // namespace

DualPolSignal matched_filter(const DualPolSignal& sig, double symbol_rate, double roll_off,
                             int span_symbols)
{
  const int sps = integer_sps(sig.sample_rate(), symbol_rate);
  const std::size_t n = sig.size();
  const auto h = rrc_frequency_response(n, roll_off, sps, span_symbols);
  const Fft fft(n);
  // Unit passband gain: the filtered signal never carries more power than the input.
  const double scale = 1.0 / (static_cast<double>(n) * std::sqrt(static_cast<double>(sps)));
  auto filt = [&](std::span<const Complex> src) {
    CVector buf(src.begin(), src.end());
    fft.forward(buf);
    for (std::size_t k = 0; k < n; ++k)
      buf[k] *= h[k] * scale;
    fft.inverse(buf);
    return buf;
  };
  return {filt(sig.x()), filt(sig.y()), sig.sample_rate(), sig.center_frequency()};
}

DualPolSignal extract_channel(const DualPolSignal& wdm, double channel_offset, double symbol_rate,
                              double roll_off, int span_symbols)
{
  const double fs = wdm.sample_rate();
  if (std::abs(channel_offset) + (1.0 + roll_off) * symbol_rate / 2.0 > fs / 2.0)
    throw OutOfBandError("channel at offset " + std::to_string(channel_offset / 1e9) +
                         " GHz is not fully inside the simulated band");
  const int sps = integer_sps(fs, symbol_rate);
  const std::size_t n = wdm.size();
  if ((2 * n) % static_cast<std::size_t>(sps) != 0)
    throw InvalidArgument("signal length does not map to an integer number of half symbols");
  const std::size_t n_out = 2 * n / static_cast<std::size_t>(sps);

  const DualPolSignal shifted = channel_offset != 0.0 ? frequency_shift(wdm, -channel_offset) : wdm;
  const auto h = rrc_frequency_response(n, roll_off, sps, span_symbols);
  const Fft fin(n);
  const Fft fout(n_out);
  const double scale = 1.0 / (static_cast<double>(n) * std::sqrt(static_cast<double>(sps)));
  const std::size_t half = (std::min(n, n_out) - 1) / 2;

  auto convert = [&](std::span<const Complex> src) {
    CVector spec(src.begin(), src.end());
    fin.forward(spec);
    CVector out(n_out);
    for (std::size_t k = 0; k <= half; ++k)
      out[k] = spec[k] * (h[k] * scale);
    for (std::size_t k = 1; k <= half; ++k)
      out[n_out - k] = spec[n - k] * (h[n - k] * scale);
    fout.inverse(out);
    return out;
  };
  return {convert(shifted.x()), convert(shifted.y()), 2.0 * symbol_rate, wdm.center_frequency()};
}

DualPolSignal cd_compensate(const DualPolSignal& sig, double total_beta2l_ps2)
{
  const std::size_t n = sig.size();
  const double b2l = total_beta2l_ps2 * 1e-24; // s^2
  const Fft fft(n);
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<Complex> op(n);
  for (std::size_t k = 0; k < n; ++k)
  {
    const double w = bin_angular_frequency(k, n, sig.sample_rate());
    op[k] = std::polar(scale, -b2l * w * w / 2.0);
  }
  auto apply = [&](std::span<const Complex> src) {
    CVector buf(src.begin(), src.end());
    fft.forward(buf);
    for (std::size_t k = 0; k < n; ++k)
      buf[k] *= op[k];
    fft.inverse(buf);
    return buf;
  };
  return {apply(sig.x()), apply(sig.y()), sig.sample_rate(), sig.center_frequency()};
}

EqualizerState EqualizerState::identity(int n_taps, double mu)
{
  EqualizerState s;
  s.n_taps = n_taps;
  s.mu = mu;
  const auto nt = static_cast<std::size_t>(n_taps);
  s.xx.assign(nt, Complex{});
  s.xy.assign(nt, Complex{});
  s.yx.assign(nt, Complex{});
  s.yy.assign(nt, Complex{});
  s.xx[nt / 2] = 1.0;
  s.yy[nt / 2] = 1.0;
  return s;
}

EqualizerResult lms_equalize(const DualPolSignal& sig, std::span<const Complex> training_x,
                             std::span<const Complex> training_y, const EqualizerConfig& config)
{
  if (config.n_taps < 1 || config.n_taps % 2 == 0)
    throw InvalidArgument("equalizer tap count must be odd");
  if (config.mu < 0.0 || config.training_passes < 0 || !(config.mu_decay > 0.0))
    throw InvalidArgument("invalid equalizer step-size schedule");
  if (sig.size() % 2 != 0)
    throw InvalidArgument("equalizer input must hold 2 samples per symbol");
  const std::size_t n_sym = sig.size() / 2;
  if (training_x.size() != n_sym || training_y.size() != n_sym)
    throw InvalidArgument("training sequence length must equal the symbol count");

  // Unit mean symbol-instant power per polarization.
  double p = 0.0;
  for (std::size_t k = 0; k < n_sym; ++k)
    p += std::norm(sig.x()[2 * k]) + std::norm(sig.y()[2 * k]);
  p /= 2.0 * static_cast<double>(n_sym);
  const double norm = p > 0.0 ? 1.0 / std::sqrt(p) : 1.0;
  std::vector<Complex> ux(sig.size()), uy(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i)
  {
    ux[i] = sig.x()[i] * norm;
    uy[i] = sig.y()[i] * norm;
  }

  EqualizerResult result;
  result.state = EqualizerState::identity(config.n_taps, config.mu);
  result.x.resize(n_sym);
  result.y.resize(n_sym);
  result.ramp_symbols = static_cast<int>(std::lround(config.ramp_fraction * static_cast<double>(n_sym)));

  auto& st = result.state;
  if (config.least_squares_init)
    least_squares_taps(ux, uy, training_x, training_y, st);
  const auto nt = static_cast<std::ptrdiff_t>(config.n_taps);
  const std::ptrdiff_t center = nt / 2;
  const std::size_t n = sig.size();
  std::vector<Complex> wx(static_cast<std::size_t>(nt)), wy(static_cast<std::size_t>(nt));

  const std::size_t ramp = static_cast<std::size_t>(result.ramp_symbols);
  const std::size_t probe = std::max<std::size_t>(1, ramp / 10);
  double ramp_head = 0.0, ramp_tail = 0.0;

  double mu = config.mu;
  for (int pass = 0; pass <= config.training_passes; ++pass, mu *= config.mu_decay)
  {
    const bool output_pass = pass == config.training_passes;
    double err_acc = 0.0;
    for (std::size_t k = 0; k < n_sym; ++k)
    {
      const auto base = static_cast<std::ptrdiff_t>(2 * k) - center;
      Complex ox{}, oy{};
      for (std::ptrdiff_t j = 0; j < nt; ++j)
      {
        const std::size_t idx = wrap(base + j, n);
        wx[static_cast<std::size_t>(j)] = ux[idx];
        wy[static_cast<std::size_t>(j)] = uy[idx];
      }
      for (std::size_t j = 0; j < static_cast<std::size_t>(nt); ++j)
      {
        ox += st.xx[j] * wx[j] + st.xy[j] * wy[j];
        oy += st.yx[j] * wx[j] + st.yy[j] * wy[j];
      }
      const Complex ex = training_x[k] - ox;
      const Complex ey = training_y[k] - oy;
      const double e2 = std::norm(ex) + std::norm(ey);
      err_acc += e2;
      if (pass == 0 && ramp > 0)
      {
        if (k < probe)
          ramp_head += e2;
        else if (k < ramp && k >= ramp - probe)
          ramp_tail += e2;
      }
      if (output_pass)
      {
        result.x[k] = ox;
        result.y[k] = oy;
      }
      if (mu > 0.0)
      {
        const Complex gx = mu * ex;
        const Complex gy = mu * ey;
        for (std::size_t j = 0; j < static_cast<std::size_t>(nt); ++j)
        {
          const Complex cx = std::conj(wx[j]);
          const Complex cy = std::conj(wy[j]);
          st.xx[j] += gx * cx;
          st.xy[j] += gx * cy;
          st.yx[j] += gy * cx;
          st.yy[j] += gy * cy;
        }
      }
    }
    st.pass_error_power.push_back(err_acc / (2.0 * static_cast<double>(n_sym)));
    if (!std::isfinite(err_acc))
      st.diverged = true;
  }
  if (ramp > 0 && ramp_head > 0.0 && ramp_tail > 10.0 * ramp_head)
    st.diverged = true;
  return result;
}

namespace {

struct PolFit
{
  double signal = 0.0;
  double error = 0.0;
  int lag = 0;
};

PolFit fit_polarization(std::span<const Complex> rx, std::span<const Complex> tx,
                        std::size_t begin, std::size_t end, int max_lag)
{
  const std::size_t n = rx.size();
  PolFit best;
  double best_corr = -1.0;
  Complex best_c{};
  for (int lag = -max_lag; lag <= max_lag; ++lag)
  {
    Complex c{};
    for (std::size_t k = begin; k < end; ++k)
      c += rx[k] * std::conj(tx[wrap(static_cast<std::ptrdiff_t>(k) - lag, n)]);
    if (std::abs(c) > best_corr)
    {
      best_corr = std::abs(c);
      best_c = c;
      best.lag = lag;
    }
  }
  double sig = 0.0;
  for (std::size_t k = begin; k < end; ++k)
    sig += std::norm(tx[wrap(static_cast<std::ptrdiff_t>(k) - best.lag, n)]);
  // Least-squares gain of rx on tx; dividing it out leaves an unbiased error.
  const Complex h = best_c / sig;
  double err = 0.0;
  for (std::size_t k = begin; k < end; ++k)
  {
    const Complex a = tx[wrap(static_cast<std::ptrdiff_t>(k) - best.lag, n)];
    err += std::norm(rx[k] / h - a);
  }
  best.signal = sig;
  best.error = err;
  return best;
}

double capped_db(double signal, double error)
{
  if (!(error > 0.0))
    return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / error));
}

} // namespace

SnrReport estimate_snr(std::span<const Complex> rx_x, std::span<const Complex> rx_y,
                       std::span<const Complex> tx_x, std::span<const Complex> tx_y,
                       const SnrOptions& options)
{
  const std::size_t n = rx_x.size();
  if (rx_y.size() != n || tx_x.size() != n || tx_y.size() != n)
    throw InvalidArgument("estimate_snr: sequence lengths differ");
  if (options.skip_front < 0 || options.skip_back < 0 || options.max_lag < 0)
    throw InvalidArgument("estimate_snr: negative skip or lag");
  const auto skip = static_cast<std::size_t>(options.skip_front + options.skip_back);
  if (n < skip + static_cast<std::size_t>(kMinSnrSymbols))
    throw StatisticsError("estimate_snr: fewer than " + std::to_string(kMinSnrSymbols) +
                          " usable symbols");
  const auto begin = static_cast<std::size_t>(options.skip_front);
  const std::size_t end = n - static_cast<std::size_t>(options.skip_back);

  const PolFit fx = fit_polarization(rx_x, tx_x, begin, end, options.max_lag);
  const PolFit fy = fit_polarization(rx_y, tx_y, begin, end, options.max_lag);

  SnrReport r;
  r.snr_db_x = capped_db(fx.signal, fx.error);
  r.snr_db_y = capped_db(fy.signal, fy.error);
  r.snr_db = capped_db(fx.signal + fy.signal, fx.error + fy.error);
  r.n_symbols = static_cast<int>(end - begin);
  r.format = options.format;
  r.guard_front = options.skip_front;
  r.guard_back = options.skip_back;
  r.lag_x = fx.lag;
  r.lag_y = fy.lag;
  return r;
}

double estimate_snr_single(std::span<const Complex> rx, std::span<const Complex> tx, int skip_front,
                           int skip_back)
{
  if (rx.size() != tx.size())
    throw InvalidArgument("estimate_snr_single: sequence lengths differ");
  if (rx.size() < static_cast<std::size_t>(skip_front + skip_back + kMinSnrSymbols))
    throw StatisticsError("estimate_snr_single: too few usable symbols");
  const auto f = fit_polarization(rx, tx, static_cast<std::size_t>(skip_front),
                                  rx.size() - static_cast<std::size_t>(skip_back), 0);
  return capped_db(f.signal, f.error);
}

double snr_standard_error_db(int n_samples)
{
  return 10.0 / std::numbers::ln10 / std::sqrt(static_cast<double>(n_samples));
}

SnrReport receive_channel(const DualPolSignal& sig, const ChannelSymbols& truth, Format format,
                          double symbol_rate, double roll_off, double spacing,
                          double total_beta2l_ps2, const ReceiverConfig& config,
                          EqualizerResult* equalized)
{
  DualPolSignal cut = extract_channel(sig, truth.index * spacing, symbol_rate, roll_off,
                                      config.filter_span_symbols);
  if (total_beta2l_ps2 != 0.0)
    cut = cd_compensate(cut, total_beta2l_ps2);
  EqualizerResult eq = lms_equalize(cut, truth.x, truth.y, config.equalizer);
  if (eq.state.diverged)
    warn("LMS equalizer flagged divergence");

  const auto n_sym = static_cast<int>(truth.x.size());
  const int guard = static_cast<int>(std::lround(config.guard_fraction * n_sym));
  SnrOptions opt;
  opt.skip_front = std::max(guard, eq.ramp_symbols);
  opt.skip_back = guard;
  opt.format = format;
  SnrReport report = estimate_snr(eq.x, eq.y, truth.x, truth.y, opt);
  if (equalized)
    *equalized = std::move(eq);
  return report;
}

double EyeHistogram::phase_offset(int phase) const
{
  return static_cast<double>(phase) / n_phases - 0.5;
}

double EyeHistogram::bin_center(int bin) const
{
  const double width = (amplitude_max - amplitude_min) / n_bins;
  return amplitude_min + (bin + 0.5) * width;
}

EyeHistogram eye_histogram(const DualPolSignal& sig, double symbol_rate, int n_phases,
                           HistogramBins bins, Quadrature quadrature)
{
  if (n_phases < 1 || bins.count < 1 || !(bins.max > bins.min))
    throw InvalidArgument("eye_histogram: invalid phase or bin configuration");

  const double sps_real = sig.sample_rate() / symbol_rate;
  const auto sps_int = std::lround(sps_real);
  const bool aligned = std::abs(sps_real - static_cast<double>(sps_int)) < 1e-9 * sps_real &&
                       sps_int % n_phases == 0;
  const DualPolSignal work = aligned ? sig : resample(sig, symbol_rate * n_phases);
  const auto sps = static_cast<std::ptrdiff_t>(std::lround(work.sample_rate() / symbol_rate));
  const std::ptrdiff_t stride = sps / n_phases;
  const std::size_t n = work.size();
  const std::size_t n_sym = n / static_cast<std::size_t>(sps);

  EyeHistogram h;
  h.n_phases = n_phases;
  h.n_bins = bins.count;
  h.amplitude_min = bins.min;
  h.amplitude_max = bins.max;
  h.quadrature = quadrature;
  h.counts.assign(static_cast<std::size_t>(n_phases), std::vector<long>(static_cast<std::size_t>(bins.count), 0));
  h.symbols_per_phase.assign(static_cast<std::size_t>(n_phases), 0);
  h.abs_mean.assign(static_cast<std::size_t>(n_phases), 0.0);
  h.abs_variance.assign(static_cast<std::size_t>(n_phases), 0.0);

  const auto samples = (quadrature == Quadrature::XI || quadrature == Quadrature::XQ) ? work.x() : work.y();
  const bool imag = quadrature == Quadrature::XQ || quadrature == Quadrature::YQ;
  const double width = (bins.max - bins.min) / bins.count;

  for (int p = 0; p < n_phases; ++p)
  {
    const std::ptrdiff_t offset = (p - n_phases / 2) * stride;
    double sum = 0.0, sum2 = 0.0;
    auto& row = h.counts[static_cast<std::size_t>(p)];
    for (std::size_t k = 0; k < n_sym; ++k)
    {
      const auto idx = wrap(static_cast<std::ptrdiff_t>(k) * sps + offset, n);
      const double v = imag ? samples[idx].imag() : samples[idx].real();
      auto bin = static_cast<long>(std::floor((v - bins.min) / width));
      bin = std::clamp(bin, 0L, static_cast<long>(bins.count - 1));
      ++row[static_cast<std::size_t>(bin)];
      sum += std::abs(v);
      sum2 += v * v;
    }
    const auto m = static_cast<double>(n_sym);
    const double mean = sum / m;
    h.symbols_per_phase[static_cast<std::size_t>(p)] = static_cast<long>(n_sym);
    h.abs_mean[static_cast<std::size_t>(p)] = mean;
    h.abs_variance[static_cast<std::size_t>(p)] = std::max(0.0, sum2 / m - mean * mean);
  }
  return h;
}

void to_json(nlohmann::json& j, const SnrReport& r)
{
  j = {{"snr_db", r.snr_db},       {"snr_db_x", r.snr_db_x},       {"snr_db_y", r.snr_db_y},
       {"n_symbols", r.n_symbols}, {"format", to_string(r.format)}, {"guard_front", r.guard_front},
       {"guard_back", r.guard_back}, {"lag_x", r.lag_x},            {"lag_y", r.lag_y}};
}

void to_json(nlohmann::json& j, const EyeHistogram& h)
{
  static constexpr const char* kQuadNames[] = {"x_i", "x_q", "y_i", "y_q"};
  nlohmann::json centers = nlohmann::json::array();
  for (int b = 0; b < h.n_bins; ++b)
    centers.push_back(h.bin_center(b));
  nlohmann::json phases = nlohmann::json::array();
  for (int p = 0; p < h.n_phases; ++p)
    phases.push_back(h.phase_offset(p));
  j = {{"n_phases", h.n_phases},
       {"n_bins", h.n_bins},
       {"amplitude_min", h.amplitude_min},
       {"amplitude_max", h.amplitude_max},
       {"quadrature", kQuadNames[static_cast<int>(h.quadrature)]},
       {"phase_offsets", phases},
       {"bin_centers", centers},
       {"counts", h.counts},
       {"symbols_per_phase", h.symbols_per_phase},
       {"abs_mean", h.abs_mean},
       {"abs_variance", h.abs_variance},
       {"optimum_phase", h.optimum_phase()}};
}

void write_histogram_csv(std::ostream& os, const EyeHistogram& h)
{
  os << "phase,bin_center,count\n";
  for (int p = 0; p < h.n_phases; ++p)
  {
    for (int b = 0; b < h.n_bins; ++b)
      os << h.phase_offset(p) << ',' << h.bin_center(b) << ','
         << h.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(b)] << '\n';
  }
}

} // namespace wdmsim
