// SPDX-License-Identifier: Apache-2.0
#include "helpers.hpp"

#include "wdmsim/error.hpp"
#include "wdmsim/fiber.hpp"
#include "wdmsim/rx.hpp"
#include "wdmsim/tx.hpp"
#include "wdmsim/units.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sstream>

using namespace wdmsim;

namespace {

struct Genie
{
  CVector x, y;
};

// Matched filter and sample at the symbol instants; no equalizer.
Genie symbol_instants(const DualPolSignal& rx2)
{
  Genie g;
  for (std::size_t k = 0; k < rx2.size() / 2; ++k)
  {
    g.x.push_back(rx2.x()[2 * k]);
    g.y.push_back(rx2.y()[2 * k]);
  }
  return g;
}

CVector noisy(const CVector& a, double variance, std::uint64_t seed)
{
  CounterRng rng(seed);
  CVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = a[i] + rng.complex_normal(variance);
  return out;
}

CVector random_symbols(std::size_t n, Format f, std::uint64_t seed)
{
  return map_symbols(channel_bits(seed, 0, 0, n * static_cast<std::size_t>(bits_per_symbol(f))), f);
}

TxSpec single(Format f = Format::QPSK, int n_symbols = 4096)
{
  TxSpec tx;
  tx.format = f;
  tx.n_symbols = n_symbols;
  tx.seed = 31;
  return tx;
}

} // namespace

TEST_SUITE("rx")
{
  TEST_CASE("back-to-back demodulation is error free")
  {
    for (Format f : {Format::QPSK, Format::QAM16})
    {
      const TxSpec tx = single(f);
      const auto w = build_wdm(tx);
      const auto cut = extract_channel(w.signal, 0.0, tx.symbol_rate, tx.roll_off);
      CHECK(cut.sample_rate() == doctest::Approx(2.0 * tx.symbol_rate));
      const auto g = symbol_instants(cut);
      const auto& truth = w.frame.channel(0);
      CHECK(estimate_snr(g.x, g.y, truth.x, truth.y).snr_db >= 50.0);
      CHECK(receive_channel(w.signal, truth, f, tx.symbol_rate, tx.roll_off, tx.spacing, 0.0).snr_db >= 50.0);
    }
  }

  TEST_CASE("neighbouring channels do not leak into the extracted channel")
  {
    TxSpec tx = single();
    tx.n_channels = 3;
    const auto comb = build_wdm(tx, 8);
    TxSpec alone = tx;
    alone.n_channels = 1;
    const auto one = build_wdm(alone, 8);
    const auto a = extract_channel(comb.signal, 0.0, tx.symbol_rate, tx.roll_off);
    const auto b = extract_channel(one.signal, 0.0, tx.symbol_rate, tx.roll_off);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      diff += std::norm(a.x()[i] - b.x()[i]) + std::norm(a.y()[i] - b.y()[i]);
    const double ref = test::energy(b.x()) + test::energy(b.y());
    CHECK(10.0 * std::log10(diff / ref) < -40.0);
    // The matched filter passes at most the input power.
    CHECK(measure_power(a) <= measure_power(comb.signal));

    const auto edge = extract_channel(comb.signal, 50e9, tx.symbol_rate, tx.roll_off);
    CHECK(measure_power(edge) > 0.0);
    CHECK_THROWS_AS(extract_channel(comb.signal, 180e9, tx.symbol_rate, tx.roll_off), OutOfBandError);
  }

  TEST_CASE("dispersion compensation is the inverse of pure dispersion")
  {
    const auto in = test::random_signal(2048, 64e9, 5);
    FiberSpec f;
    f.alpha_db_per_km = 0.0;
    f.gamma_per_w_km = 0.0;
    f.length_km = 80.0;
    const auto dispersed = propagate_manakov(in, f, StepConfig::nonlinear_phase(3e-3));
    const auto back = cd_compensate(dispersed, f.beta2_ps2_per_km * f.length_km);
    CHECK(test::max_abs_diff(back.x(), in.x()) < 1e-9);
    CHECK(test::max_abs_diff(back.y(), in.y()) < 1e-9);
    CHECK(measure_power(back) == doctest::Approx(measure_power(in)).epsilon(1e-12));
    const auto twice = cd_compensate(cd_compensate(in, 1234.0), -1234.0);
    CHECK(test::max_abs_diff(twice.x(), in.x()) < 1e-12);
  }

  TEST_CASE("equalizer on an ideal channel converges to identity taps")
  {
    const TxSpec tx = single(Format::QPSK, 8192);
    const auto w = build_wdm(tx);
    const auto cut = extract_channel(w.signal, 0.0, tx.symbol_rate, tx.roll_off);
    const auto& truth = w.frame.channel(0);
    for (bool ls : {false, true})
    {
      EqualizerConfig cfg;
      cfg.least_squares_init = ls;
      const auto r = lms_equalize(cut, truth.x, truth.y, cfg);
      const auto& s = r.state;
      const std::size_t c = static_cast<std::size_t>(s.n_taps / 2);
      const Complex ref = s.xx[c];
      CHECK(std::abs(ref) == doctest::Approx(1.0).epsilon(0.01));
      double off = 0.0;
      for (std::size_t j = 0; j < s.xx.size(); ++j)
      {
        off += std::norm(s.xx[j] - (j == c ? ref : Complex{}));
        off += std::norm(s.yy[j] - (j == c ? ref : Complex{}));
        off += std::norm(s.xy[j]) + std::norm(s.yx[j]);
      }
      CHECK(10.0 * std::log10(off / std::norm(ref)) < -30.0);
      CHECK_FALSE(s.diverged);
      CHECK(s.pass_error_power.size() == static_cast<std::size_t>(cfg.training_passes + 1));
    }
  }

  TEST_CASE("equalizer undoes a 90 degree polarization rotation")
  {
    const TxSpec tx = single(Format::QAM16, 8192);
    const auto w = build_wdm(tx);
    auto cut = extract_channel(w.signal, 0.0, tx.symbol_rate, tx.roll_off);
    CVector x(cut.y().begin(), cut.y().end());
    CVector y(cut.x().size());
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = -cut.x()[i];
    const DualPolSignal rotated(std::move(x), std::move(y), cut.sample_rate(), cut.center_frequency());
    const auto& truth = w.frame.channel(0);
    const auto r = lms_equalize(rotated, truth.x, truth.y);
    SnrOptions opt;
    opt.skip_front = r.ramp_symbols;
    CHECK(estimate_snr(r.x, r.y, truth.x, truth.y, opt).snr_db >= 40.0);
    // Plain LMS from identity taps gets there too, only more slowly.
    EqualizerConfig plain;
    plain.least_squares_init = false;
    const auto p = lms_equalize(rotated, truth.x, truth.y, plain);
    CHECK(p.state.pass_error_power.back() < 0.1 * p.state.pass_error_power.front());
  }

  TEST_CASE("zero step size leaves the taps untouched")
  {
    const TxSpec tx = single();
    const auto w = build_wdm(tx);
    const auto cut = extract_channel(w.signal, 0.0, tx.symbol_rate, tx.roll_off);
    EqualizerConfig cfg;
    cfg.least_squares_init = false;
    cfg.mu = 0.0;
    const auto r = lms_equalize(cut, w.frame.channel(0).x, w.frame.channel(0).y, cfg);
    const auto id = EqualizerState::identity(cfg.n_taps, 0.0);
    CHECK(r.state.xx == id.xx);
    CHECK(r.state.xy == id.xy);
    CHECK(r.state.yx == id.yx);
    CHECK(r.state.yy == id.yy);
  }

  TEST_CASE("equalizer argument checks and divergence flag")
  {
    const TxSpec tx = single();
    const auto w = build_wdm(tx);
    const auto cut = extract_channel(w.signal, 0.0, tx.symbol_rate, tx.roll_off);
    const auto& t = w.frame.channel(0);
    EqualizerConfig even;
    even.n_taps = 16;
    CHECK_THROWS_AS(lms_equalize(cut, t.x, t.y, even), InvalidArgument);
    CHECK_THROWS_AS(lms_equalize(w.signal, t.x, t.y), InvalidArgument);
    CHECK_THROWS_AS(lms_equalize(cut, std::span(t.x).first(100), t.y), InvalidArgument);

    EqualizerConfig wild;
    wild.least_squares_init = false;
    wild.mu = 0.5;
    CHECK(lms_equalize(cut, t.x, t.y, wild).state.diverged);
  }

  TEST_CASE("SNR estimator")
  {
    const std::size_t n = 100000;
    const auto ax = random_symbols(n, Format::QPSK, 1);
    const auto ay = random_symbols(n, Format::QPSK, 2);

    SUBCASE("noiseless input is capped")
    {
      const auto r = estimate_snr(ax, ay, ax, ay);
      CHECK(r.snr_db == kSnrCapDb);
      CHECK(r.n_symbols == static_cast<int>(n));
    }
    SUBCASE("known AWGN level")
    {
      const double var = std::pow(10.0, -1.5);
      const auto rx = noisy(ax, var, 11);
      const auto ry = noisy(ay, var, 12);
      const auto r = estimate_snr(rx, ry, ax, ay);
      CHECK(r.snr_db == doctest::Approx(15.0).epsilon(0.1 / 15.0));
      CHECK(std::abs(r.snr_db - 15.0) < 3.0 * snr_standard_error_db(2 * static_cast<int>(n)) + 0.02);
      CHECK(estimate_snr_single(rx, ax) == doctest::Approx(r.snr_db_x).epsilon(1e-3));

      SUBCASE("two equal independent impairments cost 3.01 dB")
      {
        const auto rx2 = noisy(rx, var, 13);
        const auto ry2 = noisy(ry, var, 14);
        const auto r2 = estimate_snr(rx2, ry2, ax, ay);
        CHECK(r.snr_db - r2.snr_db == doctest::Approx(10.0 * std::log10(2.0)).epsilon(0.02));
      }
      SUBCASE("invariant to a common complex gain")
      {
        CVector sx(rx.size()), sy(ry.size());
        const Complex g = std::polar(3.7, 1.1);
        for (std::size_t i = 0; i < n; ++i)
        {
          sx[i] = g * rx[i];
          sy[i] = g * ry[i];
        }
        CHECK(estimate_snr(sx, sy, ax, ay).snr_db == doctest::Approx(r.snr_db).epsilon(1e-9));
      }
    }
    SUBCASE("a symbol delay is found by the lag search")
    {
      CVector shifted(n);
      for (std::size_t i = 0; i < n; ++i)
        shifted[(i + 3) % n] = ax[i];
      const auto r = estimate_snr(shifted, ay, ax, ay);
      CHECK(std::abs(r.lag_x) == 3);
      CHECK(r.lag_y == 0);
      CHECK(r.snr_db_x == kSnrCapDb);
    }
    SUBCASE("too few symbols")
    {
      SnrOptions opt;
      opt.skip_front = static_cast<int>(n) - 500;
      CHECK_THROWS_AS(estimate_snr(ax, ay, ax, ay, opt), StatisticsError);
      CHECK_THROWS_AS(estimate_snr_single(std::span(ax).first(999), std::span(ay).first(999)),
                      StatisticsError);
    }
    CHECK(snr_standard_error_db(10000) == doctest::Approx(0.0434).epsilon(0.01));
  }

  TEST_CASE("receiver matches the ideal receiver at a known SNR")
  {
    for (Format f : {Format::QPSK, Format::QAM16})
    {
      TxSpec tx = single(f, 1 << 15);
      const auto w = build_wdm(tx);
      const double psd = awgn_psd_for_snr(15.0, units::dbm_to_watt(tx.power_dbm), tx.symbol_rate);
      const auto rx = add_white_noise(w.signal, psd, 77);
      const auto& truth = w.frame.channel(0);
      EqualizerResult eq;
      const auto lms = receive_channel(rx, truth, f, tx.symbol_rate, tx.roll_off, tx.spacing, 0.0, {}, &eq);
      const auto g = symbol_instants(extract_channel(rx, 0.0, tx.symbol_rate, tx.roll_off));
      SnrOptions opt;
      opt.skip_front = lms.guard_front;
      opt.skip_back = lms.guard_back;
      const auto genie = estimate_snr(g.x, g.y, truth.x, truth.y, opt);
      CHECK(genie.snr_db == doctest::Approx(15.0).epsilon(0.1 / 15.0));
      CHECK(std::abs(genie.snr_db - lms.snr_db) < 0.05);
      CHECK(eq.x.size() == truth.x.size());
    }
  }

  TEST_CASE("eye histogram")
  {
    TxSpec tx = single(Format::QPSK, 4000);
    const auto w = build_wdm(tx, 24);
    auto mf = matched_filter(w.signal, tx.symbol_rate, tx.roll_off);
    // Scale to unit symbol energy per polarization.
    double p = 0.0;
    for (std::size_t k = 0; k < 4000; ++k)
      p += std::norm(mf.x()[24 * k]);
    const double s = std::sqrt(4000.0 / p);
    for (auto& v : mf.x_mut())
      v *= s;
    for (auto& v : mf.y_mut())
      v *= s;

    const auto h = eye_histogram(mf, tx.symbol_rate, 24);
    REQUIRE(h.counts.size() == 24);
    for (int ph = 0; ph < 24; ++ph)
    {
      long total = 0;
      for (long c : h.counts[static_cast<std::size_t>(ph)])
        total += c;
      CHECK(total == 4000);
      CHECK(h.symbols_per_phase[static_cast<std::size_t>(ph)] == 4000);
    }
    auto top = h.counts[12];
    std::sort(top.rbegin(), top.rend());
    CHECK(static_cast<double>(top[0] + top[1]) / 4000.0 > 0.99);
    CHECK(h.optimum_phase_variance() < 1e-6);
    CHECK(h.abs_mean[12] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
    CHECK(h.phase_offset(12) == 0.0);
    CHECK(h.abs_variance[0] > h.abs_variance[12]);

    const auto dispersed = cd_compensate(mf, -21.27 * 23.0);
    CHECK(eye_histogram(dispersed, tx.symbol_rate, 24).optimum_phase_variance() >
          h.optimum_phase_variance());

    // Resampled path: a 2-sample-per-symbol input still yields 24 phases.
    const auto coarse = eye_histogram(resample(mf, 2.0 * tx.symbol_rate), tx.symbol_rate, 24);
    CHECK(coarse.abs_variance[12] < 1e-6);

    const nlohmann::json j = h;
    CHECK(j.at("counts").size() == 24);
    std::ostringstream csv;
    write_histogram_csv(csv, h);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 24 * h.n_bins);

    CHECK_THROWS_AS(eye_histogram(mf, tx.symbol_rate, 0), InvalidArgument);
  }
}
