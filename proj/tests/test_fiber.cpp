// SPDX-License-Identifier: Apache-2.0
#include "helpers.hpp"

#include "wdmsim/birefringence.hpp"
#include "wdmsim/error.hpp"
#include "wdmsim/fft.hpp"
#include "wdmsim/fiber.hpp"
#include "wdmsim/rx.hpp"
#include "wdmsim/tx.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace wdmsim;

namespace {

FiberSpec linear_fiber(double length_km, double pmd = 0.0)
{
  FiberSpec f;
  f.length_km = length_km;
  f.alpha_db_per_km = 0.0;
  f.beta2_ps2_per_km = 0.0;
  f.gamma_per_w_km = 0.0;
  f.pmd_ps_per_sqrt_km = pmd;
  return f;
}

DualPolSignal cw(std::size_t n, double power_x, double power_y)
{
  auto s = DualPolSignal::zeros(n, 64e9, 193.4e12);
  std::fill(s.x_mut().begin(), s.x_mut().end(), Complex(std::sqrt(power_x), 0.0));
  std::fill(s.y_mut().begin(), s.y_mut().end(), Complex(std::sqrt(power_y), 0.0));
  return s;
}

BirefringenceSpan fixed_axes(double length_km)
{
  BirefringenceSpan span;
  span.plates.push_back({length_km, 0.0, jones_identity()});
  return span;
}

double leff_km(double alpha_db_km, double length_km)
{
  const double a = alpha_db_km / (10.0 * std::log10(std::exp(1.0))); // 1/km
  return (1.0 - std::exp(-a * length_km)) / a;
}

double rms_width(std::span<const Complex> a, double dt)
{
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  const double mid = static_cast<double>(a.size() / 2);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    const double t = (static_cast<double>(i) - mid) * dt;
    const double p = std::norm(a[i]);
    s0 += p;
    s1 += p * t;
    s2 += p * t * t;
  }
  const double m = s1 / s0;
  return std::sqrt(s2 / s0 - m * m);
}

// DGD of a 2x2 Jones transfer from its frequency derivative: eigenvalue split
// of the Hermitian matrix i T' T^H.
double dgd_from_transfer(const Jones& t, const Jones& dt)
{
  const Jones h = jones_multiply(dt, jones_adjoint(t));
  const Complex i{0.0, 1.0};
  const double d = (i * h[0] - i * h[3]).real();
  return std::sqrt(d * d + 4.0 * std::norm(i * h[1]));
}

} // namespace

TEST_SUITE("fiber")
{
  TEST_CASE("effective length")
  {
    FiberSpec f;
    CHECK(f.effective_length_km() == doctest::Approx(leff_km(0.2, 100.0)).epsilon(1e-12));
    CHECK(f.effective_length_km() == doctest::Approx(21.50).epsilon(1e-3));
    f.alpha_db_per_km = 0.0;
    CHECK(f.effective_length_km() == 100.0);
  }

  TEST_CASE("pure loss")
  {
    FiberSpec f;
    f.gamma_per_w_km = 0.0;
    f.beta2_ps2_per_km = 0.0;
    const auto in = test::random_signal(1024, 64e9, 4, 1e-3);
    const auto out = propagate_manakov(in, f, StepConfig::nonlinear_phase(3e-3));
    const double expect = std::pow(10.0, -0.2 * 100.0 / 10.0);
    CHECK(measure_power(out) / measure_power(in) == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("CW self-phase modulation")
  {
    FiberSpec f;
    f.beta2_ps2_per_km = -21.27;
    const double p = 5e-3;
    const double gamma = 1.3e-3 * 1e3; // 1/(W km)
    const double leff = leff_km(0.2, 100.0);

    SUBCASE("Manakov: 8/9 of the scalar phase")
    {
      const auto out = propagate_manakov(cw(64, p, 0.0), f, StepConfig::nonlinear_phase(3e-3));
      const double phase = std::arg(out.x()[17]);
      CHECK(std::abs(phase - 8.0 / 9.0 * gamma * p * leff) < 1e-6);
    }
    SUBCASE("coupled NLSE along a birefringence axis: full scalar phase")
    {
      const auto out = propagate_dpnlse(cw(64, p, 0.0), f, fixed_axes(100.0),
                                        StepConfig::nonlinear_phase(3e-3));
      CHECK(std::abs(std::arg(out.x()[5]) - gamma * p * leff) < 1e-6);
    }
    SUBCASE("coupled NLSE, power split between axes: self plus 2/3 cross")
    {
      const auto out = propagate_dpnlse(cw(64, p / 2, p / 2), f, fixed_axes(100.0),
                                        StepConfig::nonlinear_phase(3e-3));
      const double expect = gamma * (p / 2 + 2.0 / 3.0 * p / 2) * leff;
      CHECK(std::abs(std::arg(out.x()[0]) - expect) < 1e-6);
      CHECK(std::abs(std::arg(out.y()[0]) - expect) < 1e-6);
    }
    SUBCASE("Manakov phase is polarization independent")
    {
      const auto a = propagate_manakov(cw(64, p, 0.0), f, StepConfig::nonlinear_phase(3e-3));
      const auto b = propagate_manakov(cw(64, p / 2, p / 2), f, StepConfig::nonlinear_phase(3e-3));
      CHECK(std::arg(a.x()[0]) == doctest::Approx(std::arg(b.y()[0])).epsilon(1e-12));
    }
  }

  TEST_CASE("Gaussian pulse broadening under pure dispersion")
  {
    FiberSpec f = linear_fiber(100.0);
    f.beta2_ps2_per_km = -21.27;
    const std::size_t n = 4096;
    const double fs = 200e9;
    const double t0 = 20e-12;
    auto s = DualPolSignal::zeros(n, fs, 193.4e12);
    for (std::size_t i = 0; i < n; ++i)
    {
      const double t = (static_cast<double>(i) - static_cast<double>(n / 2)) / fs;
      s.x_mut()[i] = std::exp(-t * t / (2.0 * t0 * t0));
    }
    const auto out = propagate_manakov(s, f, StepConfig::nonlinear_phase(3e-3));
    const double ld = t0 * t0 / (21.27e-27 * 100e3);
    const double factor = std::sqrt(1.0 + 1.0 / (ld * ld));
    const double measured = rms_width(out.x(), 1.0 / fs) / rms_width(s.x(), 1.0 / fs);
    CHECK(measured == doctest::Approx(factor).epsilon(1e-3));
    CHECK(measure_power(out) == doctest::Approx(measure_power(s)).epsilon(1e-12));
  }

  TEST_CASE("PMD-only propagation conserves power and is unitary")
  {
    const FiberSpec f = linear_fiber(100.0, 5.0);
    const auto plates = gen_birefringence(f, 1.0, 21, 0);
    const auto in = test::random_signal(4096, 256e9, 8);
    const auto out = propagate_dpnlse(in, f, plates, StepConfig::nonlinear_phase(3e-3));
    CHECK(std::abs(measure_power(out) / measure_power(in) - 1.0) < 1e-12);
    for (const auto& p : plates.plates)
      CHECK(unitarity_error(p.rotation) < 1e-12);
    CHECK(unitarity_error(plates.carrier_transfer()) < 1e-12);
    CHECK(unitarity_error(span_transfer(plates, 2.0 * std::numbers::pi * 80e9)) < 1e-12);
  }

  TEST_CASE("lossless noiseless nonlinear propagation conserves power")
  {
    TxSpec tx;
    tx.n_channels = 3;
    tx.n_symbols = 1024;
    tx.power_dbm = 6.0;
    const auto w = build_wdm(tx);
    FiberSpec f;
    f.alpha_db_per_km = 0.0;
    f.length_km = 50.0;
    f.pmd_ps_per_sqrt_km = 0.5;
    const double p0 = measure_power(w.signal);
    const auto me = propagate_manakov(w.signal, f, StepConfig::nonlinear_phase(3e-3));
    CHECK(std::abs(measure_power(me) / p0 - 1.0) < 1e-9);
    const auto dp = propagate_dpnlse(w.signal, f, gen_birefringence(f, 1.0, 2, 0),
                                     StepConfig::nonlinear_phase(3e-3));
    CHECK(std::abs(measure_power(dp) / p0 - 1.0) < 1e-9);
  }

  TEST_CASE("a single waveplate splits an impulse by its DGD")
  {
    const FiberSpec f = linear_fiber(1.0);
    BirefringenceSpan span;
    span.plates.push_back({1.0, 10.0, jones_identity()});
    const std::size_t n = 256;
    auto s = DualPolSignal::zeros(n, 1e12, 193.4e12); // 1 ps per sample
    s.x_mut()[100] = 1.0;
    s.y_mut()[100] = 1.0;
    const auto out = propagate_dpnlse(s, f, span, StepConfig::fixed(1.0));
    CHECK(std::abs(out.x()[105]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(out.y()[95]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(test::energy(out.x()) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("propagated Jones transfer matches the analytic concatenation")
  {
    const FiberSpec f = linear_fiber(30.0, 1.0);
    const auto plates = gen_birefringence(f, 1.0, 5, 0);
    const std::size_t n = 512;
    const double fs = 1e12;
    auto ex = DualPolSignal::zeros(n, fs, 193.4e12);
    ex.x_mut()[0] = 1.0;
    auto ey = DualPolSignal::zeros(n, fs, 193.4e12);
    ey.y_mut()[0] = 1.0;
    auto ox = propagate_dpnlse(ex, f, plates, StepConfig::nonlinear_phase(3e-3));
    auto oy = propagate_dpnlse(ey, f, plates, StepConfig::nonlinear_phase(3e-3));
    CVector a(ox.x().begin(), ox.x().end()), b(ox.y().begin(), ox.y().end());
    CVector c(oy.x().begin(), oy.x().end()), d(oy.y().begin(), oy.y().end());
    const Fft fft(n);
    for (auto* v : {&a, &b, &c, &d})
      fft.forward(*v);
    for (std::size_t k : {0u, 3u, 100u, 400u})
    {
      const Jones ref = span_transfer(plates, bin_angular_frequency(k, n, fs));
      CHECK(std::abs(a[k] - ref[0]) < 1e-10);
      CHECK(std::abs(b[k] - ref[2]) < 1e-10);
      CHECK(std::abs(c[k] - ref[1]) < 1e-10);
      CHECK(std::abs(d[k] - ref[3]) < 1e-10);
    }
  }

  TEST_CASE("mean DGD follows the PMD coefficient")
  {
    const FiberSpec f = linear_fiber(100.0, 1.0);
    const int realizations = 60;
    const double dw = 2.0 * std::numbers::pi * 1e6;
    double sum = 0.0, sum2 = 0.0;
    int count = 0;
    for (int r = 0; r < realizations; ++r)
    {
      const auto plates = gen_birefringence(f, 1.0, derive_seed(99, "dgd", {r}), 0);
      for (int k = 0; k < 16; ++k)
      {
        const double w = 2.0 * std::numbers::pi * 200e9 * k;
        const Jones tp = span_transfer(plates, w + dw);
        const Jones tm = span_transfer(plates, w - dw);
        Jones deriv;
        for (int i = 0; i < 4; ++i)
          deriv[i] = (tp[i] - tm[i]) / (2.0 * dw);
        const double tau = dgd_from_transfer(span_transfer(plates, w), deriv) * 1e12;
        if (k == 0)
          CHECK(tau == doctest::Approx(differential_group_delay_ps(plates)).epsilon(1e-6));
        sum += tau;
        sum2 += tau * tau;
        ++count;
      }
    }
    const double mean = sum / count;
    const double rms = std::sqrt(sum2 / count);
    CHECK(mean == doctest::Approx(10.0).epsilon(0.05));
    CHECK(rms == doctest::Approx(std::sqrt(3.0 * std::numbers::pi / 8.0) * 10.0).epsilon(0.05));
  }

  TEST_CASE("waveplate generation")
  {
    FiberSpec f;
    f.length_km = 23.0;
    f.pmd_ps_per_sqrt_km = 5.0;
    const auto span = gen_birefringence(f, 1.0, 17, 3);
    double total = 0.0;
    for (std::size_t i = 0; i < span.plates.size(); ++i)
    {
      const auto& p = span.plates[i];
      total += p.length_km;
      if (i + 1 < span.plates.size())
        CHECK((p.length_km >= 0.5 && p.length_km <= 1.5));
      CHECK(p.dgd_ps == doctest::Approx(std::sqrt(3.0 * std::numbers::pi / 8.0) * 5.0 *
                                        std::sqrt(p.length_km)));
    }
    CHECK(std::abs(total - 23.0) < 1e-12);
    CHECK(std::abs(span.length_km() - 23.0) < 1e-12);

    const auto again = gen_birefringence(f, 1.0, 17, 3);
    REQUIRE(again.plates.size() == span.plates.size());
    CHECK(again.plates[4].rotation == span.plates[4].rotation);
    CHECK(gen_birefringence(f, 1.0, 17, 4).plates[0].rotation != span.plates[0].rotation);

    f.pmd_ps_per_sqrt_km = 0.0;
    const auto zero = gen_birefringence(f, 1.0, 17, 3);
    for (const auto& p : zero.plates)
      CHECK(p.dgd_ps == 0.0);
    // Orientations do not depend on the PMD coefficient: runs at different
    // coefficients are paired.
    CHECK(zero.plates[2].rotation == span.plates[2].rotation);

    CHECK_THROWS_AS(gen_birefringence(f, 0.0, 1, 0), InvalidArgument);
    CHECK_THROWS_AS(gen_birefringence(f, 30.0, 1, 0), InvalidArgument);
  }

  TEST_CASE("birefringence realization JSON round trip")
  {
    FiberSpec f;
    f.length_km = 12.0;
    f.pmd_ps_per_sqrt_km = 0.1;
    BirefringenceRealization r;
    r.seed = 3;
    r.spans.push_back(gen_birefringence(f, 1.0, 3, 0));
    r.spans.push_back(gen_birefringence(f, 1.0, 3, 1));
    const nlohmann::json j = r;
    const auto back = j.get<BirefringenceRealization>();
    REQUIRE(back.spans.size() == 2);
    CHECK(back.spans[1].plates.size() == r.spans[1].plates.size());
    CHECK(back.spans[1].plates[3].rotation == r.spans[1].plates[3].rotation);
    CHECK(back.spans[1].plates[3].length_km == r.spans[1].plates[3].length_km);
    CHECK(nlohmann::json(back) == j);

    auto bad = j;
    bad["spans"][0]["waveplates"][0]["rotation"][0] = {2.0, 0.0};
    CHECK_THROWS_AS(bad.get<BirefringenceRealization>(), InvalidArgument);
  }

  TEST_CASE("waveplates must cover the fiber")
  {
    const FiberSpec f = linear_fiber(10.0);
    const auto in = test::random_signal(64, 64e9, 1);
    CHECK_THROWS_AS(propagate_dpnlse(in, f, fixed_axes(9.0), StepConfig::fixed(1.0)), InvalidArgument);
    CHECK_THROWS_AS(propagate_dpnlse(in, f, BirefringenceSpan{}, StepConfig::fixed(1.0)),
                    InvalidArgument);
  }

  TEST_CASE("amplifier noise")
  {
    const double psd = ase_psd_per_pol(20.0, 5.0, 193.4e12);
    const double h = 6.62607015e-34;
    CHECK(psd == doctest::Approx(h * 193.4e12 / 2.0 * (100.0 * std::pow(10.0, 0.5) - 1.0)).epsilon(1e-12));

    SUBCASE("measured PSD of a single amplifier")
    {
      const auto zero = DualPolSignal::zeros(8192, 100e9, 193.4e12);
      double acc = 0.0;
      const int runs = 20;
      for (int r = 0; r < runs; ++r)
        acc += measure_power(edfa(zero, 20.0, 5.0, derive_seed(3, "edfa", {r}))) / 2.0;
      CHECK(acc / runs / 100e9 == doctest::Approx(psd).epsilon(0.02));
    }
    SUBCASE("noise can be switched off")
    {
      const auto in = test::random_signal(256, 64e9, 2);
      const auto out = edfa(in, 20.0, -std::numeric_limits<double>::infinity(), 1);
      CHECK(measure_power(out) / measure_power(in) == doctest::Approx(100.0).epsilon(1e-12));
    }
    SUBCASE("accumulation over a chain of spans")
    {
      FiberSpec f;
      f.gamma_per_w_km = 0.0;
      f.beta2_ps2_per_km = 0.0;
      const LinkSpec link = LinkSpec::uniform(f, 20, 5.0);
      const auto zero = DualPolSignal::zeros(4096, 128e9, 193.4e12);
      const int runs = 20;
      double acc = 0.0;
      for (int r = 0; r < runs; ++r)
      {
        const auto out = propagate_link(zero, link, ModelSpec{}, StepConfig::fixed(100.0),
                                        LinkSeeds{derive_seed(5, "chain", {r}), 0});
        acc += band_power(out, 0.0, 32e9);
      }
      const double expect = 20.0 * ase_psd_per_pol(20.0, 5.0, 193.4e12) * 2.0 * 32e9;
      CHECK(acc / runs == doctest::Approx(expect).epsilon(0.02));
    }
    CHECK_THROWS_AS(add_white_noise(DualPolSignal::zeros(4, 1.0, 1.0), -1.0, 1), InvalidArgument);
  }

  TEST_CASE("AWGN level for a target SNR")
  {
    // SNR over the symbol-rate bandwidth, both polarizations.
    const double psd = awgn_psd_for_snr(15.0, 1e-3, 32e9);
    CHECK(1e-3 / (psd * 2.0 * 32e9) == doctest::Approx(std::pow(10.0, 1.5)).epsilon(1e-12));
  }

  TEST_CASE("PMD coherence bandwidth")
  {
    CHECK(pmd_coherence_bandwidth(1.0, 18.0) == doctest::Approx(65e9).epsilon(1.0 / 65.0));
    const double low = pmd_coherence_bandwidth(0.05, 18.0);
    CHECK((low >= 1.2e12 && low <= 1.3e12));
    // direct evaluation of sqrt(3 / (4 pi^2 delta^2 L_eff)) in SI
    const double d = 1e-12 / std::sqrt(1e3);
    const double direct = std::sqrt(3.0 / (4.0 * std::numbers::pi * std::numbers::pi * d * d * 18e3));
    CHECK(pmd_coherence_bandwidth(1.0, 18.0) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(std::isinf(pmd_coherence_bandwidth(0.0, 18.0)));
    CHECK(pmd_coherence_bandwidth(1.0, std::numeric_limits<double>::infinity()) == 0.0);
    CHECK_THROWS_AS(pmd_coherence_bandwidth(-1.0, 18.0), InvalidArgument);
    CHECK_THROWS_AS(pmd_coherence_bandwidth(1.0, 0.0), InvalidArgument);
  }

  TEST_CASE("link bookkeeping")
  {
    const LinkSpec link = LinkSpec::uniform(FiberSpec{}, 20, 5.0);
    CHECK(link.length_km() == doctest::Approx(2000.0));
    CHECK(link.accumulated_dispersion_ps2() == doctest::Approx(-42540.0));
    ModelSpec m;
    m.equation = Equation::DpNlse;
    m.pmd_ps_per_sqrt_km = 0.1;
    const auto r = link_birefringence(LinkSpec::uniform(FiberSpec{}, 3, 5.0), m, 9);
    REQUIRE(r.spans.size() == 3);
    CHECK(r.spans[2].span_index == 2);
    CHECK(to_string(Equation::DpNlse) == "dpnlse");
  }

  TEST_CASE("invalid propagation inputs")
  {
    FiberSpec f;
    auto in = test::random_signal(64, 64e9, 1, 1e-3);
    in.x_mut()[0] = Complex(std::numeric_limits<double>::infinity(), 0.0);
    CHECK_THROWS_AS(propagate_manakov(in, f, StepConfig::nonlinear_phase(3e-3)), PropagationError);

    // 100 mW in a single 100 km step: several radians of nonlinear phase.
    const auto hot = test::random_signal(64, 64e9, 1, 0.05);
    CHECK_THROWS_AS(propagate_manakov(hot, f, StepConfig::fixed(100.0)), PropagationError);
    CHECK_NOTHROW(propagate_manakov(hot, f, StepConfig::nonlinear_phase(3e-3)));

    f.length_km = -1.0;
    CHECK_THROWS_AS(propagate_manakov(hot, f, StepConfig::fixed(1.0)), InvalidArgument);
    CHECK_THROWS_AS(StepConfig::nonlinear_phase(0.0).validate(), InvalidArgument);
  }

  TEST_CASE("halving the step leaves the received SNR unchanged")
  {
    TxSpec tx;
    tx.n_channels = 3;
    tx.n_symbols = 4096;
    tx.power_dbm = 3.0;
    tx.seed = 12;
    const auto w = build_wdm(tx);
    const LinkSpec link = LinkSpec::uniform(FiberSpec{}, 2, 5.0);
    ModelSpec model;
    auto snr = [&](const StepConfig& step) {
      const auto out = propagate_link(w.signal, link, model, step, LinkSeeds{7, 8});
      return receive_channel(out, w.frame.channel(0), tx.format, tx.symbol_rate, tx.roll_off,
                             tx.spacing, link.accumulated_dispersion_ps2())
          .snr_db;
    };
    const StepConfig coarse_step;
    const double coarse = snr(coarse_step);
    const double fine = snr(StepConfig::local_error(coarse_step.first_step_km / 2, coarse_step.max_step_km / 2));
    CHECK(std::abs(coarse - fine) < 0.02);
  }

  TEST_CASE("local-error step grid")
  {
    FiberSpec f; // 100 km at 0.2 dB/km
    const auto in = test::random_signal(256, 64e9, 3, 1e-3);
    PropagationStats st;
    propagate_manakov(in, f, StepConfig::local_error(0.1, 10.0), &st);
    // steps grow as exp(a z / 3): their count is the integral of 1 / dz
    const double a = f.alpha_db_per_km / (10.0 * std::log10(std::exp(1.0)));
    const double expect = 3.0 / a * (1.0 - std::exp(-a * f.length_km / 3.0)) / 0.1;
    CHECK(std::abs(static_cast<double>(st.steps) - expect) <= 1.0);

    // The grid does not depend on the launch power.
    PropagationStats hot;
    propagate_manakov(test::random_signal(256, 64e9, 3, 1e-2), f, StepConfig::local_error(0.1, 10.0), &hot);
    CHECK(hot.steps == st.steps);

    // Waveplate edges do not add kicks.
    f.pmd_ps_per_sqrt_km = 1.0;
    PropagationStats dp;
    propagate_dpnlse(in, f, gen_birefringence(f, 0.5, 4, 0), StepConfig::local_error(0.1, 10.0), &dp);
    CHECK(dp.steps == st.steps);
    CHECK_THROWS_AS(StepConfig::local_error(0.0).validate(), InvalidArgument);
  }
}
