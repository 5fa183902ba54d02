// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/fiber.hpp"

#include "wdmsim/error.hpp"
#include "wdmsim/fft.hpp"
#include "wdmsim/rng.hpp"
#include "wdmsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wdmsim {

void FiberSpec::validate() const
{
  if (!(length_km > 0.0))
    throw InvalidArgument("fiber length must be positive");
  if (!(alpha_db_per_km >= 0.0))
    throw InvalidArgument("fiber attenuation must be non-negative");
  if (!(gamma_per_w_km >= 0.0))
    throw InvalidArgument("fiber nonlinear coefficient must be non-negative");
  if (!(pmd_ps_per_sqrt_km >= 0.0))
    throw InvalidArgument("fiber PMD coefficient must be non-negative");
  if (!std::isfinite(beta2_ps2_per_km))
    throw InvalidArgument("fiber beta2 must be finite");
}

double FiberSpec::effective_length_km() const
{
  const double a = units::alpha_db_per_km_to_per_m(alpha_db_per_km) * 1e3; // 1/km
  if (a == 0.0)
    return length_km;
  return -std::expm1(-a * length_km) / a;
}

LinkSpec LinkSpec::uniform(const FiberSpec& fiber, int n_spans, double noise_figure_db)
{
  LinkSpec link;
  for (int i = 0; i < n_spans; ++i)
    link.spans.push_back({fiber, EdfaSpec{std::nullopt, noise_figure_db, true}});
  return link;
}

double LinkSpec::accumulated_dispersion_ps2() const
{
  double acc = 0.0;
  for (const auto& s : spans)
    acc += s.fiber.beta2_ps2_per_km * s.fiber.length_km;
  return acc;
}

double LinkSpec::length_km() const
{
  double acc = 0.0;
  for (const auto& s : spans)
    acc += s.fiber.length_km;
  return acc;
}

void StepConfig::validate() const
{
  if (policy == Policy::Fixed && !(fixed_step_km > 0.0))
    throw InvalidArgument("fixed step size must be positive");
  if (policy == Policy::NonlinearPhase && !(max_phase_rad > 0.0 && max_phase_rad <= 0.05))
    throw InvalidArgument("nonlinear phase bound must be in (0, 0.05] rad");
  if (policy == Policy::LocalError && !(first_step_km > 0.0))
    throw InvalidArgument("first step size must be positive");
  if (!(max_step_km > 0.0))
    throw InvalidArgument("maximum step size must be positive");
}

StepConfig StepConfig::fixed(double dz_km)
{
  StepConfig s;
  s.policy = Policy::Fixed;
  s.fixed_step_km = dz_km;
  s.max_step_km = dz_km;
  return s;
}

StepConfig StepConfig::nonlinear_phase(double phi_max_rad, double max_step_km)
{
  StepConfig s;
  s.policy = Policy::NonlinearPhase;
  s.max_phase_rad = phi_max_rad;
  s.max_step_km = max_step_km;
  return s;
}

StepConfig StepConfig::local_error(double first_step_km, double max_step_km)
{
  StepConfig s;
  s.policy = Policy::LocalError;
  s.first_step_km = first_step_km;
  s.max_step_km = max_step_km;
  return s;
}

std::string to_string(Equation eq) { return eq == Equation::Manakov ? "manakov" : "dpnlse"; }

namespace {

// exp(i t) for |t| <= 0.3 (the largest phase a kick may carry, the local
// Kerr phase of the coupled equation included): Taylor series to t^17,
// whose truncation error is below 1e-23.
inline Complex unit_phasor(double t)
{
  const double u = t * t;
  const double c = 1.0 + u * (-1.0 / 2 + u * (1.0 / 24 + u * (-1.0 / 720 + u * (1.0 / 40320 + u * (-1.0 / 3628800 + u * (1.0 / 479001600 + u * (-1.0 / 87178291200.0 + u * (1.0 / 20922789888000.0))))))));
  const double s = t * (1.0 + u * (-1.0 / 6 + u * (1.0 / 120 + u * (-1.0 / 5040 + u * (1.0 / 362880 + u * (-1.0 / 39916800 + u * (1.0 / 6227020800.0 + u * (-1.0 / 1307674368000.0 + u * (1.0 / 355687428096000.0)))))))));
  return {c, s};
}

enum class Kerr
{
  Manakov,
  Coupled
};

/// A stretch of fiber with uniform linear properties, entered through a
/// rotation. Lengths in m, differential group delay per metre in s/m.
struct Section
{
  double start = 0.0;
  double end = 0.0;
  double dgd_per_m = 0.0;
  Jones rotation = jones_identity();
  bool rotates = false;
};

class SplitStepEngine
{
public:
  SplitStepEngine(const DualPolSignal& sig, const FiberSpec& fiber, std::vector<Section> sections,
                  Kerr kerr, const StepConfig& step)
      : n_(sig.size()), fft_(n_), sections_(std::move(sections)), kerr_(kerr), step_(step),
        alpha_(units::alpha_db_per_km_to_per_m(fiber.alpha_db_per_km)),
        beta2_(units::beta2_to_si(fiber.beta2_ps2_per_km)),
        gamma_(units::gamma_to_si(fiber.gamma_per_w_km)),
        length_(fiber.length_km * 1e3), omega_(n_)
  {
    for (std::size_t k = 0; k < n_; ++k)
      omega_[k] = bin_angular_frequency(k, n_, sig.sample_rate());
    gamma_eff_ = kerr_ == Kerr::Manakov ? gamma_ * 8.0 / 9.0 : gamma_;
    // Equally spaced runs of bins: non-negative, then negative frequencies.
    std::size_t split = 1;
    while (split < n_ && omega_[split] > omega_[split - 1])
      ++split;
    runs_ = {{0, split}, {split, n_}};
  }

  DualPolSignal run(const DualPolSignal& sig, PropagationStats* stats)
  {
    CVector x(sig.x().begin(), sig.x().end());
    CVector y(sig.y().begin(), sig.y().end());
    const double input_power = measure_power(sig);
    const double inv_n = 1.0 / static_cast<double>(n_);

    fft_.forward(x);
    fft_.forward(y);
    if (sections_[0].rotates)
      rotate(x, y, sections_[0].rotation);

    // Kicks sit at step midpoints; the linear operator runs from one
    // midpoint to the next and crosses waveplate edges on its own, so the
    // kick grid is the same with and without birefringence.
    double z = 0.0;
    double front = 0.0; // position reached by the linear operator (m)
    PropagationStats local;
    while (z < length_)
    {
      double h = choose_step(z, input_power);
      const bool last = h >= length_ - z;
      if (last)
        h = length_ - z;
      const double mid = z + h / 2.0;
      advance_linear(x, y, front, mid, inv_n);
      front = mid;
      fft_.inverse(x);
      fft_.inverse(y);
      nonlinear(x, y, h, local);
      fft_.forward(x);
      fft_.forward(y);
      z = last ? length_ : z + h;
      ++local.steps;
    }
    advance_linear(x, y, front, length_, inv_n);
    fft_.inverse(x);
    fft_.inverse(y);

    if (stats)
    {
      stats->steps += local.steps;
      stats->max_step_phase_rad = std::max(stats->max_step_phase_rad, local.max_step_phase_rad);
    }
    return {std::move(x), std::move(y), sig.sample_rate(), sig.center_frequency()};
  }

private:
  double choose_step(double z, double input_power) const
  {
    const double max_step = step_.max_step_km * 1e3;
    if (step_.policy == StepConfig::Policy::Fixed)
      return step_.fixed_step_km * 1e3;
    if (step_.policy == StepConfig::Policy::LocalError)
      return std::min(max_step, step_.first_step_km * 1e3 * std::exp(alpha_ * z / 3.0));
    const double power = input_power * std::exp(-alpha_ * z);
    const double rate = gamma_eff_ * power; // rad/m
    if (!(rate > 0.0))
      return max_step;
    return std::min(max_step, step_.max_phase_rad / rate);
  }

  // Linear propagation from `from` to `to`, entering every section whose
  // start is passed. `scale` is applied once.
  void advance_linear(CVector& x, CVector& y, double from, double to, double scale)
  {
    while (true)
    {
      const Section& s = sections_[sec_];
      const bool crosses = to >= s.end && sec_ + 1 < sections_.size();
      apply_linear(x, y, s, (crosses ? s.end : to) - from, scale);
      scale = 1.0;
      if (!crosses)
        return;
      from = s.end;
      ++sec_;
      if (sections_[sec_].rotates)
        rotate(x, y, sections_[sec_].rotation);
    }
  }

  // exp((-alpha/2 + i beta2 w^2/2 -/+ i w dgd'/2) dz), times `scale`. The
  // phase is quadratic in the bin index, so within a run of equally spaced
  // bins it follows from two complex products per bin; every kBlock bins the
  // phasors restart from exact values.
  void apply_linear(CVector& x, CVector& y, const Section& s, double dz, double scale) const
  {
    if (dz == 0.0 && scale == 1.0)
      return;
    const double amp = std::exp(-alpha_ * dz / 2.0) * scale;
    const double disp = beta2_ * dz / 2.0;
    const double dgd = s.dgd_per_m * dz / 2.0;
    const double dw = n_ > 1 ? omega_[1] - omega_[0] : 0.0;
    const Complex curvature = std::polar(1.0, 2.0 * disp * dw * dw);
    auto phase = [&](double w, double sign) { return disp * w * w + sign * w * dgd; };
    auto increment = [&](double w, double sign) {
      return std::polar(1.0, disp * (2.0 * w * dw + dw * dw) + sign * dgd * dw);
    };
    for (const auto& [first, last] : runs_)
    {
      for (std::size_t b = first; b < last; b += kBlock)
      {
        const std::size_t e = std::min(last, b + kBlock);
        const double w = omega_[b];
        Complex fx = std::polar(amp, phase(w, -1.0));
        Complex gx = increment(w, -1.0);
        if (dgd == 0.0)
        {
          for (std::size_t k = b; k < e; ++k)
          {
            x[k] *= fx;
            y[k] *= fx;
            fx *= gx;
            gx *= curvature;
          }
          continue;
        }
        Complex fy = std::polar(amp, phase(w, 1.0));
        Complex gy = increment(w, 1.0);
        for (std::size_t k = b; k < e; ++k)
        {
          x[k] *= fx;
          y[k] *= fy;
          fx *= gx;
          fy *= gy;
          gx *= curvature;
          gy *= curvature;
        }
      }
    }
  }

  void rotate(CVector& x, CVector& y, const Jones& r) const
  {
    for (std::size_t k = 0; k < n_; ++k)
    {
      const Complex a = x[k];
      const Complex b = y[k];
      x[k] = r[0] * a + r[1] * b;
      y[k] = r[2] * a + r[3] * b;
    }
  }

  void nonlinear(CVector& x, CVector& y, double h, PropagationStats& stats) const
  {
    if (gamma_ == 0.0)
      return;
    // Integral of exp(-alpha s) over the step, relative to the midpoint power.
    const double h_eff = alpha_ > 0.0 ? 2.0 * std::sinh(alpha_ * h / 2.0) / alpha_ : h;
    double max_power = 0.0;
    double total = 0.0; // NaN-propagating, unlike std::max
    for (std::size_t i = 0; i < n_; ++i)
    {
      const double p = std::norm(x[i]) + std::norm(y[i]);
      max_power = std::max(max_power, p);
      total += p;
    }
    const double phase = gamma_eff_ * h_eff * max_power;
    if (!std::isfinite(total) || !std::isfinite(phase))
      throw PropagationError("field became non-finite during propagation");
    stats.max_step_phase_rad = std::max(stats.max_step_phase_rad, phase);
    if (phase > kMaxStepNonlinearPhase)
    {
      std::ostringstream msg;
      msg << "split step too coarse: peak nonlinear phase " << phase << " rad exceeds "
          << kMaxStepNonlinearPhase << " rad";
      throw PropagationError(msg.str());
    }

    if (kerr_ == Kerr::Manakov)
    {
      const double c = gamma_eff_ * h_eff;
      for (std::size_t i = 0; i < n_; ++i)
      {
        const Complex rot = unit_phasor(c * (std::norm(x[i]) + std::norm(y[i])));
        x[i] *= rot;
        y[i] *= rot;
      }
      return;
    }
    const double c = gamma_ * h_eff;
    constexpr double cross = 2.0 / 3.0;
    for (std::size_t i = 0; i < n_; ++i)
    {
      const double px = std::norm(x[i]);
      const double py = std::norm(y[i]);
      x[i] *= unit_phasor(c * (px + cross * py));
      y[i] *= unit_phasor(c * (py + cross * px));
    }
  }

  std::size_t n_;
  Fft fft_;
  std::vector<Section> sections_;
  Kerr kerr_;
  StepConfig step_;
  double alpha_;
  double beta2_;
  double gamma_;
  double gamma_eff_ = 0.0;
  double length_;
  std::vector<double> omega_;
  std::vector<std::pair<std::size_t, std::size_t>> runs_;
  std::size_t sec_ = 0; ///< section the linear operator is in
  static constexpr std::size_t kBlock = 8;
};

void check_finite_input(const DualPolSignal& sig)
{
  if (!sig.is_finite())
    throw PropagationError("input field contains NaN or Inf samples");
}

} // namespace

DualPolSignal propagate_manakov(const DualPolSignal& sig, const FiberSpec& fiber,
                                const StepConfig& step, PropagationStats* stats)
{
  fiber.validate();
  step.validate();
  check_finite_input(sig);
  Section whole;
  whole.end = fiber.length_km * 1e3;
  SplitStepEngine engine(sig, fiber, {whole}, Kerr::Manakov, step);
  auto out = engine.run(sig, stats);
  if (!out.is_finite())
    throw PropagationError("Manakov propagation produced NaN or Inf samples");
  return out;
}

DualPolSignal propagate_dpnlse(const DualPolSignal& sig, const FiberSpec& fiber,
                               const BirefringenceSpan& plates, const StepConfig& step,
                               PropagationStats* stats)
{
  fiber.validate();
  step.validate();
  check_finite_input(sig);
  if (plates.plates.empty())
    throw InvalidArgument("birefringence realization has no waveplates");
  if (std::abs(plates.length_km() - fiber.length_km) > 1e-9 * fiber.length_km)
    throw InvalidArgument("birefringence realization length does not match the fiber length");

  std::vector<Section> sections;
  double start = 0.0;
  for (std::size_t i = 0; i < plates.plates.size(); ++i)
  {
    const Waveplate& p = plates.plates[i];
    if (!(p.length_km > 0.0))
      throw InvalidArgument("waveplate length must be positive");
    Section s;
    s.start = start;
    s.end = i + 1 == plates.plates.size() ? fiber.length_km * 1e3 : start + p.length_km * 1e3;
    s.dgd_per_m = p.dgd_ps * 1e-12 / (p.length_km * 1e3);
    s.rotation = p.rotation;
    s.rotates = true;
    sections.push_back(s);
    start = s.end;
  }
  SplitStepEngine engine(sig, fiber, std::move(sections), Kerr::Coupled, step);
  auto out = engine.run(sig, stats);
  if (!out.is_finite())
    throw PropagationError("coupled NLSE propagation produced NaN or Inf samples");
  return out;
}

double ase_psd_per_pol(double gain_db, double noise_figure_db, double center_frequency)
{
  const double g = units::db_to_linear(gain_db);
  const double f = units::db_to_linear(noise_figure_db);
  return units::kPlanck * center_frequency / 2.0 * std::max(0.0, g * f - 1.0);
}

DualPolSignal add_white_noise(const DualPolSignal& sig, double psd_per_pol, std::uint64_t seed)
{
  if (!(psd_per_pol >= 0.0))
    throw InvalidArgument("noise PSD must be non-negative");
  const double variance = psd_per_pol * sig.sample_rate();
  CVector x(sig.x().begin(), sig.x().end());
  CVector y(sig.y().begin(), sig.y().end());
  if (variance > 0.0)
  {
    CounterRng rx(derive_seed(seed, "noise", {0}));
    CounterRng ry(derive_seed(seed, "noise", {1}));
    for (auto& v : x)
      v += rx.complex_normal(variance);
    for (auto& v : y)
      v += ry.complex_normal(variance);
  }
  return {std::move(x), std::move(y), sig.sample_rate(), sig.center_frequency()};
}

DualPolSignal edfa(const DualPolSignal& sig, double gain_db, double nf_db, std::uint64_t seed)
{
  if (!(gain_db >= 0.0))
    throw InvalidArgument("amplifier gain must be non-negative");
  const double field_gain = std::sqrt(units::db_to_linear(gain_db));
  CVector x(sig.x().begin(), sig.x().end());
  CVector y(sig.y().begin(), sig.y().end());
  for (auto& v : x)
    v *= field_gain;
  for (auto& v : y)
    v *= field_gain;
  DualPolSignal amplified(std::move(x), std::move(y), sig.sample_rate(), sig.center_frequency());
  if (std::isinf(nf_db) && nf_db < 0.0)
    return amplified;
  return add_white_noise(amplified, ase_psd_per_pol(gain_db, nf_db, sig.center_frequency()), seed);
}

double awgn_psd_for_snr(double snr_db, double channel_power_w, double symbol_rate)
{
  return channel_power_w / (2.0 * symbol_rate * units::db_to_linear(snr_db));
}

double pmd_coherence_bandwidth(double pmd_ps_sqrt_km, double effective_length_km)
{
  if (pmd_ps_sqrt_km < 0.0)
    throw InvalidArgument("PMD coefficient must be non-negative");
  if (!(effective_length_km > 0.0))
    throw InvalidArgument("effective length must be positive");
  if (pmd_ps_sqrt_km == 0.0)
    return std::numeric_limits<double>::infinity();
  if (std::isinf(effective_length_km))
    return 0.0;
  const double pi = std::numbers::pi;
  const double inv_ps = std::sqrt(3.0 / (4.0 * pi * pi * pmd_ps_sqrt_km * pmd_ps_sqrt_km * effective_length_km));
  return inv_ps * 1e12;
}

BirefringenceRealization link_birefringence(const LinkSpec& link, const ModelSpec& model,
                                            std::uint64_t biref_seed)
{
  BirefringenceRealization r;
  r.seed = biref_seed;
  for (std::size_t i = 0; i < link.spans.size(); ++i)
  {
    FiberSpec fiber = link.spans[i].fiber;
    fiber.pmd_ps_per_sqrt_km = model.pmd_ps_per_sqrt_km;
    r.spans.push_back(gen_birefringence(fiber, std::min(model.mean_section_km, fiber.length_km),
                                        biref_seed, static_cast<int>(i)));
  }
  return r;
}

DualPolSignal propagate_link(const DualPolSignal& sig, const LinkSpec& link, const ModelSpec& model,
                             const StepConfig& step, const LinkSeeds& seeds, PropagationStats* stats)
{
  DualPolSignal cur = sig;
  for (std::size_t i = 0; i < link.spans.size(); ++i)
  {
    const SpanSpec& span = link.spans[i];
    if (model.equation == Equation::Manakov)
    {
      cur = propagate_manakov(cur, span.fiber, step, stats);
    }
    else
    {
      FiberSpec fiber = span.fiber;
      fiber.pmd_ps_per_sqrt_km = model.pmd_ps_per_sqrt_km;
      const auto plates = gen_birefringence(fiber, std::min(model.mean_section_km, fiber.length_km),
                                            seeds.biref, static_cast<int>(i));
      cur = propagate_dpnlse(cur, fiber, plates, step, stats);
    }
    const double gain = span.edfa.gain_db.value_or(span.fiber.span_loss_db());
    const double nf = span.edfa.noise ? span.edfa.noise_figure_db
                                      : -std::numeric_limits<double>::infinity();
    cur = edfa(cur, gain, nf, derive_seed(seeds.ase, "ase", {static_cast<std::int64_t>(i)}));
  }
  return cur;
}

} // namespace wdmsim
