// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wdmsim/birefringence.hpp"
#include "wdmsim/signal.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace wdmsim {

struct FiberSpec
{
  double length_km = 100.0;
  double alpha_db_per_km = 0.2;
  double beta2_ps2_per_km = -21.27;
  double gamma_per_w_km = 1.3;
  double pmd_ps_per_sqrt_km = 0.0;
  double effective_area_um2 = 80.0; ///< informational only

  void validate() const;
  double span_loss_db() const { return alpha_db_per_km * length_km; }
  /// (1 - exp(-a L)) / a with a the power attenuation in 1/km; L when a = 0.
  double effective_length_km() const;
};

struct EdfaSpec
{
  std::optional<double> gain_db; ///< unset: recover the preceding span loss
  double noise_figure_db = 5.0;
  bool noise = true;
};

struct SpanSpec
{
  FiberSpec fiber;
  EdfaSpec edfa;
};

struct LinkSpec
{
  std::vector<SpanSpec> spans;

  static LinkSpec uniform(const FiberSpec& fiber, int n_spans, double noise_figure_db);
  /// Sum of beta2 * L over all spans in ps^2.
  double accumulated_dispersion_ps2() const;
  double length_km() const;
};

struct StepConfig
{
  enum class Policy
  {
    Fixed,
    NonlinearPhase,
    /// dz(z) = first_step_km * exp(alpha z / 3): the local error of the
    /// symmetric scheme on inter-channel mixing scales as P dz^3, so this
    /// keeps it constant along the span. The grid does not depend on the
    /// launch power, and neither does the relative error of the computed
    /// nonlinear interference.
    LocalError
  };

  Policy policy = Policy::LocalError;
  double fixed_step_km = 0.1;
  /// Bound on gamma_eff * P_mean * dz_eff per step (NonlinearPhase).
  double max_phase_rad = 3e-3;
  /// Upper bound on any step; also used when the nonlinearity is off.
  double max_step_km = 1.0;
  double first_step_km = 0.1; ///< LocalError

  void validate() const;
  static StepConfig fixed(double dz_km);
  static StepConfig nonlinear_phase(double phi_max_rad, double max_step_km = 1.0);
  static StepConfig local_error(double first_step_km, double max_step_km = 1.0);
};

/// Per-step nonlinear phase above which a step is rejected as too coarse.
inline constexpr double kMaxStepNonlinearPhase = 0.3;

struct PropagationStats
{
  std::size_t steps = 0;
  double max_step_phase_rad = 0.0;
};

/// Symmetrized split-step solution of the Manakov equation,
///   dA/dz = -a/2 A - i b2/2 d2A/dt2 + i (8/9) g |A|^2 A,
/// with the Kerr phase applied identically to both polarizations.
/// Throws PropagationError when a step would exceed kMaxStepNonlinearPhase or
/// the field stops being finite.
DualPolSignal propagate_manakov(const DualPolSignal& sig, const FiberSpec& fiber,
                                const StepConfig& step, PropagationStats* stats = nullptr);

/// Coarse-step coupled NLSE. Each waveplate is entered through its rotation,
/// its DGD is applied as exp(-/+ i w dgd/2) on the two local axes, and the
/// local Kerr phases are g (|x|^2 + 2/3 |y|^2) and g (|y|^2 + 2/3 |x|^2).
/// Kicks sit on the same grid as in propagate_manakov; between kicks the
/// linear operator crosses waveplate edges exactly, and a kick acts in the
/// frame of the waveplate that contains it.
/// Throws InvalidArgument if the realization length differs from the fiber.
DualPolSignal propagate_dpnlse(const DualPolSignal& sig, const FiberSpec& fiber,
                               const BirefringenceSpan& plates, const StepConfig& step,
                               PropagationStats* stats = nullptr);

/// Per-polarization ASE PSD (W/Hz): (h f0 / 2) (G F - 1).
double ase_psd_per_pol(double gain_db, double noise_figure_db, double center_frequency);

/// Adds circular white Gaussian noise of the given per-polarization PSD over
/// the full simulated band (variance per sample = psd * sample_rate).
DualPolSignal add_white_noise(const DualPolSignal& sig, double psd_per_pol, std::uint64_t seed);

/// Lumped amplifier: field scaled by sqrt(G) plus ASE at the signal's
/// center frequency. nf_db = -infinity disables the noise.
/// Throws InvalidArgument for gain_db < 0.
DualPolSignal edfa(const DualPolSignal& sig, double gain_db, double nf_db, std::uint64_t seed);

/// Noise PSD per polarization giving the requested SNR for a channel of
/// power channel_power_w, i.e. SNR = P / (2 psd Rs).
double awgn_psd_for_snr(double snr_db, double channel_power_w, double symbol_rate);

/// PMD coherence bandwidth sqrt(3 / (4 pi^2 pmd^2 L_eff)) in Hz.
/// pmd = 0 returns +infinity; negative arguments or L_eff <= 0 throw.
double pmd_coherence_bandwidth(double pmd_ps_sqrt_km, double effective_length_km);

enum class Equation
{
  Manakov,
  DpNlse
};

std::string to_string(Equation eq);

/// Propagation model of a run: the equation and, for the coupled NLSE, the PMD
/// coefficient that overrides the fiber's own value.
struct ModelSpec
{
  Equation equation = Equation::Manakov;
  double pmd_ps_per_sqrt_km = 0.0;
  double mean_section_km = 1.0;
};

struct LinkSeeds
{
  std::uint64_t ase = 0;   ///< span i uses derive_seed(ase, "ase", {i})
  std::uint64_t biref = 0; ///< span i uses gen_birefringence(..., biref, i)
};

/// Propagates through every span followed by its amplifier.
DualPolSignal propagate_link(const DualPolSignal& sig, const LinkSpec& link,
                             const ModelSpec& model, const StepConfig& step,
                             const LinkSeeds& seeds, PropagationStats* stats = nullptr);

/// The realization propagate_link would draw for the given model and seeds.
BirefringenceRealization link_birefringence(const LinkSpec& link, const ModelSpec& model,
                                            std::uint64_t biref_seed);

} // namespace wdmsim
