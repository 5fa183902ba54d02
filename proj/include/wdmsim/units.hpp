// SPDX-License-Identifier: Apache-2.0
//
// Unit conventions. Internally the propagation kernels work in SI (s, m, W,
// Hz); configuration and reports use the customary fiber-optics units below.
#pragma once

#include <cmath>
#include <numbers>

namespace wdmsim::units {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kReferenceCenterFrequency = 193.4e12; // Hz

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double dbm_to_watt(double dbm) { return 1e-3 * db_to_linear(dbm); }
inline double watt_to_dbm(double w) { return linear_to_db(w / 1e-3); }

/// Power attenuation coefficient: dB/km to 1/m (field decays with half of it).
inline double alpha_db_per_km_to_per_m(double alpha_db_km)
{
  return alpha_db_km * std::numbers::ln10 / 10.0 / 1e3;
}

inline double alpha_per_m_to_db_per_km(double alpha_m)
{
  return alpha_m * 1e3 * 10.0 / std::numbers::ln10;
}

/// ps^2/km to s^2/m.
inline double beta2_to_si(double beta2_ps2_km) { return beta2_ps2_km * 1e-27; }

/// 1/(W km) to 1/(W m).
inline double gamma_to_si(double gamma_w_km) { return gamma_w_km * 1e-3; }

inline double wavelength_of(double frequency_hz) { return kSpeedOfLight / frequency_hz; }

/// Dispersion parameter D [ps/(nm km)] at wavelength [m] to beta2 [ps^2/km].
/// beta2 = -D lambda^2 / (2 pi c). Throws InvalidArgument for lambda <= 0.
double dispersion_to_beta2(double d_ps_nm_km, double wavelength_m);

/// Inverse of dispersion_to_beta2.
double beta2_to_dispersion(double beta2_ps2_km, double wavelength_m);

} // namespace wdmsim::units
