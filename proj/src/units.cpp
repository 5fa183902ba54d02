// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/units.hpp"

#include "wdmsim/error.hpp"

namespace wdmsim::units {

namespace {

// D [ps/(nm km)] = 1e-6 s/m^2, beta2 [s^2/m] = 1e27 ps^2/km.
constexpr double kDToSi = 1e-6;
constexpr double kBeta2FromSi = 1e27;

void check_wavelength(double wavelength_m)
{
  if (!(wavelength_m > 0.0))
    throw InvalidArgument("wavelength must be positive");
}

} // namespace

double dispersion_to_beta2(double d_ps_nm_km, double wavelength_m)
{
  check_wavelength(wavelength_m);
  const double d_si = d_ps_nm_km * kDToSi;
  return -d_si * wavelength_m * wavelength_m / (2.0 * std::numbers::pi * kSpeedOfLight) * kBeta2FromSi;
}

double beta2_to_dispersion(double beta2_ps2_km, double wavelength_m)
{
  check_wavelength(wavelength_m);
  const double beta2_si = beta2_ps2_km / kBeta2FromSi;
  return -beta2_si * 2.0 * std::numbers::pi * kSpeedOfLight / (wavelength_m * wavelength_m) / kDToSi;
}

} // namespace wdmsim::units
