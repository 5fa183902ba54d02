// SPDX-License-Identifier: Apache-2.0
//
// Coarse-step birefringence: a fiber is a concatenation of waveplates, each
// entered through a random polarization scattering (Jones rotation) and then
// behaving as a linearly birefringent section with a fixed DGD.
#pragma once

#include "wdmsim/aligned.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <vector>

namespace wdmsim {

struct FiberSpec;

/// Row-major 2x2 complex matrix {m00, m01, m10, m11}.
using Jones = std::array<Complex, 4>;

Jones jones_identity();
Jones jones_multiply(const Jones& a, const Jones& b);
Jones jones_adjoint(const Jones& a);
/// Frobenius norm of U^H U - I.
double unitarity_error(const Jones& u);

struct Waveplate
{
  double length_km = 0.0;
  double dgd_ps = 0.0;
  Jones rotation = jones_identity(); ///< applied on entry to the section
};

/// Waveplates of one span.
struct BirefringenceSpan
{
  std::uint64_t seed = 0;
  int span_index = 0;
  std::vector<Waveplate> plates;

  double length_km() const;
  /// Jones matrix at the carrier (omega = 0), i.e. the product of rotations.
  Jones carrier_transfer() const;
};

/// All spans of one Monte-Carlo draw.
struct BirefringenceRealization
{
  std::uint64_t seed = 0;
  std::vector<BirefringenceSpan> spans;
};

/// DGD of a section: sqrt(3 pi / 8) * pmd * sqrt(length), so that the mean
/// end-to-end DGD of many sections is pmd * sqrt(total length).
double section_dgd_ps(double pmd_ps_sqrt_km, double length_km);

/// Haar-distributed SU(2) rotation from four normal draws.
Jones random_rotation(std::uint64_t key);

/// Draws the waveplates of one span. Section lengths are uniform in
/// [0.5, 1.5] * mean_section_km, the last one truncated to end on the span
/// length. Fully determined by (seed, span_index).
/// Throws InvalidArgument unless 0 < mean_section_km <= fiber length.
BirefringenceSpan gen_birefringence(const FiberSpec& fiber, double mean_section_km,
                                    std::uint64_t seed, int span_index);

/// Jones transfer matrix of the span at baseband angular frequency omega
/// (rad/s): each plate applies its rotation, then diag(e^{-i w dgd/2}, e^{+i w dgd/2}).
Jones span_transfer(const BirefringenceSpan& span, double omega);

/// DGD (ps) at omega from the eigenvalues of i T' T^H, T' by central
/// differences.
double differential_group_delay_ps(const BirefringenceSpan& span, double omega = 0.0);

void to_json(nlohmann::json& j, const Waveplate& w);
void from_json(const nlohmann::json& j, Waveplate& w);
void to_json(nlohmann::json& j, const BirefringenceSpan& s);
void from_json(const nlohmann::json& j, BirefringenceSpan& s);
void to_json(nlohmann::json& j, const BirefringenceRealization& r);
void from_json(const nlohmann::json& j, BirefringenceRealization& r);

} // namespace wdmsim
