// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/birefringence.hpp"

#include "wdmsim/error.hpp"
#include "wdmsim/fiber.hpp"
#include "wdmsim/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>

namespace wdmsim {

Jones jones_identity() { return {Complex{1.0, 0.0}, Complex{}, Complex{}, Complex{1.0, 0.0}}; }

Jones jones_multiply(const Jones& a, const Jones& b)
{
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Jones jones_adjoint(const Jones& a)
{
  return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])};
}

double unitarity_error(const Jones& u)
{
  const Jones p = jones_multiply(jones_adjoint(u), u);
  const Jones id = jones_identity();
  double acc = 0.0;
  for (int i = 0; i < 4; ++i)
    acc += std::norm(p[i] - id[i]);
  return std::sqrt(acc);
}

double BirefringenceSpan::length_km() const
{
  double acc = 0.0;
  for (const auto& p : plates)
    acc += p.length_km;
  return acc;
}

Jones BirefringenceSpan::carrier_transfer() const
{
  Jones t = jones_identity();
  for (const auto& p : plates)
    t = jones_multiply(p.rotation, t);
  return t;
}

double section_dgd_ps(double pmd_ps_sqrt_km, double length_km)
{
  return std::sqrt(3.0 * std::numbers::pi / 8.0) * pmd_ps_sqrt_km * std::sqrt(length_km);
}

Jones random_rotation(std::uint64_t key)
{
  CounterRng rng(key);
  double q[4];
  double norm = 0.0;
  do
  {
    norm = 0.0;
    for (double& v : q)
    {
      v = rng.normal();
      norm += v * v;
    }
  } while (norm < 1e-300);
  norm = std::sqrt(norm);
  const double a = q[0] / norm, b = q[1] / norm, c = q[2] / norm, d = q[3] / norm;
  return {Complex{a, b}, Complex{c, d}, Complex{-c, d}, Complex{a, -b}};
}

BirefringenceSpan gen_birefringence(const FiberSpec& fiber, double mean_section_km,
                                    std::uint64_t seed, int span_index)
{
  if (!(mean_section_km > 0.0) || mean_section_km > fiber.length_km)
    throw InvalidArgument("mean waveplate length must be in (0, fiber length]");

  BirefringenceSpan span;
  span.seed = seed;
  span.span_index = span_index;
  double placed = 0.0;
  for (int section = 0; placed < fiber.length_km; ++section)
  {
    CounterRng len_rng(derive_seed(seed, "biref-length", {span_index, section}));
    double len = mean_section_km * (0.5 + len_rng.uniform());
    const double remaining = fiber.length_km - placed;
    if (len >= remaining)
      len = remaining;

    Waveplate plate;
    plate.length_km = len;
    plate.dgd_ps = section_dgd_ps(fiber.pmd_ps_per_sqrt_km, len);
    plate.rotation = random_rotation(derive_seed(seed, "biref-rotation", {span_index, section}));
    span.plates.push_back(plate);
    placed += len;
    if (len == remaining)
      break;
  }
  return span;
}

Jones span_transfer(const BirefringenceSpan& span, double omega)
{
  Jones t = jones_identity();
  for (const auto& p : span.plates)
  {
    const double half = omega * p.dgd_ps * 1e-12 / 2.0;
    const Jones d = {std::polar(1.0, -half), Complex{}, Complex{}, std::polar(1.0, half)};
    t = jones_multiply(d, jones_multiply(p.rotation, t));
  }
  return t;
}

double differential_group_delay_ps(const BirefringenceSpan& span, double omega)
{
  // Step well inside the PMD coherence bandwidth of any realistic span.
  const double dw = 2.0 * std::numbers::pi * 1e6;
  const Jones tp = span_transfer(span, omega + dw);
  const Jones tm = span_transfer(span, omega - dw);
  const Jones t0 = span_transfer(span, omega);
  Jones deriv;
  for (int i = 0; i < 4; ++i)
    deriv[i] = (tp[i] - tm[i]) / (2.0 * dw);
  const Jones m = jones_multiply(deriv, jones_adjoint(t0));
  // i T' T^H is Hermitian and traceless up to a common delay; its eigenvalue
  // split is the DGD.
  const Complex a = Complex{0, 1} * m[0], d = Complex{0, 1} * m[3];
  const Complex b = Complex{0, 1} * m[1];
  const double diff = (a - d).real();
  return 2.0 * std::sqrt(diff * diff / 4.0 + std::norm(b)) * 1e12;
}

void to_json(nlohmann::json& j, const Waveplate& w)
{
  auto entry = [](const Complex& c) { return nlohmann::json::array({c.real(), c.imag()}); };
  j = {{"length_km", w.length_km},
       {"dgd_ps", w.dgd_ps},
       {"rotation", {entry(w.rotation[0]), entry(w.rotation[1]), entry(w.rotation[2]), entry(w.rotation[3])}}};
}

void from_json(const nlohmann::json& j, Waveplate& w)
{
  w.length_km = j.at("length_km").get<double>();
  w.dgd_ps = j.at("dgd_ps").get<double>();
  const auto& rot = j.at("rotation");
  if (!rot.is_array() || rot.size() != 4)
    throw InvalidArgument("waveplate rotation must list four complex Jones entries");
  for (std::size_t i = 0; i < 4; ++i)
    w.rotation[i] = Complex{rot[i].at(0).get<double>(), rot[i].at(1).get<double>()};
  if (!(w.length_km > 0.0))
    throw InvalidArgument("waveplate length must be positive");
  if (unitarity_error(w.rotation) > 1e-9)
    throw InvalidArgument("waveplate rotation is not unitary");
}

void to_json(nlohmann::json& j, const BirefringenceSpan& s)
{
  j = {{"seed", s.seed}, {"span_index", s.span_index}, {"waveplates", s.plates}};
}

void from_json(const nlohmann::json& j, BirefringenceSpan& s)
{
  s.seed = j.at("seed").get<std::uint64_t>();
  s.span_index = j.at("span_index").get<int>();
  s.plates = j.at("waveplates").get<std::vector<Waveplate>>();
}

void to_json(nlohmann::json& j, const BirefringenceRealization& r)
{
  j = {{"seed", r.seed}, {"spans", r.spans}};
}

void from_json(const nlohmann::json& j, BirefringenceRealization& r)
{
  r.seed = j.at("seed").get<std::uint64_t>();
  r.spans = j.at("spans").get<std::vector<BirefringenceSpan>>();
}

} // namespace wdmsim
