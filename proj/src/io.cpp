// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/io.hpp"

#include "wdmsim/error.hpp"

#include <openssl/evp.h>

#include <bit>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <memory>
#include <sstream>

namespace wdmsim {

static_assert(std::endian::native == std::endian::little, "dump encoding assumes a little-endian host");

Precision parse_precision(std::string_view text)
{
  if (text == "single")
    return Precision::Single;
  if (text == "double")
    return Precision::Double;
  throw InvalidArgument("precision must be 'single' or 'double', got '" + std::string(text) + "'");
}

std::string to_string(Precision p) { return p == Precision::Single ? "single" : "double"; }

std::string sha256_hex(std::string_view bytes)
{
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i)
  {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

namespace {

template <typename T>
void put(std::string& out, T v)
{
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_sample(std::string& out, Complex x, Complex y, Precision p)
{
  if (p == Precision::Single)
  {
    put(out, static_cast<float>(x.real()));
    put(out, static_cast<float>(x.imag()));
    put(out, static_cast<float>(y.real()));
    put(out, static_cast<float>(y.imag()));
  }
  else
  {
    put(out, x.real());
    put(out, x.imag());
    put(out, y.real());
    put(out, y.imag());
  }
}

} // namespace

std::string encode_signal(const DualPolSignal& sig, Precision precision)
{
  return encode_symbols(sig.x(), sig.y(), precision);
}

std::string encode_symbols(std::span<const Complex> x, std::span<const Complex> y, Precision precision)
{
  if (x.size() != y.size())
    throw InvalidArgument("polarizations differ in length");
  std::string out;
  out.reserve(x.size() * 4 * (precision == Precision::Single ? 4 : 8));
  for (std::size_t i = 0; i < x.size(); ++i)
    put_sample(out, x[i], y[i], precision);
  return out;
}

DualPolSignal decode_signal(std::string_view bytes, double sample_rate, double center_frequency,
                            Precision precision)
{
  const std::size_t width = precision == Precision::Single ? 4 : 8;
  if (bytes.empty() || bytes.size() % (4 * width) != 0)
    throw InvalidArgument("dump size is not a whole number of dual-polarization samples");
  const std::size_t n = bytes.size() / (4 * width);
  CVector x(n), y(n);
  auto get = [&](std::size_t idx) {
    if (precision == Precision::Single)
    {
      float f;
      std::memcpy(&f, bytes.data() + idx * 4, 4);
      return static_cast<double>(f);
    }
    double d;
    std::memcpy(&d, bytes.data() + idx * 8, 8);
    return d;
  };
  for (std::size_t i = 0; i < n; ++i)
  {
    x[i] = {get(4 * i), get(4 * i + 1)};
    y[i] = {get(4 * i + 2), get(4 * i + 3)};
  }
  return {std::move(x), std::move(y), sample_rate, center_frequency};
}

nlohmann::json signal_sidecar(const DualPolSignal& sig, Precision precision)
{
  return {{"sample_rate_hz", sig.sample_rate()},
          {"center_frequency_hz", sig.center_frequency()},
          {"n_samples", sig.size()},
          {"precision", to_string(precision)},
          {"layout", "little-endian interleaved x_re, x_im, y_re, y_im"}};
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root))
{
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec || !std::filesystem::is_directory(root_))
    throw Error("cannot create output directory " + root_.string());
}

void OutputDir::write(const std::string& relative, std::string_view contents)
{
  const auto p = path(relative);
  if (p.has_parent_path())
    std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out)
    throw Error("cannot write " + p.string());
  files_[relative] = {contents.size(), sha256_hex(contents)};
}

void OutputDir::track(const std::string& relative)
{
  const auto p = path(relative);
  files_[relative] = {std::filesystem::file_size(p), sha256_file(p)};
}

void OutputDir::forget(const std::string& relative) { files_.erase(relative); }

nlohmann::json OutputDir::inventory() const
{
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [rel, info] : files_)
    out.push_back({{"path", rel}, {"bytes", info.first}, {"sha256", info.second}});
  return out;
}

void to_json(nlohmann::json& j, const RunManifest& m)
{
  j = {{"software_version", m.software_version},
       {"command", m.command},
       {"config_sha256", m.config_sha256},
       {"config", m.config},
       {"master_seed", m.master_seed},
       {"derived_seeds", m.derived_seeds},
       {"workers", m.workers},
       {"precision", m.precision},
       {"started_utc", m.started_utc},
       {"finished_utc", m.finished_utc},
       {"status", m.status},
       {"outputs", m.outputs}};
}

std::string utc_timestamp()
{
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace wdmsim
