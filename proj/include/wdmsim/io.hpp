// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wdmsim/signal.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace wdmsim {

enum class Precision
{
  Single,
  Double
};

Precision parse_precision(std::string_view text);
std::string to_string(Precision p);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Little-endian interleaved xRe, xIm, yRe, yIm samples as float32 or
/// float64. The sidecar JSON written next to it (path + ".json") records
/// sample_rate_hz, center_frequency_hz, n_samples and precision.
std::string encode_signal(const DualPolSignal& sig, Precision precision);
DualPolSignal decode_signal(std::string_view bytes, double sample_rate, double center_frequency,
                            Precision precision);
nlohmann::json signal_sidecar(const DualPolSignal& sig, Precision precision);

/// Same layout for symbol sequences (one value per symbol and polarization).
std::string encode_symbols(std::span<const Complex> x, std::span<const Complex> y, Precision precision);

/// Collects every file a command writes so the manifest can list it with its
/// hash. Paths in the inventory are relative to the output directory.
class OutputDir
{
public:
  /// Creates the directory if needed.
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const std::string& relative) const { return root_ / relative; }

  /// Writes (replacing) a file and records its hash.
  void write(const std::string& relative, std::string_view contents);
  /// Records a file produced by other means (e.g. an append-only journal).
  void track(const std::string& relative);
  void forget(const std::string& relative);

  /// [{path, bytes, sha256}] sorted by path.
  nlohmann::json inventory() const;

private:
  std::filesystem::path root_;
  std::map<std::string, std::pair<std::uintmax_t, std::string>> files_;
};

struct RunManifest
{
  std::string software_version;
  std::string command;
  std::string config_sha256;
  nlohmann::json config; ///< normalized
  std::uint64_t master_seed = 0;
  nlohmann::json derived_seeds;
  int workers = 1;
  std::string precision;
  std::string started_utc;
  std::string finished_utc;
  std::string status;
  nlohmann::json outputs;
};

void to_json(nlohmann::json& j, const RunManifest& m);

/// ISO-8601 UTC timestamp of now.
std::string utc_timestamp();

} // namespace wdmsim
