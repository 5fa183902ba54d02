// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration: sweeps, Monte-Carlo ensembles and the PMD-only
// eye study.
//
// Seeding is paired. For a scenario with master seed S:
//   data bits     channel_bits(S, m, pol, ...)        (every point)
//   ASE           derive_seed(S, "ase")                (every point)
//   birefringence derive_seed(S, "biref", {k})         (realization k)
// so runs that differ only in model or launch power see the same bits, noise
// and waveplates.
#pragma once

#include "wdmsim/fiber.hpp"
#include "wdmsim/rx.hpp"
#include "wdmsim/tx.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace wdmsim {

struct HistogramStudySpec
{
  double length_km = 23.0;
  double pmd_ps_per_sqrt_km = 5.0;
  int n_symbols = 20000;
  int n_phases = 24;
  Format format = Format::QPSK;
  /// Dispersion of the CD-only reference run over the same length.
  double beta2_ps2_per_km = -21.27;
  int realization = 0;
};

struct ExperimentSpec
{
  std::vector<double> powers_dbm;
  std::vector<int> channel_counts;
  int n_mc_realizations = 10;
  /// Model variants swept side by side; empty means the scenario model only.
  std::vector<ModelSpec> models;
  HistogramStudySpec histogram;
};

struct ScenarioConfig
{
  std::string id = "scenario";
  std::uint64_t master_seed = 1;
  TxSpec tx;
  /// 0 selects wdm_samples_per_symbol for each run.
  int samples_per_symbol = 0;
  LinkSpec link;
  ModelSpec model;
  StepConfig step;
  ReceiverConfig rx;
  ExperimentSpec experiment;

  /// Models compared by sweeps: experiment.models, or {model} if empty.
  std::vector<ModelSpec> sweep_models() const;
};

/// One fully specified run of a scenario.
struct RunPoint
{
  ModelSpec model;
  int n_channels = 1;
  double p_ch_dbm = 0.0;
  int realization = 0;

  /// Stable identity used by checkpoints.
  std::string key() const;
};

struct SweepRecord
{
  std::string scenario_id;
  std::string model;
  double delta_pmd_ps_sqrtkm = 0.0;
  int n_channels = 0;
  double p_ch_dbm = 0.0;
  int realization = 0;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  /// Birefringence stream seed of the run (the other streams follow from the master seed).
  std::uint64_t seed = 0;
  double runtime_s = 0.0;
  bool ok = false;
  std::string error;
};

std::uint64_t realization_seed(std::uint64_t master_seed, int realization);
LinkSeeds link_seeds(std::uint64_t master_seed, int realization);
std::string model_label(const ModelSpec& model);

/// Receiver-side artefacts of a single run, filled when requested.
struct RunArtifacts
{
  std::optional<DualPolSignal> received;
  SnrReport report;
  EqualizerResult equalized;
};

/// TX -> link -> RX for the central channel. Propagation and receiver errors
/// are caught and recorded in the returned record (ok = false).
SweepRecord run_single(const ScenarioConfig& cfg, const RunPoint& point,
                       RunArtifacts* artifacts = nullptr);

/// Append-only journal of completed runs, one JSON object per line. Records
/// already present are returned by lookup() and not recomputed.
class Checkpoint
{
public:
  /// Opens (and loads) the journal. Lines written under a different
  /// config_hash are ignored.
  Checkpoint(std::string path, std::string config_hash);
  std::optional<SweepRecord> lookup(const std::string& key) const;
  void append(const std::string& key, const SweepRecord& rec);
  const std::string& path() const { return path_; }
  std::size_t size() const;

private:
  std::string path_;
  std::string hash_;
  mutable std::mutex mutex_;
  std::map<std::string, SweepRecord> done_;
};

struct RunContext
{
  int workers = 1;
  Checkpoint* checkpoint = nullptr;
  /// Called once per finished run, serialized.
  std::function<void(const SweepRecord&)> on_record;
};

/// Runs every point in a pool of ctx.workers threads. The output is in point
/// order whatever the completion order.
std::vector<SweepRecord> run_points(const ScenarioConfig& cfg, const std::vector<RunPoint>& points,
                                    const RunContext& ctx = {});

/// One row per (model, power); models from cfg.sweep_models().
std::vector<SweepRecord> run_power_sweep(const ScenarioConfig& cfg, const std::vector<double>& powers_dbm,
                                         const RunContext& ctx = {});

struct McSummary
{
  std::vector<double> snr_db;
  std::vector<double> cumulative_mean;
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double std_dev = 0.0;
};

/// Statistics over completed realizations in the given order.
McSummary summarize_realizations(const std::vector<double>& snr_db);

struct McResult
{
  std::vector<SweepRecord> records;
  McSummary summary; ///< completed realizations only
};

/// Realizations 0..n-1 of cfg.model at cfg.tx.power_dbm.
/// Throws InvalidArgument unless cfg.model is the coupled NLSE.
McResult run_mc_pmd(const ScenarioConfig& cfg, int n_realizations, const RunContext& ctx = {});

struct LogFit
{
  /// SNR_dB = intercept + slope * log10(bandwidth / 1 Hz).
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

/// Least-squares fit over (bandwidth Hz, SNR dB) points.
/// Throws InvalidArgument for fewer than 3 points, fewer than 3 distinct
/// bandwidths or non-positive bandwidths.
LogFit fit_log_bandwidth(const std::vector<std::pair<double, double>>& points);

struct BandwidthResult
{
  std::vector<SweepRecord> records;
  /// Per model label; absent when fewer than 3 points of that model succeeded.
  std::map<std::string, LogFit> fits;
};

/// One row per (model, channel count) at cfg.tx.power_dbm.
/// Throws InvalidArgument for even counts or a comb that exceeds the sample rate.
BandwidthResult run_bandwidth_sweep(const ScenarioConfig& cfg, const std::vector<int>& channel_counts,
                                    const RunContext& ctx = {});

struct HistogramStudy
{
  EyeHistogram back_to_back;
  EyeHistogram pmd_only;
  EyeHistogram cd_only;
  double dgd_ps = 0.0; ///< realized DGD of the fiber at the carrier
};

/// Single channel, no loss, no Kerr effect. The PMD-only output is
/// de-rotated by the realization's carrier Jones matrix so only the
/// frequency-dependent part remains; every case is matched-filtered and
/// scaled by the same back-to-back factor before histogramming.
HistogramStudy run_pmd_only_histogram(const HistogramStudySpec& spec, std::uint64_t master_seed,
                                      double symbol_rate = 32e9, double roll_off = 0.15,
                                      HistogramBins bins = {});

/// CSV with the header
/// scenario_id,model,delta_pmd_ps_sqrtkm,n_channels,p_ch_dbm,realization,snr_db,seed
/// (failed rows carry snr_db = nan). Numbers are printed round-trip exact.
void write_records_csv(std::ostream& os, const std::vector<SweepRecord>& records);
/// Wall-clock companion of the records file, keyed by the same columns.
void write_timings_csv(std::ostream& os, const std::vector<SweepRecord>& records);

void to_json(nlohmann::json& j, const SweepRecord& r);
void from_json(const nlohmann::json& j, SweepRecord& r);
void to_json(nlohmann::json& j, const LogFit& f);

/// Round-trip decimal representation used in every CSV.
std::string format_number(double v);

} // namespace wdmsim
