// SPDX-License-Identifier: Apache-2.0
//
// sim <command> --config <file> --out <dir> [--seed N] [--workers N]
//     [--precision single|double]
//
// Exit status: 0 success, 2 invalid configuration or arguments, 3 runtime
// failure, 4 some runs failed (the checkpoint is kept so a rerun resumes).
#include "wdmsim/config.hpp"
#include "wdmsim/error.hpp"
#include "wdmsim/harness.hpp"
#include "wdmsim/io.hpp"
#include "wdmsim/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#ifndef WDMSIM_VERSION
#define WDMSIM_VERSION "unknown"
#endif

using namespace wdmsim;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitPartial = 4;

const char* const kCheckpointFile = "checkpoint.jsonl";

std::string curve_name(const SweepRecord& r)
{
  if (r.model == "manakov")
    return "manakov";
  return "dpnlse_pmd" + format_number(r.delta_pmd_ps_sqrtkm);
}

std::string records_csv(const std::vector<SweepRecord>& records)
{
  std::ostringstream os;
  write_records_csv(os, records);
  return os.str();
}

std::string timings_csv(const std::vector<SweepRecord>& records)
{
  std::ostringstream os;
  write_timings_csv(os, records);
  return os.str();
}

/// Two-column plot files, one per model curve.
void write_curves(OutputDir& out, const std::vector<SweepRecord>& records, const std::string& x_name,
                  double (*x_of)(const SweepRecord&, const ScenarioConfig&), const ScenarioConfig& cfg)
{
  std::map<std::string, std::string> curves;
  for (const auto& r : records)
  {
    if (!r.ok)
      continue;
    auto& body = curves[curve_name(r)];
    if (body.empty())
      body = x_name + ",snr_db\n";
    body += format_number(x_of(r, cfg)) + "," + format_number(r.snr_db) + "\n";
  }
  for (const auto& [name, body] : curves)
    out.write("curves/" + name + ".csv", body);
}

bool all_ok(const std::vector<SweepRecord>& records)
{
  for (const auto& r : records)
  {
    if (!r.ok)
      return false;
  }
  return true;
}

void report_failures(const std::vector<SweepRecord>& records)
{
  for (const auto& r : records)
  {
    if (!r.ok)
      std::cerr << "run failed (" << r.model << ", " << r.n_channels << " ch, " << r.p_ch_dbm
                << " dBm, realization " << r.realization << "): " << r.error << '\n';
  }
}

int run_power_sweep_cmd(const ScenarioConfig& cfg, OutputDir& out, const RunContext& ctx, json& summary)
{
  if (cfg.experiment.powers_dbm.empty())
    throw ConfigError({"experiment.powers_dbm: required by power-sweep"});
  const auto records = run_power_sweep(cfg, cfg.experiment.powers_dbm, ctx);
  out.write("records.csv", records_csv(records));
  out.write("timings.csv", timings_csv(records));
  write_curves(out, records, "p_ch_dbm", [](const SweepRecord& r, const ScenarioConfig&) { return r.p_ch_dbm; }, cfg);

  json optima = json::object();
  for (const auto& r : records)
  {
    if (!r.ok)
      continue;
    const std::string name = curve_name(r);
    if (!optima.contains(name) || r.snr_db > optima[name]["snr_db"].get<double>())
      optima[name] = {{"p_ch_dbm", r.p_ch_dbm}, {"snr_db", r.snr_db}};
  }
  summary["optimum"] = optima;
  report_failures(records);
  return all_ok(records) ? kExitOk : kExitPartial;
}

int run_mc_cmd(const ScenarioConfig& cfg, OutputDir& out, const RunContext& ctx, json& summary)
{
  const McResult res = run_mc_pmd(cfg, cfg.experiment.n_mc_realizations, ctx);
  out.write("records.csv", records_csv(res.records));
  out.write("timings.csv", timings_csv(res.records));

  std::string cum = "realization,snr_db,cumulative_mean_db\n";
  std::size_t done = 0;
  for (const auto& r : res.records)
  {
    if (!r.ok)
      continue;
    cum += std::to_string(r.realization) + "," + format_number(r.snr_db) + "," +
           format_number(res.summary.cumulative_mean[done++]) + "\n";
  }
  out.write("cumulative.csv", cum);
  summary["mean_snr_db"] = res.summary.mean;
  summary["std_snr_db"] = res.summary.std_dev;
  summary["completed"] = res.summary.snr_db.size();
  summary["requested"] = res.records.size();
  report_failures(res.records);
  return all_ok(res.records) ? kExitOk : kExitPartial;
}

int run_bandwidth_cmd(const ScenarioConfig& cfg, OutputDir& out, const RunContext& ctx, json& summary)
{
  if (cfg.experiment.channel_counts.empty())
    throw ConfigError({"experiment.channel_counts: required by bandwidth-sweep"});
  const BandwidthResult res = run_bandwidth_sweep(cfg, cfg.experiment.channel_counts, ctx);
  out.write("records.csv", records_csv(res.records));
  out.write("timings.csv", timings_csv(res.records));
  write_curves(out, res.records, "bandwidth_ghz",
               [](const SweepRecord& r, const ScenarioConfig& c) { return r.n_channels * c.tx.spacing / 1e9; }, cfg);
  json fits = json::object();
  for (const auto& [label, fit] : res.fits)
    fits[label] = fit;
  out.write("fit.json", fits.dump(2) + "\n");
  summary["fits"] = fits;
  report_failures(res.records);
  return all_ok(res.records) ? kExitOk : kExitPartial;
}

int run_histogram_cmd(const ScenarioConfig& cfg, OutputDir& out, json& summary)
{
  const auto& hs = cfg.experiment.histogram;
  const HistogramStudy study =
      run_pmd_only_histogram(hs, cfg.master_seed, cfg.tx.symbol_rate, cfg.tx.roll_off);
  const std::pair<const char*, const EyeHistogram*> cases[] = {
      {"back_to_back", &study.back_to_back}, {"pmd_only", &study.pmd_only}, {"cd_only", &study.cd_only}};
  json variances = json::object();
  for (const auto& [name, h] : cases)
  {
    json j = *h;
    out.write(std::string("histogram_") + name + ".json", j.dump() + "\n");
    std::ostringstream csv;
    write_histogram_csv(csv, *h);
    out.write(std::string("histogram_") + name + ".csv", csv.str());
    variances[name] = h->optimum_phase_variance();
  }
  summary["optimum_phase_abs_variance"] = variances;
  summary["dgd_ps"] = study.dgd_ps;
  return kExitOk;
}

int run_single_cmd(const ScenarioConfig& cfg, OutputDir& out, Precision precision, json& summary)
{
  RunArtifacts art;
  const RunPoint point{cfg.model, cfg.tx.n_channels, cfg.tx.power_dbm, 0};
  const SweepRecord rec = run_single(cfg, point, &art);
  out.write("records.csv", records_csv({rec}));
  out.write("timings.csv", timings_csv({rec}));
  if (!rec.ok)
  {
    report_failures({rec});
    return kExitRuntime;
  }
  out.write("snr.json", json(art.report).dump(2) + "\n");
  const DualPolSignal& rx = *art.received;
  out.write("signal_rx.bin", encode_signal(rx, precision));
  out.write("signal_rx.bin.json", signal_sidecar(rx, precision).dump(2) + "\n");
  out.write("symbols_equalized.bin", encode_symbols(art.equalized.x, art.equalized.y, precision));
  json side = {{"symbol_rate_hz", cfg.tx.symbol_rate},
               {"n_symbols", art.equalized.x.size()},
               {"precision", to_string(precision)},
               {"ramp_symbols", art.equalized.ramp_symbols},
               {"layout", "little-endian interleaved x_re, x_im, y_re, y_im"}};
  out.write("symbols_equalized.bin.json", side.dump(2) + "\n");
  summary["snr_db"] = art.report.snr_db;
  return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Wide-band WDM coherent link simulator"};
  std::string command, config_path, out_dir, precision_text = "double";
  std::uint64_t seed_override = 0;
  int workers = 1;
  app.add_option("command", command, "power-sweep | mc-pmd | bandwidth-sweep | pmd-histogram | single")
      ->required()
      ->check(CLI::IsMember({"power-sweep", "mc-pmd", "bandwidth-sweep", "pmd-histogram", "single"}));
  app.add_option("--config", config_path, "scenario JSON")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  auto* seed_opt = app.add_option("--seed", seed_override, "override the master seed");
  app.add_option("--workers", workers, "parallel runs")->check(CLI::Range(1, 256));
  app.add_option("--precision", precision_text, "sample format of signal dumps")
      ->check(CLI::IsMember({"single", "double"}));

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  ScenarioConfig cfg;
  try
  {
    cfg = validate_config(config_path);
  }
  catch (const ConfigError& e)
  {
    for (const auto& p : e.problems())
      std::cerr << "config error: " << p << '\n';
    return kExitConfig;
  }
  if (*seed_opt)
    cfg.master_seed = seed_override;
  const Precision precision = parse_precision(precision_text);

  const json normalized = config_to_json(cfg);
  RunManifest manifest;
  manifest.software_version = WDMSIM_VERSION;
  manifest.command = command;
  manifest.config = normalized;
  manifest.config_sha256 = sha256_hex(normalized.dump());
  manifest.master_seed = cfg.master_seed;
  manifest.workers = workers;
  manifest.precision = to_string(precision);
  manifest.started_utc = utc_timestamp();

  json biref = json::array();
  const int n_real = command == "mc-pmd" ? cfg.experiment.n_mc_realizations : 1;
  for (int k = 0; k < n_real; ++k)
    biref.push_back(realization_seed(cfg.master_seed, k));
  manifest.derived_seeds = {{"bits", cfg.master_seed},
                            {"ase", derive_seed(cfg.master_seed, "ase")},
                            {"biref", biref}};

  int rc = kExitOk;
  try
  {
    OutputDir out(out_dir);
    out.write("config.normalized.json", normalized.dump(2) + "\n");

    Checkpoint checkpoint((out.root() / kCheckpointFile).string(), manifest.config_sha256 + "/" + command);
    RunContext ctx;
    ctx.workers = workers;
    ctx.checkpoint = &checkpoint;
    ctx.on_record = [](const SweepRecord& r) {
      std::cerr << r.model << " pmd=" << r.delta_pmd_ps_sqrtkm << " ch=" << r.n_channels
                << " p=" << r.p_ch_dbm << " dBm real=" << r.realization << ": "
                << (r.ok ? format_number(r.snr_db) + " dB" : "failed") << " (" << r.runtime_s << " s)\n";
    };

    json summary = {{"command", command}, {"scenario_id", cfg.id}};
    try
    {
      if (command == "power-sweep")
        rc = run_power_sweep_cmd(cfg, out, ctx, summary);
      else if (command == "mc-pmd")
        rc = run_mc_cmd(cfg, out, ctx, summary);
      else if (command == "bandwidth-sweep")
        rc = run_bandwidth_cmd(cfg, out, ctx, summary);
      else if (command == "pmd-histogram")
        rc = run_histogram_cmd(cfg, out, summary);
      else
        rc = run_single_cmd(cfg, out, precision, summary);
    }
    catch (const ConfigError& e)
    {
      for (const auto& p : e.problems())
        std::cerr << "config error: " << p << '\n';
      rc = kExitConfig;
    }
    catch (const InvalidArgument& e)
    {
      std::cerr << "config error: " << e.what() << '\n';
      rc = kExitConfig;
    }
    if (rc == kExitOk || rc == kExitPartial)
      out.write("summary.json", summary.dump(2) + "\n");

    const auto cp = out.path(kCheckpointFile);
    if (rc == kExitOk)
      std::filesystem::remove(cp);
    else if (std::filesystem::exists(cp))
      out.track(kCheckpointFile);

    manifest.finished_utc = utc_timestamp();
    manifest.status = rc == kExitOk ? "ok" : rc == kExitPartial ? "partial" : rc == kExitConfig ? "config-error" : "failed";
    manifest.outputs = out.inventory();
    std::ofstream mf(out.path("manifest.json"));
    mf << json(manifest).dump(2) << '\n';
    if (!mf)
      throw Error("cannot write manifest");
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return rc;
}
