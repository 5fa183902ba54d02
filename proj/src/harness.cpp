// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/harness.hpp"

#include "wdmsim/error.hpp"
#include "wdmsim/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

namespace wdmsim {

std::vector<ModelSpec> ScenarioConfig::sweep_models() const
{
  if (experiment.models.empty())
    return {model};
  return experiment.models;
}

std::string format_number(double v)
{
  if (std::isnan(v))
    return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string model_label(const ModelSpec& model)
{
  return model.equation == Equation::Manakov ? "manakov" : "dpnlse";
}

std::string RunPoint::key() const
{
  std::ostringstream os;
  os << model_label(model) << '|' << format_number(model.pmd_ps_per_sqrt_km) << '|'
     << format_number(model.mean_section_km) << '|' << n_channels << '|' << format_number(p_ch_dbm)
     << '|' << realization;
  return os.str();
}

std::uint64_t realization_seed(std::uint64_t master_seed, int realization)
{
  return derive_seed(master_seed, "biref", {realization});
}

LinkSeeds link_seeds(std::uint64_t master_seed, int realization)
{
  return {derive_seed(master_seed, "ase"), realization_seed(master_seed, realization)};
}

SweepRecord run_single(const ScenarioConfig& cfg, const RunPoint& point, RunArtifacts* artifacts)
{
  const auto start = std::chrono::steady_clock::now();
  SweepRecord rec;
  rec.scenario_id = cfg.id;
  rec.model = model_label(point.model);
  rec.delta_pmd_ps_sqrtkm = point.model.equation == Equation::DpNlse ? point.model.pmd_ps_per_sqrt_km : 0.0;
  rec.n_channels = point.n_channels;
  rec.p_ch_dbm = point.p_ch_dbm;
  rec.realization = point.realization;
  rec.seed = realization_seed(cfg.master_seed, point.realization);

  try
  {
    TxSpec tx = cfg.tx;
    tx.n_channels = point.n_channels;
    tx.power_dbm = point.p_ch_dbm;
    tx.seed = cfg.master_seed;
    const WdmWaveform wdm = build_wdm(tx, cfg.samples_per_symbol);
    DualPolSignal rx = propagate_link(wdm.signal, cfg.link, point.model, cfg.step,
                                      link_seeds(cfg.master_seed, point.realization));

    const SnrReport report =
        receive_channel(rx, wdm.frame.channel(0), tx.format, tx.symbol_rate, tx.roll_off, tx.spacing,
                        cfg.link.accumulated_dispersion_ps2(), cfg.rx,
                        artifacts ? &artifacts->equalized : nullptr);
    rec.snr_db = report.snr_db;
    rec.ok = true;
    if (artifacts)
    {
      artifacts->report = report;
      artifacts->received = std::move(rx);
    }
  }
  catch (const Error& e)
  {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

Checkpoint::Checkpoint(std::string path, std::string config_hash)
    : path_(std::move(path)), hash_(std::move(config_hash))
{
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line))
  {
    if (line.empty())
      continue;
    try
    {
      const auto j = nlohmann::json::parse(line);
      if (j.value("config_hash", std::string{}) != hash_)
        continue;
      done_[j.at("key").get<std::string>()] = j.at("record").get<SweepRecord>();
    }
    catch (const nlohmann::json::exception&)
    {
      // A torn final line from an interrupted write: the run is simply redone.
    }
  }
}

std::optional<SweepRecord> Checkpoint::lookup(const std::string& key) const
{
  std::lock_guard lock(mutex_);
  const auto it = done_.find(key);
  if (it == done_.end())
    return std::nullopt;
  return it->second;
}

void Checkpoint::append(const std::string& key, const SweepRecord& rec)
{
  std::lock_guard lock(mutex_);
  done_[key] = rec;
  std::ofstream out(path_, std::ios::app);
  out << nlohmann::json{{"config_hash", hash_}, {"key", key}, {"record", rec}}.dump() << '\n';
  out.flush();
  if (!out)
    throw Error("cannot append to checkpoint " + path_);
}

std::size_t Checkpoint::size() const
{
  std::lock_guard lock(mutex_);
  return done_.size();
}

std::vector<SweepRecord> run_points(const ScenarioConfig& cfg, const std::vector<RunPoint>& points,
                                    const RunContext& ctx)
{
  std::vector<SweepRecord> out(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++)
    {
      const std::string key = points[i].key();
      if (ctx.checkpoint)
      {
        if (auto cached = ctx.checkpoint->lookup(key); cached && cached->ok)
        {
          out[i] = *cached;
          continue;
        }
      }
      out[i] = run_single(cfg, points[i]);
      std::lock_guard lock(report_mutex);
      if (ctx.checkpoint && out[i].ok)
        ctx.checkpoint->append(key, out[i]);
      if (ctx.on_record)
        ctx.on_record(out[i]);
    }
  };

  const int n_workers = std::clamp<int>(ctx.workers, 1, static_cast<int>(std::max<std::size_t>(1, points.size())));
  if (n_workers == 1)
  {
    worker();
    return out;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < n_workers; ++w)
    pool.emplace_back(worker);
  pool.clear();
  return out;
}

std::vector<SweepRecord> run_power_sweep(const ScenarioConfig& cfg, const std::vector<double>& powers_dbm,
                                         const RunContext& ctx)
{
  if (powers_dbm.empty())
    throw InvalidArgument("power sweep needs at least one power");
  std::vector<RunPoint> points;
  for (const auto& model : cfg.sweep_models())
  {
    for (double p : powers_dbm)
      points.push_back({model, cfg.tx.n_channels, p, 0});
  }
  return run_points(cfg, points, ctx);
}

McSummary summarize_realizations(const std::vector<double>& snr_db)
{
  McSummary s;
  s.snr_db = snr_db;
  double acc = 0.0;
  for (std::size_t i = 0; i < snr_db.size(); ++i)
  {
    acc += snr_db[i];
    s.cumulative_mean.push_back(acc / static_cast<double>(i + 1));
  }
  if (snr_db.empty())
    return s;
  // Sorted accumulation makes the ensemble statistics order-independent.
  std::vector<double> sorted = snr_db;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted)
    sum += v;
  s.mean = sum / static_cast<double>(sorted.size());
  if (sorted.size() > 1)
  {
    double ss = 0.0;
    for (double v : sorted)
      ss += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(sorted.size() - 1));
  }
  return s;
}

McResult run_mc_pmd(const ScenarioConfig& cfg, int n_realizations, const RunContext& ctx)
{
  if (cfg.model.equation != Equation::DpNlse)
    throw InvalidArgument("mc-pmd needs the dpnlse model");
  if (n_realizations < 1)
    throw InvalidArgument("mc-pmd needs at least one realization");
  std::vector<RunPoint> points;
  for (int k = 0; k < n_realizations; ++k)
    points.push_back({cfg.model, cfg.tx.n_channels, cfg.tx.power_dbm, k});
  McResult res;
  res.records = run_points(cfg, points, ctx);
  std::vector<double> values;
  for (const auto& r : res.records)
  {
    if (r.ok)
      values.push_back(r.snr_db);
  }
  res.summary = summarize_realizations(values);
  return res;
}

LogFit fit_log_bandwidth(const std::vector<std::pair<double, double>>& points)
{
  if (points.size() < 3)
    throw InvalidArgument("logarithmic fit needs at least 3 points");
  std::vector<double> xs;
  for (const auto& [b, snr] : points)
  {
    if (!(b > 0.0) || !std::isfinite(snr))
      throw InvalidArgument("logarithmic fit needs positive bandwidths and finite SNR values");
    xs.push_back(std::log10(b));
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3)
    throw InvalidArgument("logarithmic fit needs at least 3 distinct bandwidths");

  const auto n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
  {
    mx += xs[i];
    my += points[i].second;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
  {
    const double dx = xs[i] - mx, dy = points[i].second - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n_points = static_cast<int>(points.size());
  if (syy == 0.0)
  {
    fit.r_squared = 1.0;
  }
  else
  {
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
      const double r = points[i].second - (fit.intercept + fit.slope * xs[i]);
      sse += r * r;
    }
    fit.r_squared = 1.0 - sse / syy;
  }
  return fit;
}

BandwidthResult run_bandwidth_sweep(const ScenarioConfig& cfg, const std::vector<int>& channel_counts,
                                    const RunContext& ctx)
{
  if (channel_counts.empty())
    throw InvalidArgument("bandwidth sweep needs at least one channel count");
  for (int n : channel_counts)
  {
    TxSpec tx = cfg.tx;
    tx.n_channels = n;
    tx.validate();
    if (cfg.samples_per_symbol > 0 &&
        tx.wdm_bandwidth() + 2.0 * (1.0 + tx.roll_off) * tx.symbol_rate > cfg.samples_per_symbol * tx.symbol_rate)
      throw OutOfBandError(std::to_string(n) + " channels do not fit the configured sample rate");
  }

  std::vector<RunPoint> points;
  for (const auto& model : cfg.sweep_models())
  {
    for (int n : channel_counts)
      points.push_back({model, n, cfg.tx.power_dbm, 0});
  }
  BandwidthResult res;
  res.records = run_points(cfg, points, ctx);

  std::map<std::string, std::vector<std::pair<double, double>>> per_model;
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    const auto& r = res.records[i];
    if (!r.ok)
      continue;
    const std::string label = r.model + "@" + format_number(r.delta_pmd_ps_sqrtkm);
    per_model[label].emplace_back(r.n_channels * cfg.tx.spacing, r.snr_db);
  }
  for (const auto& [label, pts] : per_model)
  {
    try
    {
      res.fits[label] = fit_log_bandwidth(pts);
    }
    catch (const InvalidArgument&)
    {
    }
  }
  return res;
}

HistogramStudy run_pmd_only_histogram(const HistogramStudySpec& spec, std::uint64_t master_seed,
                                      double symbol_rate, double roll_off, HistogramBins bins)
{
  if (!(spec.length_km > 0.0) || spec.pmd_ps_per_sqrt_km < 0.0 || spec.n_symbols < 1 || spec.n_phases < 1)
    throw InvalidArgument("invalid PMD-only histogram study");

  TxSpec tx;
  tx.format = spec.format;
  tx.symbol_rate = symbol_rate;
  tx.roll_off = roll_off;
  tx.n_channels = 1;
  tx.n_symbols = spec.n_symbols;
  tx.seed = master_seed;
  // Sampling at n_phases per symbol lets the histogram use the samples as they are.
  const WdmWaveform wdm = build_wdm(tx, spec.n_phases);

  FiberSpec pmd_fiber;
  pmd_fiber.length_km = spec.length_km;
  pmd_fiber.alpha_db_per_km = 0.0;
  pmd_fiber.beta2_ps2_per_km = 0.0;
  pmd_fiber.gamma_per_w_km = 0.0;
  pmd_fiber.pmd_ps_per_sqrt_km = spec.pmd_ps_per_sqrt_km;

  const double mean_section = std::min(1.0, spec.length_km);
  const BirefringenceSpan plates =
      gen_birefringence(pmd_fiber, mean_section, realization_seed(master_seed, spec.realization), 0);
  const StepConfig step = StepConfig::fixed(spec.length_km);
  DualPolSignal pmd = propagate_dpnlse(wdm.signal, pmd_fiber, plates, step);

  // Undo the frequency-flat part of the fiber so the eye shows only the
  // differential delay.
  const Jones inv = jones_adjoint(plates.carrier_transfer());
  {
    auto& x = pmd.x_mut();
    auto& y = pmd.y_mut();
    for (std::size_t i = 0; i < x.size(); ++i)
    {
      const Complex a = x[i], b = y[i];
      x[i] = inv[0] * a + inv[1] * b;
      y[i] = inv[2] * a + inv[3] * b;
    }
  }

  FiberSpec cd_fiber = pmd_fiber;
  cd_fiber.pmd_ps_per_sqrt_km = 0.0;
  cd_fiber.beta2_ps2_per_km = spec.beta2_ps2_per_km;
  const DualPolSignal cd = propagate_manakov(wdm.signal, cd_fiber, step);

  const DualPolSignal b2b_mf = matched_filter(wdm.signal, symbol_rate, roll_off, tx.filter_span_symbols);
  DualPolSignal pmd_mf = matched_filter(pmd, symbol_rate, roll_off, tx.filter_span_symbols);
  DualPolSignal cd_mf = matched_filter(cd, symbol_rate, roll_off, tx.filter_span_symbols);

  // One scale for all three: unit mean symbol-instant power per polarization back-to-back.
  const auto sps = static_cast<std::size_t>(spec.n_phases);
  double p = 0.0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(spec.n_symbols); ++k)
    p += std::norm(b2b_mf.x()[k * sps]) + std::norm(b2b_mf.y()[k * sps]);
  p /= 2.0 * spec.n_symbols;
  const double scale = 1.0 / std::sqrt(p);
  auto scaled = [scale](const DualPolSignal& s) {
    CVector x(s.x().begin(), s.x().end()), y(s.y().begin(), s.y().end());
    for (auto& v : x)
      v *= scale;
    for (auto& v : y)
      v *= scale;
    return DualPolSignal(std::move(x), std::move(y), s.sample_rate(), s.center_frequency());
  };

  HistogramStudy study;
  study.back_to_back = eye_histogram(scaled(b2b_mf), symbol_rate, spec.n_phases, bins);
  study.pmd_only = eye_histogram(scaled(pmd_mf), symbol_rate, spec.n_phases, bins);
  study.cd_only = eye_histogram(scaled(cd_mf), symbol_rate, spec.n_phases, bins);
  study.dgd_ps = differential_group_delay_ps(plates);
  return study;
}

namespace {

void write_key_columns(std::ostream& os, const SweepRecord& r)
{
  os << r.scenario_id << ',' << r.model << ',' << format_number(r.delta_pmd_ps_sqrtkm) << ','
     << r.n_channels << ',' << format_number(r.p_ch_dbm) << ',' << r.realization;
}

} // namespace

void write_records_csv(std::ostream& os, const std::vector<SweepRecord>& records)
{
  os << "scenario_id,model,delta_pmd_ps_sqrtkm,n_channels,p_ch_dbm,realization,snr_db,seed\n";
  for (const auto& r : records)
  {
    write_key_columns(os, r);
    os << ',' << format_number(r.ok ? r.snr_db : std::nan("")) << ',' << r.seed << '\n';
  }
}

void write_timings_csv(std::ostream& os, const std::vector<SweepRecord>& records)
{
  os << "scenario_id,model,delta_pmd_ps_sqrtkm,n_channels,p_ch_dbm,realization,runtime_s,status\n";
  for (const auto& r : records)
  {
    write_key_columns(os, r);
    os << ',' << format_number(r.runtime_s) << ',' << (r.ok ? "ok" : "failed") << '\n';
  }
}

void to_json(nlohmann::json& j, const SweepRecord& r)
{
  j = {{"scenario_id", r.scenario_id},
       {"model", r.model},
       {"delta_pmd_ps_sqrtkm", r.delta_pmd_ps_sqrtkm},
       {"n_channels", r.n_channels},
       {"p_ch_dbm", r.p_ch_dbm},
       {"realization", r.realization},
       {"snr_db", r.ok ? nlohmann::json(r.snr_db) : nlohmann::json(nullptr)},
       {"seed", r.seed},
       {"runtime_s", r.runtime_s},
       {"ok", r.ok},
       {"error", r.error}};
}

void from_json(const nlohmann::json& j, SweepRecord& r)
{
  r.scenario_id = j.at("scenario_id").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.delta_pmd_ps_sqrtkm = j.at("delta_pmd_ps_sqrtkm").get<double>();
  r.n_channels = j.at("n_channels").get<int>();
  r.p_ch_dbm = j.at("p_ch_dbm").get<double>();
  r.realization = j.at("realization").get<int>();
  r.ok = j.at("ok").get<bool>();
  r.snr_db = r.ok ? j.at("snr_db").get<double>() : std::nan("");
  r.seed = j.at("seed").get<std::uint64_t>();
  r.runtime_s = j.value("runtime_s", 0.0);
  r.error = j.value("error", std::string{});
}

void to_json(nlohmann::json& j, const LogFit& f)
{
  j = {{"intercept_db", f.intercept},
       {"slope_db_per_decade", f.slope},
       {"r_squared", f.r_squared},
       {"n_points", f.n_points},
       {"model", "snr_db = intercept_db + slope_db_per_decade * log10(bandwidth_hz)"}};
}

} // namespace wdmsim
