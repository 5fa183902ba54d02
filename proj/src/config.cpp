// SPDX-License-Identifier: Apache-2.0
#include "wdmsim/config.hpp"

#include "wdmsim/units.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

namespace wdmsim {

namespace {

std::string policy_name(StepConfig::Policy p)
{
  switch (p)
  {
  case StepConfig::Policy::Fixed:
    return "fixed";
  case StepConfig::Policy::NonlinearPhase:
    return "nonlinear-phase";
  case StepConfig::Policy::LocalError:
    break;
  }
  return "local-error";
}

std::string join_problems(const std::vector<std::string>& problems)
{
  std::string msg = "invalid configuration:";
  for (const auto& p : problems)
    msg += "\n  " + p;
  return msg;
}

using json = nlohmann::json;

class Problems
{
public:
  void add(const std::string& path, const std::string& msg) { list.push_back(path + ": " + msg); }
  std::vector<std::string> list;
};

/// Reads the keys of one JSON object, recording type errors and, on finish(),
/// every key that was never asked for.
class Section
{
public:
  Section(const json* obj, std::string path, Problems& problems)
      : obj_(obj), path_(std::move(path)), problems_(problems)
  {
    if (obj_ && !obj_->is_object())
    {
      problems_.add(path_, "expected an object");
      obj_ = nullptr;
    }
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key)
  {
    seen_.insert(key);
    return obj_ && obj_->contains(key);
  }

  const json* child(const std::string& key)
  {
    if (!has(key))
      return nullptr;
    return &obj_->at(key);
  }

  void number(const std::string& key, double& out)
  {
    if (const json* v = child(key))
    {
      if (v->is_number())
        out = v->get<double>();
      else
        problems_.add(path(key), "expected a number");
    }
  }

  void integer(const std::string& key, int& out)
  {
    if (const json* v = child(key))
    {
      if (v->is_number_integer() && v->get<long long>() >= INT32_MIN && v->get<long long>() <= INT32_MAX)
        out = v->get<int>();
      else
        problems_.add(path(key), "expected an integer");
    }
  }

  void seed(const std::string& key, std::uint64_t& out)
  {
    if (const json* v = child(key))
    {
      if (v->is_number_unsigned())
        out = v->get<std::uint64_t>();
      else if (v->is_number_integer() && v->get<long long>() >= 0)
        out = static_cast<std::uint64_t>(v->get<long long>());
      else
        problems_.add(path(key), "expected a non-negative integer");
    }
  }

  void boolean(const std::string& key, bool& out)
  {
    if (const json* v = child(key))
    {
      if (v->is_boolean())
        out = v->get<bool>();
      else
        problems_.add(path(key), "expected true or false");
    }
  }

  void text(const std::string& key, std::string& out)
  {
    if (const json* v = child(key))
    {
      if (v->is_string())
        out = v->get<std::string>();
      else
        problems_.add(path(key), "expected a string");
    }
  }

  template <typename T>
  void list(const std::string& key, std::vector<T>& out)
  {
    const json* v = child(key);
    if (!v)
      return;
    if (!v->is_array())
    {
      problems_.add(path(key), "expected an array");
      return;
    }
    out.clear();
    for (std::size_t i = 0; i < v->size(); ++i)
    {
      const json& e = (*v)[i];
      const bool ok = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
      if (!ok)
      {
        problems_.add(path(key) + "[" + std::to_string(i) + "]",
                      std::is_integral_v<T> ? "expected an integer" : "expected a number");
        continue;
      }
      out.push_back(e.get<T>());
    }
  }

  void finish()
  {
    if (!obj_)
      return;
    for (const auto& [key, value] : obj_->items())
    {
      if (!seen_.count(key))
        problems_.add(path(key), "unknown key");
    }
  }

private:
  const json* obj_;
  std::string path_;
  Problems& problems_;
  std::set<std::string> seen_;
};

void read_format(Section& s, const std::string& key, Format& out, Problems& problems)
{
  std::string text;
  if (!s.has(key))
    return;
  s.text(key, text);
  if (text.empty())
    return;
  try
  {
    out = parse_format(text);
  }
  catch (const InvalidArgument&)
  {
    problems.add(s.path(key), "unknown format '" + text + "' (QPSK or 16QAM)");
  }
}

ModelSpec read_model(Section& s, ModelSpec model, Problems& problems)
{
  std::string eq = to_string(model.equation);
  s.text("equation", eq);
  if (eq == "manakov")
    model.equation = Equation::Manakov;
  else if (eq == "dpnlse")
    model.equation = Equation::DpNlse;
  else
    problems.add(s.path("equation"), "expected \"manakov\" or \"dpnlse\"");
  s.number("pmd_ps_per_sqrt_km", model.pmd_ps_per_sqrt_km);
  s.number("mean_section_km", model.mean_section_km);
  if (!(model.pmd_ps_per_sqrt_km >= 0.0))
    problems.add(s.path("pmd_ps_per_sqrt_km"), "must be non-negative");
  if (!(model.mean_section_km > 0.0))
    problems.add(s.path("mean_section_km"), "must be positive");
  return model;
}

void check_model_fits(const ModelSpec& model, const LinkSpec& link, const std::string& path, Problems& problems)
{
  if (model.equation != Equation::DpNlse)
    return;
  for (const auto& span : link.spans)
  {
    if (model.mean_section_km > span.fiber.length_km)
    {
      problems.add(path + ".mean_section_km", "longer than the fiber span");
      return;
    }
  }
}

json model_to_json(const ModelSpec& m)
{
  return {{"equation", to_string(m.equation)},
          {"pmd_ps_per_sqrt_km", m.pmd_ps_per_sqrt_km},
          {"mean_section_km", m.mean_section_km}};
}

void check_band(const TxSpec& tx, int n_channels, int sps, const std::string& path, Problems& problems)
{
  if (n_channels < 1 || n_channels % 2 == 0)
  {
    problems.add(path, "channel count " + std::to_string(n_channels) +
                           " must be odd and positive (no central CUT otherwise)");
    return;
  }
  if (sps <= 0)
    return;
  const double needed = n_channels * tx.spacing + 2.0 * (1.0 + tx.roll_off) * tx.symbol_rate;
  if (needed > sps * tx.symbol_rate)
  {
    std::ostringstream msg;
    msg << n_channels << " channels need " << needed / 1e9 << " GHz of sampled band but "
        << sps << " samples per symbol give " << sps * tx.symbol_rate / 1e9 << " GHz";
    problems.add(path, msg.str());
  }
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : InvalidArgument(join_problems(problems)), problems_(std::move(problems))
{
}

ScenarioConfig parse_config(const json& doc)
{
  Problems problems;
  ScenarioConfig cfg;
  Section root(&doc, "", problems);
  if (!doc.is_object())
    throw ConfigError({"<root>: expected a JSON object"});
  root.text("id", cfg.id);
  root.seed("seed", cfg.master_seed);

  // tx
  {
    Section s(root.child("tx"), "tx", problems);
    TxSpec& tx = cfg.tx;
    read_format(s, "format", tx.format, problems);
    double rs_gbaud = tx.symbol_rate / 1e9, spacing_ghz = tx.spacing / 1e9, f0_thz = tx.center_frequency / 1e12;
    s.number("symbol_rate_gbaud", rs_gbaud);
    s.number("roll_off", tx.roll_off);
    s.integer("n_channels", tx.n_channels);
    s.number("spacing_ghz", spacing_ghz);
    s.number("power_dbm", tx.power_dbm);
    s.integer("n_symbols", tx.n_symbols);
    s.integer("filter_span_symbols", tx.filter_span_symbols);
    s.number("center_frequency_thz", f0_thz);
    s.integer("samples_per_symbol", cfg.samples_per_symbol);
    s.finish();
    tx.symbol_rate = rs_gbaud * 1e9;
    tx.spacing = spacing_ghz * 1e9;
    tx.center_frequency = f0_thz * 1e12;

    if (!(tx.symbol_rate > 0.0))
      problems.add("tx.symbol_rate_gbaud", "must be positive");
    if (!(tx.roll_off > 0.0 && tx.roll_off <= 1.0))
      problems.add("tx.roll_off", "must be in (0, 1]");
    if (tx.symbol_rate > 0.0 && tx.spacing < tx.symbol_rate * (1.0 + tx.roll_off))
    {
      std::ostringstream msg;
      msg << "spacing " << spacing_ghz << " GHz is below the occupied channel bandwidth "
          << tx.symbol_rate * (1.0 + tx.roll_off) / 1e9 << " GHz (spectral overlap)";
      problems.add("tx.spacing_ghz", msg.str());
    }
    if (tx.n_symbols < 16)
      problems.add("tx.n_symbols", "must be at least 16");
    if (tx.filter_span_symbols < 16 || tx.filter_span_symbols % 2 != 0)
      problems.add("tx.filter_span_symbols", "must be even and at least 16");
    if (!(tx.center_frequency > 0.0))
      problems.add("tx.center_frequency_thz", "must be positive");
    if (cfg.samples_per_symbol != 0 && cfg.samples_per_symbol < 2)
      problems.add("tx.samples_per_symbol", "must be 0 (automatic) or at least 2");
    if (tx.symbol_rate > 0.0)
      check_band(tx, tx.n_channels, cfg.samples_per_symbol, "tx.n_channels", problems);
  }

  // link
  {
    Section s(root.child("link"), "link", problems);
    int n_spans = 10;
    s.integer("n_spans", n_spans);
    if (n_spans < 0)
      problems.add("link.n_spans", "must be non-negative");

    FiberSpec fiber;
    {
      Section f(s.child("fiber"), "link.fiber", problems);
      f.number("length_km", fiber.length_km);
      f.number("alpha_db_per_km", fiber.alpha_db_per_km);
      const bool has_beta2 = f.has("beta2_ps2_per_km");
      const bool has_d = f.has("dispersion_ps_per_nm_km");
      if (has_beta2 && has_d)
        problems.add("link.fiber", "give either beta2_ps2_per_km or dispersion_ps_per_nm_km, not both");
      f.number("beta2_ps2_per_km", fiber.beta2_ps2_per_km);
      if (has_d && !has_beta2)
      {
        double d = 0.0;
        f.number("dispersion_ps_per_nm_km", d);
        if (cfg.tx.center_frequency > 0.0)
          fiber.beta2_ps2_per_km = units::dispersion_to_beta2(d, units::wavelength_of(cfg.tx.center_frequency));
      }
      f.number("gamma_per_w_km", fiber.gamma_per_w_km);
      f.number("pmd_ps_per_sqrt_km", fiber.pmd_ps_per_sqrt_km);
      f.number("effective_area_um2", fiber.effective_area_um2);
      f.finish();
      if (!(fiber.length_km > 0.0))
        problems.add("link.fiber.length_km", "must be positive");
      if (!(fiber.alpha_db_per_km >= 0.0))
        problems.add("link.fiber.alpha_db_per_km", "must be non-negative");
      if (!(fiber.gamma_per_w_km >= 0.0))
        problems.add("link.fiber.gamma_per_w_km", "must be non-negative");
      if (!(fiber.pmd_ps_per_sqrt_km >= 0.0))
        problems.add("link.fiber.pmd_ps_per_sqrt_km", "must be non-negative");
      if (!(fiber.effective_area_um2 > 0.0))
        problems.add("link.fiber.effective_area_um2", "must be positive");
    }
    EdfaSpec edfa;
    {
      Section e(s.child("edfa"), "link.edfa", problems);
      if (e.has("gain_db"))
      {
        double g = 0.0;
        e.number("gain_db", g);
        edfa.gain_db = g;
        if (!(g >= 0.0))
          problems.add("link.edfa.gain_db", "must be non-negative");
      }
      e.number("noise_figure_db", edfa.noise_figure_db);
      e.boolean("noise", edfa.noise);
      e.finish();
      if (!std::isfinite(edfa.noise_figure_db) || edfa.noise_figure_db < 0.0)
        problems.add("link.edfa.noise_figure_db", "must be a finite value >= 0 dB");
    }
    s.finish();
    for (int i = 0; i < n_spans; ++i)
      cfg.link.spans.push_back({fiber, edfa});
  }

  // model
  {
    Section s(root.child("model"), "model", problems);
    cfg.model = read_model(s, cfg.model, problems);
    {
      Section st(s.child("step"), "model.step", problems);
      std::string policy = policy_name(cfg.step.policy);
      st.text("policy", policy);
      if (policy == "fixed")
        cfg.step.policy = StepConfig::Policy::Fixed;
      else if (policy == "nonlinear-phase")
        cfg.step.policy = StepConfig::Policy::NonlinearPhase;
      else if (policy == "local-error")
        cfg.step.policy = StepConfig::Policy::LocalError;
      else
        problems.add("model.step.policy", "expected \"local-error\", \"nonlinear-phase\" or \"fixed\"");
      st.number("max_phase_rad", cfg.step.max_phase_rad);
      st.number("max_step_km", cfg.step.max_step_km);
      st.number("first_step_km", cfg.step.first_step_km);
      st.number("fixed_step_km", cfg.step.fixed_step_km);
      st.finish();
      if (!(cfg.step.max_phase_rad > 0.0 && cfg.step.max_phase_rad <= 0.05))
        problems.add("model.step.max_phase_rad", "must be in (0, 0.05]");
      if (!(cfg.step.max_step_km > 0.0))
        problems.add("model.step.max_step_km", "must be positive");
      if (!(cfg.step.first_step_km > 0.0))
        problems.add("model.step.first_step_km", "must be positive");
      if (!(cfg.step.fixed_step_km > 0.0))
        problems.add("model.step.fixed_step_km", "must be positive");
    }
    s.finish();
    check_model_fits(cfg.model, cfg.link, "model", problems);
  }

  // rx
  {
    Section s(root.child("rx"), "rx", problems);
    auto& eq = cfg.rx.equalizer;
    s.integer("n_taps", eq.n_taps);
    s.boolean("least_squares_init", eq.least_squares_init);
    s.number("mu", eq.mu);
    s.integer("training_passes", eq.training_passes);
    s.number("mu_decay", eq.mu_decay);
    s.number("ramp_fraction", eq.ramp_fraction);
    s.number("guard_fraction", cfg.rx.guard_fraction);
    s.integer("filter_span_symbols", cfg.rx.filter_span_symbols);
    s.finish();
    if (eq.n_taps < 1 || eq.n_taps % 2 == 0)
      problems.add("rx.n_taps", "must be odd and positive");
    if (!(eq.mu >= 0.0))
      problems.add("rx.mu", "must be non-negative");
    if (eq.training_passes < 0)
      problems.add("rx.training_passes", "must be non-negative");
    if (!(eq.mu_decay > 0.0))
      problems.add("rx.mu_decay", "must be positive");
    if (!(eq.ramp_fraction >= 0.0 && eq.ramp_fraction < 0.5))
      problems.add("rx.ramp_fraction", "must be in [0, 0.5)");
    if (!(cfg.rx.guard_fraction >= 0.0 && cfg.rx.guard_fraction < 0.25))
      problems.add("rx.guard_fraction", "must be in [0, 0.25)");
    if (cfg.rx.filter_span_symbols < 16 || cfg.rx.filter_span_symbols % 2 != 0)
      problems.add("rx.filter_span_symbols", "must be even and at least 16");
    const double lost = std::max(eq.ramp_fraction, cfg.rx.guard_fraction) + cfg.rx.guard_fraction;
    if (cfg.tx.n_symbols * (1.0 - lost) < kMinSnrSymbols + 1)
      problems.add("tx.n_symbols", "leaves fewer than " + std::to_string(kMinSnrSymbols) +
                                       " symbols for SNR estimation after ramp and guards");
  }

  // experiment
  {
    Section s(root.child("experiment"), "experiment", problems);
    auto& ex = cfg.experiment;
    s.list("powers_dbm", ex.powers_dbm);
    s.list("channel_counts", ex.channel_counts);
    s.integer("n_mc_realizations", ex.n_mc_realizations);
    if (ex.n_mc_realizations < 1)
      problems.add("experiment.n_mc_realizations", "must be at least 1");
    for (std::size_t i = 0; i < ex.channel_counts.size(); ++i)
    {
      if (cfg.tx.symbol_rate > 0.0)
        check_band(cfg.tx, ex.channel_counts[i], cfg.samples_per_symbol,
                   "experiment.channel_counts[" + std::to_string(i) + "]", problems);
    }
    if (const json* models = s.child("models"))
    {
      if (!models->is_array())
      {
        problems.add("experiment.models", "expected an array");
      }
      else
      {
        for (std::size_t i = 0; i < models->size(); ++i)
        {
          const std::string path = "experiment.models[" + std::to_string(i) + "]";
          Section m(&(*models)[i], path, problems);
          ex.models.push_back(read_model(m, ModelSpec{}, problems));
          m.finish();
          check_model_fits(ex.models.back(), cfg.link, path, problems);
        }
      }
    }
    {
      Section h(s.child("histogram"), "experiment.histogram", problems);
      auto& hs = ex.histogram;
      h.number("length_km", hs.length_km);
      h.number("pmd_ps_per_sqrt_km", hs.pmd_ps_per_sqrt_km);
      h.integer("n_symbols", hs.n_symbols);
      h.integer("n_phases", hs.n_phases);
      read_format(h, "format", hs.format, problems);
      h.number("beta2_ps2_per_km", hs.beta2_ps2_per_km);
      h.integer("realization", hs.realization);
      h.finish();
      if (!(hs.length_km > 0.0))
        problems.add("experiment.histogram.length_km", "must be positive");
      if (!(hs.pmd_ps_per_sqrt_km >= 0.0))
        problems.add("experiment.histogram.pmd_ps_per_sqrt_km", "must be non-negative");
      if (hs.n_symbols < 16)
        problems.add("experiment.histogram.n_symbols", "must be at least 16");
      if (hs.n_phases < 2)
        problems.add("experiment.histogram.n_phases", "must be at least 2");
      if (hs.realization < 0)
        problems.add("experiment.histogram.realization", "must be non-negative");
    }
    s.finish();
  }
  root.finish();

  if (!problems.list.empty())
    throw ConfigError(problems.list);
  return cfg;
}

ScenarioConfig validate_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError({path + ": cannot open file"});
  json doc;
  try
  {
    doc = json::parse(in);
  }
  catch (const json::parse_error& e)
  {
    throw ConfigError({path + ": malformed JSON: " + e.what()});
  }
  return parse_config(doc);
}

json config_to_json(const ScenarioConfig& cfg)
{
  const TxSpec& tx = cfg.tx;
  const FiberSpec fiber = cfg.link.spans.empty() ? FiberSpec{} : cfg.link.spans.front().fiber;
  const EdfaSpec edfa = cfg.link.spans.empty() ? EdfaSpec{} : cfg.link.spans.front().edfa;

  json edfa_j = {{"noise_figure_db", edfa.noise_figure_db}, {"noise", edfa.noise}};
  if (edfa.gain_db)
    edfa_j["gain_db"] = *edfa.gain_db;

  json models = json::array();
  for (const auto& m : cfg.experiment.models)
    models.push_back(model_to_json(m));
  json model = model_to_json(cfg.model);
  model["step"] = {{"policy", policy_name(cfg.step.policy)},
                   {"max_phase_rad", cfg.step.max_phase_rad},
                   {"max_step_km", cfg.step.max_step_km},
                   {"first_step_km", cfg.step.first_step_km},
                   {"fixed_step_km", cfg.step.fixed_step_km}};
  const auto& hs = cfg.experiment.histogram;

  return {
      {"id", cfg.id},
      {"seed", cfg.master_seed},
      {"tx",
       {{"format", to_string(tx.format)},
        {"symbol_rate_gbaud", tx.symbol_rate / 1e9},
        {"roll_off", tx.roll_off},
        {"n_channels", tx.n_channels},
        {"spacing_ghz", tx.spacing / 1e9},
        {"power_dbm", tx.power_dbm},
        {"n_symbols", tx.n_symbols},
        {"filter_span_symbols", tx.filter_span_symbols},
        {"center_frequency_thz", tx.center_frequency / 1e12},
        {"samples_per_symbol", cfg.samples_per_symbol}}},
      {"link",
       {{"n_spans", static_cast<int>(cfg.link.spans.size())},
        {"fiber",
         {{"length_km", fiber.length_km},
          {"alpha_db_per_km", fiber.alpha_db_per_km},
          {"beta2_ps2_per_km", fiber.beta2_ps2_per_km},
          {"gamma_per_w_km", fiber.gamma_per_w_km},
          {"pmd_ps_per_sqrt_km", fiber.pmd_ps_per_sqrt_km},
          {"effective_area_um2", fiber.effective_area_um2}}},
        {"edfa", edfa_j}}},
      {"model", model},
      {"rx",
       {{"n_taps", cfg.rx.equalizer.n_taps},
        {"least_squares_init", cfg.rx.equalizer.least_squares_init},
        {"mu", cfg.rx.equalizer.mu},
        {"training_passes", cfg.rx.equalizer.training_passes},
        {"mu_decay", cfg.rx.equalizer.mu_decay},
        {"ramp_fraction", cfg.rx.equalizer.ramp_fraction},
        {"guard_fraction", cfg.rx.guard_fraction},
        {"filter_span_symbols", cfg.rx.filter_span_symbols}}},
      {"experiment",
       {{"powers_dbm", cfg.experiment.powers_dbm},
        {"channel_counts", cfg.experiment.channel_counts},
        {"n_mc_realizations", cfg.experiment.n_mc_realizations},
        {"models", models},
        {"histogram",
         {{"length_km", hs.length_km},
          {"pmd_ps_per_sqrt_km", hs.pmd_ps_per_sqrt_km},
          {"n_symbols", hs.n_symbols},
          {"n_phases", hs.n_phases},
          {"format", to_string(hs.format)},
          {"beta2_ps2_per_km", hs.beta2_ps2_per_km},
          {"realization", hs.realization}}}}}};
}

} // namespace wdmsim
