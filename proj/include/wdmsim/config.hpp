// SPDX-License-Identifier: Apache-2.0
//
// Scenario configuration files.
//
// A config is one JSON document:
//
//   {
//     "id": "desk-smf", "seed": 1,
//     "tx":    { "format", "symbol_rate_gbaud", "roll_off", "n_channels",
//                "spacing_ghz", "power_dbm", "n_symbols", "filter_span_symbols",
//                "center_frequency_thz", "samples_per_symbol" },
//     "link":  { "n_spans",
//                "fiber": { "length_km", "alpha_db_per_km", "beta2_ps2_per_km" |
//                           "dispersion_ps_per_nm_km", "gamma_per_w_km",
//                           "pmd_ps_per_sqrt_km", "effective_area_um2" },
//                "edfa":  { "gain_db", "noise_figure_db", "noise" } },
//     "model": { "equation": "manakov" | "dpnlse", "pmd_ps_per_sqrt_km",
//                "mean_section_km",
//                "step": { "policy": "local-error" | "nonlinear-phase" | "fixed",
//                          "max_phase_rad", "max_step_km", "first_step_km",
//                          "fixed_step_km" } },
//     "rx":    { "n_taps", "least_squares_init", "mu", "training_passes", "mu_decay", "ramp_fraction",
//                "guard_fraction", "filter_span_symbols" },
//     "experiment": { "powers_dbm": [...], "channel_counts": [...],
//                     "n_mc_realizations", "models": [ {model...}, ... ],
//                     "histogram": { "length_km", "pmd_ps_per_sqrt_km",
//                                    "n_symbols", "n_phases", "format",
//                                    "beta2_ps2_per_km", "realization" } }
//   }
//
// Every key is optional and defaults to the values of the corresponding
// structs; unknown keys are errors.
#pragma once

#include "wdmsim/error.hpp"
#include "wdmsim/harness.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace wdmsim {

/// All problems found in a config, each prefixed by its field path
/// ("tx.spacing_ghz: ...").
class ConfigError : public InvalidArgument
{
public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

private:
  std::vector<std::string> problems_;
};

/// Parses and checks a config document. Throws ConfigError listing every
/// violation found.
ScenarioConfig parse_config(const nlohmann::json& doc);

/// Reads and parses a config file. Throws ConfigError (also for unreadable
/// files or malformed JSON).
ScenarioConfig validate_config(const std::string& path);

/// Normalized form with every default filled in; parse_config(to_json(c))
/// reproduces c.
nlohmann::json config_to_json(const ScenarioConfig& cfg);

} // namespace wdmsim
