#pragma once

#include <optional>
#include <string>

#include "sbx/evaluate.hpp"
#include "sbx/generate.hpp"

namespace sbx {

struct GeneratorSettings {
  int n_units = 0;  // 0: calibrated unit count
  int n_days = 0;   // 0: calibration window length

  friend bool operator==(const GeneratorSettings&, const GeneratorSettings&) = default;
};

/// Fully resolved run configuration for `simulate`. Exactly one panel source
/// is active: a generator params file, a fixed panel CSV, or the shipped
/// default parameters.
struct RunConfig {
  std::string params_path;
  std::string panel_path;
  bool use_default_params = false;
  std::string out_dir = "out";
  bool run_aa = true;
  bool run_ab = true;
  GeneratorSettings generator;
  ExperimentPlan plan;  // master_seed carries the config seed
  std::optional<Perturbations> perturb_override;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses and validates a JSON config document. Unknown keys, wrong types,
/// missing required fields, and out-of-range values raise SchemaError naming
/// the offending field. All defaults are resolved in the returned config.
RunConfig parse_config(const std::string& text);

/// Emits the resolved config; parse_config(config_to_json(c)) == c.
std::string config_to_json(const RunConfig& config);

RunConfig load_config_file(const std::string& path);

}  // namespace sbx
