#include "sbx/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sbx/errors.hpp"

namespace sbx {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::SchemaError, "field '" + field + "': " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& scope) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key))
      schema_error(scope.empty() ? key : scope + "." + key, "unknown key");
}

double get_number(const json& obj, const std::string& field, double fallback) {
  if (!obj.contains(field)) return fallback;
  if (!obj[field].is_number()) schema_error(field, "expected a number");
  return obj[field].get<double>();
}

int get_int(const json& obj, const std::string& field, int fallback) {
  if (!obj.contains(field)) return fallback;
  if (!obj[field].is_number_integer()) schema_error(field, "expected an integer");
  return obj[field].get<int>();
}

bool get_bool(const json& obj, const std::string& field, bool fallback) {
  if (!obj.contains(field)) return fallback;
  if (!obj[field].is_boolean()) schema_error(field, "expected a boolean");
  return obj[field].get<bool>();
}

std::string get_string(const json& obj, const std::string& field, const std::string& fallback) {
  if (!obj.contains(field)) return fallback;
  if (!obj[field].is_string()) schema_error(field, "expected a string");
  return obj[field].get<std::string>();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "config must be a JSON object");

  reject_unknown_keys(j, {"seed", "params", "panel", "use_default_params", "out_dir", "jobs",
                          "designs", "horizons_weeks", "n_dataset_reps",
                          "n_splits_per_dataset", "delta", "alpha", "regime", "run_aa",
                          "run_ab", "generator", "perturbations", "max_starts", "stratify_k"},
                      "");

  RunConfig c;
  if (!j.contains("seed")) schema_error("seed", "missing required field");
  if (!j["seed"].is_number_integer()) schema_error("seed", "expected a non-negative integer");
  if (!j["seed"].is_number_unsigned() && j["seed"].get<std::int64_t>() < 0)
    schema_error("seed", "expected a non-negative integer");
  c.plan.master_seed = j["seed"].get<std::uint64_t>();

  c.params_path = get_string(j, "params", "");
  c.panel_path = get_string(j, "panel", "");
  c.use_default_params = get_bool(j, "use_default_params", false);
  const int n_sources =
      (c.params_path.empty() ? 0 : 1) + (c.panel_path.empty() ? 0 : 1) + (c.use_default_params ? 1 : 0);
  if (n_sources == 0)
    schema_error("params", "one input is required: 'params', 'panel', or 'use_default_params'");
  if (n_sources > 1)
    schema_error("params", "'params', 'panel', and 'use_default_params' are mutually exclusive");

  c.out_dir = get_string(j, "out_dir", "out");
  c.plan.jobs = get_int(j, "jobs", 0);
  if (c.plan.jobs < 0) schema_error("jobs", "must be >= 0");

  if (j.contains("designs")) {
    if (!j["designs"].is_array() || j["designs"].empty())
      schema_error("designs", "expected a non-empty array of design names");
    c.plan.designs.clear();
    for (const auto& d : j["designs"]) {
      if (!d.is_string()) schema_error("designs", "expected strings");
      try {
        c.plan.designs.push_back(design_choice_from_name(d.get<std::string>()));
      } catch (const Error&) {
        schema_error("designs", "unknown design '" + d.get<std::string>() +
                                    "' (use fixed_pods, weekly_sb, daily_sb)");
      }
    }
  }

  if (j.contains("horizons_weeks")) {
    if (!j["horizons_weeks"].is_array() || j["horizons_weeks"].empty())
      schema_error("horizons_weeks", "expected a non-empty array of integers");
    c.plan.horizons_weeks.clear();
    for (const auto& h : j["horizons_weeks"]) {
      if (!h.is_number_integer()) schema_error("horizons_weeks", "expected integers");
      const int w = h.get<int>();
      if (w < 2 || w % 2 != 0) schema_error("horizons_weeks", "horizons must be even and >= 2");
      c.plan.horizons_weeks.push_back(w);
    }
  }

  c.plan.n_dataset_reps = get_int(j, "n_dataset_reps", c.plan.n_dataset_reps);
  c.plan.n_splits_per_dataset = get_int(j, "n_splits_per_dataset", c.plan.n_splits_per_dataset);
  if (c.plan.n_dataset_reps < 1) schema_error("n_dataset_reps", "must be >= 1");
  if (c.plan.n_splits_per_dataset < 1) schema_error("n_splits_per_dataset", "must be >= 1");

  c.plan.uplift_delta = get_number(j, "delta", c.plan.uplift_delta);
  if (!std::isfinite(c.plan.uplift_delta)) schema_error("delta", "must be finite");
  c.plan.alpha = get_number(j, "alpha", c.plan.alpha);
  if (!(c.plan.alpha > 0.0 && c.plan.alpha < 1.0)) schema_error("alpha", "must lie in (0, 1)");

  if (j.contains("regime")) {
    try {
      c.plan.regime = regime_from_name(get_string(j, "regime", "baseline"));
    } catch (const Error&) {
      schema_error("regime", "unknown regime (use baseline, more-shocks, more-seasonality, more-ar1)");
    }
  }

  c.run_aa = get_bool(j, "run_aa", true);
  c.run_ab = get_bool(j, "run_ab", true);
  c.plan.max_starts = get_int(j, "max_starts", 0);
  if (c.plan.max_starts < 0) schema_error("max_starts", "must be >= 0");
  c.plan.stratify_k = get_int(j, "stratify_k", 0);
  if (c.plan.stratify_k < 0) schema_error("stratify_k", "must be >= 0");

  if (j.contains("generator")) {
    if (!j["generator"].is_object()) schema_error("generator", "expected an object");
    reject_unknown_keys(j["generator"], {"n_units", "n_days"}, "generator");
    c.generator.n_units = get_int(j["generator"], "n_units", 0);
    c.generator.n_days = get_int(j["generator"], "n_days", 0);
    if (c.generator.n_units < 0) schema_error("generator.n_units", "must be >= 0");
    if (c.generator.n_days < 0) schema_error("generator.n_days", "must be >= 0");
  }

  if (j.contains("perturbations")) {
    if (!j["perturbations"].is_object()) schema_error("perturbations", "expected an object");
    reject_unknown_keys(j["perturbations"], {"c_seas", "c_shock", "c_ar"}, "perturbations");
    Perturbations p;
    p.c_seas = get_number(j["perturbations"], "c_seas", 1.0);
    p.c_shock = get_number(j["perturbations"], "c_shock", 1.0);
    p.c_ar = get_number(j["perturbations"], "c_ar", 1.0);
    if (!(p.c_seas >= 0.0 && p.c_shock >= 0.0 && p.c_ar >= 0.0))
      schema_error("perturbations", "multipliers must be non-negative");
    c.perturb_override = p;
  }
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.plan.master_seed;
  if (!c.params_path.empty()) j["params"] = c.params_path;
  if (!c.panel_path.empty()) j["panel"] = c.panel_path;
  if (c.use_default_params) j["use_default_params"] = true;
  j["out_dir"] = c.out_dir;
  j["jobs"] = c.plan.jobs;
  j["designs"] = json::array();
  for (DesignChoice d : c.plan.designs) j["designs"].push_back(design_choice_name(d));
  j["horizons_weeks"] = c.plan.horizons_weeks;
  j["n_dataset_reps"] = c.plan.n_dataset_reps;
  j["n_splits_per_dataset"] = c.plan.n_splits_per_dataset;
  j["delta"] = c.plan.uplift_delta;
  j["alpha"] = c.plan.alpha;
  j["regime"] = regime_name(c.plan.regime);
  j["run_aa"] = c.run_aa;
  j["run_ab"] = c.run_ab;
  j["max_starts"] = c.plan.max_starts;
  j["stratify_k"] = c.plan.stratify_k;
  j["generator"] = {{"n_units", c.generator.n_units}, {"n_days", c.generator.n_days}};
  if (c.perturb_override)
    j["perturbations"] = {{"c_seas", c.perturb_override->c_seas},
                          {"c_shock", c.perturb_override->c_shock},
                          {"c_ar", c.perturb_override->c_ar}};
  return j.dump(2);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace sbx
