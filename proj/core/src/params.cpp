#include "sbx/params.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sbx/errors.hpp"
#include "sbx/rng.hpp"
#include "sbx/stats.hpp"

namespace sbx {

double FourierSpec::eval(double t) const {
  double v = 0.0;
  for (int k = 1; k <= harmonics; ++k) {
    const double w = 2.0 * std::numbers::pi * k * t / period;
    v += a[k - 1] * std::sin(w) + b[k - 1] * std::cos(w);
  }
  return v;
}

Eigen::VectorXd FourierSpec::eval_range(int n_days, int offset) const {
  Eigen::VectorXd out(n_days);
  for (int t = 0; t < n_days; ++t) out[t] = eval(static_cast<double>(offset + t));
  return out;
}

std::vector<std::string> validate_params(const GeneratorParams& p) {
  std::vector<std::string> bad;
  const Eigen::Index n = p.mu.size();
  auto check_len = [&](const Eigen::VectorXd& v, const char* name) {
    if (v.size() != n) bad.push_back(std::string(name) + " length does not match mu");
  };
  check_len(p.gamma, "gamma");
  check_len(p.shock_loading, "shock_loading");
  check_len(p.ar_phi, "ar_phi");
  check_len(p.ar_sigma, "ar_sigma");
  if (!p.unit_ids.empty() && static_cast<Eigen::Index>(p.unit_ids.size()) != n)
    bad.push_back("unit_ids length does not match mu");

  if (p.alpha.size() != 7) bad.push_back("alpha must have 7 entries");
  else if (std::abs(p.alpha.sum()) > 1e-8) bad.push_back("alpha must sum to zero");

  if (p.fourier.a.size() != p.fourier.harmonics || p.fourier.b.size() != p.fourier.harmonics)
    bad.push_back("fourier coefficient lengths must equal K");
  if (p.fourier.period <= 0.0) bad.push_back("fourier period must be positive");

  if (p.shock_factor.size() >= 2) {
    const double var = sample_variance(p.shock_factor);
    if (var != 0.0 && std::abs(var - 1.0) > 1e-6)
      bad.push_back("shock_factor sample variance must be 1 (or identically zero)");
  }
  for (Eigen::Index i = 0; i < p.ar_phi.size(); ++i)
    if (std::abs(p.ar_phi[i]) >= 1.0) bad.push_back("|ar_phi| must be < 1");
  for (Eigen::Index i = 0; i < p.ar_sigma.size(); ++i)
    if (p.ar_sigma[i] < 0.0) bad.push_back("ar_sigma must be non-negative");

  const auto& mix = p.mixture;
  if (mix.n_components() < 1) bad.push_back("mixture needs at least one component");
  if (mix.means.size() != mix.n_components() || mix.variances.size() != mix.n_components())
    bad.push_back("mixture component lengths disagree");
  else {
    if (std::abs(mix.weights.sum() - 1.0) > 1e-8) bad.push_back("mixture weights must sum to 1");
    for (Eigen::Index c = 0; c < mix.variances.size(); ++c)
      if (mix.variances[c] < 0.0) bad.push_back("mixture variances must be non-negative");
  }
  if (p.sigma_model.tau < 0.0) bad.push_back("sigma_model tau must be non-negative");
  return bad;
}

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& arr, const std::string& field) {
  if (!arr.is_array()) throw Error(ErrorCode::SchemaError, field + " must be an array");
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw Error(ErrorCode::SchemaError, field + " must hold numbers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

std::string params_to_json(const GeneratorParams& p) {
  nlohmann::json j;
  j["schema_version"] = p.schema_version;
  j["start_date"] = format_date(p.start_date);
  j["unit_ids"] = p.unit_ids;
  j["mu"] = vec_to_json(p.mu);
  j["alpha"] = vec_to_json(p.alpha);
  j["fourier"] = {{"K", p.fourier.harmonics},
                  {"period", p.fourier.period},
                  {"a", vec_to_json(p.fourier.a)},
                  {"b", vec_to_json(p.fourier.b)}};
  j["gamma"] = vec_to_json(p.gamma);
  j["shock"] = {{"factor", vec_to_json(p.shock_factor)},
                {"loading", vec_to_json(p.shock_loading)}};
  j["ar"] = {{"phi", vec_to_json(p.ar_phi)}, {"sigma", vec_to_json(p.ar_sigma)}};
  j["cross_leg"] = {{"mixture",
                     {{"weights", vec_to_json(p.mixture.weights)},
                      {"log_means", vec_to_json(p.mixture.means)},
                      {"log_variances", vec_to_json(p.mixture.variances)}}},
                    {"sigma_model",
                     {{"a", p.sigma_model.a}, {"b", p.sigma_model.b}, {"tau", p.sigma_model.tau}}}};
  return j.dump(2);
}

GeneratorParams params_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  try {
    GeneratorParams p;
    p.schema_version = j.at("schema_version").get<int>();
    if (p.schema_version != 1)
      throw Error(ErrorCode::SchemaError,
                  "unsupported schema_version " + std::to_string(p.schema_version));
    p.start_date = parse_date(j.at("start_date").get<std::string>());
    p.unit_ids = j.at("unit_ids").get<std::vector<std::string>>();
    p.mu = vec_from_json(j.at("mu"), "mu");
    p.alpha = vec_from_json(j.at("alpha"), "alpha");
    const auto& jf = j.at("fourier");
    p.fourier.harmonics = jf.at("K").get<int>();
    p.fourier.period = jf.at("period").get<double>();
    p.fourier.a = vec_from_json(jf.at("a"), "fourier.a");
    p.fourier.b = vec_from_json(jf.at("b"), "fourier.b");
    p.gamma = vec_from_json(j.at("gamma"), "gamma");
    p.shock_factor = vec_from_json(j.at("shock").at("factor"), "shock.factor");
    p.shock_loading = vec_from_json(j.at("shock").at("loading"), "shock.loading");
    p.ar_phi = vec_from_json(j.at("ar").at("phi"), "ar.phi");
    p.ar_sigma = vec_from_json(j.at("ar").at("sigma"), "ar.sigma");
    const auto& jm = j.at("cross_leg").at("mixture");
    p.mixture.weights = vec_from_json(jm.at("weights"), "mixture.weights");
    p.mixture.means = vec_from_json(jm.at("log_means"), "mixture.log_means");
    p.mixture.variances = vec_from_json(jm.at("log_variances"), "mixture.log_variances");
    const auto& js = j.at("cross_leg").at("sigma_model");
    p.sigma_model = {js.at("a").get<double>(), js.at("b").get<double>(),
                     js.at("tau").get<double>()};
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("params document: ") + e.what());
  }
}

GeneratorParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return params_from_json(buf.str());
}

void save_params_file(const GeneratorParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << params_to_json(params) << '\n';
}

GeneratorParams default_generator_params() {
  constexpr int n = 80;
  constexpr int t_cal = 366;  // 2024 daily calendar

  GeneratorParams p;
  p.start_date = parse_date("2024-01-01");

  // Two route tiers on the log scale (regional vs long-haul revenue levels).
  p.mixture.weights = Eigen::Vector2d(0.55, 0.45);
  p.mixture.means = Eigen::Vector2d(5.8, 7.4);
  p.mixture.variances = Eigen::Vector2d(0.16, 0.12);
  // Taylor-law scaling between baseline level and innovation scale.
  p.sigma_model = {0.85, 0.72, 0.20};

  Rng rng = make_rng(mix64(0x73627820646566ULL));  // fixed: defaults are a constant
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  p.mu.resize(n);
  p.gamma.resize(n);
  p.shock_loading.resize(n);
  p.ar_phi.resize(n);
  p.ar_sigma.resize(n);
  p.unit_ids.reserve(n);
  char buf[16];
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "r%03d", i);
    p.unit_ids.emplace_back(buf);
    const int comp = u(rng) < p.mixture.weights[0] ? 0 : 1;
    const double log_mu = p.mixture.means[comp] + std::sqrt(p.mixture.variances[comp]) * z(rng);
    p.mu[i] = std::exp(log_mu);
    const double log_sigma =
        p.sigma_model.a + p.sigma_model.b * log_mu + p.sigma_model.tau * z(rng);
    p.ar_sigma[i] = std::exp(log_sigma);
    p.ar_phi[i] = std::clamp(0.12 + 0.05 * z(rng), 0.02, 0.45);
    p.gamma[i] = z(rng);
    p.shock_loading[i] = z(rng);
  }
  // Seasonal and shock exposures vary on the portfolio scale rather than with
  // each unit's own level, so stratifying on unit levels does not mechanically
  // balance them.
  const double mu_bar = p.mu.mean();
  for (int i = 0; i < n; ++i) {
    p.gamma[i] = mu_bar * (0.12 + 0.055 * p.gamma[i]);
    p.shock_loading[i] = mu_bar * (0.055 + 0.020 * p.shock_loading[i]);
  }

  // Weekly profile (Mon..Sun), in outcome units relative to the mean baseline.
  Eigen::VectorXd profile(7);
  profile << -0.05, -0.035, -0.01, 0.015, 0.06, 0.045, -0.025;
  profile.array() -= profile.mean();
  p.alpha = profile * mu_bar;

  // Annual seasonality with three harmonics, roughly unit peak amplitude; the
  // per-unit scale lives in gamma.
  p.fourier.harmonics = 3;
  p.fourier.period = 365.25;
  p.fourier.a = Eigen::Vector3d(0.82, 0.30, 0.10);
  p.fourier.b = Eigen::Vector3d(0.44, -0.21, 0.09);

  // Calibration-window common factor, standardized to unit sample variance.
  p.shock_factor.resize(t_cal);
  for (int t = 0; t < t_cal; ++t) p.shock_factor[t] = z(rng);
  p.shock_factor.array() -= p.shock_factor.mean();
  p.shock_factor /= sample_sd(p.shock_factor);

  return p;
}

}  // namespace sbx
