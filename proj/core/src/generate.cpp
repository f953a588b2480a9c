#include "sbx/generate.hpp"

#include <cmath>
#include <cstdio>

#include "sbx/errors.hpp"
#include "sbx/rng.hpp"

namespace sbx {

Perturbations make_regime(Regime regime) {
  switch (regime) {
    case Regime::Baseline: return {1.0, 1.0, 1.0};
    case Regime::MoreShocks: return {1.0, 2.0, 1.0};
    case Regime::MoreSeasonality: return {2.0, 1.0, 1.0};
    case Regime::MoreAR1: return {1.0, 1.0, 2.0};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown regime");
}

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::Baseline: return "baseline";
    case Regime::MoreShocks: return "more-shocks";
    case Regime::MoreSeasonality: return "more-seasonality";
    case Regime::MoreAR1: return "more-ar1";
  }
  return "unknown";
}

Regime regime_from_name(const std::string& name) {
  if (name == "baseline") return Regime::Baseline;
  if (name == "more-shocks") return Regime::MoreShocks;
  if (name == "more-seasonality") return Regime::MoreSeasonality;
  if (name == "more-ar1") return Regime::MoreAR1;
  throw Error(ErrorCode::InvalidArgument, "unknown regime '" + name + "'");
}

double scale_ar_persistence(double phi, double c) {
  if (std::abs(phi) >= 1.0) throw Error(ErrorCode::InvalidArgument, "|phi| must be < 1");
  if (c < 0.0) throw Error(ErrorCode::InvalidArgument, "multiplier must be non-negative");
  return std::copysign(std::min(c * std::abs(phi), 0.99), phi);
}

namespace {

void require_valid(const GeneratorParams& params) {
  const auto issues = validate_params(params);
  if (!issues.empty())
    throw Error(ErrorCode::InvalidArgument, "invalid generator params: " + issues.front());
  if (params.n_units() == 0)
    throw Error(ErrorCode::InvalidArgument, "generator params carry no calibrated units");
}

}  // namespace

UnitDraw sample_units(const GeneratorParams& params, int n, std::uint64_t seed) {
  require_valid(params);
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");

  const Eigen::Index n_cal = params.n_units();
  const auto& mix = params.mixture;
  const auto& sm = params.sigma_model;

  UnitDraw draw;
  draw.mu.resize(n);
  draw.sigma.resize(n);
  draw.phi.resize(n);
  draw.gamma.resize(n);
  draw.shock_loading.resize(n);

  Rng rng = make_rng(mix64(seed, 0x756e6974ULL));
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<Eigen::Index> donor(0, n_cal - 1);

  for (int i = 0; i < n; ++i) {
    // component by cumulative weight
    const double target = u(rng);
    int comp = 0;
    double cum = 0.0;
    for (int c = 0; c < mix.n_components(); ++c) {
      cum += mix.weights[c];
      if (target <= cum) {
        comp = c;
        break;
      }
      comp = c;
    }
    const double log_mu = mix.means[comp] + std::sqrt(mix.variances[comp]) * z(rng);
    draw.mu[i] = std::exp(log_mu);

    const Eigen::Index j = donor(rng);
    double eta = 0.0;
    if (params.mu[j] > 0.0 && params.ar_sigma[j] > 0.0)
      eta = std::log(params.ar_sigma[j]) - (sm.a + sm.b * std::log(params.mu[j]));
    draw.sigma[i] = std::exp(sm.a + sm.b * log_mu + eta);
    draw.phi[i] = params.ar_phi[j];
    // seasonal and shock exposures scale with the unit's level
    const double rel = params.mu[j] > 0.0 ? draw.mu[i] / params.mu[j] : 1.0;
    draw.gamma[i] = params.gamma[j] * rel;
    draw.shock_loading[i] = params.shock_loading[j] * rel;
  }
  return draw;
}

PanelDataset generate_panel(const GeneratorParams& params, int n_units, int n_days,
                            const Perturbations& perturb, std::uint64_t seed) {
  require_valid(params);
  if (n_units < 1 || n_days < 1)
    throw Error(ErrorCode::InvalidArgument, "n_units and n_days must be positive");
  if (!(perturb.c_seas >= 0.0 && perturb.c_shock >= 0.0 && perturb.c_ar >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "perturbation multipliers must be non-negative");

  Eigen::VectorXd mu, sigma, phi, gamma, loading;
  std::vector<std::string> ids;
  if (n_units == params.n_units()) {
    mu = params.mu;
    sigma = params.ar_sigma;
    phi = params.ar_phi;
    gamma = params.gamma;
    loading = params.shock_loading;
    ids = params.unit_ids;
    if (ids.empty()) {
      char buf[24];
      for (int i = 0; i < n_units; ++i) {
        std::snprintf(buf, sizeof(buf), "unit_%03d", i);
        ids.emplace_back(buf);
      }
    }
  } else {
    const UnitDraw draw = sample_units(params, n_units, mix64(seed, 0x647261ULL));
    mu = draw.mu;
    sigma = draw.sigma;
    phi = draw.phi;
    gamma = draw.gamma;
    loading = draw.shock_loading;
    char buf[24];
    for (int i = 0; i < n_units; ++i) {
      std::snprintf(buf, sizeof(buf), "unit_%03d", i);
      ids.emplace_back(buf);
    }
  }

  const Eigen::VectorXd seas = params.fourier.eval_range(n_days);

  // fresh common factor: white noise with unit variance; cross-unit
  // correlation comes from the shared loadings
  Eigen::VectorXd shock(n_days);
  {
    Rng rng = make_rng(mix64(seed, 0x73686f636bULL));
    std::normal_distribution<double> z(0.0, 1.0);
    for (int t = 0; t < n_days; ++t) shock[t] = z(rng);
  }

  Eigen::MatrixXd y(n_units, n_days);
  std::vector<int> dow(n_days);
  for (int t = 0; t < n_days; ++t) dow[t] = day_of_week(params.start_date + t);

  for (int i = 0; i < n_units; ++i) {
    Rng rng = make_rng(mix64(seed, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> z(0.0, 1.0);
    const double phi_i = scale_ar_persistence(phi[i], perturb.c_ar);
    const double sigma_i = sigma[i];

    double r = 0.0;
    if (sigma_i > 0.0) r = z(rng) * sigma_i / std::sqrt(1.0 - phi_i * phi_i);
    for (int t = 0; t < n_days; ++t) {
      if (t > 0) r = phi_i * r + (sigma_i > 0.0 ? sigma_i * z(rng) : 0.0);
      y(i, t) = mu[i] + params.alpha[dow[t]] + perturb.c_seas * gamma[i] * seas[t] +
                perturb.c_shock * loading[i] * shock[t] + r;
    }
  }
  return make_panel(std::move(ids), params.start_date, std::move(y));
}

PanelDataset inject_uplift(const PanelDataset& panel, const AssignmentSchedule& schedule,
                           double delta, std::uint64_t seed) {
  if (panel.n_units() != schedule.n_units() || panel.n_days() != schedule.n_days())
    throw Error(ErrorCode::DimensionMismatch, "panel and schedule dimensions differ");
  PanelDataset out = panel;
  if (delta == 0.0) return out;

  Rng rng = make_rng(mix64(seed, 0x75706cULL));
  std::normal_distribution<double> eta(0.0, std::abs(delta));
  for (Eigen::Index i = 0; i < panel.n_units(); ++i)
    for (Eigen::Index t = 0; t < panel.n_days(); ++t)
      if (schedule.treatment(i, t) == 1)
        out.outcomes(i, t) *= 1.0 + delta + eta(rng);
  return out;
}

}  // namespace sbx
