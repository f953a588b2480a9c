#include <doctest.h>

#include <cmath>
#include <random>

#include "sbx/design.hpp"
#include "sbx/errors.hpp"
#include "sbx/estimate.hpp"
#include "sbx/generate.hpp"
#include "sbx/stats.hpp"
#include "test_support.hpp"

using namespace sbx;

namespace {

// minimal hand-built parameter set with full control over every component
GeneratorParams tiny_params(int n_units, double phi, double sigma) {
  GeneratorParams p;
  p.start_date = parse_date("2024-01-01");
  p.mu = Eigen::VectorXd::Constant(n_units, 100.0);
  p.alpha = Eigen::VectorXd::Zero(7);
  p.fourier.harmonics = 1;
  p.fourier.period = 365.25;
  p.fourier.a = Eigen::VectorXd::Zero(1);
  p.fourier.b = Eigen::VectorXd::Zero(1);
  p.gamma = Eigen::VectorXd::Zero(n_units);
  p.shock_factor = Eigen::VectorXd::Zero(0);
  p.shock_loading = Eigen::VectorXd::Zero(n_units);
  p.ar_phi = Eigen::VectorXd::Constant(n_units, phi);
  p.ar_sigma = Eigen::VectorXd::Constant(n_units, sigma);
  p.mixture.weights = Eigen::VectorXd::Ones(1);
  p.mixture.means = Eigen::VectorXd::Constant(1, std::log(100.0));
  p.mixture.variances = Eigen::VectorXd::Zero(1);
  p.sigma_model = {sigma > 0.0 ? std::log(sigma) : 0.0, 0.0, 0.0};
  for (int i = 0; i < n_units; ++i) p.unit_ids.push_back("u" + std::to_string(i));
  return p;
}

}  // namespace

TEST_CASE("scale_ar_persistence") {
  CHECK(scale_ar_persistence(0.4, 1.0) == 0.4);
  CHECK(scale_ar_persistence(0.4, 2.0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(scale_ar_persistence(0.6, 2.0) == 0.99);
  CHECK(scale_ar_persistence(-0.6, 2.0) == -0.99);
  CHECK(scale_ar_persistence(0.5, 0.0) == 0.0);
  CHECK_THROWS_AS(scale_ar_persistence(1.0, 1.0), Error);
}

TEST_CASE("make_regime maps each regime to its multiplier triple") {
  CHECK(make_regime(Regime::Baseline) == Perturbations{1.0, 1.0, 1.0});
  CHECK(make_regime(Regime::MoreShocks) == Perturbations{1.0, 2.0, 1.0});
  CHECK(make_regime(Regime::MoreSeasonality) == Perturbations{2.0, 1.0, 1.0});
  CHECK(make_regime(Regime::MoreAR1) == Perturbations{1.0, 1.0, 2.0});
  CHECK(regime_from_name("more-shocks") == Regime::MoreShocks);
  CHECK_THROWS_AS(regime_from_name("bogus"), Error);
}

TEST_CASE("sample_units: degenerate distributions collapse to shared values") {
  const auto p = tiny_params(4, 0.3, 2.0);  // tau = 0, zero-variance mixture
  const auto draw = sample_units(p, 50, 99);
  for (int i = 0; i < 50; ++i) {
    CHECK(draw.mu[i] == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(draw.sigma[i] ==
          doctest::Approx(std::exp(p.sigma_model.a + p.sigma_model.b * std::log(100.0)))
              .epsilon(1e-12));
    CHECK(draw.phi[i] == 0.3);
  }
}

TEST_CASE("sample_units reproduces the Taylor-law slope") {
  GeneratorParams p = default_generator_params();
  const auto draw = sample_units(p, 10000, 7);
  const Eigen::VectorXd log_mu = draw.mu.array().log();
  const Eigen::VectorXd log_sigma = draw.sigma.array().log();
  const double mlm = log_mu.mean(), mls = log_sigma.mean();
  const double slope = ((log_mu.array() - mlm) * (log_sigma.array() - mls)).sum() /
                       (log_mu.array() - mlm).square().sum();
  CHECK(std::abs(slope - p.sigma_model.b) < 0.05);
}

TEST_CASE("sample_units mixture occupancy is balanced for equal weights") {
  GeneratorParams p = tiny_params(4, 0.3, 2.0);
  p.mixture.weights = Eigen::Vector2d(0.5, 0.5);
  p.mixture.means = Eigen::Vector2d(0.0, 10.0);  // far apart: occupancy is unambiguous
  p.mixture.variances = Eigen::Vector2d(0.01, 0.01);
  const auto draw = sample_units(p, 4000, 3);
  int low = 0;
  for (int i = 0; i < 4000; ++i)
    if (std::log(draw.mu[i]) < 5.0) ++low;
  // 99.99% binomial band around 2000
  CHECK(std::abs(low - 2000) < 4.0 * std::sqrt(4000 * 0.25));
}

TEST_CASE("generate_panel noiseless core is exactly mu + alpha") {
  GeneratorParams p = tiny_params(5, 0.5, 0.0);
  p.alpha << 1, 2, 3, -1, -2, -3, 0;
  p.gamma.setConstant(4.0);         // silenced by c_seas = 0
  p.shock_loading.setConstant(2.0); // silenced by c_shock = 0
  const auto panel = generate_panel(p, 5, 30, {0.0, 0.0, 1.0}, 11);
  for (int i = 0; i < 5; ++i)
    for (int t = 0; t < 30; ++t)
      REQUIRE(panel.outcomes(i, t) == 100.0 + p.alpha[panel.day_of_week[t]]);
}

TEST_CASE("generate_panel: phi = 0 leaves residuals serially uncorrelated") {
  const auto p = tiny_params(40, 0.0, 1.0);
  const auto panel = generate_panel(p, 40, 400, {}, 5);
  double mean_ac = 0.0;
  for (int i = 0; i < 40; ++i)
    mean_ac += lag1_autocorr(panel.outcomes.row(i).transpose());
  mean_ac /= 40.0;
  CHECK(std::abs(mean_ac) < 3.0 / std::sqrt(400.0 * 40.0));
}

TEST_CASE("generate_panel matches stationary AR(1) moments") {
  const double phi = 0.6, sigma = 2.0;
  const auto p = tiny_params(80, phi, sigma);
  const int T = 366, reps = 60;

  double mean_acc = 0.0, var_acc = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto panel = generate_panel(p, 80, T, {}, 1000 + rep);
    for (int i = 0; i < 80; ++i) {
      const Eigen::VectorXd row = panel.outcomes.row(i).transpose();
      mean_acc += sample_mean(row);
      var_acc += sample_variance(row);
    }
  }
  const double grand_mean = mean_acc / (80.0 * reps);
  const double grand_var = var_acc / (80.0 * reps);
  const double marginal_var = sigma * sigma / (1.0 - phi * phi);

  // variance of a unit's sample mean follows the autocorrelation-adjusted
  // formula; the grand mean over 80*reps units tightens it accordingly
  AutocovSpec spec{marginal_var, {}};
  for (int k = 1; k < T; ++k) spec.rho.push_back(std::pow(phi, k));
  const double mean_se = std::sqrt(effective_sample_variance(spec, T) / (80.0 * reps));
  CHECK(std::abs(grand_mean - 100.0) < 4.0 * mean_se);
  CHECK(grand_var == doctest::Approx(marginal_var).epsilon(0.05));
}

TEST_CASE("generate_panel is deterministic in the seed") {
  GeneratorParams p = default_generator_params();
  const auto a = generate_panel(p, 80, 100, {}, 42);
  const auto b = generate_panel(p, 80, 100, {}, 42);
  CHECK((a.outcomes.array() == b.outcomes.array()).all());
  CHECK(a.unit_ids == b.unit_ids);
  const auto c = generate_panel(p, 80, 100, {}, 43);
  CHECK((a.outcomes.array() != c.outcomes.array()).any());
}

TEST_CASE("raising c_shock raises cross-unit correlation") {
  GeneratorParams p = default_generator_params();
  auto mean_corr = [&](double c_shock, int rep) {
    const auto panel = generate_panel(p, 30, 200, {1.0, c_shock, 1.0}, 900 + rep);
    double acc = 0.0;
    int count = 0;
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j) {
        const Eigen::ArrayXd a = panel.outcomes.row(i).array() - panel.outcomes.row(i).mean();
        const Eigen::ArrayXd b = panel.outcomes.row(j).array() - panel.outcomes.row(j).mean();
        acc += (a * b).sum() / std::sqrt(a.square().sum() * b.square().sum());
        ++count;
      }
    return acc / count;
  };
  double low = 0.0, high = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    low += mean_corr(1.0, rep);
    high += mean_corr(2.0, rep);
  }
  CHECK(high > low);
}

TEST_CASE("raising c_ar raises residual persistence") {
  const auto p = tiny_params(30, 0.4, 1.0);
  auto mean_lag1 = [&](double c_ar, int rep) {
    const auto panel = generate_panel(p, 30, 250, {1.0, 1.0, c_ar}, 300 + rep);
    double acc = 0.0;
    for (int i = 0; i < 30; ++i) acc += lag1_autocorr(panel.outcomes.row(i).transpose());
    return acc / 30.0;
  };
  double low = 0.0, high = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    low += mean_lag1(1.0, rep);
    high += mean_lag1(2.0, rep);
  }
  CHECK(high > low);
}

TEST_CASE("inject_uplift") {
  const auto p = tiny_params(6, 0.0, 0.0);
  const auto panel = generate_panel(p, 6, 28, {}, 1);  // constant 100 everywhere

  PodAssignment pods;
  pods.pod = {Pod::A, Pod::B, Pod::A, Pod::B, Pod::A, Pod::B};
  pods.cluster.assign(6, 0);
  const auto schedule = switchback_assignment(pods, 28, 1, 9);

  SUBCASE("delta = 0 returns a bit-identical panel") {
    const auto out = inject_uplift(panel, schedule, 0.0, 77);
    CHECK((out.outcomes.array() == panel.outcomes.array()).all());
  }
  SUBCASE("control cells are never modified") {
    const auto out = inject_uplift(panel, schedule, 0.25, 77);
    for (int i = 0; i < 6; ++i)
      for (int t = 0; t < 28; ++t)
        if (schedule.treatment(i, t) == 0) REQUIRE(out.outcomes(i, t) == panel.outcomes(i, t));
  }
  SUBCASE("treated multiplier has mean 1 + delta and sd delta") {
    // large constant panel for tight moments
    const auto big_p = tiny_params(100, 0.0, 0.0);
    const auto big = generate_panel(big_p, 100, 1000, {}, 2);
    PodAssignment pods2;
    pods2.pod.assign(100, Pod::A);
    for (int i = 0; i < 50; ++i) pods2.pod[i] = Pod::B;
    pods2.cluster.assign(100, 0);
    const auto sched2 = switchback_assignment(pods2, 1000, 1, 5);
    const double delta = 0.03;
    const auto out = inject_uplift(big, sched2, delta, 123);

    std::vector<double> mult;
    for (int i = 0; i < 100; ++i)
      for (int t = 0; t < 1000; ++t)
        if (sched2.treatment(i, t) == 1) mult.push_back(out.outcomes(i, t) / 100.0);
    const Eigen::VectorXd m = Eigen::Map<Eigen::VectorXd>(mult.data(), mult.size());
    const double n = static_cast<double>(m.size());
    CHECK(std::abs(sample_mean(m) - (1.0 + delta)) < 4.0 * delta / std::sqrt(n));
    CHECK(sample_sd(m) == doctest::Approx(delta).epsilon(0.05));
  }
  SUBCASE("dimension mismatch is rejected") {
    const auto small = panel.window(0, 10);
    try {
      inject_uplift(small, schedule, 0.03, 1);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
  }
}

TEST_CASE("params JSON round-trip preserves full precision") {
  GeneratorParams p = default_generator_params();
  const std::string text = params_to_json(p);
  const GeneratorParams back = params_from_json(text);
  CHECK(back.start_date == p.start_date);
  CHECK(back.unit_ids == p.unit_ids);
  CHECK((back.mu.array() == p.mu.array()).all());
  CHECK((back.alpha.array() == p.alpha.array()).all());
  CHECK((back.fourier.a.array() == p.fourier.a.array()).all());
  CHECK((back.shock_factor.array() == p.shock_factor.array()).all());
  CHECK((back.ar_phi.array() == p.ar_phi.array()).all());
  CHECK(back.sigma_model.a == p.sigma_model.a);
  CHECK(back.sigma_model.tau == p.sigma_model.tau);
  CHECK((back.mixture.weights.array() == p.mixture.weights.array()).all());

  CHECK_THROWS_AS(params_from_json("{not json"), Error);
  CHECK_THROWS_AS(params_from_json("{\"schema_version\": 99}"), Error);
}

TEST_CASE("default params satisfy their invariants") {
  const auto issues = validate_params(default_generator_params());
  for (const auto& s : issues) MESSAGE(s);
  CHECK(issues.empty());
}
