#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sbx/calibrate.hpp"
#include "sbx/errors.hpp"
#include "sbx/generate.hpp"
#include "sbx/stats.hpp"
#include "test_support.hpp"

using namespace sbx;

namespace {

PanelDataset panel_from(const Eigen::MatrixXd& y, const char* start = "2024-01-01") {
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < y.rows(); ++i) ids.push_back("u" + std::to_string(i));
  return make_panel(std::move(ids), parse_date(start), y);
}

}  // namespace

TEST_CASE("fit_baselines_and_dow on a constant panel") {
  const auto fit = fit_baselines_and_dow(panel_from(Eigen::MatrixXd::Constant(3, 28, 42.0)));
  CHECK((fit.mu.array() == 42.0).all());
  CHECK(fit.alpha.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_baselines_and_dow recovers planted baselines and weekly profile exactly") {
  // Friday +3, re-centered; panel covers exactly 4 weeks so recovery is exact
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(7);
  alpha[4] = 3.0;
  alpha.array() -= alpha.mean();
  const Eigen::Vector2d mu(10.0, 20.0);

  Eigen::MatrixXd y(2, 28);
  const Date start = parse_date("2024-01-01");  // a Monday
  for (Eigen::Index i = 0; i < 2; ++i)
    for (int t = 0; t < 28; ++t) y(i, t) = mu[i] + alpha[day_of_week(start + t)];

  const auto fit = fit_baselines_and_dow(panel_from(y));
  CHECK((fit.mu - mu).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit.alpha - alpha).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(fit.alpha.sum()) < 1e-12);
}

TEST_CASE("fit_baselines_and_dow matches a group-by oracle on noisy data") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z;
  Eigen::MatrixXd y(6, 45);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (int t = 0; t < 45; ++t) y(i, t) = 5.0 * i + z(rng);
  const auto panel = panel_from(y);
  const auto fit = fit_baselines_and_dow(panel);

  // oracle: group residual y - row mean by day of week, then re-center
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(7), counts = Eigen::VectorXd::Zero(7);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (int t = 0; t < 45; ++t) {
      sums[panel.day_of_week[t]] += y(i, t) - y.row(i).mean();
      counts[panel.day_of_week[t]] += 1;
    }
  Eigen::VectorXd alpha = (sums.array() / counts.array()).matrix();
  alpha.array() -= alpha.mean();
  CHECK((fit.alpha - alpha).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(fit_baselines_and_dow(panel_from(Eigen::MatrixXd::Ones(2, 13))), Error);
}

TEST_CASE("fit_seasonality: zero input gives zero coefficients") {
  const auto fit = fit_seasonality(Eigen::VectorXd::Zero(100), 2, 365.25);
  CHECK(fit.fourier.a.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fit.fourier.b.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fit.seas.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_seasonality recovers a planted harmonic exactly") {
  const int T = 366;
  const double P = 365.25;
  Eigen::VectorXd series(T);
  for (int t = 0; t < T; ++t) series[t] = 2.0 * std::sin(2.0 * std::numbers::pi * t / P);
  const auto fit = fit_seasonality(series, 1, P);
  CHECK(fit.fourier.a[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(std::abs(fit.fourier.b[0]) < 1e-8);
  CHECK((fit.seas - series).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fit_seasonality: noisy multi-harmonic recovery is unbiased") {
  const int T = 730, K = 3, reps = 100;
  const double P = 365.25, noise_sd = 0.1;
  const Eigen::Vector3d a_true(1.0, -0.4, 0.2), b_true(0.3, 0.5, -0.1);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0.0, noise_sd);
  Eigen::VectorXd a_sum = Eigen::VectorXd::Zero(K), b_sum = Eigen::VectorXd::Zero(K);
  for (int rep = 0; rep < reps; ++rep) {
    Eigen::VectorXd series(T);
    for (int t = 0; t < T; ++t) {
      double v = z(rng);
      for (int k = 1; k <= K; ++k) {
        const double w = 2.0 * std::numbers::pi * k * t / P;
        v += a_true[k - 1] * std::sin(w) + b_true[k - 1] * std::cos(w);
      }
      series[t] = v;
    }
    const auto fit = fit_seasonality(series, K, P);
    a_sum += fit.fourier.a;
    b_sum += fit.fourier.b;
  }
  // per-coefficient standard error ~ noise_sd * sqrt(2/T); the mean over reps
  // shrinks it by sqrt(reps)
  const double tol = 3.0 * noise_sd * std::sqrt(2.0 / T) / std::sqrt(double(reps));
  CHECK((a_sum / reps - a_true).cwiseAbs().maxCoeff() < tol);
  CHECK((b_sum / reps - b_true).cwiseAbs().maxCoeff() < tol);

  CHECK_THROWS_AS(fit_seasonality(Eigen::VectorXd::Zero(6), 3, 365.25), Error);
}

TEST_CASE("fit_seasonal_loadings") {
  const int T = 200;
  Eigen::VectorXd seas(T);
  for (int t = 0; t < T; ++t) seas[t] = std::sin(2.0 * std::numbers::pi * t / 50.0);

  SUBCASE("exact proportionality") {
    Eigen::MatrixXd resid(1, T);
    resid.row(0) = 2.0 * seas.transpose();
    CHECK(fit_seasonal_loadings(resid, seas)[0] == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("orthogonal residual maps to zero") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    Eigen::VectorXd raw(T);
    for (int t = 0; t < T; ++t) raw[t] = z(rng);
    const Eigen::VectorXd ortho = raw - (raw.dot(seas) / seas.squaredNorm()) * seas;
    Eigen::MatrixXd resid(1, T);
    resid.row(0) = ortho.transpose();
    CHECK(std::abs(fit_seasonal_loadings(resid, seas)[0]) < 1e-10);
  }
  SUBCASE("matches the closed-form slope oracle across 80 noisy units") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 0.5);
    std::uniform_real_distribution<double> g(-3.0, 3.0);
    Eigen::MatrixXd resid(80, T);
    Eigen::VectorXd gamma_true(80);
    for (int i = 0; i < 80; ++i) {
      gamma_true[i] = g(rng);
      for (int t = 0; t < T; ++t) resid(i, t) = gamma_true[i] * seas[t] + z(rng);
    }
    const Eigen::VectorXd gamma = fit_seasonal_loadings(resid, seas);
    for (int i = 0; i < 80; ++i) {
      const double oracle = resid.row(i).dot(seas) / seas.squaredNorm();
      REQUIRE(gamma[i] == doctest::Approx(oracle).epsilon(1e-12));
    }
    // noise-implied bound on the mean recovery error: sd(slope) = 0.5/|seas|
    const double bound = 3.0 * 0.5 / std::sqrt(seas.squaredNorm());
    CHECK((gamma - gamma_true).cwiseAbs().mean() < bound);
  }
  SUBCASE("zero seasonality is an error") {
    CHECK_THROWS_AS(fit_seasonal_loadings(Eigen::MatrixXd::Ones(2, T), Eigen::VectorXd::Zero(T)),
                    Error);
  }
}

TEST_CASE("fit_common_shock reconstructs an exact rank-1 matrix") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  const int T = 120, n = 12;
  Eigen::VectorXd u(T), v(n);
  for (int t = 0; t < T; ++t) u[t] = z(rng) + 0.5;
  for (int i = 0; i < n; ++i) v[i] = z(rng) + 1.0;
  const Eigen::MatrixXd r = u * v.transpose();

  const auto fit = fit_common_shock(r);
  CHECK(!fit.degenerate);
  const Eigen::MatrixXd recon = fit.factor * fit.loading.transpose();
  CHECK((recon - r).cwiseAbs().maxCoeff() < 1e-8);

  const double corr = std::abs((fit.factor.array() - fit.factor.mean())
                                   .cwiseProduct(u.array() - u.mean())
                                   .sum()) /
                      (std::sqrt((fit.factor.array() - fit.factor.mean()).square().sum()) *
                       std::sqrt((u.array() - u.mean()).square().sum()));
  CHECK(corr >= 0.999);
  CHECK(std::abs(sample_variance(fit.factor) - 1.0) < 1e-6);
  CHECK(fit.loading.sum() >= 0.0);
}

TEST_CASE("fit_common_shock: zero matrix is degenerate with zero loadings") {
  const auto fit = fit_common_shock(Eigen::MatrixXd::Zero(30, 5));
  CHECK(fit.degenerate);
  CHECK(fit.loading.cwiseAbs().maxCoeff() == 0.0);
  CHECK(fit.factor.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit_common_shock explained variance matches a dense eigensolver") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  const int T = 300, n = 20;
  Eigen::VectorXd u(T), v(n);
  for (int t = 0; t < T; ++t) u[t] = z(rng);
  for (int i = 0; i < n; ++i) v[i] = z(rng) + 0.8;
  Eigen::MatrixXd r = u * v.transpose();
  const double signal_sd = std::sqrt(r.squaredNorm() / (T * n));
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) r(t, i) += z(rng) * signal_sd / std::sqrt(10.0);  // SNR 10

  const auto fit = fit_common_shock(r);
  const Eigen::MatrixXd c = r.transpose() * r;
  const Eigen::VectorXd vhat = fit.loading / fit.loading.norm();
  const double lambda_mine = vhat.dot(c * vhat);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  const double lambda_max = eig.eigenvalues().maxCoeff();
  CHECK(lambda_mine / c.trace() == doctest::Approx(lambda_max / c.trace()).epsilon(1e-6));
}

TEST_CASE("fit_ar1") {
  std::mt19937_64 rng(19);

  SUBCASE("iid series has phi near zero") {
    const auto fit = fit_ar1(testsup::simulate_ar1(0.0, 1.0, 5000, rng));
    CHECK(std::abs(fit.phi) < 0.05);
  }
  SUBCASE("plant and recover") {
    const auto fit = fit_ar1(testsup::simulate_ar1(0.7, 1.0, 5000, rng));
    CHECK(fit.phi > 0.65);
    CHECK(fit.phi < 0.75);
    CHECK(fit.sigma > 0.97);
    CHECK(fit.sigma < 1.03);
  }
  SUBCASE("constant series is degenerate") {
    try {
      fit_ar1(Eigen::VectorXd::Constant(50, 3.0));
      FAIL("expected DegenerateSeries");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateSeries);
    }
  }
  SUBCASE("short series violates the precondition") {
    CHECK_THROWS_AS(fit_ar1(Eigen::VectorXd::Random(5)), Error);
  }
}

TEST_CASE("fit_cross_leg degenerate dispersion") {
  const auto fit = fit_cross_leg(Eigen::VectorXd::Constant(10, 50.0),
                                 Eigen::VectorXd::Constant(10, 5.0), 4);
  CHECK(fit.mixture.n_components() == 1);
  CHECK(fit.sigma_model.b == 0.0);
  CHECK(fit.sigma_model.a == doctest::Approx(std::log(5.0)).epsilon(1e-10));
  CHECK(!fit.diagnostics.empty());
}

TEST_CASE("fit_cross_leg recovers a planted two-component mixture") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> z;
  const int n = 500;
  Eigen::VectorXd mu(n), sigma(n);
  for (int i = 0; i < n; ++i) {
    const double log_mu = (i % 2 == 0 ? 0.0 : 3.0) + 0.4 * z(rng);
    mu[i] = std::exp(log_mu);
    sigma[i] = std::exp(-1.0 + 0.8 * log_mu + 0.1 * z(rng));
  }
  const auto fit = fit_cross_leg(mu, sigma, 5);
  REQUIRE(fit.mixture.n_components() == 2);
  CHECK(fit.mixture.means[0] == doctest::Approx(0.0).epsilon(0.2));
  CHECK(std::abs(fit.mixture.means[1] - 3.0) < 0.2);
  CHECK(fit.sigma_model.b > 0.75);
  CHECK(fit.sigma_model.b < 0.85);

  try {
    fit_cross_leg(Eigen::VectorXd::Constant(6, -1.0), sigma.head(6), 3);
    FAIL("expected NonPositiveBaseline");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveBaseline);
  }
}

TEST_CASE("calibrate on a constant panel degrades gracefully") {
  const auto result = calibrate(panel_from(Eigen::MatrixXd::Constant(6, 60, 7.0)));
  CHECK((result.params.mu.array() == 7.0).all());
  CHECK(result.params.alpha.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(result.params.ar_phi.cwiseAbs().maxCoeff() == 0.0);
  CHECK(result.params.ar_sigma.cwiseAbs().maxCoeff() == 0.0);
  // one DegenerateSeries diagnostic per unit
  int degenerate = 0;
  for (const auto& d : result.diagnostics)
    if (d.find("DegenerateSeries") != std::string::npos) ++degenerate;
  CHECK(degenerate == 6);
}

TEST_CASE("calibrate round-trips parameters planted by the generator") {
  GeneratorParams truth = default_generator_params();
  const PanelDataset panel = generate_panel(truth, 80, 366, {}, 20240811);
  const CalibrationResult result = calibrate(panel);
  const GeneratorParams& est = result.params;

  // per-unit baselines: mu_hat differs from mu by the window means of the
  // seasonal/shock/AR components; allow a tolerance scaled to the residual sd
  for (int i = 0; i < 80; ++i) {
    const double resid_sd =
        truth.ar_sigma[i] / std::sqrt(1.0 - truth.ar_phi[i] * truth.ar_phi[i]);
    REQUIRE(std::abs(est.mu[i] - truth.mu[i]) <
            0.12 * std::abs(truth.mu[i]) + 5.0 * resid_sd / std::sqrt(366.0));
  }

  // weekly profile: every entry within a few noise standard errors
  const double alpha_se = est.ar_sigma.mean() / std::sqrt(80.0 * 52.0);
  CHECK((est.alpha - truth.alpha).cwiseAbs().maxCoeff() < 6.0 * alpha_se + 1.0);

  // AR parameters recovered on average (small attenuation from the removals)
  CHECK(std::abs((est.ar_phi - truth.ar_phi).mean()) < 0.05);
  Eigen::VectorXd sigma_ratio = est.ar_sigma.array() / truth.ar_sigma.array();
  CHECK(std::abs(sigma_ratio.mean() - 1.0) < 0.05);

  // seasonal loadings correlate with the planted ones up to estimation noise
  const auto corr = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd da = a.array() - a.mean(), db = b.array() - b.mean();
    return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
  };
  CHECK(corr(est.gamma, truth.gamma) > 0.8);
}

TEST_CASE("calibrate recovers shock loadings when the factor is identifiable") {
  // at the shipped default scale the common shock is a small variance share;
  // amplify it so the rank-1 component clearly dominates the noise floor
  GeneratorParams truth = default_generator_params();
  const PanelDataset panel = generate_panel(truth, 80, 366, {1.0, 4.0, 1.0}, 555);
  const CalibrationResult result = calibrate(panel);

  const Eigen::VectorXd& est = result.params.shock_loading;
  const Eigen::ArrayXd da = est.array() - est.mean();
  const Eigen::ArrayXd db = truth.shock_loading.array() - truth.shock_loading.mean();
  const double corr = (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
  CHECK(corr > 0.9);
  // estimated loadings absorb the amplification factor
  CHECK(est.mean() == doctest::Approx(4.0 * truth.shock_loading.mean()).epsilon(0.15));
}

TEST_CASE("fit-remove-fit avoids variance double-counting") {
  GeneratorParams truth = default_generator_params();
  const PanelDataset panel = generate_panel(truth, 80, 366, {}, 4242);
  const CalibrationResult result = calibrate(panel);

  // naive dispersion fit on the raw de-meaned series must overshoot
  double naive_larger = 0;
  for (int i = 0; i < 80; ++i) {
    Eigen::VectorXd raw = panel.outcomes.row(i).transpose();
    raw.array() -= raw.mean();
    const Ar1Fit naive = fit_ar1(raw);
    if (naive.sigma > result.params.ar_sigma[i]) ++naive_larger;
  }
  CHECK(naive_larger == 80);  // strictly smaller sigma for every unit
}

TEST_CASE("removing a planted component leaves residuals uncorrelated with it") {
  // pure seasonal panel: after fitting and removing gamma_i * Seas_t the
  // residual correlation with the seasonal regressor must vanish
  const int n = 10, T = 366;
  GeneratorParams p = default_generator_params();
  Eigen::MatrixXd y(n, T);
  const Eigen::VectorXd seas = p.fourier.eval_range(T);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> g(0.5, 2.0);
  for (int i = 0; i < n; ++i) {
    const double gamma = g(rng);
    for (int t = 0; t < T; ++t) y(i, t) = 100.0 + gamma * seas[t];
  }
  const auto panel = panel_from(y);
  const auto base = fit_baselines_and_dow(panel);
  Eigen::MatrixXd resid = y;
  resid.colwise() -= base.mu;
  for (int t = 0; t < T; ++t) resid.col(t).array() -= base.alpha[panel.day_of_week[t]];
  const auto seas_fit = fit_seasonality(resid.colwise().mean().transpose(), 3, 365.25);
  const Eigen::VectorXd gamma = fit_seasonal_loadings(resid, seas_fit.seas);
  resid -= gamma * seas_fit.seas.transpose();

  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd row = resid.row(i).transpose();
    const double denom = std::sqrt(row.squaredNorm() * seas_fit.seas.squaredNorm());
    if (denom < 1e-12) continue;  // residual vanished entirely: perfect removal
    CHECK(std::abs(row.dot(seas_fit.seas)) / denom < 1e-6);
  }
}
