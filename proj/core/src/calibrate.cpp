#include "sbx/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sbx/errors.hpp"
#include "sbx/rng.hpp"
#include "sbx/stats.hpp"

namespace sbx {

BaselineDowFit fit_baselines_and_dow(const PanelDataset& panel) {
  const Eigen::Index n = panel.n_units(), T = panel.n_days();
  if (T < 14) throw Error(ErrorCode::ShortPanel, "need at least two full weeks");

  BaselineDowFit fit;
  fit.mu = panel.outcomes.rowwise().mean();

  Eigen::VectorXd sums = Eigen::VectorXd::Zero(7);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(7);
  for (Eigen::Index t = 0; t < T; ++t) {
    const int d = panel.day_of_week[t];
    for (Eigen::Index i = 0; i < n; ++i) {
      sums[d] += panel.outcomes(i, t) - fit.mu[i];
      counts[d] += 1.0;
    }
  }
  fit.alpha = (sums.array() / counts.array().max(1.0)).matrix();
  fit.alpha.array() -= fit.alpha.mean();
  return fit;
}

SeasonalityFit fit_seasonality(const Eigen::VectorXd& daily_mean_residual, int harmonics,
                               double period) {
  const Eigen::Index T = daily_mean_residual.size();
  if (harmonics < 1) throw Error(ErrorCode::InvalidArgument, "harmonics must be positive");
  if (period <= 0.0) throw Error(ErrorCode::InvalidArgument, "period must be positive");
  if (T < 2 * harmonics + 1)
    throw Error(ErrorCode::RankDeficientBasis, "series too short for the requested harmonics");

  Eigen::MatrixXd basis(T, 2 * harmonics);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int k = 1; k <= harmonics; ++k) {
      const double w = 2.0 * std::numbers::pi * k * static_cast<double>(t) / period;
      basis(t, 2 * (k - 1)) = std::sin(w);
      basis(t, 2 * (k - 1) + 1) = std::cos(w);
    }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  if (qr.rank() < 2 * harmonics)
    throw Error(ErrorCode::RankDeficientBasis,
                "Fourier basis is rank deficient for this window");
  const Eigen::VectorXd coef = qr.solve(daily_mean_residual);

  SeasonalityFit fit;
  fit.fourier.harmonics = harmonics;
  fit.fourier.period = period;
  fit.fourier.a.resize(harmonics);
  fit.fourier.b.resize(harmonics);
  for (int k = 0; k < harmonics; ++k) {
    fit.fourier.a[k] = coef[2 * k];
    fit.fourier.b[k] = coef[2 * k + 1];
  }
  fit.seas = basis * coef;
  return fit;
}

Eigen::VectorXd fit_seasonal_loadings(const Eigen::MatrixXd& residuals,
                                      const Eigen::VectorXd& seas) {
  if (residuals.cols() != seas.size())
    throw Error(ErrorCode::DimensionMismatch, "residual columns must match seas length");
  const double denom = seas.squaredNorm();
  if (denom < 1e-18) throw Error(ErrorCode::ZeroSeasonality, "seasonal series is identically zero");
  return residuals * seas / denom;
}

CommonShockFit fit_common_shock(const Eigen::MatrixXd& residual_tn) {
  const Eigen::Index T = residual_tn.rows(), n = residual_tn.cols();
  if (n < 2 || T < 2)
    throw Error(ErrorCode::InvalidArgument, "need at least a 2 x 2 residual matrix");
  if (!residual_tn.allFinite())
    throw Error(ErrorCode::InvalidArgument, "residual matrix must be finite");

  CommonShockFit fit;
  fit.factor = Eigen::VectorXd::Zero(T);
  fit.loading = Eigen::VectorXd::Zero(n);
  if (residual_tn.cwiseAbs().maxCoeff() < 1e-12) {
    fit.degenerate = true;
    return fit;
  }

  // power iteration for the dominant eigenvector of the N x N second-moment
  // matrix; only the leading component is needed
  const Eigen::MatrixXd c = residual_tn.transpose() * residual_tn;
  Rng rng = make_rng(mix64(0x70636131ULL));
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = z(rng);
  v.normalize();
  for (int iter = 0; iter < 1000; ++iter) {
    Eigen::VectorXd next = c * v;
    const double norm = next.norm();
    if (norm == 0.0) break;
    next /= norm;
    const double delta = (next - v).norm();
    v = next;
    if (delta < 1e-10) break;
  }

  Eigen::VectorXd scores = residual_tn * v;
  const double sd = sample_sd(scores);
  if (sd < 1e-12) {
    fit.degenerate = true;
    return fit;
  }
  // sign convention: total exposure is non-negative
  double sign = v.sum();
  if (sign == 0.0)
    for (Eigen::Index i = 0; i < n; ++i)
      if (v[i] != 0.0) {
        sign = v[i];
        break;
      }
  if (sign < 0.0) {
    v = -v;
    scores = -scores;
  }
  fit.factor = scores / sd;
  fit.loading = sd * v;
  return fit;
}

Ar1Fit fit_ar1(const Eigen::VectorXd& series) {
  const Eigen::Index T = series.size();
  if (T < 10) throw Error(ErrorCode::InvalidArgument, "need at least 10 observations");
  if (sample_variance(series) < 1e-24)
    throw Error(ErrorCode::DegenerateSeries, "series has zero variance");

  double num = 0.0, den = 0.0;
  for (Eigen::Index t = 1; t < T; ++t) {
    num += series[t] * series[t - 1];
    den += series[t - 1] * series[t - 1];
  }
  if (den < 1e-24) throw Error(ErrorCode::DegenerateSeries, "lagged series has zero variance");

  Ar1Fit fit;
  fit.phi = std::clamp(num / den, -0.99, 0.99);
  Eigen::VectorXd eps(T - 1);
  for (Eigen::Index t = 1; t < T; ++t) eps[t - 1] = series[t] - fit.phi * series[t - 1];
  fit.sigma = sample_sd(eps);
  return fit;
}

namespace {

// 1-D k-means used only to initialize EM.
std::vector<int> scalar_kmeans(const Eigen::VectorXd& x, int k, Rng& rng) {
  const Eigen::Index n = x.size();
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  Eigen::VectorXd centers(k);
  for (int c = 0; c < k; ++c) centers[c] = x[pick(rng)];
  std::vector<int> labels(n, 0);
  for (int iter = 0; iter < 50; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = std::abs(x[i] - centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      labels[i] = best;
    }
    for (int c = 0; c < k; ++c) {
      double sum = 0.0;
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (labels[i] == c) {
          sum += x[i];
          ++count;
        }
      if (count > 0) centers[c] = sum / count;
    }
  }
  return labels;
}

struct EmResult {
  GaussianMixture1D mixture;
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

constexpr double kVarianceFloor = 1e-6;

EmResult fit_em(const Eigen::VectorXd& x, int k, std::uint64_t seed) {
  const Eigen::Index n = x.size();
  Rng rng = make_rng(seed);
  const auto labels = scalar_kmeans(x, k, rng);

  Eigen::VectorXd w(k), mean(k), var(k);
  for (int c = 0; c < k; ++c) {
    double sum = 0.0, sq = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (labels[i] == c) {
        sum += x[i];
        sq += x[i] * x[i];
        ++count;
      }
    if (count == 0) {
      std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
      mean[c] = x[pick(rng)];
      var[c] = std::max(kVarianceFloor, sample_variance(x));
      w[c] = 1.0 / n;
    } else {
      mean[c] = sum / count;
      var[c] = std::max(kVarianceFloor, sq / count - mean[c] * mean[c]);
      w[c] = static_cast<double>(count) / n;
    }
  }
  w /= w.sum();

  Eigen::MatrixXd resp(n, k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  double ll = prev_ll;
  for (int iter = 0; iter < 500; ++iter) {
    // E step via log-sum-exp
    ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd logp(k);
      for (int c = 0; c < k; ++c)
        logp[c] = std::log(w[c]) - 0.5 * std::log(2.0 * std::numbers::pi * var[c]) -
                  0.5 * (x[i] - mean[c]) * (x[i] - mean[c]) / var[c];
      const double m = logp.maxCoeff();
      const double lse = m + std::log((logp.array() - m).exp().sum());
      ll += lse;
      resp.row(i) = (logp.array() - lse).exp();
    }
    // M step
    for (int c = 0; c < k; ++c) {
      const double nc = resp.col(c).sum();
      if (nc < 1e-12) continue;
      w[c] = nc / n;
      mean[c] = resp.col(c).dot(x) / nc;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        acc += resp(i, c) * (x[i] - mean[c]) * (x[i] - mean[c]);
      var[c] = std::max(kVarianceFloor, acc / nc);
    }
    w /= w.sum();
    if (std::abs(ll - prev_ll) < 1e-8) break;
    prev_ll = ll;
  }

  EmResult out;
  out.mixture = {w, mean, var};
  out.log_likelihood = ll;
  return out;
}

void sort_components(GaussianMixture1D& m) {
  std::vector<int> order(m.n_components());
  for (size_t c = 0; c < order.size(); ++c) order[c] = static_cast<int>(c);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return m.means[a] < m.means[b]; });
  GaussianMixture1D s = m;
  for (size_t c = 0; c < order.size(); ++c) {
    s.weights[c] = m.weights[order[c]];
    s.means[c] = m.means[order[c]];
    s.variances[c] = m.variances[order[c]];
  }
  m = s;
}

}  // namespace

CrossLegFit fit_cross_leg(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                          int max_components) {
  const Eigen::Index n = mu.size();
  if (n < 5) throw Error(ErrorCode::InvalidArgument, "need at least 5 units");
  if (sigma.size() != n) throw Error(ErrorCode::DimensionMismatch, "mu/sigma length mismatch");
  if (max_components < 1)
    throw Error(ErrorCode::InvalidArgument, "max_components must be positive");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(mu[i] > 0.0) || !(sigma[i] > 0.0))
      throw Error(ErrorCode::NonPositiveBaseline,
                  "mu and sigma must be positive (unit " + std::to_string(i) + ")");

  const Eigen::VectorXd log_mu = mu.array().log();
  const Eigen::VectorXd log_sigma = sigma.array().log();

  CrossLegFit fit;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_components; ++k) {
    if (k > n) break;
    EmResult best_for_k;
    for (int restart = 0; restart < 5; ++restart) {
      const EmResult r = fit_em(log_mu, k, mix64(0x656d5f666974ULL, k, restart));
      if (r.log_likelihood > best_for_k.log_likelihood) best_for_k = r;
    }
    const double n_params = 3.0 * k - 1.0;
    const double bic = -2.0 * best_for_k.log_likelihood + n_params * std::log(double(n));
    if (bic < best_bic) {
      best_bic = bic;
      fit.mixture = best_for_k.mixture;
    }
  }
  sort_components(fit.mixture);

  const double var_lm = sample_variance(log_mu);
  if (var_lm < 1e-12) {
    fit.sigma_model.b = 0.0;
    fit.sigma_model.a = log_sigma.mean();
    fit.diagnostics.push_back("log mu is constant; slope b is not identified and was set to 0");
  } else {
    const double mlm = log_mu.mean(), mls = log_sigma.mean();
    const double cov = ((log_mu.array() - mlm) * (log_sigma.array() - mls)).sum() / (n - 1);
    fit.sigma_model.b = cov / var_lm;
    fit.sigma_model.a = mls - fit.sigma_model.b * mlm;
  }
  Eigen::VectorXd resid =
      log_sigma.array() - fit.sigma_model.a - fit.sigma_model.b * log_mu.array();
  const Eigen::Index dof = std::max<Eigen::Index>(1, n - 2);
  fit.sigma_model.tau = std::sqrt(resid.squaredNorm() / static_cast<double>(dof));
  return fit;
}

CalibrationResult calibrate(const PanelDataset& panel, int harmonics, double period) {
  {
    const auto issues = validate_panel(panel);
    if (!issues.empty())
      throw Error(ErrorCode::InvalidArgument, "invalid panel: " + issues.front().message);
  }
  const Eigen::Index n = panel.n_units(), T = panel.n_days();

  CalibrationResult out;
  GeneratorParams& p = out.params;
  p.start_date = panel.dates.front();
  p.unit_ids = panel.unit_ids;

  // step 1: baselines and day-of-week
  const BaselineDowFit base = fit_baselines_and_dow(panel);
  p.mu = base.mu;
  p.alpha = base.alpha;
  Eigen::MatrixXd resid = panel.outcomes;
  resid.colwise() -= p.mu;
  for (Eigen::Index t = 0; t < T; ++t)
    resid.col(t).array() -= p.alpha[panel.day_of_week[t]];

  // step 2: smooth seasonality on the cross-unit daily mean, then loadings
  const Eigen::VectorXd daily_mean = resid.colwise().mean().transpose();
  const SeasonalityFit seas_fit = fit_seasonality(daily_mean, harmonics, period);
  p.fourier = seas_fit.fourier;
  try {
    p.gamma = fit_seasonal_loadings(resid, seas_fit.seas);
  } catch (const Error&) {
    p.gamma = Eigen::VectorXd::Zero(n);
    out.diagnostics.push_back("seasonal series is zero; loadings set to 0");
  }
  resid -= p.gamma * seas_fit.seas.transpose();

  // step 3: rank-1 common shock
  const CommonShockFit shock = fit_common_shock(resid.transpose());
  p.shock_factor = shock.factor;
  p.shock_loading = shock.loading;
  if (shock.degenerate)
    out.diagnostics.push_back("residual matrix is ~0; common shock set to 0");
  resid -= p.shock_loading * p.shock_factor.transpose();

  // step 4: per-unit AR(1) on the remaining innovations
  p.ar_phi = Eigen::VectorXd::Zero(n);
  p.ar_sigma = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      const Ar1Fit ar = fit_ar1(resid.row(i).transpose());
      p.ar_phi[i] = ar.phi;
      p.ar_sigma[i] = ar.sigma;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSeries) throw;
      out.diagnostics.push_back("unit '" + panel.unit_ids[i] +
                                "': DegenerateSeries, phi and sigma set to 0");
    }
  }

  // cross-unit models for sampling fresh portfolios
  try {
    const CrossLegFit cross = fit_cross_leg(p.mu, p.ar_sigma, 5);
    p.mixture = cross.mixture;
    p.sigma_model = cross.sigma_model;
    out.diagnostics.insert(out.diagnostics.end(), cross.diagnostics.begin(),
                           cross.diagnostics.end());
  } catch (const Error& e) {
    p.mixture.weights = Eigen::VectorXd::Ones(1);
    p.mixture.means = Eigen::VectorXd::Zero(1);
    p.mixture.variances = Eigen::VectorXd::Constant(1, kVarianceFloor);
    p.sigma_model = {0.0, 0.0, 0.0};
    out.diagnostics.push_back(std::string("cross-leg models skipped: ") + e.what());
  }
  return out;
}

}  // namespace sbx
