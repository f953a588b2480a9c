#include "sbx/estimate.hpp"

#include <cmath>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "sbx/errors.hpp"
#include "sbx/stats.hpp"

namespace sbx {

namespace {
constexpr double kIdentificationFloor = 1e-12;
}

Eigen::MatrixXd double_demean(const Eigen::MatrixXd& m) {
  if (m.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty matrix");
  const Eigen::VectorXd row_means = m.rowwise().mean();
  const Eigen::RowVectorXd col_means = m.colwise().mean();
  const double grand = m.mean();
  return ((m.colwise() - row_means).rowwise() - col_means).array() + grand;
}

TwfeFit twfe_fit(const PanelDataset& panel, const AssignmentSchedule& schedule) {
  if (panel.n_units() != schedule.n_units() || panel.n_days() != schedule.n_days())
    throw Error(ErrorCode::DimensionMismatch, "panel and schedule dimensions differ");

  TwfeFit fit;
  fit.dd_treatment = double_demean(schedule.treatment.cast<double>());
  fit.regressor_mass = fit.dd_treatment.squaredNorm();
  if (fit.regressor_mass < kIdentificationFloor)
    throw Error(ErrorCode::NotIdentified,
                "residualized treatment variation is zero (synchronized or constant schedule)");

  const Eigen::MatrixXd ydd = double_demean(panel.outcomes);
  fit.beta_hat = (ydd.array() * fit.dd_treatment.array()).sum() / fit.regressor_mass;
  fit.residuals = ydd - fit.beta_hat * fit.dd_treatment;

  // default clustering: one cluster per unit
  Eigen::MatrixXi clusters(panel.n_units(), panel.n_days());
  for (Eigen::Index i = 0; i < panel.n_units(); ++i) clusters.row(i).setConstant(static_cast<int>(i));
  fit.n_clusters = static_cast<int>(panel.n_units());
  fit.se = cluster_robust_se(fit, clusters);

  if (fit.se > 0.0) {
    fit.t_stat = fit.beta_hat / fit.se;
    fit.p_value = student_t_two_sided_p(fit.t_stat, fit.n_clusters - 1);
  } else {
    fit.t_stat = fit.beta_hat == 0.0 ? 0.0
                                     : std::copysign(std::numeric_limits<double>::infinity(),
                                                     fit.beta_hat);
    fit.p_value = fit.beta_hat == 0.0 ? 1.0 : 0.0;
  }
  return fit;
}

double cluster_robust_se(const TwfeFit& fit, const Eigen::MatrixXi& cluster_of) {
  const Eigen::Index n = fit.residuals.rows(), T = fit.residuals.cols();
  if (cluster_of.rows() != n || cluster_of.cols() != T)
    throw Error(ErrorCode::DimensionMismatch, "cluster map does not match fit dimensions");
  if (fit.regressor_mass < kIdentificationFloor)
    throw Error(ErrorCode::NotIdentified, "fit is not identified");

  std::map<int, double> scores;  // per-cluster sum of D** * resid
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index t = 0; t < T; ++t)
      scores[cluster_of(i, t)] += fit.dd_treatment(i, t) * fit.residuals(i, t);

  const int g = static_cast<int>(scores.size());
  if (g < 2) throw Error(ErrorCode::SingleCluster, "need at least 2 clusters");

  double meat = 0.0;
  for (const auto& [cid, s] : scores) meat += s * s;

  const double m_obs = static_cast<double>(n) * static_cast<double>(T);
  const double p = static_cast<double>(n + T);  // absorbed fixed effects + treatment
  if (m_obs <= p)
    throw Error(ErrorCode::InvalidArgument, "no residual degrees of freedom (N*T <= N+T)");
  const double factor = (static_cast<double>(g) / (g - 1)) * ((m_obs - 1.0) / (m_obs - p));
  const double var = factor * meat / (fit.regressor_mass * fit.regressor_mass);
  return std::sqrt(std::max(0.0, var));
}

double effective_sample_variance(const AutocovSpec& spec, int T) {
  if (T <= 0) throw Error(ErrorCode::InvalidArgument, "T must be positive");
  if (spec.gamma0 < 0.0) throw Error(ErrorCode::InvalidArgument, "gamma0 must be non-negative");
  for (double r : spec.rho)
    if (std::abs(r) > 1.0 + 1e-12)
      throw Error(ErrorCode::InvalidArgument, "|rho_k| must not exceed 1");

  double acc = 1.0;
  for (int k = 1; k < T; ++k) {
    const double rho_k = k <= static_cast<int>(spec.rho.size()) ? spec.rho[k - 1] : 0.0;
    acc += 2.0 * (1.0 - static_cast<double>(k) / T) * rho_k;
  }
  return spec.gamma0 / T * acc;
}

double diff_variance(double gamma0, double gamma_h) {
  if (std::abs(gamma_h) > gamma0 + 1e-12)
    throw Error(ErrorCode::InvalidArgument, "|gamma_h| must not exceed gamma0");
  return 2.0 * gamma0 - 2.0 * gamma_h;
}

std::string fit_report_json(const TwfeFit& fit, const std::string& design, int horizon_days) {
  nlohmann::json j{{"beta_hat", fit.beta_hat},
                   {"se", fit.se},
                   {"t", fit.t_stat},
                   {"p", fit.p_value},
                   {"n_clusters", fit.n_clusters},
                   {"regressor_mass", fit.regressor_mass},
                   {"design", design},
                   {"horizon_days", horizon_days}};
  return j.dump(2);
}

}  // namespace sbx
