#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sbx/design.hpp"
#include "sbx/panel.hpp"

namespace sbx {

/// Result of the two-way fixed-effects fit on double-demeaned data.
struct TwfeFit {
  double beta_hat = 0.0;
  double se = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  double regressor_mass = 0.0;    // sum of squared double-demeaned treatment
  Eigen::MatrixXd residuals;      // units x days, double-demeaned scale
  Eigen::MatrixXd dd_treatment;   // units x days, double-demeaned treatment
  int n_clusters = 0;
};

/// M_it - row mean_i - column mean_t + grand mean. Row and column sums of the
/// result vanish; constants and synchronized patterns map to zero.
Eigen::MatrixXd double_demean(const Eigen::MatrixXd& m);

/// beta_hat = sum(Y** D**) / sum((D**)^2), with unit-clustered robust SE and a
/// two-sided Student-t p-value on n_clusters - 1 degrees of freedom.
/// Throws NotIdentified when the residualized treatment has no mass.
TwfeFit twfe_fit(const PanelDataset& panel, const AssignmentSchedule& schedule);

/// Sandwich SE over double-demeaned treatment scores for an arbitrary
/// observation-level clustering (`cluster_of` is units x days). Applies the
/// small-sample factor G/(G-1) * (M-1)/(M-p) with p = N + T.
double cluster_robust_se(const TwfeFit& fit, const Eigen::MatrixXi& cluster_of);

/// Stationary autocovariance summary: gamma0 plus autocorrelations rho_k for
/// k = 1.. (rho[0] is lag 1). Lags beyond the stored range count as zero.
struct AutocovSpec {
  double gamma0 = 0.0;
  std::vector<double> rho;
};

/// Variance of the length-T sample mean of a stationary series:
/// (gamma0/T) * (1 + 2 * sum_{k=1}^{T-1} (1 - k/T) rho_k).
double effective_sample_variance(const AutocovSpec& spec, int T);

/// Variance of the h-step difference of a stationary series: 2*gamma0 - 2*gamma_h.
double diff_variance(double gamma0, double gamma_h);

/// JSON fit report: {beta_hat, se, t, p, n_clusters, regressor_mass, design,
/// horizon_days}.
std::string fit_report_json(const TwfeFit& fit, const std::string& design, int horizon_days);

}  // namespace sbx
