#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sbx/panel.hpp"
#include "sbx/params.hpp"

namespace sbx {

struct BaselineDowFit {
  Eigen::VectorXd mu;     // per-unit time mean
  Eigen::VectorXd alpha;  // 7-vector, re-centered to sum to zero
};

/// Step 1: per-unit baselines and the global day-of-week profile.
BaselineDowFit fit_baselines_and_dow(const PanelDataset& panel);

struct SeasonalityFit {
  FourierSpec fourier;
  Eigen::VectorXd seas;  // fitted values over the calibration window
};

/// Step 2: least-squares Fourier fit of the cross-unit daily mean residual.
SeasonalityFit fit_seasonality(const Eigen::VectorXd& daily_mean_residual, int harmonics,
                               double period);

/// Per-unit no-intercept slope of each residual row on the seasonal series.
Eigen::VectorXd fit_seasonal_loadings(const Eigen::MatrixXd& residuals,
                                      const Eigen::VectorXd& seas);

struct CommonShockFit {
  Eigen::VectorXd factor;   // length T, unit sample variance (zero if degenerate)
  Eigen::VectorXd loading;  // length N, sum >= 0
  bool degenerate = false;  // all-zero input
};

/// Step 3: dominant rank-1 component of the T x N residual matrix via power
/// iteration on the N x N second-moment matrix. loading_i * factor_t
/// reconstructs the rank-1 structure.
CommonShockFit fit_common_shock(const Eigen::MatrixXd& residual_tn);

struct Ar1Fit {
  double phi = 0.0;
  double sigma = 0.0;
};

/// Step 4: lag-1 no-intercept slope, clamped to (-0.99, 0.99); sigma is the
/// standard deviation of the one-step prediction errors.
Ar1Fit fit_ar1(const Eigen::VectorXd& series);

struct CrossLegFit {
  GaussianMixture1D mixture;  // over log mu, component count chosen by BIC
  SigmaModel sigma_model;
  std::vector<std::string> diagnostics;
};

/// Gaussian mixture over log baselines (EM, BIC model selection) plus the
/// log-linear mean-dispersion model.
CrossLegFit fit_cross_leg(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                          int max_components);

struct CalibrationResult {
  GeneratorParams params;
  std::vector<std::string> diagnostics;  // degenerate sub-fits, dropped units, ...
};

/// Full fit-remove-fit calibration: baselines and day-of-week, seasonality
/// with per-unit loadings, rank-1 common shock, then AR(1) dispersion on what
/// remains, so no component's variance is counted twice.
CalibrationResult calibrate(const PanelDataset& panel, int harmonics = 3,
                            double period = 365.25);

}  // namespace sbx
