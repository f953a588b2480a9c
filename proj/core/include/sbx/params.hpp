#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sbx/calendar.hpp"

namespace sbx {

/// Low-order Fourier seasonal basis: sum_k a_k sin(2 pi k t / P) + b_k cos(...).
struct FourierSpec {
  int harmonics = 0;      // K
  double period = 365.25; // P, days
  Eigen::VectorXd a;      // size K
  Eigen::VectorXd b;      // size K

  /// Seasonal value at day offset t (t = 0 is the calibration start date).
  double eval(double t) const;
  Eigen::VectorXd eval_range(int n_days, int offset = 0) const;
};

struct GaussianMixture1D {
  Eigen::VectorXd weights;
  Eigen::VectorXd means;
  Eigen::VectorXd variances;

  int n_components() const { return static_cast<int>(weights.size()); }
};

/// log sigma = a + b * log mu + eta, eta ~ N(0, tau^2). Taylor-law scaling
/// that keeps baselines and dispersions coupled when sampling new units.
struct SigmaModel {
  double a = 0.0;
  double b = 0.0;
  double tau = 0.0;
};

/// Calibrated parameters of the synthetic panel generator: per-unit baselines,
/// global day-of-week profile, Fourier seasonality with per-unit loadings, a
/// rank-1 common shock, per-unit AR(1) residuals, and the cross-unit models
/// used to sample fresh portfolios.
struct GeneratorParams {
  int schema_version = 1;
  Date start_date;                   // calibration window start, anchors t and day-of-week
  std::vector<std::string> unit_ids; // calibrated units
  Eigen::VectorXd mu;                // per-unit baseline
  Eigen::VectorXd alpha;             // 7-vector weekly profile, sums to zero
  FourierSpec fourier;
  Eigen::VectorXd gamma;             // per-unit seasonal loading
  Eigen::VectorXd shock_factor;      // calibration-window common factor, unit variance
  Eigen::VectorXd shock_loading;     // per-unit exposure
  Eigen::VectorXd ar_phi;            // per-unit, |phi| < 1
  Eigen::VectorXd ar_sigma;          // per-unit innovation scale
  GaussianMixture1D mixture;         // over log mu
  SigmaModel sigma_model;

  Eigen::Index n_units() const { return mu.size(); }
};

/// Violated invariants, empty if the parameter set is internally consistent.
/// A degenerate all-zero shock factor (from a no-shock calibration) is allowed.
std::vector<std::string> validate_params(const GeneratorParams& params);

// Single-document JSON serialization; numeric values round-trip exactly.
std::string params_to_json(const GeneratorParams& params);
GeneratorParams params_from_json(const std::string& text);
GeneratorParams load_params_file(const std::string& path);
void save_params_file(const GeneratorParams& params, const std::string& path);

/// Shipped default parameter set: 80 units on the 2024 daily calendar, sized
/// like a portfolio of ancillary-revenue routes (two baseline tiers, weekly
/// profile, annual seasonality, common shocks, moderate AR(1) persistence).
GeneratorParams default_generator_params();

}  // namespace sbx
