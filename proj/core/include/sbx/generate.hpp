#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "sbx/design.hpp"
#include "sbx/panel.hpp"
#include "sbx/params.hpp"

namespace sbx {

/// Interpretable stress multipliers for the generator components.
struct Perturbations {
  double c_seas = 1.0;
  double c_shock = 1.0;
  double c_ar = 1.0;

  friend bool operator==(const Perturbations&, const Perturbations&) = default;
};

enum class Regime { Baseline, MoreShocks, MoreSeasonality, MoreAR1 };

/// Baseline keeps fitted parameters; each MoreX regime doubles one component.
Perturbations make_regime(Regime regime);

/// Stability-preserving persistence scaling: sign(phi) * min(c*|phi|, 0.99).
double scale_ar_persistence(double phi, double c);

/// Fresh unit-level parameters for a simulated portfolio: log mu from the
/// mixture, log sigma from the Taylor-law model with the donor unit's
/// residual, and (phi, gamma, shock loading) bootstrapped jointly from the
/// calibrated units so their cross-dependence is preserved.
struct UnitDraw {
  Eigen::VectorXd mu, sigma, phi, gamma, shock_loading;
};
UnitDraw sample_units(const GeneratorParams& params, int n, std::uint64_t seed);

/// Samples an n_units x n_days panel: baseline + day-of-week + scaled
/// seasonality + a fresh white-noise common shock + AR(1) residuals started
/// from their stationary distribution. When n_units equals the calibrated
/// count the calibrated unit parameters are reused directly; otherwise a new
/// portfolio is drawn via sample_units. Per-unit substreams are seeded by
/// mix64(seed, unit index), so output does not depend on evaluation order.
PanelDataset generate_panel(const GeneratorParams& params, int n_units, int n_days,
                            const Perturbations& perturb, std::uint64_t seed);

/// Multiplies treated cells by (1 + delta + eta), eta ~ N(0, delta^2);
/// control cells are returned bit-identical.
PanelDataset inject_uplift(const PanelDataset& panel, const AssignmentSchedule& schedule,
                           double delta, std::uint64_t seed);

const char* regime_name(Regime regime);
Regime regime_from_name(const std::string& name);

}  // namespace sbx
