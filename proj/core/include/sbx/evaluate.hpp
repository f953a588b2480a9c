#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sbx/generate.hpp"
#include "sbx/panel.hpp"

namespace sbx {

/// The three assignment schemes compared throughout.
enum class DesignChoice { FixedPods, WeeklySwitchback, DailySwitchback };

const char* design_choice_name(DesignChoice d);
DesignChoice design_choice_from_name(const std::string& name);

/// Monte Carlo experiment plan under the per-horizon protocol: for every
/// dataset replication and random pod split, every design is scheduled at
/// every feasible weekly start date and fit with TWFE.
struct ExperimentPlan {
  std::vector<DesignChoice> designs = {DesignChoice::FixedPods, DesignChoice::WeeklySwitchback,
                                       DesignChoice::DailySwitchback};
  std::vector<int> horizons_weeks = {2, 4, 6, 8, 10, 12, 14, 16};
  int n_dataset_reps = 20;
  int n_splits_per_dataset = 10;
  double uplift_delta = 0.03;
  double alpha = 0.05;
  Regime regime = Regime::Baseline;
  std::uint64_t master_seed = 0;
  int jobs = 0;        // 0: all hardware threads
  int stratify_k = 0;  // 0: max(2, N/10)
  int max_starts = 0;  // 0: all feasible weekly start dates

  friend bool operator==(const ExperimentPlan&, const ExperimentPlan&) = default;
};

/// Throws on violated plan invariants (horizons even and >= 2, alpha in
/// [0, 1), replication counts >= 1).
void validate_plan(const ExperimentPlan& plan);

/// Per (design, horizon) aggregates over all replications.
struct CellStats {
  DesignChoice design = DesignChoice::FixedPods;
  int horizon_weeks = 0;
  double mean_se = 0.0;         // mean estimated cluster-robust SE
  double sd_beta = 0.0;         // empirical sd of beta_hat across replications
  double mean_beta = 0.0;
  double rejection_rate = 0.0;  // Type I error (A/A) or power (A/B)
  double reject_ci_lo = 0.0;    // 95% Wilson interval
  double reject_ci_hi = 0.0;
  int n_reps = 0;
  int n_failed = 0;
};

/// SE reduction of `design` against `baseline`, in percent, computed both from
/// the empirical sd of beta_hat and from the mean estimated SE.
struct PairReduction {
  DesignChoice design = DesignChoice::DailySwitchback;
  DesignChoice baseline = DesignChoice::FixedPods;
  int horizon_weeks = 0;
  double reduction_sd_pct = 0.0;
  double reduction_mean_se_pct = 0.0;
};

struct EvaluationReport {
  std::string suite;  // "aa" or "ab"
  Regime regime = Regime::Baseline;
  double alpha = 0.05;
  double delta = 0.0;  // 0 for A/A
  std::vector<CellStats> cells;
  std::vector<PairReduction> reductions;

  const CellStats* find(DesignChoice d, int horizon_weeks) const;
  const PairReduction* find_reduction(DesignChoice d, DesignChoice baseline,
                                      int horizon_weeks) const;
};

/// Supplies the panel for dataset replication `rep`; must be deterministic in
/// (rep, seed). Synthetic sources regenerate, fixed sources return one panel.
using PanelSource = std::function<PanelDataset(int rep, std::uint64_t seed)>;

PanelSource make_synthetic_source(GeneratorParams params, int n_units, int n_days,
                                  Regime regime);
PanelSource make_synthetic_source(GeneratorParams params, int n_units, int n_days,
                                  const Perturbations& perturb);
PanelSource make_fixed_source(PanelDataset panel);

/// A/A suite: schedules with no real treatment; rejection rate estimates the
/// empirical Type I error.
EvaluationReport run_aa_suite(const PanelSource& source, const ExperimentPlan& plan);

/// A/B suite: injects the plan's multiplicative uplift through each schedule
/// before fitting; rejection rate estimates power.
EvaluationReport run_ab_suite(const PanelSource& source, const ExperimentPlan& plan);

/// Weekly-spaced start offsets 0, 7, 14, ... such that offset + horizon fits.
std::vector<int> start_date_grid(int calendar_length_days, int horizon_days);

/// 100 * (1 - se_design / se_baseline); negative when the design is worse.
double se_reduction(double se_design, double se_baseline);

/// Per-unit stratification features: mean, sd, lag-1 autocorrelation.
Eigen::MatrixXd unit_features(const PanelDataset& panel);

// Report emission: machine-readable JSON, long CSV for plotting, and a
// plain-text summary table.
std::string report_to_json(const EvaluationReport& report);
std::string report_to_csv(const EvaluationReport& report);
std::string report_to_text(const EvaluationReport& report);

}  // namespace sbx
