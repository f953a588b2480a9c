#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sbx/calendar.hpp"
#include "sbx/panel.hpp"

namespace sbx {

enum class DesignKind { FixedPods, Switchback };

enum class Pod : int { A = 0, B = 1 };

/// Stratified A/B pod labels. Within every cluster (and globally) the pod
/// sizes differ by at most one, so block-level switchback balance holds.
struct PodAssignment {
  std::vector<Pod> pod;
  std::vector<int> cluster;
  std::vector<std::string> feature_names;  // features actually used
  std::vector<std::string> diagnostics;    // e.g. dropped degenerate columns

  Eigen::Index n_units() const { return static_cast<Eigen::Index>(pod.size()); }
};

/// Treatment matrix plus design descriptor. `treatment` is units x days with
/// entries in {0,1}.
struct AssignmentSchedule {
  DesignKind design = DesignKind::FixedPods;
  int block_length_days = 1;  // 1 daily, 7 weekly, horizon for fixed
  int pre_period_days = 0;    // fixed design only
  Eigen::MatrixXi treatment;

  Eigen::Index n_units() const { return treatment.rows(); }
  Eigen::Index n_days() const { return treatment.cols(); }
};

struct KmeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;             // k x d
  std::vector<double> objective_trace;   // sum of squared distances per iteration
};

/// Lloyd's algorithm with kmeans++ seeding. Deterministic given seed; stops on
/// relative objective change < 1e-8 or 300 iterations.
KmeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

/// Standardizes features, clusters with k-means, then randomly splits each
/// cluster evenly into pods A/B. Zero-variance columns are dropped with a
/// diagnostic. Odd clusters alternate which pod receives the extra unit, so
/// the global pod sizes also differ by at most one.
PodAssignment stratified_pods(const Eigen::MatrixXd& features, int k, std::uint64_t seed,
                              std::vector<std::string> feature_names = {});

/// Suggested stratum count: about ten units per stratum.
int default_stratum_count(Eigen::Index n_units);

/// Classical A/B design: all-control pre period of horizon/2 days, then one
/// seed-chosen pod treated for the second half.
AssignmentSchedule fixed_assignment(const PodAssignment& pods, int horizon_days,
                                    std::uint64_t seed);

/// Coordinated switchback: pods A and B follow complementary alternating block
/// patterns over the whole horizon; the final block may be short. Which pod
/// starts treated is a seed-determined coin flip.
AssignmentSchedule switchback_assignment(const PodAssignment& pods, int horizon_days,
                                         int block_length_days, std::uint64_t seed);

// CSV interfaces: `unit,date,treated` and `unit,cluster,pod`.
void write_schedule_csv(const AssignmentSchedule& schedule,
                        const std::vector<std::string>& unit_ids,
                        const std::vector<Date>& dates, std::ostream& out);
AssignmentSchedule read_schedule_csv(std::istream& in, const PanelDataset& aligned_to);
void write_pods_csv(const PodAssignment& pods, const std::vector<std::string>& unit_ids,
                    std::ostream& out);

}  // namespace sbx
