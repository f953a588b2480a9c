#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sbx/calendar.hpp"

namespace sbx {

enum class Direction { AtoB, BtoA };

/// One raw directional observation: (route, direction, date, metric value).
struct RawRecord {
  std::string route;
  Direction direction = Direction::AtoB;
  Date date;
  double value = 0.0;
};

enum class MetricAggregation { Sum, Mean };

/// Rectangular unit x day outcome panel on a contiguous daily calendar.
/// Immutable by convention: all operations take it by const reference and
/// return new panels, so sharing across threads is safe.
struct PanelDataset {
  std::vector<std::string> unit_ids;
  std::vector<Date> dates;        // strictly increasing, no gaps
  std::vector<int> day_of_week;   // Monday = 0, aligned with dates
  Eigen::MatrixXd outcomes;       // units x days

  Eigen::Index n_units() const { return outcomes.rows(); }
  Eigen::Index n_days() const { return outcomes.cols(); }

  /// Contiguous sub-window of columns [start, start + len).
  PanelDataset window(Eigen::Index start, Eigen::Index len) const;
};

/// Builds a panel with dates/day_of_week derived from `start`; validates shape.
PanelDataset make_panel(std::vector<std::string> unit_ids, Date start,
                        Eigen::MatrixXd outcomes);

/// Collapses directional records into a non-directional route x day panel.
/// Both directions of a route on the same date aggregate per `agg`. Missing
/// (route, date) cells are filled with 0 under Sum (no transactions means zero
/// volume) and rejected under Mean.
PanelDataset build_panel(const std::vector<RawRecord>& records, MetricAggregation agg);

struct PanelDiagnostic {
  enum class Kind { CalendarGap, NonFinite, DimensionMismatch, DuplicateUnit, NonMonotonicDates };
  Kind kind;
  std::string message;
  Eigen::Index unit = -1;  // -1 when not tied to a unit
  Date date{};
};

/// Empty result iff all PanelDataset invariants hold.
std::vector<PanelDiagnostic> validate_panel(const PanelDataset& panel);

}  // namespace sbx
