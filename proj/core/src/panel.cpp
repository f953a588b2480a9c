#include "sbx/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "sbx/errors.hpp"

namespace sbx {

PanelDataset PanelDataset::window(Eigen::Index start, Eigen::Index len) const {
  if (start < 0 || len < 1 || start + len > n_days())
    throw Error(ErrorCode::InvalidArgument, "window out of range");
  PanelDataset out;
  out.unit_ids = unit_ids;
  out.dates.assign(dates.begin() + start, dates.begin() + start + len);
  out.day_of_week.assign(day_of_week.begin() + start, day_of_week.begin() + start + len);
  out.outcomes = outcomes.middleCols(start, len);
  return out;
}

PanelDataset make_panel(std::vector<std::string> unit_ids, Date start,
                        Eigen::MatrixXd outcomes) {
  if (static_cast<Eigen::Index>(unit_ids.size()) != outcomes.rows())
    throw Error(ErrorCode::DimensionMismatch, "unit_ids size does not match outcome rows");
  PanelDataset p;
  p.unit_ids = std::move(unit_ids);
  p.outcomes = std::move(outcomes);
  p.dates = date_range(start, static_cast<int>(p.outcomes.cols()));
  p.day_of_week.reserve(p.dates.size());
  for (Date d : p.dates) p.day_of_week.push_back(day_of_week(d));
  return p;
}

namespace {

// Canonicalizes a route label so both directions of a city pair collapse into
// one unit: "B-A" and "A-B" map to the lexicographically sorted pair.
std::string canonical_route(const std::string& route) {
  const auto dash = route.find('-');
  if (dash == std::string::npos || route.find('-', dash + 1) != std::string::npos)
    return route;
  std::string a = route.substr(0, dash);
  std::string b = route.substr(dash + 1);
  if (b < a) std::swap(a, b);
  return a + "-" + b;
}

}  // namespace

PanelDataset build_panel(const std::vector<RawRecord>& records, MetricAggregation agg) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records");

  Date lo = records.front().date, hi = records.front().date;
  for (const auto& r : records) {
    if (!std::isfinite(r.value))
      throw Error(ErrorCode::NonFiniteMetric,
                  "non-finite value for route '" + r.route + "' on " + format_date(r.date));
    lo = std::min(lo, r.date);
    hi = std::max(hi, r.date);
  }
  const int n_days = hi - lo + 1;

  // Group values per (unit, day). Values are sorted before reduction so the
  // result is invariant to input record order, bit for bit.
  std::map<std::string, std::vector<std::vector<double>>> cells;
  for (const auto& r : records)
    cells[canonical_route(r.route)].resize(n_days);
  for (const auto& r : records)
    cells[canonical_route(r.route)][r.date - lo].push_back(r.value);

  PanelDataset panel;
  panel.outcomes.resize(static_cast<Eigen::Index>(cells.size()), n_days);
  Eigen::Index i = 0;
  for (auto& [unit, days] : cells) {
    panel.unit_ids.push_back(unit);
    for (int t = 0; t < n_days; ++t) {
      auto& vals = days[t];
      if (vals.empty()) {
        if (agg == MetricAggregation::Mean)
          throw Error(ErrorCode::CalendarGapUnresolvable,
                      "no observation for unit '" + unit + "' on " + format_date(lo + t) +
                          " and mean aggregation has no fill policy");
        panel.outcomes(i, t) = 0.0;
        continue;
      }
      std::sort(vals.begin(), vals.end());
      const double total = std::accumulate(vals.begin(), vals.end(), 0.0);
      panel.outcomes(i, t) =
          agg == MetricAggregation::Sum ? total : total / static_cast<double>(vals.size());
    }
    ++i;
  }
  panel.dates = date_range(lo, n_days);
  panel.day_of_week.reserve(n_days);
  for (Date d : panel.dates) panel.day_of_week.push_back(day_of_week(d));
  return panel;
}

std::vector<PanelDiagnostic> validate_panel(const PanelDataset& panel) {
  using Kind = PanelDiagnostic::Kind;
  std::vector<PanelDiagnostic> out;

  if (static_cast<Eigen::Index>(panel.unit_ids.size()) != panel.outcomes.rows() ||
      static_cast<Eigen::Index>(panel.dates.size()) != panel.outcomes.cols() ||
      panel.day_of_week.size() != panel.dates.size()) {
    out.push_back({Kind::DimensionMismatch,
                   "unit/date/outcome dimensions disagree", -1, {}});
    return out;  // coordinates below would be meaningless
  }

  for (size_t t = 1; t < panel.dates.size(); ++t) {
    const int step = panel.dates[t] - panel.dates[t - 1];
    if (step <= 0)
      out.push_back({Kind::NonMonotonicDates,
                     "dates not strictly increasing at " + format_date(panel.dates[t]),
                     -1, panel.dates[t]});
    else if (step > 1)
      for (int g = 1; g < step; ++g)
        out.push_back({Kind::CalendarGap,
                       "missing date " + format_date(panel.dates[t - 1] + g), -1,
                       panel.dates[t - 1] + g});
  }

  std::map<std::string, int> seen;
  for (size_t i = 0; i < panel.unit_ids.size(); ++i)
    if (++seen[panel.unit_ids[i]] == 2)
      out.push_back({Kind::DuplicateUnit, "duplicate unit id '" + panel.unit_ids[i] + "'",
                     static_cast<Eigen::Index>(i), {}});

  for (Eigen::Index i = 0; i < panel.outcomes.rows(); ++i)
    for (Eigen::Index t = 0; t < panel.outcomes.cols(); ++t)
      if (!std::isfinite(panel.outcomes(i, t)))
        out.push_back({Kind::NonFinite,
                       "non-finite outcome for unit '" + panel.unit_ids[i] + "' on " +
                           format_date(panel.dates[t]),
                       i, panel.dates[t]});
  return out;
}

}  // namespace sbx
