#include "sbx/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sbx/design.hpp"
#include "sbx/errors.hpp"
#include "sbx/estimate.hpp"
#include "sbx/rng.hpp"
#include "sbx/stats.hpp"

namespace sbx {

const char* design_choice_name(DesignChoice d) {
  switch (d) {
    case DesignChoice::FixedPods: return "fixed_pods";
    case DesignChoice::WeeklySwitchback: return "weekly_sb";
    case DesignChoice::DailySwitchback: return "daily_sb";
  }
  return "unknown";
}

DesignChoice design_choice_from_name(const std::string& name) {
  if (name == "fixed_pods" || name == "fixed") return DesignChoice::FixedPods;
  if (name == "weekly_sb" || name == "weekly") return DesignChoice::WeeklySwitchback;
  if (name == "daily_sb" || name == "daily") return DesignChoice::DailySwitchback;
  throw Error(ErrorCode::InvalidArgument, "unknown design '" + name + "'");
}

void validate_plan(const ExperimentPlan& plan) {
  if (plan.designs.empty()) throw Error(ErrorCode::InvalidArgument, "plan has no designs");
  if (plan.horizons_weeks.empty())
    throw Error(ErrorCode::InvalidArgument, "plan has no horizons");
  for (int w : plan.horizons_weeks)
    if (w < 2 || w % 2 != 0)
      throw Error(ErrorCode::InvalidArgument, "horizons must be even and >= 2 weeks");
  if (!(plan.alpha >= 0.0 && plan.alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1)");
  if (plan.n_dataset_reps < 1 || plan.n_splits_per_dataset < 1)
    throw Error(ErrorCode::InvalidArgument, "replication counts must be >= 1");
}

std::vector<int> start_date_grid(int calendar_length_days, int horizon_days) {
  if (horizon_days < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  if (horizon_days > calendar_length_days)
    throw Error(ErrorCode::HorizonTooLong, "horizon exceeds the calendar window");
  std::vector<int> offsets;
  for (int off = 0; off + horizon_days <= calendar_length_days; off += 7)
    offsets.push_back(off);
  return offsets;
}

double se_reduction(double se_design, double se_baseline) {
  if (!(se_design > 0.0) || !(se_baseline > 0.0))
    throw Error(ErrorCode::NonPositiveSE, "standard errors must be positive");
  return 100.0 * (1.0 - se_design / se_baseline);
}

Eigen::MatrixXd unit_features(const PanelDataset& panel) {
  Eigen::MatrixXd f(panel.n_units(), 3);
  for (Eigen::Index i = 0; i < panel.n_units(); ++i) {
    const Eigen::VectorXd row = panel.outcomes.row(i).transpose();
    f(i, 0) = sample_mean(row);
    f(i, 1) = sample_sd(row);
    f(i, 2) = lag1_autocorr(row);
  }
  return f;
}

PanelSource make_synthetic_source(GeneratorParams params, int n_units, int n_days,
                                  Regime regime) {
  return make_synthetic_source(std::move(params), n_units, n_days, make_regime(regime));
}

PanelSource make_synthetic_source(GeneratorParams params, int n_units, int n_days,
                                  const Perturbations& perturb) {
  return [params = std::move(params), n_units, n_days, perturb](int /*rep*/,
                                                                std::uint64_t seed) {
    return generate_panel(params, n_units, n_days, perturb, seed);
  };
}

PanelSource make_fixed_source(PanelDataset panel) {
  return [panel = std::move(panel)](int /*rep*/, std::uint64_t /*seed*/) { return panel; };
}

const CellStats* EvaluationReport::find(DesignChoice d, int horizon_weeks) const {
  for (const auto& c : cells)
    if (c.design == d && c.horizon_weeks == horizon_weeks) return &c;
  return nullptr;
}

const PairReduction* EvaluationReport::find_reduction(DesignChoice d, DesignChoice baseline,
                                                      int horizon_weeks) const {
  for (const auto& r : reductions)
    if (r.design == d && r.baseline == baseline && r.horizon_weeks == horizon_weeks) return &r;
  return nullptr;
}

namespace {

struct RepRecord {
  int design_idx = 0;
  int horizon_idx = 0;
  double beta = 0.0;
  double se = 0.0;
  bool reject = false;
  bool failed = false;
};

AssignmentSchedule build_schedule(DesignChoice choice, const PodAssignment& pods,
                                  int horizon_days, std::uint64_t seed) {
  switch (choice) {
    case DesignChoice::FixedPods: return fixed_assignment(pods, horizon_days, seed);
    case DesignChoice::WeeklySwitchback:
      return switchback_assignment(pods, horizon_days, 7, seed);
    case DesignChoice::DailySwitchback:
      return switchback_assignment(pods, horizon_days, 1, seed);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown design");
}

EvaluationReport run_suite(const PanelSource& source, const ExperimentPlan& plan,
                           double delta) {
  validate_plan(plan);

  const int n_tasks = plan.n_dataset_reps * plan.n_splits_per_dataset;
  std::vector<std::vector<RepRecord>> task_records(n_tasks);

  auto run_task = [&](int task_id) {
    const int d = task_id / plan.n_splits_per_dataset;
    const int s = task_id % plan.n_splits_per_dataset;
    const PanelDataset panel =
        source(d, mix64(plan.master_seed, 0xda7aULL, static_cast<std::uint64_t>(d)));
    const Eigen::MatrixXd features = unit_features(panel);
    const int k = plan.stratify_k > 0
                      ? plan.stratify_k
                      : std::min<int>(default_stratum_count(panel.n_units()),
                                      static_cast<int>(panel.n_units()));
    const PodAssignment pods =
        stratified_pods(features, k,
                        mix64(plan.master_seed, 0x5eedULL, static_cast<std::uint64_t>(d),
                              static_cast<std::uint64_t>(s)));

    auto& records = task_records[task_id];
    for (size_t di = 0; di < plan.designs.size(); ++di) {
      const DesignChoice choice = plan.designs[di];
      for (size_t hi = 0; hi < plan.horizons_weeks.size(); ++hi) {
        const int horizon_days = 7 * plan.horizons_weeks[hi];
        // Fixed pods require a symmetric pre period of equal length, so their
        // analysis window is twice the experiment horizon; switchbacks
        // alternate over the horizon itself with no pre period.
        const int window_days =
            choice == DesignChoice::FixedPods ? 2 * horizon_days : horizon_days;
        std::vector<int> grid = start_date_grid(static_cast<int>(panel.n_days()), window_days);
        if (plan.max_starts > 0 && static_cast<int>(grid.size()) > plan.max_starts)
          grid.resize(plan.max_starts);
        for (int start : grid) {
          // replication seed: mix of every coordinate that identifies the run
          const std::uint64_t seed_rep =
              mix64(plan.master_seed, static_cast<std::uint64_t>(d),
                    static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(choice),
                    static_cast<std::uint64_t>(horizon_days),
                    static_cast<std::uint64_t>(start));
          RepRecord rec;
          rec.design_idx = static_cast<int>(di);
          rec.horizon_idx = static_cast<int>(hi);
          try {
            const AssignmentSchedule schedule =
                build_schedule(choice, pods, window_days, seed_rep);
            PanelDataset window = panel.window(start, window_days);
            if (delta != 0.0)
              window = inject_uplift(window, schedule, delta, mix64(seed_rep, 0xabULL));
            const TwfeFit fit = twfe_fit(window, schedule);
            rec.beta = fit.beta_hat;
            rec.se = fit.se;
            rec.reject = fit.p_value < plan.alpha;
          } catch (const Error&) {
            rec.failed = true;
          }
          records.push_back(rec);
        }
      }
    }
  };

  int jobs = plan.jobs > 0 ? plan.jobs
                           : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, n_tasks));
  if (jobs == 1) {
    for (int t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<int> next{0};
    std::atomic<bool> abort{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < n_tasks && !abort; t = next.fetch_add(1)) {
          try {
            run_task(t);
          } catch (...) {
            std::scoped_lock lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            abort = true;
          }
        }
      });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // aggregation in task order, so output is independent of thread scheduling
  EvaluationReport report;
  report.regime = plan.regime;
  report.alpha = plan.alpha;
  report.delta = delta;
  const size_t n_cells = plan.designs.size() * plan.horizons_weeks.size();
  std::vector<std::vector<double>> betas(n_cells), ses(n_cells);
  std::vector<int> rejects(n_cells, 0), failed(n_cells, 0);
  for (const auto& records : task_records)
    for (const auto& rec : records) {
      const size_t cell = rec.design_idx * plan.horizons_weeks.size() + rec.horizon_idx;
      if (rec.failed) {
        ++failed[cell];
        continue;
      }
      betas[cell].push_back(rec.beta);
      ses[cell].push_back(rec.se);
      if (rec.reject) ++rejects[cell];
    }

  for (size_t di = 0; di < plan.designs.size(); ++di)
    for (size_t hi = 0; hi < plan.horizons_weeks.size(); ++hi) {
      const size_t cell = di * plan.horizons_weeks.size() + hi;
      CellStats c;
      c.design = plan.designs[di];
      c.horizon_weeks = plan.horizons_weeks[hi];
      c.n_reps = static_cast<int>(betas[cell].size());
      c.n_failed = failed[cell];
      if (c.n_reps > 0) {
        const Eigen::VectorXd b =
            Eigen::Map<const Eigen::VectorXd>(betas[cell].data(), c.n_reps);
        const Eigen::VectorXd e =
            Eigen::Map<const Eigen::VectorXd>(ses[cell].data(), c.n_reps);
        c.mean_beta = sample_mean(b);
        c.sd_beta = sample_sd(b);
        c.mean_se = sample_mean(e);
        c.rejection_rate = static_cast<double>(rejects[cell]) / c.n_reps;
        const Interval ci = wilson_ci(rejects[cell], c.n_reps);
        c.reject_ci_lo = ci.lo;
        c.reject_ci_hi = ci.hi;
      }
      report.cells.push_back(c);
    }

  const std::pair<DesignChoice, DesignChoice> pairs[] = {
      {DesignChoice::WeeklySwitchback, DesignChoice::FixedPods},
      {DesignChoice::DailySwitchback, DesignChoice::FixedPods},
      {DesignChoice::DailySwitchback, DesignChoice::WeeklySwitchback},
  };
  for (const auto& [design, baseline] : pairs) {
    const bool have_design = std::count(plan.designs.begin(), plan.designs.end(), design) > 0;
    const bool have_base = std::count(plan.designs.begin(), plan.designs.end(), baseline) > 0;
    if (!have_design || !have_base) continue;
    for (int w : plan.horizons_weeks) {
      const CellStats* cd = report.find(design, w);
      const CellStats* cb = report.find(baseline, w);
      if (!cd || !cb) continue;
      if (cd->sd_beta <= 0.0 || cb->sd_beta <= 0.0 || cd->mean_se <= 0.0 || cb->mean_se <= 0.0)
        continue;
      PairReduction r;
      r.design = design;
      r.baseline = baseline;
      r.horizon_weeks = w;
      r.reduction_sd_pct = se_reduction(cd->sd_beta, cb->sd_beta);
      r.reduction_mean_se_pct = se_reduction(cd->mean_se, cb->mean_se);
      report.reductions.push_back(r);
    }
  }
  return report;
}

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EvaluationReport run_aa_suite(const PanelSource& source, const ExperimentPlan& plan) {
  EvaluationReport report = run_suite(source, plan, 0.0);
  report.suite = "aa";
  return report;
}

EvaluationReport run_ab_suite(const PanelSource& source, const ExperimentPlan& plan) {
  EvaluationReport report = run_suite(source, plan, plan.uplift_delta);
  report.suite = "ab";
  report.delta = plan.uplift_delta;
  return report;
}

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["suite"] = report.suite;
  j["regime"] = regime_name(report.regime);
  j["alpha"] = report.alpha;
  j["delta"] = report.delta;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells)
    j["cells"].push_back({{"design", design_choice_name(c.design)},
                          {"horizon_weeks", c.horizon_weeks},
                          {"mean_se", c.mean_se},
                          {"sd_beta", c.sd_beta},
                          {"mean_beta", c.mean_beta},
                          {"rejection_rate", c.rejection_rate},
                          {"reject_ci", {c.reject_ci_lo, c.reject_ci_hi}},
                          {"n_reps", c.n_reps},
                          {"n_failed", c.n_failed}});
  j["se_reductions"] = nlohmann::json::array();
  for (const auto& r : report.reductions)
    j["se_reductions"].push_back({{"design", design_choice_name(r.design)},
                                  {"baseline", design_choice_name(r.baseline)},
                                  {"horizon_weeks", r.horizon_weeks},
                                  {"reduction_sd_pct", r.reduction_sd_pct},
                                  {"reduction_mean_se_pct", r.reduction_mean_se_pct}});
  return j.dump(2);
}

std::string report_to_csv(const EvaluationReport& report) {
  std::ostringstream out;
  const std::string regime = regime_name(report.regime);
  out << "regime,design,horizon_weeks,metric,value,ci_lo,ci_hi\n";
  for (const auto& c : report.cells) {
    const std::string prefix =
        regime + "," + design_choice_name(c.design) + "," + std::to_string(c.horizon_weeks);
    out << prefix << ",mean_se," << format_g17(c.mean_se) << ",,\n";
    out << prefix << ",sd_beta," << format_g17(c.sd_beta) << ",,\n";
    out << prefix << ",mean_beta," << format_g17(c.mean_beta) << ",,\n";
    out << prefix << ",rejection_rate," << format_g17(c.rejection_rate) << ','
        << format_g17(c.reject_ci_lo) << ',' << format_g17(c.reject_ci_hi) << '\n';
    out << prefix << ",n_reps," << c.n_reps << ",,\n";
  }
  for (const auto& r : report.reductions) {
    const std::string pair =
        std::string(design_choice_name(r.design)) + "_vs_" + design_choice_name(r.baseline);
    const std::string prefix = regime + "," + pair + "," + std::to_string(r.horizon_weeks);
    out << prefix << ",se_reduction_sd_pct," << format_g17(r.reduction_sd_pct) << ",,\n";
    out << prefix << ",se_reduction_mean_se_pct," << format_g17(r.reduction_mean_se_pct)
        << ",,\n";
  }
  return out.str();
}

namespace {

const char* pretty_design(DesignChoice d) {
  switch (d) {
    case DesignChoice::FixedPods: return "Fixed Pods";
    case DesignChoice::WeeklySwitchback: return "Weekly SB";
    case DesignChoice::DailySwitchback: return "Daily SB";
  }
  return "?";
}

std::vector<int> distinct_horizons(const EvaluationReport& r) {
  std::vector<int> out;
  for (const auto& c : r.cells)
    if (std::find(out.begin(), out.end(), c.horizon_weeks) == out.end())
      out.push_back(c.horizon_weeks);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string report_to_text(const EvaluationReport& report) {
  std::ostringstream out;
  char buf[64];
  const auto horizons = distinct_horizons(report);
  const char* rate_label = report.suite == "ab" ? "Power (%)" : "Type I error (%)";

  out << "Suite: " << (report.suite == "ab" ? "A/B" : "A/A")
      << "   Regime: " << regime_name(report.regime) << "   alpha=" << report.alpha;
  if (report.suite == "ab") out << "   uplift delta=" << report.delta;
  out << "\n\n";

  auto header = [&](const std::string& title) {
    out << title << '\n';
    std::snprintf(buf, sizeof(buf), "%-12s", "Design");
    out << buf;
    for (int w : horizons) {
      std::snprintf(buf, sizeof(buf), "%10dw", w);
      out << buf;
    }
    out << '\n';
  };

  std::vector<DesignChoice> designs;
  for (const auto& c : report.cells)
    if (std::find(designs.begin(), designs.end(), c.design) == designs.end())
      designs.push_back(c.design);

  header(rate_label);
  for (DesignChoice d : designs) {
    std::snprintf(buf, sizeof(buf), "%-12s", pretty_design(d));
    out << buf;
    for (int w : horizons) {
      const CellStats* c = report.find(d, w);
      std::snprintf(buf, sizeof(buf), "%11.1f", c ? 100.0 * c->rejection_rate : 0.0);
      out << buf;
    }
    out << '\n';
  }
  out << '\n';

  header("Empirical sd of beta_hat");
  for (DesignChoice d : designs) {
    std::snprintf(buf, sizeof(buf), "%-12s", pretty_design(d));
    out << buf;
    for (int w : horizons) {
      const CellStats* c = report.find(d, w);
      std::snprintf(buf, sizeof(buf), "%11.4g", c ? c->sd_beta : 0.0);
      out << buf;
    }
    out << '\n';
  }
  out << '\n';

  if (!report.reductions.empty()) {
    out << "SE reduction (%), from empirical sd of beta_hat\n";
    std::snprintf(buf, sizeof(buf), "%-24s", "Comparison");
    out << buf;
    for (int w : horizons) {
      std::snprintf(buf, sizeof(buf), "%10dw", w);
      out << buf;
    }
    out << '\n';
    const std::pair<DesignChoice, DesignChoice> pairs[] = {
        {DesignChoice::WeeklySwitchback, DesignChoice::FixedPods},
        {DesignChoice::DailySwitchback, DesignChoice::FixedPods},
        {DesignChoice::DailySwitchback, DesignChoice::WeeklySwitchback},
    };
    for (const auto& [d, b] : pairs) {
      bool any = false;
      for (int w : horizons)
        if (report.find_reduction(d, b, w)) any = true;
      if (!any) continue;
      std::snprintf(buf, sizeof(buf), "%-10s vs %-10s", pretty_design(d), pretty_design(b));
      out << buf;
      for (int w : horizons) {
        const PairReduction* r = report.find_reduction(d, b, w);
        if (r)
          std::snprintf(buf, sizeof(buf), "%11.1f", r->reduction_sd_pct);
        else
          std::snprintf(buf, sizeof(buf), "%11s", "-");
        out << buf;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace sbx
