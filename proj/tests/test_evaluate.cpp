#include <doctest.h>

#include <cmath>
#include <random>

#include "sbx/errors.hpp"
#include "sbx/evaluate.hpp"
#include "sbx/rng.hpp"

using namespace sbx;

namespace {

// iid Gaussian source, independent of the library's generator
PanelSource iid_gaussian_source(int n_units, int n_days, double mean, double sd) {
  return [=](int /*rep*/, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(mean, sd);
    Eigen::MatrixXd y(n_units, n_days);
    for (Eigen::Index i = 0; i < n_units; ++i)
      for (Eigen::Index t = 0; t < n_days; ++t) y(i, t) = z(rng);
    std::vector<std::string> ids;
    for (int i = 0; i < n_units; ++i) ids.push_back("g" + std::to_string(i));
    return make_panel(std::move(ids), parse_date("2024-01-01"), y);
  };
}

ExperimentPlan small_plan() {
  ExperimentPlan plan;
  plan.designs = {DesignChoice::FixedPods, DesignChoice::WeeklySwitchback,
                  DesignChoice::DailySwitchback};
  plan.horizons_weeks = {2};
  plan.n_dataset_reps = 20;
  plan.n_splits_per_dataset = 10;
  plan.max_starts = 1;
  plan.master_seed = 7;
  plan.jobs = 2;
  return plan;
}

}  // namespace

TEST_CASE("se_reduction") {
  CHECK(se_reduction(2.0, 2.0) == 0.0);
  CHECK(se_reduction(1.0, 2.0) == 50.0);
  CHECK(se_reduction(3.0, 2.0) == doctest::Approx(-50.0));
  try {
    se_reduction(0.0, 1.0);
    FAIL("expected NonPositiveSE");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveSE);
  }
}

TEST_CASE("start_date_grid") {
  CHECK(start_date_grid(28, 28) == std::vector<int>{0});
  CHECK(start_date_grid(35, 14) == std::vector<int>{0, 7, 14, 21});

  const auto grid = start_date_grid(366, 112);
  CHECK(grid.size() == 37);
  // brute-force feasibility scan
  std::vector<int> brute;
  for (int off = 0; off < 366; off += 7)
    if (off + 112 <= 366) brute.push_back(off);
  CHECK(grid == brute);

  try {
    start_date_grid(50, 60);
    FAIL("expected HorizonTooLong");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HorizonTooLong);
  }
}

TEST_CASE("validate_plan enforces invariants") {
  ExperimentPlan plan;
  CHECK_NOTHROW(validate_plan(plan));
  plan.horizons_weeks = {3};
  CHECK_THROWS_AS(validate_plan(plan), Error);
  plan.horizons_weeks = {2};
  plan.alpha = 1.0;
  CHECK_THROWS_AS(validate_plan(plan), Error);
  plan.alpha = 0.05;
  plan.n_dataset_reps = 0;
  CHECK_THROWS_AS(validate_plan(plan), Error);
}

TEST_CASE("alpha = 0 never rejects") {
  ExperimentPlan plan = small_plan();
  plan.alpha = 0.0;
  plan.n_dataset_reps = 5;
  plan.n_splits_per_dataset = 2;
  const auto report = run_aa_suite(iid_gaussian_source(12, 30, 0.0, 1.0), plan);
  for (const auto& c : report.cells) {
    CHECK(c.rejection_rate == 0.0);
    CHECK(c.n_reps == 10);
  }
}

TEST_CASE("A/A rejection rate on iid noise is near nominal") {
  const auto report = run_aa_suite(iid_gaussian_source(80, 35, 0.0, 1.0), small_plan());
  for (const auto& c : report.cells) {
    REQUIRE(c.n_reps == 200);
    // 99% binomial band around 5% for 200 replications
    CHECK(c.rejection_rate >= 0.014);
    CHECK(c.rejection_rate <= 0.10);
    // mean beta_hat consistent with no effect
    CHECK(std::abs(c.mean_beta) < 4.0 * c.sd_beta / std::sqrt(double(c.n_reps)));
  }
}

TEST_CASE("A/B suite recovers the planted uplift in outcome units") {
  ExperimentPlan plan = small_plan();
  plan.uplift_delta = 0.10;
  const double level = 200.0;
  const auto report = run_ab_suite(iid_gaussian_source(20, 35, level, 1.0), plan);
  for (const auto& c : report.cells) {
    // planted effect: delta * mean(Y) on treated cells
    CHECK(c.mean_beta == doctest::Approx(plan.uplift_delta * level).epsilon(0.15));
    // an uplift of 20 on unit-variance noise is overwhelming
    CHECK(c.rejection_rate >= 0.99);
  }
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  ExperimentPlan plan = small_plan();
  plan.n_dataset_reps = 6;
  plan.n_splits_per_dataset = 3;
  const auto source = iid_gaussian_source(16, 30, 50.0, 5.0);

  const auto a = run_aa_suite(source, plan);
  const auto b = run_aa_suite(source, plan);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(report_to_csv(a) == report_to_csv(b));

  plan.jobs = 1;
  const auto serial = run_aa_suite(source, plan);
  CHECK(report_to_json(a) == report_to_json(serial));
}

TEST_CASE("clean runs have no failed replications") {
  ExperimentPlan plan = small_plan();
  plan.n_dataset_reps = 3;
  plan.n_splits_per_dataset = 2;
  plan.max_starts = 2;
  const auto report = run_aa_suite(iid_gaussian_source(10, 42, 0.0, 1.0), plan);
  for (const auto& c : report.cells) CHECK(c.n_failed == 0);
}

TEST_CASE("source-level failures surface as clean errors from worker threads") {
  // constant panels have all-degenerate stratification features, which is an
  // error once k > 1
  PanelSource constant_source = [](int, std::uint64_t) {
    return make_panel({"a", "b", "c", "d"}, parse_date("2024-01-01"),
                      Eigen::MatrixXd::Ones(4, 30));
  };
  ExperimentPlan plan = small_plan();
  plan.stratify_k = 2;
  try {
    run_aa_suite(constant_source, plan);
    FAIL("expected DegenerateFeatures");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateFeatures);
  }
}

TEST_CASE("horizon longer than the panel is fatal") {
  ExperimentPlan plan = small_plan();
  plan.horizons_weeks = {16};  // 112 days > 30-day panel
  plan.jobs = 1;
  CHECK_THROWS_AS(run_aa_suite(iid_gaussian_source(10, 30, 0.0, 1.0), plan), Error);
}

TEST_CASE("report serialization formats") {
  ExperimentPlan plan = small_plan();
  plan.n_dataset_reps = 4;
  plan.n_splits_per_dataset = 2;
  const auto report = run_ab_suite(iid_gaussian_source(12, 30, 100.0, 2.0), plan);

  const std::string json = report_to_json(report);
  CHECK(json.find("\"suite\": \"ab\"") != std::string::npos);
  CHECK(json.find("se_reductions") != std::string::npos);

  const std::string csv = report_to_csv(report);
  CHECK(csv.rfind("regime,design,horizon_weeks,metric,value,ci_lo,ci_hi\n", 0) == 0);
  CHECK(csv.find("baseline,daily_sb,2,rejection_rate,") != std::string::npos);
  CHECK(csv.find("daily_sb_vs_fixed_pods") != std::string::npos);

  const std::string text = report_to_text(report);
  CHECK(text.find("Power (%)") != std::string::npos);
  CHECK(text.find("Fixed Pods") != std::string::npos);
  CHECK(text.find("SE reduction") != std::string::npos);
}

TEST_CASE("unit_features carries mean, sd, lag-1 autocorrelation") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  Eigen::MatrixXd y(3, 50);
  for (int t = 0; t < 50; ++t) {
    y(0, t) = 10.0;
    y(1, t) = z(rng);
    y(2, t) = (t % 2 == 0) ? 1.0 : -1.0;  // strong negative lag-1
  }
  std::vector<std::string> ids = {"a", "b", "c"};
  const auto f = unit_features(make_panel(ids, parse_date("2024-01-01"), y));
  CHECK(f(0, 0) == 10.0);
  CHECK(f(0, 1) == 0.0);
  CHECK(f(2, 2) < -0.9);
}
