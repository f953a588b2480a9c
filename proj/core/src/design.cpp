#include "sbx/design.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sbx/errors.hpp"
#include "sbx/rng.hpp"

namespace sbx {

namespace {

constexpr double kKmeansTol = 1e-8;
constexpr int kKmeansMaxIter = 300;

Eigen::Index nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::RowVectorXd& p) {
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));

  Eigen::VectorXd dist2(n);
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j)
        best = std::min(best, (points.row(i) - centroids.row(j)).squaredNorm());
      dist2[i] = best;
    }
    const double total = dist2.sum();
    if (total <= 0.0) {
      // all remaining points coincide with an existing centroid
      std::uniform_int_distribution<Eigen::Index> any(0, n - 1);
      centroids.row(c) = points.row(any(rng));
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng), cum = 0.0;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      cum += dist2[i];
      if (cum >= target) {
        pick = i;
        break;
      }
    }
    centroids.row(c) = points.row(pick);
  }
  return centroids;
}

}  // namespace

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (k > n) throw Error(ErrorCode::InvalidArgument, "k exceeds number of points");
  if (!points.allFinite()) throw Error(ErrorCode::InvalidArgument, "points must be finite");

  Rng rng = make_rng(mix64(seed, 0x6b6d6561));
  KmeansResult res;
  res.centroids = kmeanspp_init(points, k, rng);
  res.labels.assign(n, 0);

  double prev_obj = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kKmeansMaxIter; ++iter) {
    double obj = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index c = nearest_centroid(res.centroids, points.row(i));
      res.labels[i] = static_cast<int>(c);
      obj += (points.row(i) - res.centroids.row(c)).squaredNorm();
    }
    res.objective_trace.push_back(obj);

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(res.labels[i]) += points.row(i);
      counts[res.labels[i]] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        res.centroids.row(c) = sums.row(c) / counts[c];
      } else {
        // revive an empty cluster with the point farthest from its centroid
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = (points.row(i) - res.centroids.row(res.labels[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        res.centroids.row(c) = points.row(far);
      }
    }

    if (prev_obj < std::numeric_limits<double>::infinity()) {
      const double rel = std::abs(prev_obj - obj) / std::max(1e-300, prev_obj);
      if (rel < kKmeansTol) break;
    }
    prev_obj = obj;
  }

  // final labels against the converged centroids
  for (Eigen::Index i = 0; i < n; ++i)
    res.labels[i] = static_cast<int>(nearest_centroid(res.centroids, points.row(i)));
  return res;
}

int default_stratum_count(Eigen::Index n_units) {
  return std::max(2, static_cast<int>(n_units / 10));
}

PodAssignment stratified_pods(const Eigen::MatrixXd& features, int k, std::uint64_t seed,
                              std::vector<std::string> feature_names) {
  const Eigen::Index n = features.rows();
  if (n < 2) throw Error(ErrorCode::TooFewUnits, "need at least 2 units");
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidArgument, "k must satisfy 1 <= k <= n");
  if (!features.allFinite()) throw Error(ErrorCode::InvalidArgument, "features must be finite");
  if (feature_names.empty())
    for (Eigen::Index j = 0; j < features.cols(); ++j)
      feature_names.push_back("f" + std::to_string(j));
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols())
    throw Error(ErrorCode::InvalidArgument, "feature_names size mismatch");

  PodAssignment out;
  out.pod.assign(n, Pod::A);
  out.cluster.assign(n, 0);

  // standardize, dropping zero-variance columns
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double sd = std::sqrt((features.col(j).array() - features.col(j).mean()).square().sum() /
                                std::max<Eigen::Index>(1, n - 1));
    if (sd < 1e-12) {
      out.diagnostics.push_back("dropped zero-variance feature '" + feature_names[j] + "'");
    } else {
      kept.push_back(j);
    }
  }
  if (kept.empty() && k > 1)
    throw Error(ErrorCode::DegenerateFeatures, "all feature columns have zero variance");

  if (kept.empty()) {
    out.diagnostics.push_back("no usable features; all units form one stratum");
  } else {
    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(kept.size()));
    for (size_t jj = 0; jj < kept.size(); ++jj) {
      const auto col = features.col(kept[jj]);
      const double m = col.mean();
      const double sd = std::sqrt((col.array() - m).square().sum() / (n - 1));
      z.col(static_cast<Eigen::Index>(jj)) = (col.array() - m) / sd;
      out.feature_names.push_back(feature_names[kept[jj]]);
    }
    out.cluster = kmeans(z, k, mix64(seed, 1)).labels;
  }

  // Even random split inside each cluster; odd clusters alternate which pod
  // receives the extra unit so the global gap never exceeds one.
  std::map<int, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < n; ++i) members[out.cluster[i]].push_back(i);

  Rng rng = make_rng(mix64(seed, 2));
  bool extra_to_a = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  for (auto& [cid, idx] : members) {
    std::shuffle(idx.begin(), idx.end(), rng);
    size_t n_a = idx.size() / 2;
    if (idx.size() % 2 == 1) {
      if (extra_to_a) ++n_a;
      extra_to_a = !extra_to_a;
    }
    for (size_t j = 0; j < idx.size(); ++j) out.pod[idx[j]] = j < n_a ? Pod::A : Pod::B;
  }
  return out;
}

namespace {

void require_balanced_pods(const PodAssignment& pods) {
  long a = std::count(pods.pod.begin(), pods.pod.end(), Pod::A);
  long b = static_cast<long>(pods.pod.size()) - a;
  if (std::labs(a - b) > 1)
    throw Error(ErrorCode::InvalidArgument, "pods must be globally balanced (|#A-#B| <= 1)");
}

}  // namespace

AssignmentSchedule fixed_assignment(const PodAssignment& pods, int horizon_days,
                                    std::uint64_t seed) {
  if (horizon_days <= 0 || horizon_days % 2 != 0)
    throw Error(ErrorCode::OddHorizon, "horizon_days must be a positive even number");
  require_balanced_pods(pods);

  const int pre = horizon_days / 2;
  Rng rng = make_rng(mix64(seed, 3));
  const Pod treated = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? Pod::A : Pod::B;

  AssignmentSchedule s;
  s.design = DesignKind::FixedPods;
  s.block_length_days = horizon_days;
  s.pre_period_days = pre;
  s.treatment = Eigen::MatrixXi::Zero(pods.n_units(), horizon_days);
  for (Eigen::Index i = 0; i < pods.n_units(); ++i)
    if (pods.pod[i] == treated)
      for (int t = pre; t < horizon_days; ++t) s.treatment(i, t) = 1;
  return s;
}

AssignmentSchedule switchback_assignment(const PodAssignment& pods, int horizon_days,
                                         int block_length_days, std::uint64_t seed) {
  if (horizon_days <= 0) throw Error(ErrorCode::InvalidArgument, "horizon_days must be positive");
  if (block_length_days <= 0 || block_length_days > horizon_days)
    throw Error(ErrorCode::InvalidArgument, "block length must be in [1, horizon]");
  require_balanced_pods(pods);

  Rng rng = make_rng(mix64(seed, 4));
  const Pod starts_treated = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? Pod::A : Pod::B;

  AssignmentSchedule s;
  s.design = DesignKind::Switchback;
  s.block_length_days = block_length_days;
  s.pre_period_days = 0;
  s.treatment.resize(pods.n_units(), horizon_days);
  for (Eigen::Index i = 0; i < pods.n_units(); ++i) {
    const int phase = pods.pod[i] == starts_treated ? 0 : 1;
    for (int t = 0; t < horizon_days; ++t) {
      const int block = t / block_length_days;
      s.treatment(i, t) = (block % 2 == phase) ? 1 : 0;
    }
  }
  return s;
}

void write_schedule_csv(const AssignmentSchedule& schedule,
                        const std::vector<std::string>& unit_ids,
                        const std::vector<Date>& dates, std::ostream& out) {
  if (static_cast<Eigen::Index>(unit_ids.size()) != schedule.n_units() ||
      static_cast<Eigen::Index>(dates.size()) != schedule.n_days())
    throw Error(ErrorCode::DimensionMismatch, "schedule does not match unit/date labels");
  out << "unit,date,treated\n";
  for (Eigen::Index i = 0; i < schedule.n_units(); ++i)
    for (Eigen::Index t = 0; t < schedule.n_days(); ++t)
      out << unit_ids[i] << ',' << format_date(dates[t]) << ',' << schedule.treatment(i, t)
          << '\n';
}

AssignmentSchedule read_schedule_csv(std::istream& in, const PanelDataset& aligned_to) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyInput, "empty CSV stream");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "unit,date,treated")
    throw Error(ErrorCode::IoError, "expected header 'unit,date,treated'");

  std::map<std::string, Eigen::Index> unit_index;
  for (Eigen::Index i = 0; i < aligned_to.n_units(); ++i)
    unit_index[aligned_to.unit_ids[i]] = i;
  const Date start = aligned_to.dates.front();

  const Eigen::Index n = aligned_to.n_units(), T = aligned_to.n_days();
  Eigen::MatrixXi D = Eigen::MatrixXi::Constant(n, T, -1);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string unit, date_s, treated_s;
    if (!std::getline(ss, unit, ',') || !std::getline(ss, date_s, ',') ||
        !std::getline(ss, treated_s))
      throw Error(ErrorCode::IoError, "line " + std::to_string(line_no) + ": expected 3 fields");
    const auto it = unit_index.find(unit);
    if (it == unit_index.end())
      throw Error(ErrorCode::IoError,
                  "line " + std::to_string(line_no) + ": unknown unit '" + unit + "'");
    const int t = parse_date(date_s) - start;
    if (t < 0 || t >= T)
      throw Error(ErrorCode::IoError,
                  "line " + std::to_string(line_no) + ": date outside the panel calendar");
    if (treated_s != "0" && treated_s != "1")
      throw Error(ErrorCode::IoError,
                  "line " + std::to_string(line_no) + ": treated must be 0 or 1");
    D(it->second, t) = treated_s == "1" ? 1 : 0;
  }
  if ((D.array() < 0).any())
    throw Error(ErrorCode::DimensionMismatch, "schedule does not cover the full panel");

  AssignmentSchedule s;
  s.treatment = D;

  // infer the design descriptor from the matrix shape
  int leading_zero_cols = 0;
  while (leading_zero_cols < T && D.col(leading_zero_cols).sum() == 0) ++leading_zero_cols;
  bool constant_after_pre = true;
  for (Eigen::Index i = 0; i < n && constant_after_pre; ++i)
    for (Eigen::Index t = leading_zero_cols + 1; t < T; ++t)
      if (D(i, t) != D(i, leading_zero_cols)) {
        constant_after_pre = false;
        break;
      }
  if (constant_after_pre && leading_zero_cols < T) {
    s.design = DesignKind::FixedPods;
    s.pre_period_days = leading_zero_cols;
    s.block_length_days = static_cast<int>(T);
  } else {
    s.design = DesignKind::Switchback;
    s.pre_period_days = 0;
    int min_run = static_cast<int>(T);
    for (Eigen::Index i = 0; i < n; ++i) {
      int run = 1;
      for (Eigen::Index t = 1; t < T; ++t) {
        if (D(i, t) == D(i, t - 1)) {
          ++run;
        } else {
          min_run = std::min(min_run, run);
          run = 1;
        }
        // the final (possibly ragged) run is intentionally not counted
      }
    }
    s.block_length_days = min_run;
  }
  return s;
}

void write_pods_csv(const PodAssignment& pods, const std::vector<std::string>& unit_ids,
                    std::ostream& out) {
  if (unit_ids.size() != pods.pod.size())
    throw Error(ErrorCode::DimensionMismatch, "pods do not match unit labels");
  out << "unit,cluster,pod\n";
  for (size_t i = 0; i < unit_ids.size(); ++i)
    out << unit_ids[i] << ',' << pods.cluster[i] << ',' << (pods.pod[i] == Pod::A ? 'A' : 'B')
        << '\n';
}

}  // namespace sbx
