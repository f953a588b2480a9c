#include "sbx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

namespace sbx {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double student_t_two_sided_p(double t, double dof) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(dof);
  const double tail = boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::min(1.0, 2.0 * tail);
}

Interval wilson_ci(int successes, int n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double sample_mean(const Eigen::VectorXd& x) {
  return x.size() == 0 ? 0.0 : x.mean();
}

double sample_variance(const Eigen::VectorXd& x) {
  const auto n = x.size();
  if (n < 2) return 0.0;
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(n - 1);
}

double sample_sd(const Eigen::VectorXd& x) { return std::sqrt(sample_variance(x)); }

double lag1_autocorr(const Eigen::VectorXd& x) {
  const auto n = x.size();
  if (n < 2) return 0.0;
  const double m = x.mean();
  double num = 0.0, den = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double d = x[t] - m;
    den += d * d;
    if (t > 0) num += d * (x[t - 1] - m);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace sbx
