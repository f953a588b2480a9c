#pragma once

#include <Eigen/Dense>

namespace sbx {

double normal_cdf(double x);

/// Two-sided p-value for a Student-t statistic with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion (default 95%).
Interval wilson_ci(int successes, int n, double z = 1.959963984540054);

double sample_mean(const Eigen::VectorXd& x);

/// Sample standard deviation (denominator n-1); 0 for n < 2.
double sample_sd(const Eigen::VectorXd& x);

double sample_variance(const Eigen::VectorXd& x);

/// Lag-1 autocorrelation of a series; 0 for degenerate input.
double lag1_autocorr(const Eigen::VectorXd& x);

}  // namespace sbx
