#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sandlab {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Sample mean with standard error s/sqrt(n). Requires at least two values.
MeanEstimate mean_with_error(std::span<const double> xs);

double sample_variance(std::span<const double> xs);

/// Sample skewness (biased moment estimator).
double sample_skewness(std::span<const double> xs);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Survival function of the Kolmogorov distribution,
/// Q(t) = 2 Σ_{j>=1} (-1)^{j-1} exp(-2 j^2 t^2).
double kolmogorov_survival(double t);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q((sqrt(m) + 0.12 + 0.11/sqrt(m)) D), m = n1 n2 / (n1 + n2).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample KS test against N(mean, sd^2).
KsResult ks_normal(std::span<const double> xs, double mean, double sd);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  /// Half-width of the 95% confidence interval for the slope (Student t).
  double slope_ci95 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. Needs >= 3 points.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace sandlab
