#include "sandlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace sandlab {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

double compensated_sum(std::span<const double> xs) {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance needs at least two values");
  const double mean = compensated_sum(xs) / static_cast<double>(xs.size());
  CompensatedSum acc;
  for (double x : xs) acc.add((x - mean) * (x - mean));
  return acc.value() / static_cast<double>(xs.size() - 1);
}

MeanEstimate mean_with_error(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("mean estimate needs at least two values");
  MeanEstimate e;
  e.count = xs.size();
  e.mean = compensated_sum(xs) / static_cast<double>(xs.size());
  e.std_error = std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
  return e;
}

double sample_skewness(std::span<const double> xs) {
  if (xs.size() < 3) throw std::invalid_argument("skewness needs at least three values");
  const double n = static_cast<double>(xs.size());
  const double mean = compensated_sum(xs) / n;
  CompensatedSum m2, m3;
  for (double x : xs) {
    const double d = x - mean;
    m2.add(d * d);
    m3.add(d * d * d);
  }
  const double var = m2.value() / n;
  if (var <= 0.0) return 0.0;
  return (m3.value() / n) / std::pow(var, 1.5);
}

double kolmogorov_survival(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 1.0) {
    // Jacobi theta form of the CDF; converges fast for small t.
    const double pi = std::numbers::pi;
    double cdf = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double k = 2.0 * j - 1.0;
      const double term = std::exp(-k * k * pi * pi / (8.0 * t * t));
      cdf += term;
      if (term < 1e-300) break;
    }
    cdf *= std::sqrt(2.0 * pi) / t;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double m = std::sqrt(nx * ny / (nx + ny));
  return {d, kolmogorov_survival((m + 0.12 + 0.11 / m) * d)};
}

KsResult ks_normal(std::span<const double> xs, double mean, double sd) {
  if (xs.empty()) throw std::invalid_argument("KS test needs a non-empty sample");
  if (!(sd > 0.0)) throw std::invalid_argument("reference normal needs sd > 0");
  std::vector<double> x(xs.begin(), xs.end());
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> ref(mean, sd);
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = boost::math::cdf(ref, x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double m = std::sqrt(n);
  return {d, kolmogorov_survival((m + 0.12 + 0.11 / m) * d)};
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit needs equally many x and y values");
  if (x.size() < 3) throw std::invalid_argument("fit needs at least three points");
  const double n = static_cast<double>(x.size());
  const double mx = compensated_sum(x) / n;
  const double my = compensated_sum(y) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit needs at least two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  const double dof = n - 2.0;
  fit.slope_std_error = std::sqrt(rss / dof / sxx);
  const boost::math::students_t_distribution<double> t(dof);
  fit.slope_ci95 = boost::math::quantile(boost::math::complement(t, 0.025)) * fit.slope_std_error;
  return fit;
}

}  // namespace sandlab
