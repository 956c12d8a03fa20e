#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sandlab/rng.hpp"
#include "sandlab/stats.hpp"

using namespace sandlab;

TEST_CASE("compensated sum recovers cancelled mass") {
  std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(xs) == 2.0);
}

TEST_CASE("mean and standard error") {
  std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  const auto m = mean_with_error(xs);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(sample_variance(xs) == doctest::Approx(5.0 / 3.0));
  CHECK(sample_skewness(xs) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS(mean_with_error(std::vector<double>{1.0}));
}

TEST_CASE("kolmogorov survival reference values") {
  // Tabulated Kolmogorov distribution quantiles.
  CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_survival(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(kolmogorov_survival(1.9495) == doctest::Approx(0.001).epsilon(2e-3));
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639452).epsilon(1e-6));
  // The two series agree where they meet.
  CHECK(kolmogorov_survival(0.999999) == doctest::Approx(kolmogorov_survival(1.000001)).epsilon(1e-5));
}

TEST_CASE("two-sample KS") {
  std::vector<double> a, b, shifted;
  const CounterRng rng(11, Stream::Cli);
  for (std::uint64_t i = 0; i < 2000; ++i) {
    a.push_back(rng.normal(i, 0));
    b.push_back(rng.normal(i, 1));
    shifted.push_back(rng.normal(i, 2) + 0.5);
  }
  CHECK(ks_two_sample(a, b).p_value > 0.001);
  CHECK(ks_two_sample(a, shifted).p_value < 1e-10);
  CHECK(ks_two_sample(a, a).statistic == 0.0);
}

TEST_CASE("one-sample KS against a normal") {
  std::vector<double> xs;
  const CounterRng rng(5, Stream::Cli);
  for (std::uint64_t i = 0; i < 4000; ++i) xs.push_back(2.0 + 3.0 * rng.normal(i, 0));
  CHECK(ks_normal(xs, 2.0, 3.0).p_value > 0.001);
  CHECK(ks_normal(xs, 0.0, 3.0).p_value < 1e-6);
}

TEST_CASE("least squares recovers a line") {
  std::vector<double> x{1, 2, 3, 4, 5}, y;
  for (double v : x) y.push_back(0.5 + 1.5 * v);
  const auto fit = least_squares(x, y);
  CHECK(fit.slope == doctest::Approx(1.5));
  CHECK(fit.intercept == doctest::Approx(0.5));
  CHECK(fit.slope_std_error == doctest::Approx(0.0).epsilon(1e-9));
  std::vector<double> noisy{2.1, 3.4, 5.2, 6.4, 8.1};
  const auto f2 = least_squares(x, noisy);
  // 95% half-width = t(0.975, 3) * SE.
  CHECK(f2.slope_ci95 == doctest::Approx(3.182446305 * f2.slope_std_error).epsilon(1e-6));
  CHECK_THROWS(least_squares(std::vector<double>{1, 2}, std::vector<double>{1, 2}));
}

TEST_CASE("counter rng is a pure function of its counters") {
  const CounterRng a(42, Stream::InitialMass), b(42, Stream::InitialMass), c(42, Stream::FieldCholesky);
  CHECK(a.bits(3, 7) == b.bits(3, 7));
  CHECK(a.bits(3, 7) != c.bits(3, 7));
  CHECK(a.bits(3, 7) != a.bits(3, 8));
  double sum = 0.0, sq = 0.0;
  const int count = 20000;
  for (int i = 0; i < count; ++i) {
    const double z = a.normal(0, static_cast<std::uint64_t>(i));
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / count) < 5.0 / std::sqrt(count));
  CHECK(std::abs(sq / count - 1.0) < 5.0 * std::sqrt(2.0 / count));
}
