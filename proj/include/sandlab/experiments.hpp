#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sandlab/graph.hpp"
#include "sandlab/rng.hpp"
#include "sandlab/stats.hpp"

namespace sandlab {

/// One recorded statistic and the bounds it must satisfy. The pass flag is
/// recomputed from the stored numbers, never stored independently.
struct Check {
  std::string name;
  double value = 0.0;
  std::optional<double> lower;
  std::optional<double> upper;
  /// Strict inequalities instead of inclusive ones.
  bool strict = false;

  bool passed() const;
  nlohmann::json to_json() const;
};

struct ExperimentReport {
  std::string id;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<Check> checks;
  /// Raw statistics the checks are computed from.
  nlohmann::json data = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  double wall_seconds = 0.0;
  /// Exploratory runs record data without acceptance checks.
  bool exploratory = false;

  bool passed() const;
  const Check* find(std::string_view name) const;
  /// Everything except timing, so reruns compare equal.
  nlohmann::json results_json() const;
};

struct PhiPsi {
  double phi = 0.0;
  double psi = 0.0;
};

/// φ_d(n): n^{3/2}, n, n^{1/2}, log n, (log n)^{1/2} for d = 1, 2, 3, 4, >=5.
double phi_d(int d, double n);
/// ψ_d(n, r): n r², r² log(n/r), r, log(1+r), 1 for d = 1, 2, 3, 4, >=5,
/// and ψ_d(n, 0) = 0.
double psi_d(int d, double n, double r);
/// Requires d >= 1, n >= 2, 0 <= r <= n.
PhiPsi phi_psi_eval(int d, long n, double r);

/// Initial mass distributions by name.
struct MassLaw {
  enum class Kind { Gaussian, TwoPoint, Uniform };
  Kind kind = Kind::Gaussian;
  /// Gaussian: mean, sd. TwoPoint: mean, spread (values mean ± spread with
  /// probability 1/2 each). Uniform: lo, hi.
  double a = 1.0;
  double b = 1.0;

  static MassLaw gaussian(double mean, double sd);
  static MassLaw two_point(double mean, double spread);
  static MassLaw uniform(double lo, double hi);
  /// Parses "gaussian:MEAN,SD", "two_point:MEAN,SPREAD" or "uniform:LO,HI".
  static MassLaw parse(std::string_view text);

  double mean() const;
  double variance() const;
  double draw(const CounterRng& rng, std::uint64_t trial, std::uint64_t site) const;
  std::string to_string() const;
};

/// Odometers of s = 1 + σ - mean σ (exact solver) against independent
/// min-shifted field samples (Cholesky route) on Z_n^d. Reports per-site
/// two-sample KS p-values and the Frobenius distance between the empirical
/// covariance matrices with its bootstrap standard error.
ExperimentReport exp_equality_in_law(int n, int d, std::size_t trials, std::uint64_t seed,
                                     std::size_t bootstrap_resamples = 100);

struct ScalingRow {
  long n = 0;
  std::size_t trials = 0;
  /// Mean odometer at the origin and its standard error.
  double mean = 0.0;
  double std_error = 0.0;
  /// Same expectation estimated from the site average of each sample.
  double site_average_mean = 0.0;
  double phi = 0.0;
};

struct ScalingTable {
  int d = 0;
  std::vector<ScalingRow> rows;
  /// Least squares of log mean against log n.
  LinearFit fit;
  /// max/min of mean/φ_d(n) across rows.
  double ratio_spread = 0.0;
};

/// Acceptance band for the log-log slope (d <= 3); nullopt for d >= 4,
/// where the ratio test applies instead.
std::optional<std::pair<double, double>> scaling_slope_band(int d);
inline constexpr double kScalingRatioSpreadLimit = 4.0;

/// E u(o) per n via the spectral route. `trials` holds one entry per size or
/// a single entry used for every size. At the smallest n, when n^d <= 1024,
/// the estimate is cross-checked against expected_max of Cholesky samples.
ExperimentReport exp_scaling(int d, std::span<const long> n_list,
                             std::span<const std::size_t> trials, std::uint64_t seed,
                             ScalingTable* table = nullptr);

/// Parallel toppling of i.i.d. draws from `law` on g. With `critical`, each
/// draw is recentred to total mass |V|. Draws whose total exceeds |V| are
/// skipped and counted.
ExperimentReport exp_density_conservation(std::shared_ptr<const Graph> g, const MassLaw& law,
                                          std::size_t trials, std::uint64_t seed,
                                          bool critical = false);

/// Parallel toppling of 1 + β δ_o on Z_n^d against powers of the transition
/// matrix, for sweeps 1..t_max.
ExperimentReport exp_dirac_identity(int n, int d, double beta, std::size_t t_max);

/// (1/ν_n) Σ_x g_n(o, x)(s(x) - 1) over i.i.d. mass fields on boxes of the
/// given radii, KS-tested against N(0, Var s), with the Lindeberg weight
/// max_x g_n(o, x)/ν_n.
ExperimentReport exp_critical_clt(int d, std::span<const int> radii, std::size_t trials,
                                  const MassLaw& law, std::uint64_t seed);

/// Positive rational p/q.
struct Slope {
  long num = 1;
  long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  /// Parses "p/q", an integer or a finite decimal such as "0.5".
  static Slope parse(std::string_view text);
  std::string to_string() const;
};

/// Δu_1 at (x, y) from the closed-form case list.
double laplacian_u1_formula(long x, long y);

/// Certificate that s_a = m 1_{C_a} stabilizes, checked on [-radius, radius]².
/// When 2ma/(1+a²) > 1 the run is exploratory: data only, no checks.
ExperimentReport cone_certificate(const Slope& a, double m, int radius);

/// s_0 + Δu_1 <= 1 on [-radius, radius]² for s_0(x, y) = x 1{x > 0, y = 0}.
ExperimentReport exp_s0_line(int radius);

/// Nested-volume odometer at (1, 0) of (1+α) 1_{C_1} for increasing radii.
/// Divergence-consistent growth is reported; explosion is never claimed.
ExperimentReport cone_explode(double alpha, std::span<const int> radii, double tol = 1e-9);

}  // namespace sandlab
