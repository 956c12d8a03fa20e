#include "sandlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "sandlab/field.hpp"
#include "sandlab/green.hpp"
#include "sandlab/parallel.hpp"
#include "sandlab/sandpile.hpp"

namespace sandlab {

using nlohmann::json;

bool Check::passed() const {
  if (!std::isfinite(value)) return false;
  if (lower && (strict ? !(value > *lower) : !(value >= *lower))) return false;
  if (upper && (strict ? !(value < *upper) : !(value <= *upper))) return false;
  return true;
}

json Check::to_json() const {
  json j{{"name", name}, {"value", value}, {"strict", strict}, {"pass", passed()}};
  j["lower"] = lower ? json(*lower) : json(nullptr);
  j["upper"] = upper ? json(*upper) : json(nullptr);
  return j;
}

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
}

const Check* ExperimentReport::find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

json ExperimentReport::results_json() const {
  json checks_json = json::array();
  for (const auto& c : checks) checks_json.push_back(c.to_json());
  return json{{"id", id},
              {"parameters", parameters},
              {"checks", checks_json},
              {"data", data},
              {"exploratory", exploratory},
              {"pass", passed()}};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Check at_most(std::string name, double value, double bound) {
  return Check{std::move(name), value, std::nullopt, bound, false};
}

Check at_least(std::string name, double value, double bound) {
  return Check{std::move(name), value, bound, std::nullopt, false};
}

Check above(std::string name, double value, double bound) {
  return Check{std::move(name), value, bound, std::nullopt, true};
}

Check within(std::string name, double value, double lo, double hi) {
  return Check{std::move(name), value, lo, hi, false};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

std::shared_ptr<const Graph> shared_torus(int n, int d) {
  return std::make_shared<const Graph>(make_torus(n, d));
}

// Empirical covariance of the columns of `samples` (rows are trials).
Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& samples) {
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
}

Eigen::MatrixXd resample_rows(const Eigen::MatrixXd& m, const CounterRng::Trial& stream,
                              std::uint64_t slot) {
  const auto rows = m.rows();
  Eigen::MatrixXd out(rows, m.cols());
  for (Eigen::Index i = 0; i < rows; ++i) {
    auto pick = static_cast<Eigen::Index>(stream.uniform(static_cast<std::uint64_t>(i), slot) *
                                          static_cast<double>(rows));
    out.row(i) = m.row(std::min(pick, rows - 1));
  }
  return out;
}

std::vector<double> column_of(const Eigen::MatrixXd& m, Eigen::Index c) {
  return std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows());
}

}  // namespace

double phi_d(int d, double n) {
  switch (d) {
    case 1: return std::pow(n, 1.5);
    case 2: return n;
    case 3: return std::sqrt(n);
    case 4: return std::log(n);
    default: return std::sqrt(std::log(n));
  }
}

double psi_d(int d, double n, double r) {
  if (r == 0.0) return 0.0;
  switch (d) {
    case 1: return n * r * r;
    case 2: return r * r * std::log(n / r);
    case 3: return r;
    case 4: return std::log1p(r);
    default: return 1.0;
  }
}

PhiPsi phi_psi_eval(int d, long n, double r) {
  require(d >= 1, "d must be >= 1");
  require(n >= 2, "n must be >= 2");
  require(r >= 0.0 && r <= static_cast<double>(n), "r must lie in [0, n]");
  return {phi_d(d, static_cast<double>(n)), psi_d(d, static_cast<double>(n), r)};
}

MassLaw MassLaw::gaussian(double mean, double sd) {
  require(std::isfinite(mean) && std::isfinite(sd) && sd >= 0.0, "gaussian law needs finite mean and sd >= 0");
  return {Kind::Gaussian, mean, sd};
}

MassLaw MassLaw::two_point(double mean, double spread) {
  require(std::isfinite(mean) && std::isfinite(spread) && spread >= 0.0,
          "two_point law needs finite mean and spread >= 0");
  return {Kind::TwoPoint, mean, spread};
}

MassLaw MassLaw::uniform(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, "uniform law needs finite lo <= hi");
  return {Kind::Uniform, lo, hi};
}

MassLaw MassLaw::parse(std::string_view text) {
  const auto colon = text.find(':');
  require(colon != std::string_view::npos, "mass law must look like NAME:A,B");
  const std::string_view name = text.substr(0, colon);
  const std::string_view args = text.substr(colon + 1);
  const auto comma = args.find(',');
  require(comma != std::string_view::npos, "mass law needs two comma-separated parameters");
  auto number = [](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::invalid_argument("bad number in mass law: " + std::string(s));
    }
    return v;
  };
  const double a = number(args.substr(0, comma));
  const double b = number(args.substr(comma + 1));
  if (name == "gaussian") return gaussian(a, b);
  if (name == "two_point") return two_point(a, b);
  if (name == "uniform") return uniform(a, b);
  throw std::invalid_argument("unknown mass law '" + std::string(name) + "'");
}

double MassLaw::mean() const { return kind == Kind::Uniform ? 0.5 * (a + b) : a; }

double MassLaw::variance() const {
  switch (kind) {
    case Kind::Gaussian: return b * b;
    case Kind::TwoPoint: return b * b;
    case Kind::Uniform: return (b - a) * (b - a) / 12.0;
  }
  return 0.0;
}

double MassLaw::draw(const CounterRng& rng, std::uint64_t trial, std::uint64_t site) const {
  const auto stream = rng.trial(trial);
  switch (kind) {
    case Kind::Gaussian: return a + b * stream.normal(site);
    case Kind::TwoPoint: return stream.uniform(site) < 0.5 ? a - b : a + b;
    case Kind::Uniform: return a + (b - a) * stream.uniform(site);
  }
  return 0.0;
}

std::string MassLaw::to_string() const {
  const char* name = kind == Kind::Gaussian ? "gaussian" : kind == Kind::TwoPoint ? "two_point" : "uniform";
  json j = a;
  json k = b;
  return std::string(name) + ":" + j.dump() + "," + k.dump();
}

ExperimentReport exp_equality_in_law(int n, int d, std::size_t trials, std::uint64_t seed,
                                     std::size_t bootstrap_resamples) {
  require(trials >= 2, "trials must be >= 2");
  require(bootstrap_resamples >= 2, "bootstrap needs at least 2 resamples");
  const auto size = lattice_size(n, d, kDenseCovarianceCap);
  require(n >= 3 && d >= 1 && size.has_value(),
          "equality in law needs a torus with n >= 3 and at most " + std::to_string(kDenseCovarianceCap) +
              " sites");
  const auto start = Clock::now();
  auto g = shared_torus(n, d);
  const auto nv = static_cast<Eigen::Index>(g->vertex_count());
  const auto rows = static_cast<Eigen::Index>(trials);

  // Pipeline A: exact odometers of 1 + σ - mean σ.
  const CounterRng mass_rng(seed, Stream::InitialMass);
  Eigen::MatrixXd odometers(rows, nv);
  std::vector<double> residuals(trials), minima(trials);
  parallel_for(trials, [&](std::size_t t) {
    const auto stream = mass_rng.trial(t);
    std::vector<double> s(static_cast<std::size_t>(nv));
    for (std::size_t x = 0; x < s.size(); ++x) s[x] = stream.normal(x);
    const double mean = compensated_sum(s) / static_cast<double>(s.size());
    for (double& v : s) v = 1.0 + v - mean;
    const auto ex = solve_odometer_exact(Configuration(g, std::move(s)));
    residuals[t] = ex.residual;
    minima[t] = *std::min_element(ex.odometer.begin(), ex.odometer.end());
    for (Eigen::Index x = 0; x < nv; ++x) odometers(static_cast<Eigen::Index>(t), x) = ex.odometer[static_cast<std::size_t>(x)];
  });

  // Pipeline B: min-shifted Cholesky samples.
  const CovarianceModel cov = covariance(green_averaged(g));
  const CholeskySampler chol(cov);
  const CounterRng field_rng(seed, Stream::FieldCholesky);
  Eigen::MatrixXd fields(rows, nv);
  parallel_for(trials, [&](std::size_t t) {
    const auto f = min_shift(chol.sample(field_rng, t));
    for (Eigen::Index x = 0; x < nv; ++x) fields(static_cast<Eigen::Index>(t), x) = f.values[static_cast<std::size_t>(x)];
  });

  std::vector<double> p_values(static_cast<std::size_t>(nv)), ks_stats(static_cast<std::size_t>(nv));
  parallel_for(static_cast<std::size_t>(nv), [&](std::size_t x) {
    const auto r = ks_two_sample(column_of(odometers, static_cast<Eigen::Index>(x)),
                                 column_of(fields, static_cast<Eigen::Index>(x)));
    p_values[x] = r.p_value;
    ks_stats[x] = r.statistic;
  });
  const auto passing = std::count_if(p_values.begin(), p_values.end(), [](double p) { return p > 0.001; });
  const double pass_fraction = static_cast<double>(passing) / static_cast<double>(nv);

  const Eigen::MatrixXd cov_a = empirical_covariance(odometers);
  const Eigen::MatrixXd cov_b = empirical_covariance(fields);
  const double frobenius = (cov_a - cov_b).norm();

  // Bootstrap standard error: per-entry resampling variances of both
  // empirical covariances, summed over entries.
  const CounterRng boot_rng(seed, Stream::Bootstrap);
  std::vector<Eigen::MatrixXd> boot_a(bootstrap_resamples), boot_b(bootstrap_resamples);
  parallel_for(bootstrap_resamples, [&](std::size_t b) {
    const auto stream = boot_rng.trial(b);
    boot_a[b] = empirical_covariance(resample_rows(odometers, stream, 0));
    boot_b[b] = empirical_covariance(resample_rows(fields, stream, 1));
  });
  auto entry_variance_sum = [&](const std::vector<Eigen::MatrixXd>& boots) {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(nv, nv);
    for (const auto& m : boots) mean += m;
    mean /= static_cast<double>(boots.size());
    double total = 0.0;
    for (const auto& m : boots) total += (m - mean).squaredNorm();
    return total / static_cast<double>(boots.size() - 1);
  };
  const double frobenius_se = std::sqrt(entry_variance_sum(boot_a) + entry_variance_sum(boot_b));

  ExperimentReport r;
  r.id = "equality-in-law";
  r.parameters = {{"n", n}, {"d", d}, {"trials", trials}, {"bootstrap_resamples", bootstrap_resamples}};
  r.seeds = {{"master", seed},
             {"streams", {{"initial_mass", Stream::InitialMass}, {"field_cholesky", Stream::FieldCholesky},
                          {"bootstrap", Stream::Bootstrap}}}};
  r.data = {{"ks_p_values", p_values},
            {"ks_statistics", ks_stats},
            {"sites_passing", passing},
            {"frobenius_distance", frobenius},
            {"frobenius_bootstrap_se", frobenius_se},
            {"cholesky_jitter", chol.jitter()},
            {"max_exact_residual", *std::max_element(residuals.begin(), residuals.end())}};
  r.checks.push_back(at_least("ks_pass_fraction", pass_fraction, 0.95));
  r.checks.push_back(at_most("frobenius_over_bootstrap_se", frobenius / frobenius_se, 5.0));
  r.checks.push_back(at_most("max_exact_residual", *std::max_element(residuals.begin(), residuals.end()), 1e-8));
  double worst_min = 0.0;
  for (double m : minima) worst_min = std::max(worst_min, std::abs(m));
  r.checks.push_back(at_most("max_abs_odometer_minimum", worst_min, 0.0));
  r.wall_seconds = seconds_since(start);
  return r;
}

std::optional<std::pair<double, double>> scaling_slope_band(int d) {
  switch (d) {
    case 1: return std::pair{1.4, 1.6};
    case 2: return std::pair{0.85, 1.15};
    case 3: return std::pair{0.35, 0.65};
    default: return std::nullopt;
  }
}

ExperimentReport exp_scaling(int d, std::span<const long> n_list, std::span<const std::size_t> trials,
                             std::uint64_t seed, ScalingTable* table) {
  require(d >= 1, "d must be >= 1");
  require(n_list.size() >= 3, "scaling needs at least 3 sizes for a fit");
  require(trials.size() == 1 || trials.size() == n_list.size(),
          "give one trial count or one per size");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    require(n_list[i] >= 3, "sizes must be >= 3");
    require(i == 0 || n_list[i] > n_list[i - 1], "sizes must be strictly increasing");
    require(lattice_size(n_list[i], d, std::size_t{1} << 26).has_value(), "torus too large for the spectral sampler");
  }
  for (std::size_t t : trials) require(t >= 2, "trials must be >= 2");
  const auto start = Clock::now();

  ScalingTable tab;
  tab.d = d;
  const CounterRng rng(seed, Stream::FieldSpectral);
  std::vector<double> log_n, log_mean;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const int n = static_cast<int>(n_list[i]);
    const std::size_t count = trials.size() == 1 ? trials[0] : trials[i];
    const SpectralSampler sampler(n, d);
    std::vector<double> at_origin(count), site_average(count);
    // Coordinate 0 sits at index 0 in the row-major layout.
    parallel_for(count, [&](std::size_t t) {
      const auto f = sampler.sample(rng, t);
      at_origin[t] = f.values[0];
      site_average[t] = compensated_sum(f.values) / static_cast<double>(f.values.size());
    });
    const auto est = mean_with_error(at_origin);
    ScalingRow row{n, count, est.mean, est.std_error, mean_with_error(site_average).mean,
                   phi_d(d, static_cast<double>(n))};
    tab.rows.push_back(row);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_mean.push_back(std::log(est.mean));
  }
  tab.fit = least_squares(log_n, log_mean);
  double lo = INFINITY, hi = 0.0;
  for (const auto& row : tab.rows) {
    lo = std::min(lo, row.mean / row.phi);
    hi = std::max(hi, row.mean / row.phi);
  }
  tab.ratio_spread = hi / lo;

  ExperimentReport r;
  r.id = "scaling";
  r.parameters = {{"d", d},
                  {"n_list", std::vector<long>(n_list.begin(), n_list.end())},
                  {"trials", std::vector<std::size_t>(trials.begin(), trials.end())}};
  r.seeds = {{"master", seed}, {"streams", {{"field_spectral", Stream::FieldSpectral}, {"field_cholesky", Stream::FieldCholesky}}}};
  json rows = json::array();
  for (const auto& row : tab.rows) {
    rows.push_back({{"n", row.n}, {"trials", row.trials}, {"mean_odometer_origin", row.mean},
                    {"std_error", row.std_error}, {"site_average_mean", row.site_average_mean},
                    {"phi", row.phi}, {"ratio_to_phi", row.mean / row.phi}});
  }
  r.data = {{"rows", rows},
            {"slope", tab.fit.slope},
            {"slope_std_error", tab.fit.slope_std_error},
            {"slope_ci95", {tab.fit.slope - tab.fit.slope_ci95, tab.fit.slope + tab.fit.slope_ci95}},
            {"ratio_spread", tab.ratio_spread}};
  if (const auto band = scaling_slope_band(d)) {
    r.checks.push_back(within("slope", tab.fit.slope, band->first, band->second));
  } else {
    r.checks.push_back(at_most("ratio_spread", tab.ratio_spread, kScalingRatioSpreadLimit));
  }

  // Cross-module identity E u(o) = E max η at the smallest size.
  const auto first = tab.rows.front();
  const auto small = lattice_size(first.n, d, 1024);
  if (small) {
    const CholeskySampler chol(covariance(green_averaged(shared_torus(static_cast<int>(first.n), d))));
    const CounterRng chol_rng(seed, Stream::FieldCholesky);
    const auto emax = expected_max([&](std::uint64_t t) { return chol.sample(chol_rng, t); }, first.trials);
    const double se = std::hypot(emax.std_error, first.std_error);
    r.data["expected_max_cross_check"] = {{"n", first.n}, {"expected_max", emax.mean},
                                          {"expected_max_se", emax.std_error}, {"combined_se", se}};
    r.checks.push_back(at_most("expected_max_gap_over_se", std::abs(emax.mean - first.mean) / se, 5.0));
  }
  r.wall_seconds = seconds_since(start);
  if (table) *table = std::move(tab);
  return r;
}

ExperimentReport exp_density_conservation(std::shared_ptr<const Graph> g, const MassLaw& law,
                                          std::size_t trials, std::uint64_t seed, bool critical) {
  require(g != nullptr, "density experiment needs a graph");
  require(trials >= 2, "trials must be >= 2");
  const auto start = Clock::now();
  const std::size_t nv = g->vertex_count();
  const Vertex o = g->is_lattice() ? g->origin() : 0;
  const CounterRng rng(seed, Stream::DensityMass);

  std::vector<double> s0(trials), sinf(trials), drift(trials, 0.0), deviation(trials, 0.0);
  std::vector<char> used(trials, 0), stabilized(trials, 0);
  std::vector<std::size_t> sweeps(trials, 0);
  parallel_for(trials, [&](std::size_t t) {
    std::vector<double> s(nv);
    for (Vertex x = 0; x < nv; ++x) s[x] = law.draw(rng, t, x);
    if (critical) {
      const double mean = compensated_sum(s) / static_cast<double>(nv);
      for (double& v : s) v = v - mean + 1.0;
    } else if (compensated_sum(s) > static_cast<double>(nv)) {
      return;  // not stabilizable on a finite graph without absorption
    }
    const Configuration c(g, std::move(s));
    const auto rep = topple_parallel(c);
    used[t] = 1;
    stabilized[t] = rep.status == ToppleStatus::Stabilized;
    sweeps[t] = rep.sweeps;
    s0[t] = c.values[o];
    sinf[t] = rep.final_config.values[o];
    const double scale = std::max(std::abs(c.total_mass()), 1.0);
    drift[t] = std::max(rep.max_sweep_drift, rep.mass_drift) / scale;
    for (double v : rep.final_config.values) deviation[t] = std::max(deviation[t], std::abs(v - 1.0));
  });

  std::vector<double> a, b;
  std::size_t unstable = 0;
  double worst_drift = 0.0, worst_dev = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    if (!used[t]) continue;
    a.push_back(s0[t]);
    b.push_back(sinf[t]);
    unstable += stabilized[t] ? 0 : 1;
    worst_drift = std::max(worst_drift, drift[t]);
    worst_dev = std::max(worst_dev, deviation[t]);
  }
  require(a.size() >= 2, "fewer than 2 stabilizable draws");
  const auto e0 = mean_with_error(a);
  const auto einf = mean_with_error(b);
  const double combined = std::hypot(e0.std_error, einf.std_error);
  // Absolute floors keep the comparisons meaningful when s_∞ is constant.
  const double gap_bound = std::max(5.0 * combined, 1e-8);
  const double law_bound = std::max(5.0 * einf.std_error, 1e-8);

  ExperimentReport r;
  r.id = "density";
  r.parameters = {{"graph", g->describe()}, {"law", law.to_string()}, {"trials", trials}, {"critical", critical}};
  r.seeds = {{"master", seed}, {"streams", {{"density_mass", Stream::DensityMass}}}};
  r.data = {{"trials_used", a.size()},
            {"trials_skipped", trials - a.size()},
            {"mean_s0_origin", e0.mean},
            {"se_s0_origin", e0.std_error},
            {"mean_sinf_origin", einf.mean},
            {"se_sinf_origin", einf.std_error},
            {"law_mean", law.mean()},
            {"max_sweeps", *std::max_element(sweeps.begin(), sweeps.end())},
            {"max_final_deviation_from_one", worst_dev}};
  r.checks.push_back(at_most("max_relative_sweep_drift", worst_drift, 1e-9));
  r.checks.push_back(at_most("unstabilized_trials", static_cast<double>(unstable), 0.0));
  r.checks.push_back(at_most("sinf_minus_s0_at_origin", std::abs(einf.mean - e0.mean), gap_bound));
  r.checks.push_back(at_most("sinf_minus_law_mean_at_origin", std::abs(einf.mean - law.mean()), law_bound));
  if (critical) r.checks.push_back(at_most("max_final_deviation_from_one", worst_dev, 1e-7));
  r.wall_seconds = seconds_since(start);
  return r;
}

ExperimentReport exp_dirac_identity(int n, int d, double beta, std::size_t t_max) {
  require(beta >= 0.0 && std::isfinite(beta), "beta must be finite and >= 0");
  require(t_max >= 1, "t_max must be >= 1");
  require(n >= 3 && d >= 1 && lattice_size(n, d, kDenseGreenCap).has_value(),
          "dirac identity needs a torus with at most " + std::to_string(kDenseGreenCap) + " sites");
  const auto start = Clock::now();
  auto g = shared_torus(n, d);
  const std::size_t nv = g->vertex_count();
  const Vertex o = g->origin();

  std::vector<double> s(nv, 1.0);
  s[o] += beta;
  ToppleOptions opt;
  opt.tol = 1e-300;
  opt.max_sweeps = t_max;
  opt.record = true;
  const auto rep = topple_parallel(Configuration(g, s), opt);

  // Oracle: distribution of the walk after j steps from powers of the dense
  // transition matrix P(x, y) = 1{x ~ y}/deg x.
  const auto size = static_cast<Eigen::Index>(nv);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(size, size);
  for (Vertex x = 0; x < nv; ++x) {
    for (Vertex y : g->neighbors(x)) p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) += 1.0 / g->degree(x);
  }
  Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(size);
  dist[static_cast<Eigen::Index>(o)] = 1.0;
  Eigen::RowVectorXd expected_u = Eigen::RowVectorXd::Zero(size);
  std::vector<double> u(nv, 0.0);
  double err_u = 0.0, err_s = 0.0;
  json per_step = json::array();
  for (std::size_t t = 1; t <= t_max; ++t) {
    for (Eigen::Index x = 0; x < size; ++x) expected_u[x] += beta * dist[x] / g->degree(static_cast<Vertex>(x));
    dist = dist * p;
    if (t <= rep.trace->increments.size()) {
      const auto& inc = rep.trace->increments[t - 1];
      for (Vertex x = 0; x < nv; ++x) u[x] += inc[x];
    }
    const auto lap = laplacian_apply(*g, u);
    double eu = 0.0, es = 0.0;
    for (Vertex x = 0; x < nv; ++x) {
      const auto xi = static_cast<Eigen::Index>(x);
      eu = std::max(eu, std::abs(u[x] - expected_u[xi]));
      es = std::max(es, std::abs(s[x] + lap[x] - (1.0 + beta * dist[xi])));
    }
    err_u = std::max(err_u, eu);
    err_s = std::max(err_s, es);
    per_step.push_back({{"t", t}, {"u_error", eu}, {"s_error", es}, {"u_origin", u[o]}});
  }

  ExperimentReport r;
  r.id = "dirac";
  r.parameters = {{"n", n}, {"d", d}, {"beta", beta}, {"t_max", t_max}};
  r.data = {{"sweeps_run", rep.sweeps}, {"per_step", per_step}};
  r.checks.push_back(at_most("max_odometer_error", err_u, 1e-10));
  r.checks.push_back(at_most("max_configuration_error", err_s, 1e-10));
  r.wall_seconds = seconds_since(start);
  return r;
}

ExperimentReport exp_critical_clt(int d, std::span<const int> radii, std::size_t trials,
                                  const MassLaw& law, std::uint64_t seed) {
  require(d >= 1, "d must be >= 1");
  require(!radii.empty(), "radii list is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(radii[i] >= 1, "radii must be >= 1");
    require(i == 0 || radii[i] > radii[i - 1], "radii must be strictly increasing");
  }
  require(trials >= 2, "trials must be >= 2");
  require(std::abs(law.mean() - 1.0) <= 1e-12, "CLT statistic needs a mass law with mean 1");
  require(law.variance() > 0.0, "CLT statistic needs a mass law with nonzero variance");
  const auto start = Clock::now();
  const double sd = std::sqrt(law.variance());
  const CounterRng rng(seed, Stream::CltMass);

  ExperimentReport r;
  r.id = "clt";
  r.parameters = {{"d", d}, {"radii", std::vector<int>(radii.begin(), radii.end())}, {"trials", trials},
                  {"law", law.to_string()}};
  r.seeds = {{"master", seed}, {"streams", {{"clt_mass", Stream::CltMass}}}};
  json per_radius = json::array();
  std::vector<double> weights;
  for (int radius : radii) {
    const auto col = green_dirichlet_box(radius, d);
    const double nu = nu_n(col);
    const double b_n = *std::max_element(col.values.begin(), col.values.end()) / nu;
    std::vector<double> stats(trials);
    parallel_for(trials, [&](std::size_t t) {
      CompensatedSum acc;
      for (Vertex x = 0; x < col.values.size(); ++x) acc.add(col.values[x] * (law.draw(rng, t, x) - 1.0));
      stats[t] = acc.value() / nu;
    });
    const auto ks = ks_normal(stats, 0.0, sd);
    const auto est = mean_with_error(stats);
    per_radius.push_back({{"radius", radius}, {"nu", nu}, {"lindeberg_weight", b_n},
                          {"ks_statistic", ks.statistic}, {"ks_p_value", ks.p_value},
                          {"sample_mean", est.mean}, {"sample_variance", sample_variance(stats)}});
    r.checks.push_back(above("ks_p_value_radius_" + std::to_string(radius), ks.p_value, 0.01));
    weights.push_back(b_n);
  }
  for (std::size_t i = 1; i < weights.size(); ++i) {
    r.checks.push_back(above("lindeberg_weight_drop_" + std::to_string(radii[i - 1]) + "_to_" +
                                 std::to_string(radii[i]),
                             weights[i - 1] - weights[i], 0.0));
  }
  r.data = {{"per_radius", per_radius}, {"law_variance", law.variance()}};
  r.wall_seconds = seconds_since(start);
  return r;
}

Slope Slope::parse(std::string_view text) {
  auto integer = [&](std::string_view s) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw std::invalid_argument("bad slope '" + std::string(text) + "'");
    }
    return v;
  };
  Slope out;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    out = {integer(text.substr(0, slash)), integer(text.substr(slash + 1))};
  } else if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view frac = text.substr(dot + 1);
    require(frac.size() <= 9, "slope has too many decimal digits");
    long den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const long whole = dot == 0 ? 0 : integer(text.substr(0, dot));
    out = {whole * den + (frac.empty() ? 0 : integer(frac)), den};
  } else {
    out = {integer(text), 1};
  }
  require(out.num > 0 && out.den > 0, "slope must be positive");
  const long g = std::gcd(out.num, out.den);
  out.num /= g;
  out.den /= g;
  return out;
}

std::string Slope::to_string() const { return std::to_string(num) + "/" + std::to_string(den); }

double laplacian_u1_formula(long x, long y) {
  if (x > 0 && y == 0) return 1.0 - static_cast<double>(x);
  if (x > 0 && std::abs(y) < x) return 1.0;
  if (x > 0 && std::abs(y) == x) return 0.5;
  if (x == 0 && y == 0) return 0.25;
  return 0.0;
}

namespace {

// u_a(x, y) = (a x - |y|)² / (2(1 + a²)) on C_a, in exact integer form.
double u_cone(const Slope& a, long x, long y) {
  const long t = a.num * x - a.den * std::abs(y);
  if (x < 0 || t < 0) return 0.0;
  const double td = static_cast<double>(t);
  return td * td / (2.0 * static_cast<double>(a.num * a.num + a.den * a.den));
}

bool in_cone(const Slope& a, long x, long y) { return x >= 0 && a.den * std::abs(y) <= a.num * x; }

// Values of f on DirichletBox(radius + 1, 2), whose Laplacian is then exact
// on the inner radius-`radius` box.
std::vector<double> sample_on_box(const Graph& outer, const std::function<double(long, long)>& f) {
  std::vector<double> vals(outer.vertex_count());
  for (Vertex v = 0; v < vals.size(); ++v) {
    const auto c = outer.coord(v);
    vals[v] = f(c.values[0], c.values[1]);
  }
  return vals;
}

struct InnerSite {
  long x;
  long y;
  Vertex v;
};

std::vector<InnerSite> inner_sites(const Graph& outer, int radius) {
  std::vector<InnerSite> out;
  for (Vertex v = 0; v < outer.vertex_count(); ++v) {
    const auto c = outer.coord(v);
    if (c.norm_inf() <= radius) out.push_back({c.values[0], c.values[1], v});
  }
  return out;
}

// Symbolic and numeric Δu_1 on the inner box: max disagreement and the
// deviations from the two displayed special cases.
struct U1Comparison {
  double max_disagreement = 0.0;
  double origin_value = 0.0;
  double axis_deviation = 0.0;
};

U1Comparison compare_u1(const std::vector<InnerSite>& sites,
                        const std::vector<double>& lap_u1) {
  U1Comparison cmp;
  for (const auto& s : sites) {
    const double formula = laplacian_u1_formula(s.x, s.y);
    cmp.max_disagreement = std::max(cmp.max_disagreement, std::abs(formula - lap_u1[s.v]));
    if (s.x == 0 && s.y == 0) cmp.origin_value = lap_u1[s.v];
    if (s.x > 0 && s.y == 0) {
      cmp.axis_deviation = std::max(cmp.axis_deviation, std::abs(lap_u1[s.v] - (1.0 - static_cast<double>(s.x))));
    }
  }
  return cmp;
}

const Slope kUnitSlope{1, 1};

}  // namespace

ExperimentReport cone_certificate(const Slope& a, double m, int radius) {
  require(a.num > 0 && a.den > 0 && a.num <= a.den, "slope a must lie in (0, 1]");
  require(std::isfinite(m) && m > 0.0, "m must be positive and finite");
  const long k = (a.den + a.num - 1) / a.num;  // ⌈1/a⌉
  require(radius >= k + 2, "radius must be at least ceil(1/a) + 2");
  const auto start = Clock::now();

  const Graph outer = make_dirichlet_box(radius + 1, 2);
  const auto sites = inner_sites(outer, radius);
  const auto u1 = sample_on_box(outer, [](long x, long y) { return u_cone(kUnitSlope, x, y); });
  const auto lap_u1 = laplacian_apply(outer, u1);
  const auto v = sample_on_box(outer, [&](long x, long y) {
    return u_cone(kUnitSlope, x + k, y) - m * u_cone(a, x + k, y);
  });
  const auto lap_v = laplacian_apply(outer, v);

  const double condition = 2.0 * m * static_cast<double>(a.num * a.den) /
                           static_cast<double>(a.num * a.num + a.den * a.den);
  double off_set_max = -INFINITY, v_min = INFINITY, excess = 0.0;
  std::vector<std::pair<double, InnerSite>> deficits;
  json exceptional = json::array();
  for (const auto& s : sites) {
    const double sigma = (in_cone(a, s.x, s.y) ? m : 0.0) + lap_v[s.v];
    const bool special = s.y == 0 && s.x >= -k - 1 && s.x <= 0;
    if (special) {
      exceptional.push_back({{"x", s.x}, {"y", s.y}, {"sigma", sigma}});
    } else {
      off_set_max = std::max(off_set_max, sigma);
    }
    v_min = std::min(v_min, v[s.v]);
    if (sigma > 1.0) excess += sigma - 1.0;
    if (sigma < 1.0) deficits.push_back({1.0 - sigma, s});
  }
  // F: largest deficits first until they cover the excess.
  std::stable_sort(deficits.begin(), deficits.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
  double covered = 0.0;
  json f_set = json::array();
  for (const auto& [deficit, s] : deficits) {
    if (covered >= excess) break;
    covered += deficit;
    f_set.push_back({{"x", s.x}, {"y", s.y}, {"deficit", deficit}});
  }
  const auto cmp = compare_u1(sites, lap_u1);

  ExperimentReport r;
  r.id = "cone-certify";
  r.parameters = {{"a", a.to_string()}, {"m", m}, {"radius", radius}};
  r.data = {{"ceil_inverse_a", k},
            {"condition_2ma_over_1_plus_a2", condition},
            {"max_sigma_off_exceptional_set", off_set_max},
            {"min_v", v_min},
            {"total_excess", excess},
            {"deficit_on_F", covered},
            {"F", f_set},
            {"exceptional_set", exceptional},
            {"laplacian_u1_formula_vs_numeric", cmp.max_disagreement}};
  if (condition > 1.0) {
    // Above the threshold of the stabilization lemma: data only.
    r.exploratory = true;
  } else {
    r.checks.push_back(at_most("max_sigma_off_exceptional_set", off_set_max, 1.0 + 1e-9));
    r.checks.push_back(at_least("min_v", v_min, -1e-9));
    r.checks.push_back(at_most("excess_minus_deficit_on_F", excess - covered, 0.0));
    r.checks.push_back(at_most("laplacian_u1_formula_vs_numeric", cmp.max_disagreement, 0.0));
  }
  r.wall_seconds = seconds_since(start);
  return r;
}

ExperimentReport exp_s0_line(int radius) {
  require(radius >= 2, "radius must be >= 2");
  const auto start = Clock::now();
  const Graph outer = make_dirichlet_box(radius + 1, 2);
  const auto sites = inner_sites(outer, radius);
  const auto u1 = sample_on_box(outer, [](long x, long y) { return u_cone(kUnitSlope, x, y); });
  const auto lap_u1 = laplacian_apply(outer, u1);
  double max_sigma = -INFINITY;
  for (const auto& s : sites) {
    const double s0 = s.x > 0 && s.y == 0 ? static_cast<double>(s.x) : 0.0;
    max_sigma = std::max(max_sigma, s0 + lap_u1[s.v]);
  }
  const auto cmp = compare_u1(sites, lap_u1);

  ExperimentReport r;
  r.id = "s0-line";
  r.parameters = {{"radius", radius}};
  r.data = {{"max_sigma", max_sigma},
            {"laplacian_u1_origin", cmp.origin_value},
            {"laplacian_u1_axis_deviation", cmp.axis_deviation},
            {"laplacian_u1_formula_vs_numeric", cmp.max_disagreement}};
  r.checks.push_back(at_most("max_sigma", max_sigma, 1.0 + 1e-9));
  r.checks.push_back(at_most("max_sigma_distance_from_one", std::abs(max_sigma - 1.0), 1e-9));
  r.checks.push_back(within("laplacian_u1_origin", cmp.origin_value, 0.25, 0.25));
  r.checks.push_back(at_most("laplacian_u1_axis_deviation", cmp.axis_deviation, 0.0));
  r.checks.push_back(at_most("laplacian_u1_formula_vs_numeric", cmp.max_disagreement, 0.0));
  r.wall_seconds = seconds_since(start);
  return r;
}

ExperimentReport cone_explode(double alpha, std::span<const int> radii, double tol) {
  require(std::isfinite(alpha) && alpha > 0.0, "alpha must be > 0");
  require(radii.size() >= 2, "cone explosion needs at least two radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(radii[i] >= 1, "radii must be >= 1");
    require(i == 0 || radii[i] > radii[i - 1], "radii must be strictly increasing");
  }
  const auto start = Clock::now();
  auto box = std::make_shared<const Graph>(make_dirichlet_box(radii.back(), 2));
  std::vector<double> s(box->vertex_count(), 0.0);
  for (Vertex x = 0; x < s.size(); ++x) {
    const auto c = box->coord(x);
    if (in_cone(kUnitSlope, c.values[0], c.values[1])) s[x] = 1.0 + alpha;
  }
  NestedOptions opt;
  opt.engine = NestedEngine::ProjectedSor;
  opt.tol = tol;
  const auto reports = topple_nested(Configuration(box, std::move(s)), radii, opt);
  const Vertex probe = *box->vertex_at(VertexCoord{{1, 0}});

  std::vector<double> values, increments;
  json per_radius = json::array();
  std::size_t unconverged = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    values.push_back(reports[i].odometer[probe]);
    unconverged += reports[i].status == ToppleStatus::Stabilized ? 0 : 1;
    per_radius.push_back({{"radius", radii[i]}, {"u_1_0", values.back()}, {"sweeps", reports[i].sweeps},
                          {"status", to_string(reports[i].status)}, {"absorbed", reports[i].absorbed},
                          {"mass_drift", reports[i].mass_drift}});
    if (i > 0) increments.push_back(values[i] - values[i - 1]);
  }

  ExperimentReport r;
  r.id = "cone-explode";
  r.parameters = {{"alpha", alpha}, {"radii", std::vector<int>(radii.begin(), radii.end())}, {"tol", tol}};
  r.checks.push_back(at_most("unconverged_volumes", static_cast<double>(unconverged), 0.0));
  r.checks.push_back(above("min_increment", *std::min_element(increments.begin(), increments.end()), 0.0));
  json ratios = json::array();
  double min_ratio = INFINITY;
  for (std::size_t i = 1; i < increments.size(); ++i) {
    const double ratio = increments[i] / increments[i - 1];
    ratios.push_back(ratio);
    min_ratio = std::min(min_ratio, ratio);
  }
  if (increments.size() >= 2) r.checks.push_back(at_least("min_increment_ratio", min_ratio, 0.5));
  r.data = {{"per_radius", per_radius},
            {"increments", increments},
            {"increment_ratios", ratios},
            {"verdict", r.passed() ? "divergence-consistent" : "inconclusive"}};
  r.wall_seconds = seconds_since(start);
  return r;
}

}  // namespace sandlab
