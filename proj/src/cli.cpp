#include "sandlab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <CLI11.hpp>

#include "sandlab/experiments.hpp"
#include "sandlab/field.hpp"
#include "sandlab/green.hpp"
#include "sandlab/io.hpp"
#include "sandlab/parallel.hpp"
#include "sandlab/sandpile.hpp"

namespace sandlab::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::uint64_t seed = 1;
  std::string out_dir = "sandlab_out";
  bool csv = false;
};

struct CsvFile {
  std::string suffix;
  std::string text;
};

struct Outcome {
  ExperimentReport report;
  std::vector<CsvFile> csv;
};

using Action = std::function<Outcome(std::ostream&)>;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> parse_numbers(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const char* first = text.data() + pos;
    const char* last = text.data() + comma;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (first == last || ec != std::errc() || ptr != last || !std::isfinite(v)) {
      throw UsageError(flag + ": '" + std::string(first, last) + "' is not a finite number");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

VertexCoord parse_coord(const std::string& text, const std::string& flag, int d) {
  VertexCoord c;
  for (double v : parse_numbers(text, flag)) {
    if (v != std::floor(v)) throw UsageError(flag + ": coordinates must be integers");
    c.values.push_back(static_cast<long>(v));
  }
  if (c.dim() != static_cast<std::size_t>(d)) {
    throw UsageError(flag + ": expected " + std::to_string(d) + " coordinates");
  }
  return c;
}

std::shared_ptr<const Graph> graph_from(const std::vector<int>& torus, const std::vector<int>& box) {
  if (torus.empty() == box.empty()) throw UsageError("give exactly one of --torus N D or --box R D");
  if (!torus.empty()) {
    if (torus[0] < 3 || torus[1] < 1) throw UsageError("--torus: need N >= 3 and D >= 1");
    return std::make_shared<const Graph>(make_torus(torus[0], torus[1]));
  }
  if (box[0] < 1 || box[1] < 1) throw UsageError("--box: need R >= 1 and D >= 1");
  return std::make_shared<const Graph>(make_dirichlet_box(box[0], box[1]));
}

std::string tuple_text(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_short(v[i]);
  }
  return s + ")";
}

// Initial mass from --mass or from --law draws on the CLI stream; with
// `recentre`, shifted to total mass |V|.
std::vector<double> initial_mass(const Graph& g, const std::string& mass, const std::string& law,
                                 std::uint64_t seed, bool recentre) {
  if (mass.empty() == law.empty()) throw UsageError("give exactly one of --mass or --law");
  std::vector<double> s;
  if (!mass.empty()) {
    s = parse_numbers(mass, "--mass");
    if (s.size() != g.vertex_count()) {
      throw UsageError("--mass: expected " + std::to_string(g.vertex_count()) + " values, got " +
                       std::to_string(s.size()));
    }
  } else {
    const MassLaw m = MassLaw::parse(law);
    const CounterRng rng(seed, Stream::Cli);
    s.resize(g.vertex_count());
    for (Vertex x = 0; x < s.size(); ++x) s[x] = m.draw(rng, 0, x);
  }
  if (recentre) {
    const double shift = 1.0 - compensated_sum(s) / static_cast<double>(s.size());
    for (double& v : s) v += shift;
  }
  return s;
}

json summary(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {{"min", *lo}, {"max", *hi}, {"mean", compensated_sum(v) / static_cast<double>(v.size())}};
}

std::string csv_text(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream s;
  writer(s);
  return s.str();
}

void print_checks(std::ostream& out, const ExperimentReport& r) {
  for (const auto& c : r.checks) {
    out << (c.passed() ? "PASS  " : "FAIL  ") << c.name << " = " << format_short(c.value);
    if (c.lower) out << (c.strict ? "  (> " : "  (>= ") << format_short(*c.lower) << ")";
    if (c.upper) out << (c.strict ? "  (< " : "  (<= ") << format_short(*c.upper) << ")";
    out << '\n';
  }
  if (r.exploratory) out << "exploratory run: no acceptance checks\n";
  if (!r.checks.empty()) out << "result: " << (r.passed() ? "PASS" : "FAIL") << '\n';
}

json config_of(const CLI::App& sub) {
  json cfg{{"command", sub.get_name()}};
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt == sub.get_help_ptr()) continue;
    std::string name = opt->get_name();
    name.erase(0, name.find_first_not_of('-'));
    if (opt->get_expected_min() == 0) {
      cfg[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      cfg[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed");
  sub->add_option("--out", c.out_dir, "Output directory for reports");
  sub->add_flag("--csv", c.csv, "Also write CSV data next to the report");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Divisible sandpile and bi-Laplacian field experiments", "sandlab"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  Common common;
  Action action;

  // Option storage shared by subcommands; only one subcommand runs.
  std::vector<int> torus, box;
  std::string mass, law, mode = "averaged", point, method = "spectral";
  std::vector<std::string> lags;
  int n = 0, d = 0, radius = 0;
  std::size_t trials = 0, bootstrap = 100, t_max = 50, max_sweeps = 1'000'000;
  double tol = 1e-10, beta = 1.0, m = 1.25, alpha = 1.0, r_arg = -1.0;
  bool critical = false, check_routes = false, s0_line = false;
  std::vector<long> n_list;
  std::vector<std::size_t> trial_list;
  std::vector<int> radii;
  std::string slope = "1/2", clt_law = "two_point:1,1";

  auto graph_opts = [&](CLI::App* sub) {
    sub->add_option("--torus", torus, "Torus Z_N^D as N D")->expected(2);
    sub->add_option("--box", box, "Box [-R, R]^D killed on exit, as R D")->expected(2);
  };

  {
    auto* sub = app.add_subcommand("stabilize", "Parallel toppling of one configuration");
    graph_opts(sub);
    sub->add_option("--mass", mass, "Comma-separated initial mass, one value per vertex");
    sub->add_option("--law", law, "Draw the initial mass from gaussian:M,SD | two_point:M,S | uniform:LO,HI");
    sub->add_flag("--critical", critical, "Recentre the mass to total |V|");
    sub->add_option("--tol", tol, "Termination tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-sweeps", max_sweeps, "Sweep cap")->check(CLI::PositiveNumber);
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream& o) {
        auto g = graph_from(torus, box);
        const Configuration s(g, initial_mass(*g, mass, law, common.seed, critical));
        ToppleOptions opt;
        opt.tol = tol;
        opt.max_sweeps = max_sweeps;
        const auto start = Clock::now();
        const auto rep = topple_parallel(s, opt);
        Outcome res;
        auto& r = res.report;
        r.id = "stabilize";
        r.wall_seconds = elapsed(start);
        r.seeds = {{"master", common.seed}, {"streams", {{"cli", Stream::Cli}}}};
        const double scale = std::max(std::abs(s.total_mass()), 1.0);
        r.data = {{"graph", g->describe()},
                  {"status", to_string(rep.status)},
                  {"sweeps", rep.sweeps},
                  {"mass_drift", rep.mass_drift},
                  {"max_sweep_drift", rep.max_sweep_drift},
                  {"absorbed", rep.absorbed},
                  {"max_residual_excess", rep.max_residual_excess},
                  {"odometer_summary", summary(rep.odometer)},
                  {"final_summary", summary(rep.final_config.values)}};
        if (g->vertex_count() <= 4096) {
          r.data["odometer"] = rep.odometer;
          r.data["final_configuration"] = rep.final_config.values;
        }
        r.checks.push_back({"max_relative_sweep_drift", std::max(rep.mass_drift, rep.max_sweep_drift) / scale,
                            std::nullopt, 1e-9, false});
        o << "status: " << to_string(rep.status) << "\nsweeps: " << rep.sweeps << '\n';
        if (g->vertex_count() <= 64) {
          o << "u = " << tuple_text(rep.odometer) << '\n';
          o << "s_final = " << tuple_text(rep.final_config.values) << '\n';
        } else {
          o << "u(o) = " << format_short(rep.odometer[g->is_lattice() ? g->origin() : 0]) << '\n';
        }
        res.csv.push_back({"odometer", csv_text([&](std::ostream& f) { write_field_csv(f, *g, rep.odometer); })});
        res.csv.push_back({"final", csv_text([&](std::ostream& f) { write_field_csv(f, *g, rep.final_config.values); })});
        return res;
      };
    });
  }

  {
    auto* sub = app.add_subcommand("odometer-exact", "Exact odometer of a total-mass-|V| configuration");
    sub->add_option("--torus", torus, "Torus Z_N^D as N D")->expected(2)->required();
    sub->add_option("--mass", mass, "Comma-separated initial mass summing to |V|");
    sub->add_option("--law", law, "Draw the mass from a law, recentred to total |V|");
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream& o) {
        auto g = graph_from(torus, box);
        const Configuration s(g, initial_mass(*g, mass, law, common.seed, !law.empty()));
        const auto start = Clock::now();
        const auto ex = solve_odometer_exact(s);
        Outcome res;
        auto& r = res.report;
        r.id = "odometer-exact";
        r.wall_seconds = elapsed(start);
        r.seeds = {{"master", common.seed}, {"streams", {{"cli", Stream::Cli}}}};
        const double u_min = *std::min_element(ex.odometer.begin(), ex.odometer.end());
        r.data = {{"graph", g->describe()}, {"residual", ex.residual}, {"min_odometer", u_min},
                  {"odometer_summary", summary(ex.odometer)}};
        if (g->vertex_count() <= 4096) r.data["odometer"] = ex.odometer;
        r.checks.push_back({"residual", ex.residual, std::nullopt, 1e-8, false});
        r.checks.push_back({"abs_min_odometer", std::abs(u_min), std::nullopt, 0.0, false});
        o << "residual: " << format_short(ex.residual) << '\n';
        if (g->vertex_count() <= 64) o << "u = " << tuple_text(ex.odometer) << '\n';
        else o << "u(o) = " << format_short(ex.odometer[g->origin()]) << '\n';
        res.csv.push_back({"odometer", csv_text([&](std::ostream& f) { write_field_csv(f, *g, ex.odometer); })});
        return res;
      };
    });
  }

  {
    auto* sub = app.add_subcommand("green", "Green function row from the origin");
    graph_opts(sub);
    sub->add_option("--mode", mode, "Torus table: averaged or killed")
        ->check(CLI::IsMember({"averaged", "killed"}));
    sub->add_option("--z", point, "Killing site coordinates for --mode killed (default: far corner)");
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream& o) {
        auto g = graph_from(torus, box);
        const auto start = Clock::now();
        Outcome res;
        auto& r = res.report;
        r.id = "green";
        std::vector<double> row;
        VertexCoord origin;
        origin.values.assign(static_cast<std::size_t>(g->dim()), 0);
        if (g->has_absorption()) {
          const auto col = green_dirichlet_box(g->radius(), g->dim());
          row = col.values;
          r.data["nu"] = nu_n(col);
          o << "nu = " << format_short(nu_n(col)) << '\n';
        } else {
          GreenTable t;
          if (mode == "killed") {
            VertexCoord z;
            z.values.assign(static_cast<std::size_t>(g->dim()), g->side() / 2);
            if (!point.empty()) z = parse_coord(point, "--z", g->dim());
            t = green_killed(g, *g->vertex_at(z));
            r.data["killed_at"] = g->coord(t.killed_at).values;
          } else {
            t = green_averaged(g);
            const auto k = averaged_column_constant(t);
            r.data["k_constant"] = k.front();
          }
          row.resize(g->vertex_count());
          for (Vertex y = 0; y < row.size(); ++y) row[y] = t(g->origin(), y);
        }
        r.wall_seconds = elapsed(start);
        r.data["graph"] = g->describe();
        r.data["row_from_origin"] = row;
        o << "g(o, o) = " << format_short(row[g->origin()]) << '\n';
        std::vector<LagValue> lagged;
        for (Vertex y = 0; y < row.size(); ++y) lagged.push_back({g->coord(y), row[y]});
        res.csv.push_back({"row", csv_text([&](std::ostream& f) { write_lag_csv(f, lagged); })});
        return res;
      };
    });
  }

  {
    auto* sub = app.add_subcommand("variogram", "E(eta_0 - eta_x)^2 of the bi-Laplacian field on Z_n^d");
    sub->add_option("--n", n, "Torus side")->required()->check(CLI::Range(3, 1 << 20));
    sub->add_option("--d", d, "Dimension")->required()->check(CLI::Range(1, 64));
    sub->add_option("--lag", lags, "Lag coordinates, e.g. 2 or 1,0 (repeatable; default: every lag)");
    sub->add_flag("--check", check_routes, "Compare with the covariance-matrix route");
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream& o) {
        const auto start = Clock::now();
        std::vector<VertexCoord> xs;
        for (const auto& l : lags) xs.push_back(parse_coord(l, "--lag", d));
        std::shared_ptr<const Graph> g;
        if (xs.empty() || check_routes) {
          if (!lattice_size(n, d, kDenseGreenCap)) {
            throw UsageError("--n/--d: listing every lag or --check needs n^d <= " + std::to_string(kDenseGreenCap));
          }
          g = std::make_shared<const Graph>(make_torus(n, d));
        }
        if (xs.empty()) {
          for (Vertex v = 0; v < g->vertex_count(); ++v) xs.push_back(g->coord(v));
        }
        std::optional<CovarianceModel> cov;
        if (check_routes) cov = covariance(green_averaged(g));
        Outcome res;
        auto& r = res.report;
        r.id = "variogram";
        std::vector<LagValue> rows;
        json table = json::array();
        double worst = 0.0;
        for (const auto& x : xs) {
          const double v = variogram_fourier(n, d, x);
          rows.push_back({x, v});
          json entry{{"lag", x.values}, {"norm2", x.norm_2()}, {"value", v}};
          if (cov) {
            const double c = variogram_covariance(*cov, g->origin(), *g->vertex_at(x));
            entry["covariance_route"] = c;
            worst = std::max(worst, std::abs(c - v));
          }
          table.push_back(entry);
          if (lags.empty()) {
            for (long c : x.values) o << c << ' ';
          }
          o << format_short(v) << '\n';
        }
        r.data = {{"lags", table}};
        if (cov) r.checks.push_back({"max_route_difference", worst, std::nullopt, 1e-8, false});
        r.wall_seconds = elapsed(start);
        res.csv.push_back({"lags", csv_text([&](std::ostream& f) { write_lag_csv(f, rows); })});
        return res;
      };
    });
  }

  {
    auto* sub = app.add_subcommand("sample-field", "Min-shifted field samples and their expected maximum");
    sub->add_option("--n", n, "Torus side")->required()->check(CLI::Range(3, 1 << 20));
    sub->add_option("--d", d, "Dimension")->required()->check(CLI::Range(1, 64));
    sub->add_option("--trials", trials, "Number of samples")->required()->check(CLI::Range(2, 100'000'000));
    sub->add_option("--method", method, "spectral or cholesky")->check(CLI::IsMember({"spectral", "cholesky"}));
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream& o) {
        const auto start = Clock::now();
        std::function<FieldSample(std::uint64_t)> sampler;
        std::shared_ptr<const CholeskySampler> chol;
        std::shared_ptr<const SpectralSampler> spec;
        const CounterRng rng(common.seed, method == "spectral" ? Stream::FieldSpectral : Stream::FieldCholesky);
        if (method == "spectral") {
          spec = std::make_shared<const SpectralSampler>(n, d);
          sampler = [&](std::uint64_t t) { return spec->sample(rng, t); };
        } else {
          if (!lattice_size(n, d, kDenseCovarianceCap)) {
            throw UsageError("--method cholesky needs n^d <= " + std::to_string(kDenseCovarianceCap));
          }
          chol = std::make_shared<const CholeskySampler>(
              covariance(green_averaged(std::make_shared<const Graph>(make_torus(n, d)))));
          sampler = [&](std::uint64_t t) { return min_shift(chol->sample(rng, t)); };
        }
        std::vector<double> maxima(trials);
        parallel_for(trials, [&](std::size_t t) {
          const auto f = sampler(t);
          maxima[t] = *std::max_element(f.values.begin(), f.values.end());
        });
        const auto est = mean_with_error(maxima);
        Outcome res;
        auto& r = res.report;
        r.id = "sample-field";
        r.wall_seconds = elapsed(start);
        r.seeds = {{"master", common.seed}, {"streams", {{"field", rng.stream()}}}};
        r.data = {{"expected_max", est.mean}, {"std_error", est.std_error}, {"trials", trials},
                  {"method", method}, {"phi", phi_d(d, n)}};
        o << "expected max = " << format_short(est.mean) << " +- " << format_short(est.std_error) << '\n';
        res.csv.push_back({"maxima", csv_text([&](std::ostream& f) { write_trial_csv(f, maxima); })});
        if (lattice_size(n, d, kDefaultVertexBudget)) {
          const auto first = sampler(0);
          const Graph g = make_torus(n, d);
          res.csv.push_back({"sample0", csv_text([&](std::ostream& f) { write_field_csv(f, g, first.values); })});
        }
        return res;
      };
    });
  }

  {
    auto* sub = app.add_subcommand("equality-in-law", "Exact odometers against min-shifted field samples");
    sub->add_option("--n", n, "Torus side")->required()->check(CLI::Range(3, 4096));
    sub->add_option("--d", d, "Dimension")->required()->check(CLI::Range(1, 12));
    sub->add_option("--trials", trials, "Samples per pipeline")->required()->check(CLI::Range(2, 10'000'000));
    sub->add_option("--bootstrap", bootstrap, "Bootstrap resamples")->check(CLI::Range(2, 100'000));
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream&) { return Outcome{exp_equality_in_law(n, d, trials, common.seed, bootstrap), {}}; };
    });
  }

  {
    auto* sub = app.add_subcommand("scaling", "E u(o) against n and the phi_d rate");
    sub->add_option("--d", d, "Dimension")->required()->check(CLI::Range(1, 64));
    sub->add_option("--n", n_list, "Torus sides, increasing")->required()->delimiter(',');
    sub->add_option("--trials", trial_list, "Trials: one value, or one per size")->required()->delimiter(',');
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream& o) {
        ScalingTable tab;
        Outcome res{exp_scaling(d, n_list, trial_list, common.seed, &tab), {}};
        for (const auto& row : tab.rows) {
          o << "n = " << row.n << "  E u(o) = " << format_short(row.mean) << " +- " << format_short(row.std_error)
            << "  ratio to phi = " << format_short(row.mean / row.phi) << '\n';
        }
        o << "slope = " << format_short(tab.fit.slope) << " +- " << format_short(tab.fit.slope_ci95) << '\n';
        return res;
      };
    });
  }

  {
    auto* sub = app.add_subcommand("clt", "Green-weighted sums of i.i.d. mass against a normal law");
    sub->add_option("--d", d, "Dimension")->required()->check(CLI::Range(1, 64));
    sub->add_option("--radii", radii, "Box radii, increasing")->required()->delimiter(',');
    sub->add_option("--trials", trials, "Trials per radius")->required()->check(CLI::Range(2, 100'000'000));
    sub->add_option("--law", clt_law, "Mass law with mean 1");
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream&) {
        return Outcome{exp_critical_clt(d, radii, trials, MassLaw::parse(clt_law), common.seed), {}};
      };
    });
  }

  {
    auto* sub = app.add_subcommand("dirac", "Toppling of 1 + beta delta_o against random-walk probabilities");
    sub->add_option("--n", n, "Torus side")->required()->check(CLI::Range(3, 4096));
    sub->add_option("--d", d, "Dimension")->required()->check(CLI::Range(1, 12));
    sub->add_option("--beta", beta, "Extra mass at the origin")->check(CLI::NonNegativeNumber);
    sub->add_option("--t-max", t_max, "Number of sweeps")->check(CLI::Range(1, 1'000'000));
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream&) { return Outcome{exp_dirac_identity(n, d, beta, t_max), {}}; };
    });
  }

  {
    auto* sub = app.add_subcommand("density", "Mass at the origin before and after stabilization");
    graph_opts(sub);
    sub->add_option("--law", law, "Mass law")->required();
    sub->add_option("--trials", trials, "Trials")->required()->check(CLI::Range(2, 100'000'000));
    sub->add_flag("--critical", critical, "Recentre each draw to total |V|");
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream&) {
        auto g = graph_from(torus, box);
        return Outcome{exp_density_conservation(g, MassLaw::parse(law), trials, common.seed, critical), {}};
      };
    });
  }

  {
    auto* sub = app.add_subcommand("cone-certify", "Stabilization certificate for m times a cone indicator");
    sub->add_option("--a", slope, "Cone slope as p/q or a decimal in (0, 1]");
    sub->add_option("--m", m, "Mass density in the cone")->check(CLI::PositiveNumber);
    radius = 100;
    sub->add_option("--radius", radius, "Half-width of the checked box")->check(CLI::Range(2, 100'000));
    sub->add_flag("--s0-line", s0_line, "Check the half-line configuration s0 instead");
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream&) {
        if (s0_line) return Outcome{exp_s0_line(radius), {}};
        return Outcome{cone_certificate(Slope::parse(slope), m, radius), {}};
      };
    });
  }

  {
    auto* sub = app.add_subcommand("cone-explode", "Nested-volume odometer growth for (1 + alpha) on a cone");
    sub->add_option("--alpha", alpha, "Excess density")->check(CLI::PositiveNumber);
    sub->add_option("--radii", radii, "Volume radii, increasing")->required()->delimiter(',');
    sub->add_option("--tol", tol, "Per-volume tolerance")->check(CLI::PositiveNumber);
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream&) { return Outcome{cone_explode(alpha, radii, tol), {}}; };
    });
  }

  {
    auto* sub = app.add_subcommand("phi", "Rates phi_d(n) and psi_d(n, r)");
    sub->add_option("--d", d, "Dimension")->required()->check(CLI::Range(1, 1 << 20));
    sub->add_option("--n", n, "Size")->required()->check(CLI::Range(2, 1 << 30));
    sub->add_option("--r", r_arg, "Distance for psi, 0 <= r <= n")->check(CLI::NonNegativeNumber);
    add_common(sub, common);
    sub->callback([&] {
      action = [&](std::ostream& o) {
        if (r_arg > n) throw UsageError("--r: must not exceed --n");
        const auto pp = phi_psi_eval(d, n, std::max(r_arg, 0.0));
        Outcome res;
        res.report.id = "phi";
        res.report.data = {{"phi", pp.phi}};
        o << format_short(pp.phi) << '\n';
        if (r_arg >= 0.0) {
          res.report.data["psi"] = pp.psi;
          o << format_short(pp.psi) << '\n';
        }
        return res;
      };
    });
  }

  std::vector<const char*> argv{"sandlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  Outcome result;
  try {
    result = action(out);
  } catch (const std::exception& e) {
    err << sub->get_name() << ": " << e.what() << '\n';
    return kExitUsage;
  }
  print_checks(out, result.report);

  try {
    const std::filesystem::path dir(common.out_dir);
    const auto doc = report_document(config_of(*sub), result.report);
    write_text_file(report_path(dir, result.report.id, common.seed, "json"), dump_json(doc));
    if (common.csv) {
      for (const auto& f : result.csv) {
        write_text_file(report_path(dir, result.report.id + "_" + f.suffix, common.seed, "csv"), f.text);
      }
    }
  } catch (const std::exception& e) {
    err << sub->get_name() << ": " << e.what() << '\n';
    return kExitUsage;
  }
  return result.report.passed() ? kExitPass : kExitFail;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sandlab::cli
