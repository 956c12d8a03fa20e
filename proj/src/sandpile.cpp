#include "sandlab/sandpile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "sandlab/spectral.hpp"
#include "sandlab/stats.hpp"

namespace sandlab {

Configuration::Configuration(std::shared_ptr<const Graph> g, std::vector<double> v)
    : graph(std::move(g)), values(std::move(v)) {
  if (!graph) throw std::invalid_argument("configuration needs a graph");
  if (values.size() != graph->vertex_count()) {
    throw std::invalid_argument("configuration has " + std::to_string(values.size()) +
                                " values for " + std::to_string(graph->vertex_count()) + " vertices");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw std::invalid_argument("non-finite mass at vertex " + std::to_string(i));
    }
  }
}

double Configuration::total_mass() const { return compensated_sum(values); }

const char* to_string(ToppleStatus status) {
  return status == ToppleStatus::Stabilized ? "Stabilized" : "MaxSweepsReached";
}

namespace {

struct ToppleState {
  std::vector<double> s;
  std::vector<double> u;
  CompensatedSum absorbed;
};

double excess_over(const std::vector<double>& s, const std::vector<char>* active) {
  double e = 0.0;
  for (std::size_t x = 0; x < s.size(); ++x) {
    if (active && !(*active)[x]) continue;
    if (s[x] > 1.0) e += s[x] - 1.0;
  }
  return e;
}

double max_excess_over(const std::vector<double>& s, const std::vector<char>* active) {
  double m = 0.0;
  for (std::size_t x = 0; x < s.size(); ++x) {
    if (active && !(*active)[x]) continue;
    m = std::max(m, s[x] - 1.0);
  }
  return m;
}

struct SweepOutcome {
  std::size_t sweeps = 0;
  ToppleStatus status = ToppleStatus::MaxSweepsReached;
  std::vector<double> excess_history;
  double max_sweep_drift = 0.0;
};

// Parallel toppling of the sites in `active` (all sites when null) until
// their total excess drops below tol * |active|.
SweepOutcome parallel_sweeps(const Graph& g, ToppleState& st, const std::vector<char>* active,
                             double tol, std::size_t max_sweeps, TopplingTrace* trace) {
  const std::size_t nv = g.vertex_count();
  std::size_t active_count = nv;
  if (active) active_count = static_cast<std::size_t>(std::count(active->begin(), active->end(), 1));
  const double threshold = tol * static_cast<double>(active_count);

  SweepOutcome out;
  std::vector<double> emit(nv, 0.0);
  const double start_mass = compensated_sum(st.s) + st.absorbed.value();
  double excess = excess_over(st.s, active);
  out.excess_history.push_back(excess);
  // Converged once the total excess is below threshold and no single site
  // exceeds 1 + tol, so a stabilized report also passes is_stable(tol).
  auto converged = [&] { return excess < threshold && max_excess_over(st.s, active) <= tol; };
  while (!converged() && out.sweeps < max_sweeps) {
    double absorbed = 0.0;
    for (Vertex x = 0; x < nv; ++x) {
      const bool may_topple = !active || (*active)[x];
      emit[x] = may_topple && st.s[x] > 1.0 ? (st.s[x] - 1.0) / g.degree(x) : 0.0;
      if (emit[x] > 0.0) absorbed += g.absorbing_stubs(x) * emit[x];
    }
    for (Vertex x = 0; x < nv; ++x) {
      double inflow = 0.0;
      for (Vertex y : g.neighbors(x)) inflow += emit[y];
      // A toppling site keeps exactly mass 1.
      st.s[x] = (emit[x] > 0.0 ? 1.0 : st.s[x]) + inflow;
      st.u[x] += emit[x];
    }
    st.absorbed.add(absorbed);
    if (trace) trace->increments.push_back(emit);
    ++out.sweeps;
    out.max_sweep_drift = std::max(
        out.max_sweep_drift, std::abs(compensated_sum(st.s) + st.absorbed.value() - start_mass));
    excess = excess_over(st.s, active);
    out.excess_history.push_back(excess);
  }
  out.status = converged() ? ToppleStatus::Stabilized : ToppleStatus::MaxSweepsReached;
  return out;
}

// Natural residual of the volume's complementarity problem:
// max_x |min(deg(x) u(x), 1 - s(x))| over active sites.
double complementarity_residual(const Graph& g, const ToppleState& st,
                                const std::vector<char>& active) {
  double r = 0.0;
  for (Vertex x = 0; x < st.s.size(); ++x) {
    if (!active[x]) continue;
    r = std::max(r, std::abs(std::min(g.degree(x) * st.u[x], 1.0 - st.s[x])));
  }
  return r;
}

// Projected SOR for: u >= 0 on the volume, s0 + Δu <= 1 there, equality
// where u > 0. Keeps st.s = s0 + Δu up to date incrementally.
SweepOutcome projected_sor(const Graph& g, ToppleState& st, const std::vector<char>& active,
                           double tol, std::size_t max_sweeps, double omega) {
  SweepOutcome out;
  double residual = complementarity_residual(g, st, active);
  out.excess_history.push_back(excess_over(st.s, &active));
  while (residual > tol && out.sweeps < max_sweeps) {
    for (Vertex x = 0; x < st.s.size(); ++x) {
      if (!active[x]) continue;
      const int deg = g.degree(x);
      double delta = omega * (st.s[x] - 1.0) / deg;
      delta = std::max(delta, -st.u[x]);
      if (delta == 0.0) continue;
      st.u[x] += delta;
      st.s[x] -= deg * delta;
      for (Vertex y : g.neighbors(x)) st.s[y] += delta;
    }
    ++out.sweeps;
    residual = complementarity_residual(g, st, active);
    out.excess_history.push_back(excess_over(st.s, &active));
  }
  // Absorption follows from the odometer: each stub carries u(x).
  st.absorbed = CompensatedSum{};
  for (Vertex x = 0; x < st.s.size(); ++x) st.absorbed.add(g.absorbing_stubs(x) * st.u[x]);
  out.status = residual <= tol ? ToppleStatus::Stabilized : ToppleStatus::MaxSweepsReached;
  return out;
}

OdometerReport make_report(const Configuration& initial, const ToppleState& st,
                           SweepOutcome&& outcome, const std::vector<char>* active) {
  OdometerReport r;
  r.odometer = st.u;
  r.final_config = Configuration(initial.graph, st.s);
  r.sweeps = outcome.sweeps;
  r.status = outcome.status;
  r.max_residual_excess = max_excess_over(st.s, active);
  r.absorbed = st.absorbed.value();
  r.mass_drift = std::abs(compensated_sum(st.s) + r.absorbed - initial.total_mass());
  r.excess_history = std::move(outcome.excess_history);
  r.max_sweep_drift = outcome.max_sweep_drift;
  return r;
}

void check_options(double tol, std::size_t max_sweeps) {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
}

}  // namespace

OdometerReport topple_parallel(const Configuration& s, const ToppleOptions& options) {
  check_options(options.tol, options.max_sweeps);
  if (!s.graph) throw std::invalid_argument("configuration has no graph");
  const Graph& g = *s.graph;
  ToppleState st{s.values, std::vector<double>(g.vertex_count(), 0.0), {}};
  std::optional<TopplingTrace> trace;
  if (options.record) trace = TopplingTrace{s.graph, s.values, {}};
  auto outcome = parallel_sweeps(g, st, nullptr, options.tol, options.max_sweeps,
                                 trace ? &*trace : nullptr);
  OdometerReport r = make_report(s, st, std::move(outcome), nullptr);
  r.trace = std::move(trace);
  return r;
}

std::vector<OdometerReport> topple_nested(const Configuration& s, std::span<const int> radii,
                                          const NestedOptions& options) {
  check_options(options.tol, options.max_sweeps);
  if (radii.empty()) throw std::invalid_argument("radii schedule is empty");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (radii[k] < 0) throw std::invalid_argument("radii must be nonnegative");
    if (k > 0 && radii[k] <= radii[k - 1]) {
      throw std::invalid_argument("radii must be strictly increasing");
    }
  }
  if (!s.graph || !s.graph->is_lattice()) {
    throw std::invalid_argument("nested toppling needs a torus or box configuration");
  }
  const Graph& g = *s.graph;
  const std::size_t nv = g.vertex_count();
  std::vector<long> sup_norm(nv);
  for (Vertex x = 0; x < nv; ++x) sup_norm[x] = g.coord(x).norm_inf();

  ToppleState st{s.values, std::vector<double>(nv, 0.0), {}};
  std::vector<OdometerReport> reports;
  reports.reserve(radii.size());
  std::vector<char> active(nv, 0);
  for (int radius : radii) {
    for (Vertex x = 0; x < nv; ++x) active[x] = sup_norm[x] <= radius ? 1 : 0;
    SweepOutcome outcome;
    if (options.engine == NestedEngine::Parallel) {
      outcome = parallel_sweeps(g, st, &active, options.tol, options.max_sweeps, nullptr);
    } else {
      double omega = options.relaxation;
      if (omega == 0.0) {
        const long side = g.kind() == GraphKind::Torus
                              ? std::min<long>(2L * radius + 1, g.side())
                              : std::min<long>(2L * radius + 1, 2L * g.radius() + 1);
        omega = 2.0 / (1.0 + std::sin(std::numbers::pi / static_cast<double>(side + 1)));
      }
      if (!(omega > 0.0 && omega < 2.0)) throw std::invalid_argument("relaxation must lie in (0, 2)");
      outcome = projected_sor(g, st, active, options.tol, options.max_sweeps, omega);
    }
    reports.push_back(make_report(s, st, std::move(outcome), &active));
  }
  return reports;
}

TwoStageReport topple_two_stage(const Configuration& s1, const Configuration& s2,
                                const ToppleOptions& options) {
  if (!s1.graph || s1.graph != s2.graph) {
    throw std::invalid_argument("two-stage toppling needs both pieces on the same graph");
  }
  for (std::size_t x = 0; x < s2.size(); ++x) {
    if (s2.values[x] < 0.0) {
      throw std::invalid_argument("second stage mass is negative at vertex " + std::to_string(x));
    }
  }
  TwoStageReport out;
  out.stage1 = topple_parallel(s1, options);
  std::vector<double> carried = out.stage1.final_config.values;
  for (std::size_t x = 0; x < carried.size(); ++x) carried[x] += s2.values[x];
  out.stage2 = topple_parallel(Configuration(s1.graph, std::move(carried)), options);

  std::vector<double> total(s1.size());
  for (std::size_t x = 0; x < total.size(); ++x) total[x] = s1.values[x] + s2.values[x];
  const Configuration whole(s1.graph, std::move(total));

  OdometerReport& c = out.combined;
  c.odometer = out.stage1.odometer;
  for (std::size_t x = 0; x < c.odometer.size(); ++x) c.odometer[x] += out.stage2.odometer[x];
  c.final_config = out.stage2.final_config;
  c.sweeps = out.stage1.sweeps + out.stage2.sweeps;
  c.status = out.stage2.status;
  c.max_residual_excess = out.stage2.max_residual_excess;
  c.absorbed = out.stage1.absorbed + out.stage2.absorbed;
  c.mass_drift = std::abs(c.final_config.total_mass() + c.absorbed - whole.total_mass());
  c.excess_history = out.stage2.excess_history;
  return out;
}

namespace {

double exact_residual(const Configuration& s, const std::vector<double>& u) {
  const auto lap = laplacian_apply(*s.graph, u);
  double r = 0.0;
  for (std::size_t x = 0; x < u.size(); ++x) r = std::max(r, std::abs(s.values[x] + lap[x] - 1.0));
  return r;
}

// Pins u(0) = 0 and solves the reduced system -Δ u = s - 1 on the remaining
// vertices, which is symmetric positive definite for a connected graph.
std::vector<double> pinned_solve(const Configuration& s, ExactOdometer::Method& method) {
  const Graph& g = *s.graph;
  const auto nv = static_cast<Eigen::Index>(g.vertex_count());
  std::vector<Eigen::Triplet<double>> entries;
  for (Vertex x = 1; x < g.vertex_count(); ++x) {
    entries.emplace_back(x - 1, x - 1, static_cast<double>(g.degree(x)));
    for (Vertex y : g.neighbors(x)) {
      if (y != 0) entries.emplace_back(x - 1, y - 1, -1.0);
    }
  }
  Eigen::SparseMatrix<double> a(nv - 1, nv - 1);
  a.setFromTriplets(entries.begin(), entries.end());
  Eigen::VectorXd rhs(nv - 1);
  for (Eigen::Index i = 0; i < nv - 1; ++i) rhs[i] = s.values[static_cast<std::size_t>(i + 1)] - 1.0;

  Eigen::VectorXd sol;
  if (g.vertex_count() <= 10'000) {
    method = ExactOdometer::Method::SparseCholesky;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw SolveError("pinned Laplacian factorization failed");
    sol = ldlt.solve(rhs);
  } else {
    method = ExactOdometer::Method::ConjugateGradient;
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(a);
    cg.setTolerance(1e-14);
    cg.setMaxIterations(50 * nv);
    sol = cg.solve(rhs);
    if (cg.info() != Eigen::Success) throw SolveError("conjugate gradient did not converge");
  }
  std::vector<double> u(g.vertex_count(), 0.0);
  for (Eigen::Index i = 0; i < nv - 1; ++i) u[static_cast<std::size_t>(i + 1)] = sol[i];
  return u;
}

}  // namespace

ExactOdometer solve_odometer_exact(const Configuration& s, const ExactOptions& options) {
  if (!s.graph) throw std::invalid_argument("configuration has no graph");
  const Graph& g = *s.graph;
  if (g.has_absorption()) {
    throw std::invalid_argument("exact odometer needs a graph without absorbing boundary");
  }
  const double nv = static_cast<double>(g.vertex_count());
  const double mass = s.total_mass();
  if (std::abs(mass - nv) > options.mass_tol * nv) {
    throw std::invalid_argument("total mass " + std::to_string(mass) + " differs from |V| = " +
                                std::to_string(g.vertex_count()) +
                                "; the exact odometer needs critical mass");
  }
  ExactOdometer out;
  if (g.kind() == GraphKind::Torus) {
    out.method = ExactOdometer::Method::Spectral;
    std::vector<double> rhs(s.values.size());
    for (std::size_t x = 0; x < rhs.size(); ++x) rhs[x] = 1.0 - s.values[x];
    TorusPoisson poisson(g.side(), g.dim());
    out.odometer = poisson.solve(rhs);
  } else {
    out.odometer = pinned_solve(s, out.method);
  }
  const double lo = *std::min_element(out.odometer.begin(), out.odometer.end());
  for (double& v : out.odometer) v -= lo;
  out.residual = exact_residual(s, out.odometer);
  if (!(out.residual <= options.residual_limit)) {
    throw SolveError("exact odometer residual " + std::to_string(out.residual) +
                     " exceeds the limit");
  }
  return out;
}

bool is_stable(const Configuration& s, double tol) {
  return std::all_of(s.values.begin(), s.values.end(), [tol](double v) { return v <= 1.0 + tol; });
}

LegalityResult check_legal(const TopplingTrace& trace, double eps) {
  if (!trace.graph) throw std::invalid_argument("trace has no graph");
  const Graph& g = *trace.graph;
  std::vector<double> u(g.vertex_count(), 0.0);
  for (std::size_t t = 0; t < trace.increments.size(); ++t) {
    const auto lap = laplacian_apply(g, u);
    const auto& inc = trace.increments[t];
    for (Vertex x = 0; x < g.vertex_count(); ++x) {
      const double current = trace.initial[x] + lap[x];
      const double allowed = std::max(current - 1.0, 0.0) / g.degree(x);
      if (inc[x] < -eps || inc[x] > allowed + eps) {
        return {false, t + 1, x, inc[x], allowed};
      }
    }
    for (Vertex x = 0; x < g.vertex_count(); ++x) u[x] += inc[x];
  }
  return {};
}

}  // namespace sandlab
