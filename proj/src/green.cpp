#include "sandlab/green.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/IterativeLinearSolvers>

#include "sandlab/sandpile.hpp"
#include "sandlab/spectral.hpp"
#include "sandlab/stats.hpp"

namespace sandlab {

namespace {

void require_dense(const Graph& g) {
  if (g.vertex_count() > kDenseGreenCap) {
    throw std::invalid_argument("dense Green table limited to " + std::to_string(kDenseGreenCap) +
                                " vertices, graph has " + std::to_string(g.vertex_count()));
  }
}

Eigen::MatrixXd dense_negative_laplacian(const Graph& g) {
  const auto nv = static_cast<Eigen::Index>(g.vertex_count());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(nv, nv);
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    const auto i = static_cast<Eigen::Index>(x);
    l(i, i) = g.degree(x);
    for (Vertex y : g.neighbors(x)) l(i, static_cast<Eigen::Index>(y)) -= 1.0;
  }
  return l;
}

}  // namespace

GreenTable green_killed(std::shared_ptr<const Graph> g, Vertex z) {
  if (!g) throw std::invalid_argument("Green table needs a graph");
  require_dense(*g);
  if (z >= g->vertex_count()) throw std::invalid_argument("killing vertex out of range");
  const auto nv = static_cast<Eigen::Index>(g->vertex_count());
  const auto zi = static_cast<Eigen::Index>(z);

  // Grounded Laplacian: -Δ with row and column z removed.
  const Eigen::MatrixXd full = dense_negative_laplacian(*g);
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(nv - 1));
  for (Eigen::Index i = 0; i < nv; ++i) {
    if (i != zi) keep.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd grounded(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) grounded(a, b) = full(keep[a], keep[b]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(grounded);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("graph is not connected");
  const Eigen::MatrixXd inverse = llt.solve(Eigen::MatrixXd::Identity(m, m));

  // f_x = inverse * e_x solves Δf = δ_z - δ_x with f(z) = 0, and
  // g^z(x, y) = deg(y) f_x(y).
  GreenTable t;
  t.graph = std::move(g);
  t.mode = GreenMode::Killed;
  t.killed_at = z;
  t.entries = Eigen::MatrixXd::Zero(nv, nv);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      const double deg_y = t.graph->degree(static_cast<Vertex>(keep[b]));
      t.entries(keep[a], keep[b]) = deg_y * inverse(keep[b] - (keep[b] > zi), a);
    }
  }
  return t;
}

GreenTable green_averaged(std::shared_ptr<const Graph> g) {
  if (!g) throw std::invalid_argument("Green table needs a graph");
  require_dense(*g);
  if (g->has_absorption()) {
    throw std::invalid_argument("averaged Green table needs a graph without absorbing boundary");
  }
  const auto nv = static_cast<Eigen::Index>(g->vertex_count());
  const double n = static_cast<double>(nv);
  // L⁺ = (L + J/n)^{-1} - J/n.
  Eigen::MatrixXd shifted = dense_negative_laplacian(*g);
  shifted.array() += 1.0 / n;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("graph is not connected");
  Eigen::MatrixXd pinv = llt.solve(Eigen::MatrixXd::Identity(nv, nv));
  pinv.array() -= 1.0 / n;
  const double trace_term = pinv.trace() / n;

  GreenTable t;
  t.graph = std::move(g);
  t.mode = GreenMode::Averaged;
  t.entries.resize(nv, nv);
  for (Eigen::Index y = 0; y < nv; ++y) {
    const double deg_y = t.graph->degree(static_cast<Vertex>(y));
    for (Eigen::Index x = 0; x < nv; ++x) t.entries(x, y) = deg_y * (pinv(x, y) + trace_term);
  }
  return t;
}

std::vector<double> averaged_column_constant(const GreenTable& averaged) {
  if (averaged.mode != GreenMode::Averaged) throw std::invalid_argument("expected an averaged table");
  const auto nv = averaged.entries.rows();
  std::vector<double> k(static_cast<std::size_t>(nv));
  for (Eigen::Index y = 0; y < nv; ++y) {
    CompensatedSum acc;
    for (Eigen::Index w = 0; w < nv; ++w) acc.add(averaged.entries(w, y));
    k[static_cast<std::size_t>(y)] = acc.value() / averaged.graph->degree(static_cast<Vertex>(y));
  }
  return k;
}

BoxGreenColumn green_dirichlet_box(int radius, int d, const VertexCoord& o) {
  auto box = std::make_shared<const Graph>(make_dirichlet_box(radius, d));
  const auto source = box->vertex_at(o);
  if (!source) throw std::invalid_argument("source lies outside the box");

  Eigen::SparseMatrix<double> a = -laplacian_matrix(*box);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a.rows());
  rhs[static_cast<Eigen::Index>(*source)] = 1.0;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(a);
  cg.setTolerance(1e-14);
  cg.setMaxIterations(20 * a.rows());
  const Eigen::VectorXd h = cg.solve(rhs);
  if (cg.info() != Eigen::Success) throw SolveError("box Green solve did not converge");

  BoxGreenColumn col;
  col.box = std::move(box);
  col.source = *source;
  col.values.resize(static_cast<std::size_t>(h.size()));
  for (Eigen::Index i = 0; i < h.size(); ++i) col.values[static_cast<std::size_t>(i)] = 2.0 * d * h[i];
  return col;
}

BoxGreenColumn green_dirichlet_box(int radius, int d) {
  VertexCoord o;
  o.values.assign(static_cast<std::size_t>(std::max(d, 0)), 0);
  return green_dirichlet_box(radius, d, o);
}

double nu_n(const BoxGreenColumn& column) {
  CompensatedSum acc;
  for (double v : column.values) acc.add(v * v);
  return std::sqrt(acc.value());
}

TorusSpectrum torus_spectrum(int n, int d) {
  const auto total = lattice_size(n, d, kDefaultVertexBudget);
  if (n < 2 || !total) throw std::invalid_argument("invalid torus parameters for the spectrum");
  TorusSpectrum spec{n, d, std::vector<double>(*total)};
  std::vector<long> a(static_cast<std::size_t>(d));
  for (std::size_t idx = 0; idx < *total; ++idx) {
    std::size_t rest = idx;
    for (int i = d - 1; i >= 0; --i) {
      a[static_cast<std::size_t>(i)] = static_cast<long>(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
    }
    spec.eigenvalues[idx] = torus_eigenvalue(n, a);
  }
  return spec;
}

double fourier_kernel_sum(int n, int d, const VertexCoord& x) {
  if (n < 2 || d < 1) throw std::invalid_argument("invalid torus parameters");
  if (x.dim() != static_cast<std::size_t>(d)) throw std::invalid_argument("lag has the wrong dimension");
  const auto total = lattice_size(n, d, kDefaultVertexBudget);
  if (!total) throw std::invalid_argument("torus too large for direct summation");

  std::vector<double> sin2(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double s = std::sin(std::numbers::pi * k / n);
    sin2[static_cast<std::size_t>(k)] = s * s;
  }
  std::vector<long> lag(x.values);
  for (long& v : lag) v = ((v % n) + n) % n;

  CompensatedSum acc;
  std::vector<long> z(static_cast<std::size_t>(d), 0);
  for (std::size_t idx = 1; idx < *total; ++idx) {
    // Odometer-style increment of the multi-index z.
    for (int i = d - 1; i >= 0; --i) {
      auto& zi = z[static_cast<std::size_t>(i)];
      if (++zi < n) break;
      zi = 0;
    }
    long dot = 0;
    double denom = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      dot = (dot + lag[i] * z[i]) % n;
      denom += sin2[static_cast<std::size_t>(z[i])];
    }
    acc.add(sin2[static_cast<std::size_t>(dot)] / (denom * denom));
  }
  return acc.value() / static_cast<double>(*total);
}

double variogram_fourier(int n, int d, const VertexCoord& x) {
  return 0.25 * fourier_kernel_sum(n, d, x);
}

std::vector<double> green_convolve(const GreenTable& averaged, std::span<const double> sigma) {
  if (averaged.mode != GreenMode::Averaged) throw std::invalid_argument("expected an averaged table");
  const auto nv = averaged.entries.rows();
  if (static_cast<Eigen::Index>(sigma.size()) != nv) {
    throw std::invalid_argument("mass field does not match the Green table's graph");
  }
  const Eigen::Map<const Eigen::VectorXd> s(sigma.data(), nv);
  const Eigen::VectorXd weighted = averaged.entries.transpose() * s;
  std::vector<double> v(static_cast<std::size_t>(nv));
  for (Eigen::Index y = 0; y < nv; ++y) {
    v[static_cast<std::size_t>(y)] = weighted[y] / averaged.graph->degree(static_cast<Vertex>(y));
  }
  return v;
}

std::vector<double> spectral_convolve(int n, int d, std::span<const double> sigma) {
  TorusPoisson poisson(n, d);
  std::vector<double> rhs(sigma.begin(), sigma.end());
  for (double& v : rhs) v = -v;
  return poisson.solve(rhs);
}

}  // namespace sandlab
