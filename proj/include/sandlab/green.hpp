#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sandlab/graph.hpp"

namespace sandlab {

/// Dense Green tables are limited to this many vertices (|V|² storage).
inline constexpr std::size_t kDenseGreenCap = 4096;

enum class GreenMode { Killed, Averaged };

/// Table of expected visit counts g(x, y), row x = start, column y = target.
///
/// Killed(z): g^z(x, y) counts visits to y before the walk from x hits z.
/// A walk started at z is killed before it is counted, so row z and column
/// z are identically zero. f = g^z(x, ·)/deg satisfies Δf = δ_z - δ_x; on a
/// box, walks may also leave through a stub, and the identity holds off z.
///
/// Averaged: g(x, y) = (1/|V|) Σ_z g^z(x, y).
struct GreenTable {
  std::shared_ptr<const Graph> graph;
  GreenMode mode = GreenMode::Averaged;
  Vertex killed_at = 0;
  Eigen::MatrixXd entries;

  double operator()(Vertex x, Vertex y) const {
    return entries(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }
};

GreenTable green_killed(std::shared_ptr<const Graph> g, Vertex z);

/// Computed in closed form from the Laplacian pseudo-inverse L⁺ (L = -Δ):
/// g(x, y) = deg(y) (L⁺(x, y) + tr(L⁺)/|V|). Graphs with absorbing
/// boundary are rejected.
GreenTable green_averaged(std::shared_ptr<const Graph> g);

/// K(y) = (1/deg y) Σ_w g(w, y) for an averaged table; constant in y.
std::vector<double> averaged_column_constant(const GreenTable& averaged);

/// Column g_n(o, ·) of the Green function of a box killed on exit.
struct BoxGreenColumn {
  std::shared_ptr<const Graph> box;
  Vertex source = 0;
  std::vector<double> values;
};

/// Solves -Δ h = δ_o on the box (absorbing stubs act as zero boundary data);
/// g_n(o, y) = 2d h(y).
BoxGreenColumn green_dirichlet_box(int radius, int d, const VertexCoord& o);
BoxGreenColumn green_dirichlet_box(int radius, int d);

/// ν_n = (Σ_y g_n(o, y)²)^{1/2}.
double nu_n(const BoxGreenColumn& column);

/// Eigenvalues of Δ on Z_n^d, indexed by the row-major linearization of
/// a ∈ {0..n-1}^d.
struct TorusSpectrum {
  int n = 0;
  int d = 0;
  std::vector<double> eigenvalues;
};

TorusSpectrum torus_spectrum(int n, int d);

/// n^{-d} Σ_{z≠0} sin²(π x·z/n) / (Σ_i sin²(π z_i/n))², summed directly with
/// compensated accumulation.
double fourier_kernel_sum(int n, int d, const VertexCoord& x);

/// E(η_0 - η_x)² of the bi-Laplacian field on Z_n^d: a quarter of the
/// Fourier kernel sum.
double variogram_fourier(int n, int d, const VertexCoord& x);

/// v(y) = (1/deg y) Σ_x g(x, y) σ(x) for an averaged table, which satisfies
/// Δv = mean(σ) - σ.
std::vector<double> green_convolve(const GreenTable& averaged, std::span<const double> sigma);

/// Mean-zero v with Δv = mean(σ) - σ on Z_n^d, by spectral division.
std::vector<double> spectral_convolve(int n, int d, std::span<const double> sigma);

}  // namespace sandlab
