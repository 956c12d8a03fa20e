#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "sandlab/green.hpp"

using namespace sandlab;

namespace {

std::shared_ptr<const Graph> shared(Graph g) { return std::make_shared<const Graph>(std::move(g)); }

// Random-walk oracle: mean visits to each y before hitting z, starting at x.
std::vector<double> walk_visits(const Graph& g, Vertex x, Vertex z, int walks, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<double> visits(g.vertex_count(), 0.0);
  for (int w = 0; w < walks; ++w) {
    Vertex at = x;
    while (at != z) {
      visits[at] += 1.0;
      const auto nb = g.neighbors(at);
      at = nb[std::uniform_int_distribution<std::size_t>(0, nb.size() - 1)(gen)];
    }
  }
  for (double& v : visits) v /= walks;
  return visits;
}

void check_killed_identity(const GreenTable& t) {
  const Graph& g = *t.graph;
  const std::size_t nv = g.vertex_count();
  for (Vertex x = 0; x < nv; ++x) {
    if (x == t.killed_at) continue;
    std::vector<double> f(nv);
    for (Vertex y = 0; y < nv; ++y) f[y] = t(x, y) / g.degree(y);
    const auto lap = laplacian_apply(g, f);
    for (Vertex y = 0; y < nv; ++y) {
      // With absorbing stubs part of the walk escapes before reaching z, so
      // the identity at z itself only holds on graphs without absorption.
      if (y == t.killed_at && g.has_absorption()) continue;
      const double expected = (y == t.killed_at ? 1.0 : 0.0) - (y == x ? 1.0 : 0.0);
      CHECK(std::abs(lap[y] - expected) <= 1e-9);
    }
  }
}

}  // namespace

TEST_CASE("killed Green function on a path") {
  auto g = shared(make_general({{1}, {0, 2}, {1}}));  // a=0, b=1, c=2
  const auto t = green_killed(g, 2);
  CHECK(t(0, 0) == doctest::Approx(2.0));
  CHECK(t(0, 1) == doctest::Approx(2.0));
  CHECK(t(1, 0) == doctest::Approx(1.0));
  CHECK(t(1, 1) == doctest::Approx(2.0));
  for (Vertex x = 0; x < 3; ++x) {
    CHECK(t(x, 2) == 0.0);
    CHECK(t(2, x) == 0.0);
  }
  check_killed_identity(t);
}

TEST_CASE("killed Green function matches the random-walk oracle") {
  auto path = shared(make_general({{1}, {0, 2}, {1}}));
  const auto t = green_killed(path, 2);
  for (Vertex x = 0; x < 3; ++x) {
    const auto mc = walk_visits(*path, x, 2, 1'000'000, 100 + x);
    for (Vertex y = 0; y < 3; ++y) {
      if (t(x, y) == 0.0) {
        CHECK(mc[y] == 0.0);
      } else {
        CHECK(std::abs(mc[y] / t(x, y) - 1.0) <= 0.02);
      }
    }
  }
  auto irregular = shared(make_general({{1, 2}, {0, 2, 3}, {0, 1}, {1, 4}, {3}}));
  const auto k = green_killed(irregular, 4);
  const auto mc = walk_visits(*irregular, 0, 4, 200'000, 7);
  for (Vertex y = 0; y < 4; ++y) CHECK(std::abs(mc[y] / k(0, y) - 1.0) <= 0.02);
}

TEST_CASE("killed identity on several graphs") {
  auto c3 = shared(make_torus(3, 1));
  for (Vertex z = 0; z < 3; ++z) check_killed_identity(green_killed(c3, z));
  check_killed_identity(green_killed(shared(make_torus(5, 2)), 7));
  check_killed_identity(green_killed(shared(make_general({{1, 2, 3}, {0}, {0, 3}, {0, 2}})), 1));
  check_killed_identity(green_killed(shared(make_dirichlet_box(2, 2)), 4));
}

TEST_CASE("killed Green rejects bad input") {
  auto c3 = shared(make_torus(3, 1));
  CHECK_THROWS_AS(green_killed(c3, 3), std::invalid_argument);
  CHECK_THROWS_AS(green_killed(shared(make_torus(65, 2)), 0), std::invalid_argument);
  CHECK_THROWS_AS(green_averaged(shared(make_torus(65, 2))), std::invalid_argument);
  CHECK_THROWS_AS(green_averaged(shared(make_dirichlet_box(2, 1))), std::invalid_argument);
}

TEST_CASE("averaged table equals the mean of killed tables") {
  for (auto g : {shared(make_general({{1}, {0, 2}, {1}})), shared(make_torus(4, 2)),
                 shared(make_general({{1, 2}, {0, 2, 3}, {0, 1}, {1, 4}, {3}}))}) {
    const auto avg = green_averaged(g);
    const std::size_t nv = g->vertex_count();
    Eigen::MatrixXd brute = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nv));
    for (Vertex z = 0; z < nv; ++z) brute += green_killed(g, z).entries;
    brute /= static_cast<double>(nv);
    CHECK((avg.entries - brute).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("K(y) is constant") {
  for (auto g : {shared(make_torus(3, 1)), shared(make_general({{1}, {0, 2}, {1}})),
                 shared(make_general({{1, 2}, {0, 2, 3}, {0, 1}, {1, 4}, {3}})), shared(make_torus(6, 2))}) {
    const auto k = averaged_column_constant(green_averaged(g));
    const auto [lo, hi] = std::minmax_element(k.begin(), k.end());
    CHECK(*hi / *lo - 1.0 <= 1e-8);
  }
}

TEST_CASE("averaged Green on Z_4 is translation invariant") {
  auto g = shared(make_torus(4, 1));
  const auto t = green_averaged(g);
  for (long x = 0; x < 4; ++x) {
    for (long y = 0; y < 4; ++y) {
      const Vertex vx = *g->vertex_at(VertexCoord{{x}}), vy = *g->vertex_at(VertexCoord{{y}});
      const Vertex v0 = *g->vertex_at(VertexCoord{{0}}), vd = *g->vertex_at(VertexCoord{{y - x}});
      CHECK(t(vx, vy) == doctest::Approx(t(v0, vd)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dirichlet box Green column") {
  const auto col = green_dirichlet_box(1, 1);
  const Graph& box = *col.box;
  CHECK(col.values[box.origin()] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(col.values[*box.vertex_at(VertexCoord{{1}})] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(col.values[*box.vertex_at(VertexCoord{{-1}})] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(nu_n(col) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-12));

  // Defining identity: Δ(g/2d) = -δ_o with zero boundary data.
  const auto c3 = green_dirichlet_box(4, 3, VertexCoord{{1, -2, 0}});
  std::vector<double> h(c3.values);
  for (double& v : h) v /= 6.0;
  const auto lap = laplacian_apply(*c3.box, h);
  for (Vertex y = 0; y < lap.size(); ++y) {
    CHECK(std::abs(lap[y] + (y == c3.source ? 1.0 : 0.0)) <= 1e-9);
    CHECK(c3.values[y] >= 0.0);
  }
  CHECK_THROWS_AS(green_dirichlet_box(2, 2, VertexCoord{{3, 0}}), std::invalid_argument);
}

TEST_CASE("dirichlet Green is monotone in the radius") {
  double prev_nu = 0.0;
  std::vector<double> prev;
  for (int r = 1; r <= 6; ++r) {
    const auto col = green_dirichlet_box(r, 1);
    const double nu = nu_n(col);
    CHECK(nu > prev_nu);
    prev_nu = nu;
    if (!prev.empty()) {
      for (long x = -(r - 1); x <= r - 1; ++x) {
        CHECK(col.values[*col.box->vertex_at(VertexCoord{{x}})] >= prev[static_cast<std::size_t>(x + r - 1)]);
      }
    }
    prev.clear();
    for (long x = -r; x <= r; ++x) prev.push_back(col.values[*col.box->vertex_at(VertexCoord{{x}})]);
  }
  double prev_center = 0.0;
  std::vector<double> nus;
  for (int r : {2, 4, 8, 16}) {
    const auto col = green_dirichlet_box(r, 3);
    const double center = col.values[col.box->origin()];
    CHECK(center > prev_center);
    prev_center = center;
    nus.push_back(nu_n(col));
  }
  CHECK(nus[3] / nus[2] > 1.0);
}

TEST_CASE("torus spectrum") {
  const auto s = torus_spectrum(4, 1);
  CHECK(s.eigenvalues[0] == 0.0);
  CHECK(s.eigenvalues[1] == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(s.eigenvalues[2] == doctest::Approx(-4.0).epsilon(1e-14));
  CHECK(s.eigenvalues[3] == doctest::Approx(-2.0).epsilon(1e-14));
  const auto s2 = torus_spectrum(8, 2);
  CHECK(s2.eigenvalues.size() == 64);
  for (std::size_t i = 1; i < 64; ++i) CHECK(s2.eigenvalues[i] < 0.0);
}

TEST_CASE("Fourier variogram hand values and symmetries") {
  CHECK(fourier_kernel_sum(4, 1, VertexCoord{{2}}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(fourier_kernel_sum(4, 1, VertexCoord{{2}}) - 2.0) <= 1e-12);
  CHECK(variogram_fourier(4, 1, VertexCoord{{2}}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(variogram_fourier(6, 2, VertexCoord{{0, 0}}) == 0.0);
  const double base = fourier_kernel_sum(7, 3, VertexCoord{{1, 2, -3}});
  CHECK(fourier_kernel_sum(7, 3, VertexCoord{{-3, 1, 2}}) == doctest::Approx(base).epsilon(1e-12));
  CHECK(fourier_kernel_sum(7, 3, VertexCoord{{-1, -2, 3}}) == doctest::Approx(base).epsilon(1e-12));
  CHECK(fourier_kernel_sum(7, 3, VertexCoord{{2, -1, 3}}) == doctest::Approx(base).epsilon(1e-12));
  CHECK_THROWS_AS(fourier_kernel_sum(4, 2, VertexCoord{{1}}), std::invalid_argument);
}

TEST_CASE("Green convolution solves the Poisson equation") {
  auto path = shared(make_general({{1}, {0, 2}, {1}}));
  const auto t = green_averaged(path);
  const auto zero = green_convolve(t, std::vector<double>(3, 0.0));
  for (double v : zero) CHECK(v == 0.0);
  const auto v = green_convolve(t, std::vector<double>{1.0, 0.0, -1.0});
  const auto lap = laplacian_apply(*path, v);
  CHECK(lap[0] == doctest::Approx(-1.0));
  CHECK(lap[1] == doctest::Approx(0.0).scale(1.0));
  CHECK(lap[2] == doctest::Approx(1.0));

  auto irregular = shared(make_general({{1, 2}, {0, 2, 3}, {0, 1}, {1, 4}, {3}}));
  std::vector<double> sigma{0.3, -1.2, 2.0, 0.1, 0.7};
  const double mean = std::accumulate(sigma.begin(), sigma.end(), 0.0) / 5.0;
  const auto w = green_convolve(green_averaged(irregular), sigma);
  const auto lw = laplacian_apply(*irregular, w);
  for (Vertex x = 0; x < 5; ++x) CHECK(std::abs(lw[x] - (mean - sigma[x])) <= 1e-9);
  CHECK_THROWS_AS(green_convolve(t, sigma), std::invalid_argument);
}

TEST_CASE("spectral convolution equals the Green-table convolution") {
  for (auto [n, d] : {std::pair{8, 2}, std::pair{9, 1}, std::pair{4, 3}}) {
    auto g = shared(make_torus(n, d));
    std::mt19937_64 gen(static_cast<std::uint64_t>(n * 10 + d));
    std::normal_distribution<double> normal;
    std::vector<double> sigma(g->vertex_count());
    for (double& s : sigma) s = normal(gen);
    auto a = green_convolve(green_averaged(g), sigma);
    auto b = spectral_convolve(n, d, sigma);
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs((a[i] - ma) - (b[i] - mb)) <= 1e-8);
  }
}
