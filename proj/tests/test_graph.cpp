#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "sandlab/graph.hpp"
#include "sandlab/spectral.hpp"

using namespace sandlab;

namespace {

std::vector<double> random_field(std::size_t size, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> f(size);
  for (double& v : f) v = dist(gen);
  return f;
}

}  // namespace

TEST_CASE("torus construction") {
  const Graph c3 = make_torus(3, 1);
  CHECK(c3.vertex_count() == 3);
  for (Vertex v = 0; v < 3; ++v) CHECK(c3.degree(v) == 2);

  const Graph t42 = make_torus(4, 2);
  CHECK(t42.vertex_count() == 16);
  for (Vertex v = 0; v < 16; ++v) CHECK(t42.degree(v) == 4);

  const Graph t33 = make_torus(3, 3);
  CHECK(t33.vertex_count() == 27);
  const auto nb = t33.neighbors(t33.origin());
  CHECK(std::set<Vertex>(nb.begin(), nb.end()).size() == 6);
}

TEST_CASE("torus rejects bad parameters") {
  CHECK_THROWS_AS(make_torus(2, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_torus(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_torus(1024, 4), std::invalid_argument);
}

TEST_CASE("torus coordinates are canonical and bijective") {
  const Graph t = make_torus(4, 2);
  for (Vertex v = 0; v < t.vertex_count(); ++v) {
    const VertexCoord c = t.coord(v);
    for (long x : c.values) CHECK((x > -2 && x <= 2));
    CHECK(t.vertex_at(c) == v);
  }
  const Graph odd = make_torus(5, 1);
  std::set<long> seen;
  for (Vertex v = 0; v < 5; ++v) seen.insert(odd.coord(v).values[0]);
  CHECK(seen == std::set<long>{-2, -1, 0, 1, 2});
  CHECK(t.vertex_at(VertexCoord{{5, -3}}) == t.vertex_at(VertexCoord{{1, 1}}));
}

TEST_CASE("norm helpers") {
  const VertexCoord x{{3, -4}};
  CHECK(x.norm_1() == 7);
  CHECK(x.norm_2() == doctest::Approx(5.0));
  CHECK(x.norm_inf() == 4);
}

TEST_CASE("dirichlet box construction") {
  const Graph b11 = make_dirichlet_box(1, 1);
  CHECK(b11.vertex_count() == 3);
  const Vertex right = *b11.vertex_at(VertexCoord{{1}});
  CHECK(b11.neighbors(right).size() == 1);
  CHECK(b11.neighbors(right)[0] == *b11.vertex_at(VertexCoord{{0}}));
  CHECK(b11.absorbing_stubs(right) == 1);
  CHECK(b11.degree(right) == 2);

  CHECK(make_dirichlet_box(2, 2).vertex_count() == 25);
  const Graph b13 = make_dirichlet_box(1, 3);
  CHECK(b13.vertex_count() == 27);
  CHECK(b13.neighbors(b13.origin()).size() == 6);
  CHECK_FALSE(b13.vertex_at(VertexCoord{{2, 0, 0}}).has_value());

  CHECK_THROWS_AS(make_dirichlet_box(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_dirichlet_box(-3, 1), std::invalid_argument);
}

TEST_CASE("general graph validation") {
  const Graph path = make_general({{1}, {0, 2}, {1}});
  CHECK(path.vertex_count() == 3);
  CHECK(path.degree(1) == 2);
  CHECK_THROWS_AS(make_general({{1}, {}}), std::invalid_argument);          // asymmetric
  CHECK_THROWS_AS(make_general({{1}, {0}, {3}, {2}}), std::invalid_argument);  // disconnected
  CHECK_THROWS_AS(make_general({{0, 1}, {0}}), std::invalid_argument);      // self-loop
  CHECK_THROWS_AS(make_general({{1, 1}, {0, 0}}), std::invalid_argument);   // duplicate edge
  CHECK_THROWS_AS(make_general({{5}, {0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_general({{}}), std::invalid_argument);
}

TEST_CASE("graphs are undirected") {
  for (const Graph& g : {make_torus(5, 2), make_dirichlet_box(3, 2), make_torus(3, 3)}) {
    for (Vertex x = 0; x < g.vertex_count(); ++x) {
      for (Vertex y : g.neighbors(x)) {
        const auto back = g.neighbors(y);
        CHECK(std::find(back.begin(), back.end(), x) != back.end());
      }
    }
  }
}

TEST_CASE("laplacian hand values") {
  const Graph c3 = make_torus(3, 1);
  std::vector<double> delta(3, 0.0);
  delta[c3.origin()] = 1.0;
  const auto lap = laplacian_apply(c3, delta);
  for (Vertex v = 0; v < 3; ++v) CHECK(lap[v] == (v == c3.origin() ? -2.0 : 1.0));

  const Graph box = make_dirichlet_box(2, 1);
  std::vector<double> f(box.vertex_count());
  for (Vertex v = 0; v < box.vertex_count(); ++v) f[v] = static_cast<double>(box.coord(v).values[0]);
  CHECK(laplacian_apply(box, f)[*box.vertex_at(VertexCoord{{2}})] == -3.0);

  const Graph t = make_torus(6, 2);
  const auto zero = laplacian_apply(t, std::vector<double>(t.vertex_count(), 3.5));
  for (double v : zero) CHECK(v == 0.0);

  CHECK_THROWS_AS(laplacian_apply(t, std::vector<double>(5)), std::invalid_argument);
}

TEST_CASE("laplacian sums to zero and is symmetric") {
  for (const Graph& g : {make_torus(7, 2), make_general({{1, 2}, {0, 2, 3}, {0, 1}, {1}})}) {
    const auto f1 = random_field(g.vertex_count(), 1);
    const auto f2 = random_field(g.vertex_count(), 2);
    const auto l1 = laplacian_apply(g, f1);
    const auto l2 = laplacian_apply(g, f2);
    double sum = 0.0, a = 0.0, b = 0.0;
    for (Vertex x = 0; x < g.vertex_count(); ++x) {
      sum += l1[x];
      a += f1[x] * l2[x];
      b += f2[x] * l1[x];
    }
    CHECK(std::abs(sum) <= 1e-12 * 2.0 * g.vertex_count());
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("laplacian is linear and matches the sparse matrix") {
  const Graph g = make_dirichlet_box(3, 2);
  const auto f1 = random_field(g.vertex_count(), 3);
  const auto f2 = random_field(g.vertex_count(), 4);
  std::vector<double> combo(f1.size());
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = 2.0 * f1[i] - 0.5 * f2[i];
  const auto l1 = laplacian_apply(g, f1), l2 = laplacian_apply(g, f2), lc = laplacian_apply(g, combo);
  const auto m = laplacian_matrix(g);
  const Eigen::Map<const Eigen::VectorXd> v1(f1.data(), static_cast<Eigen::Index>(f1.size()));
  const Eigen::VectorXd mv = m * v1;
  for (std::size_t i = 0; i < combo.size(); ++i) {
    CHECK(lc[i] == doctest::Approx(2.0 * l1[i] - 0.5 * l2[i]));
    CHECK(mv[static_cast<Eigen::Index>(i)] == doctest::Approx(l1[i]));
  }
}

TEST_CASE("torus characters are Laplacian eigenfunctions") {
  for (auto [n, d] : {std::pair{8, 2}, std::pair{16, 1}, std::pair{4, 3}, std::pair{5, 2}}) {
    const Graph t = make_torus(n, d);
    const std::size_t nv = t.vertex_count();
    double worst = 0.0;
    std::vector<long> a(static_cast<std::size_t>(d));
    for (std::size_t idx = 0; idx < nv; ++idx) {
      std::size_t rest = idx;
      for (int i = d - 1; i >= 0; --i) {
        a[static_cast<std::size_t>(i)] = static_cast<long>(rest % static_cast<std::size_t>(n));
        rest /= static_cast<std::size_t>(n);
      }
      const double lambda = torus_eigenvalue(n, a);
      // Real and imaginary parts of χ_a are each eigenfunctions.
      std::vector<double> re(nv), im(nv);
      for (Vertex x = 0; x < nv; ++x) {
        const auto c = t.coord(x);
        double phase = 0.0;
        for (int i = 0; i < d; ++i) phase += static_cast<double>(a[i] * c.values[i]);
        phase *= 2.0 * std::numbers::pi / n;
        re[x] = std::cos(phase);
        im[x] = std::sin(phase);
      }
      const auto lre = laplacian_apply(t, re), lim = laplacian_apply(t, im);
      for (Vertex x = 0; x < nv; ++x) {
        worst = std::max({worst, std::abs(lre[x] - lambda * re[x]), std::abs(lim[x] - lambda * im[x])});
      }
    }
    CHECK(worst <= 1e-10);
  }
}
