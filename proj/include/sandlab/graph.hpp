#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

namespace sandlab {

using Vertex = std::size_t;

enum class GraphKind { Torus, DirichletBox, General };

/// Integer coordinates of a lattice vertex. On the torus the entries are
/// canonicalized into (-n/2, n/2]; on a box they lie in [-radius, radius].
struct VertexCoord {
  std::vector<long> values;

  std::size_t dim() const { return values.size(); }
  long norm_1() const;
  double norm_2() const;
  long norm_inf() const;
  bool operator==(const VertexCoord&) const = default;
};

/// Largest vertex count a lattice constructor will accept.
inline constexpr std::size_t kDefaultVertexBudget = std::size_t{1} << 24;

/// Finite undirected connected graph stored in CSR form.
///
/// Lattice graphs keep their geometry (side length or radius and dimension)
/// so that vertices can be addressed by coordinates. Vertex indices are the
/// row-major linearization of the coordinates, last coordinate fastest.
///
/// A DirichletBox vertex on the boundary has fewer than 2d real neighbors;
/// the missing edges are absorbing stubs. They count toward the degree, and
/// mass sent along them leaves the system.
class Graph {
 public:
  GraphKind kind() const { return kind_; }
  std::size_t vertex_count() const { return degree_.size(); }
  /// Real neighbors plus absorbing stubs.
  int degree(Vertex v) const { return degree_[v]; }
  std::span<const Vertex> neighbors(Vertex v) const {
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  int absorbing_stubs(Vertex v) const {
    return degree_[v] - static_cast<int>(offsets_[v + 1] - offsets_[v]);
  }
  bool has_absorption() const { return kind_ == GraphKind::DirichletBox; }

  /// Side length n for Torus, 0 otherwise.
  int side() const { return side_; }
  /// Radius for DirichletBox, 0 otherwise.
  int radius() const { return radius_; }
  /// Lattice dimension, 0 for General.
  int dim() const { return dim_; }
  bool is_lattice() const { return kind_ != GraphKind::General; }

  /// Canonical coordinates of a lattice vertex.
  VertexCoord coord(Vertex v) const;
  /// Vertex at the given coordinates. Torus coordinates are reduced mod n;
  /// returns nullopt for a box point outside [-radius, radius]^d.
  std::optional<Vertex> vertex_at(const VertexCoord& x) const;
  /// Vertex at the origin of a lattice graph.
  Vertex origin() const;

  std::string describe() const;

  friend Graph make_torus(int n, int d, std::size_t budget);
  friend Graph make_dirichlet_box(int radius, int d, std::size_t budget);
  friend Graph make_general(const std::vector<std::vector<Vertex>>& adjacency);

 private:
  Graph() = default;
  void build_lattice(int extent, bool periodic);

  GraphKind kind_ = GraphKind::General;
  int side_ = 0;
  int radius_ = 0;
  int dim_ = 0;
  std::vector<int> degree_;
  std::vector<std::size_t> offsets_;
  std::vector<Vertex> adjacency_;
};

/// Discrete torus Z_n^d. Requires n >= 3 so that no parallel edges appear.
Graph make_torus(int n, int d, std::size_t budget = kDefaultVertexBudget);

/// Sites of [-radius, radius]^d in Z^d, killed on exit.
Graph make_dirichlet_box(int radius, int d,
                         std::size_t budget = kDefaultVertexBudget);

/// Graph from neighbor lists. The lists must describe a simple, undirected,
/// connected graph on at least two vertices.
Graph make_general(const std::vector<std::vector<Vertex>>& adjacency);

/// Δf(x) = Σ_{y~x} (f(y) - f(x)); each absorbing stub contributes -f(x).
std::vector<double> laplacian_apply(const Graph& g, std::span<const double> f);

/// Same operator as a sparse matrix.
Eigen::SparseMatrix<double> laplacian_matrix(const Graph& g);

/// Number of lattice points of side `extent` in d dimensions, or nullopt on
/// overflow past `budget`.
std::optional<std::size_t> lattice_size(long extent, int d, std::size_t budget);

}  // namespace sandlab
