#include "sandlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace sandlab {

long VertexCoord::norm_1() const {
  long s = 0;
  for (long v : values) s += std::labs(v);
  return s;
}

double VertexCoord::norm_2() const {
  double s = 0.0;
  for (long v : values) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

long VertexCoord::norm_inf() const {
  long m = 0;
  for (long v : values) m = std::max(m, std::labs(v));
  return m;
}

std::optional<std::size_t> lattice_size(long extent, int d, std::size_t budget) {
  if (extent <= 0 || d <= 0) return std::nullopt;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) {
    if (total > budget / static_cast<std::size_t>(extent)) return std::nullopt;
    total *= static_cast<std::size_t>(extent);
  }
  if (total > budget) return std::nullopt;
  return total;
}

// Fills the CSR arrays of a cubic lattice with `extent` points per axis.
// With `periodic`, neighbors wrap; otherwise out-of-range neighbors become
// absorbing stubs.
void Graph::build_lattice(int extent, bool periodic) {
  const std::size_t nv = degree_.size();
  std::vector<std::size_t> stride(dim_);
  std::size_t s = 1;
  for (int i = dim_ - 1; i >= 0; --i) {
    stride[i] = s;
    s *= static_cast<std::size_t>(extent);
  }
  offsets_.assign(nv + 1, 0);
  adjacency_.clear();
  adjacency_.reserve(nv * 2 * static_cast<std::size_t>(dim_));
  for (Vertex v = 0; v < nv; ++v) {
    offsets_[v] = adjacency_.size();
    for (int i = 0; i < dim_; ++i) {
      const long digit = static_cast<long>((v / stride[i]) % extent);
      for (int step : {-1, +1}) {
        long nd = digit + step;
        if (nd < 0 || nd >= extent) {
          if (!periodic) continue;
          nd = (nd + extent) % extent;
        }
        const long delta = (nd - digit) * static_cast<long>(stride[i]);
        adjacency_.push_back(static_cast<Vertex>(static_cast<long>(v) + delta));
      }
    }
    degree_[v] = 2 * dim_;
  }
  offsets_[nv] = adjacency_.size();
}

Graph make_torus(int n, int d, std::size_t budget) {
  if (n < 3) {
    throw std::invalid_argument("torus side n must be >= 3 (n = " + std::to_string(n) +
                                " would create parallel edges or loops)");
  }
  if (d < 1) throw std::invalid_argument("torus dimension d must be >= 1");
  const auto size = lattice_size(n, d, budget);
  if (!size) {
    throw std::invalid_argument("torus " + std::to_string(n) + "^" + std::to_string(d) +
                                " exceeds the vertex budget of " + std::to_string(budget));
  }
  Graph g;
  g.kind_ = GraphKind::Torus;
  g.side_ = n;
  g.dim_ = d;
  g.degree_.assign(*size, 0);
  g.build_lattice(n, true);
  return g;
}

Graph make_dirichlet_box(int radius, int d, std::size_t budget) {
  if (radius < 1) throw std::invalid_argument("box radius must be >= 1");
  if (d < 1) throw std::invalid_argument("box dimension d must be >= 1");
  const auto size = lattice_size(2L * radius + 1, d, budget);
  if (!size) throw std::invalid_argument("box exceeds the vertex budget");
  Graph g;
  g.kind_ = GraphKind::DirichletBox;
  g.radius_ = radius;
  g.dim_ = d;
  g.degree_.assign(*size, 0);
  g.build_lattice(2 * radius + 1, false);
  return g;
}

Graph make_general(const std::vector<std::vector<Vertex>>& adjacency) {
  const std::size_t nv = adjacency.size();
  if (nv < 2) throw std::invalid_argument("general graph needs at least two vertices");
  Graph g;
  g.kind_ = GraphKind::General;
  g.degree_.assign(nv, 0);
  g.offsets_.assign(nv + 1, 0);
  for (Vertex v = 0; v < nv; ++v) {
    g.offsets_[v] = g.adjacency_.size();
    std::vector<Vertex> nb = adjacency[v];
    std::sort(nb.begin(), nb.end());
    if (std::adjacent_find(nb.begin(), nb.end()) != nb.end()) {
      throw std::invalid_argument("vertex " + std::to_string(v) + " lists a neighbor twice");
    }
    for (Vertex w : nb) {
      if (w >= nv) throw std::invalid_argument("neighbor index out of range at vertex " + std::to_string(v));
      if (w == v) throw std::invalid_argument("self-loop at vertex " + std::to_string(v));
      const auto& back = adjacency[w];
      if (std::find(back.begin(), back.end(), v) == back.end()) {
        throw std::invalid_argument("edge " + std::to_string(v) + "-" + std::to_string(w) +
                                    " is not symmetric");
      }
      g.adjacency_.push_back(w);
    }
    if (nb.empty()) throw std::invalid_argument("vertex " + std::to_string(v) + " is isolated");
    g.degree_[v] = static_cast<int>(nb.size());
  }
  g.offsets_[nv] = g.adjacency_.size();

  std::vector<char> seen(nv, 0);
  std::queue<Vertex> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const Vertex v = frontier.front();
    frontier.pop();
    for (Vertex w : g.neighbors(v)) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        frontier.push(w);
      }
    }
  }
  if (reached != nv) throw std::invalid_argument("graph is not connected");
  return g;
}

VertexCoord Graph::coord(Vertex v) const {
  if (!is_lattice()) throw std::logic_error("coordinates are only defined on lattice graphs");
  const long extent = kind_ == GraphKind::Torus ? side_ : 2L * radius_ + 1;
  VertexCoord x;
  x.values.assign(dim_, 0);
  for (int i = dim_ - 1; i >= 0; --i) {
    const long digit = static_cast<long>(v % static_cast<std::size_t>(extent));
    v /= static_cast<std::size_t>(extent);
    if (kind_ == GraphKind::Torus) {
      x.values[i] = 2 * digit <= side_ ? digit : digit - side_;
    } else {
      x.values[i] = digit - radius_;
    }
  }
  return x;
}

std::optional<Vertex> Graph::vertex_at(const VertexCoord& x) const {
  if (!is_lattice()) throw std::logic_error("coordinates are only defined on lattice graphs");
  if (x.dim() != static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("coordinate dimension does not match the graph");
  }
  const long extent = kind_ == GraphKind::Torus ? side_ : 2L * radius_ + 1;
  Vertex v = 0;
  for (long c : x.values) {
    long digit;
    if (kind_ == GraphKind::Torus) {
      digit = ((c % side_) + side_) % side_;
    } else {
      if (c < -radius_ || c > radius_) return std::nullopt;
      digit = c + radius_;
    }
    v = v * static_cast<Vertex>(extent) + static_cast<Vertex>(digit);
  }
  return v;
}

Vertex Graph::origin() const {
  VertexCoord zero;
  zero.values.assign(dim_, 0);
  return *vertex_at(zero);
}

std::string Graph::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case GraphKind::Torus: os << "torus(n=" << side_ << ", d=" << dim_ << ")"; break;
    case GraphKind::DirichletBox: os << "box(radius=" << radius_ << ", d=" << dim_ << ")"; break;
    case GraphKind::General: os << "general(|V|=" << vertex_count() << ")"; break;
  }
  return os.str();
}

std::vector<double> laplacian_apply(const Graph& g, std::span<const double> f) {
  if (f.size() != g.vertex_count()) {
    throw std::invalid_argument("field has " + std::to_string(f.size()) + " entries, graph has " +
                                std::to_string(g.vertex_count()) + " vertices");
  }
  std::vector<double> out(f.size());
  for (Vertex v = 0; v < f.size(); ++v) {
    double acc = 0.0;
    for (Vertex w : g.neighbors(v)) acc += f[w];
    out[v] = acc - g.degree(v) * f[v];
  }
  return out;
}

Eigen::SparseMatrix<double> laplacian_matrix(const Graph& g) {
  const auto nv = static_cast<Eigen::Index>(g.vertex_count());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(g.vertex_count() * 7);
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    entries.emplace_back(v, v, -static_cast<double>(g.degree(v)));
    for (Vertex w : g.neighbors(v)) entries.emplace_back(v, w, 1.0);
  }
  Eigen::SparseMatrix<double> m(nv, nv);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

}  // namespace sandlab
