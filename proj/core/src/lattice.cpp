#include "svaro/lattice.hpp"

#include "svaro/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace svaro {

std::vector<int> LatticeGraph::coordinates(Index n) const {
  std::vector<int> c(dims.size());
  Index cell = cell_of[n];
  for (std::size_t ax = dims.size(); ax-- > 0;) {
    c[ax] = static_cast<int>(cell % dims[ax]);
    cell /= dims[ax];
  }
  return c;
}

LatticeGraph build_lattice(const std::vector<int>& dims, std::vector<bool> mask) {
  if (dims.size() != 2 && dims.size() != 3) {
    throw InvalidArgument("lattice dims must have 2 or 3 axes");
  }
  Index n_cells = 1;
  for (int d : dims) {
    if (d < 1) throw InvalidArgument("lattice dims must be >= 1");
    n_cells *= d;
  }
  if (static_cast<Index>(mask.size()) != n_cells) {
    throw InvalidArgument("mask length " + std::to_string(mask.size()) +
                          " does not match grid size " + std::to_string(n_cells));
  }

  LatticeGraph g;
  g.dims = dims;
  g.mask = std::move(mask);
  g.voxel_index.assign(static_cast<std::size_t>(n_cells), -1);
  for (Index cell = 0; cell < n_cells; ++cell) {
    if (g.mask[cell]) {
      g.voxel_index[cell] = static_cast<Index>(g.cell_of.size());
      g.cell_of.push_back(cell);
    }
  }
  if (g.cell_of.empty()) throw InvalidArgument("no voxels");

  // Strides for row-major addressing, last axis fastest.
  std::vector<Index> stride(dims.size(), 1);
  for (std::size_t ax = dims.size() - 1; ax-- > 0;) stride[ax] = stride[ax + 1] * dims[ax + 1];

  g.neighbors.resize(g.cell_of.size());
  for (Index v = 0; v < g.n_voxels(); ++v) {
    const auto coord = g.coordinates(v);
    const Index cell = g.cell_of[v];
    // Forward neighbors only, so every pair is visited once with v < u.
    for (std::size_t ax = 0; ax < dims.size(); ++ax) {
      if (coord[ax] + 1 >= dims[ax]) continue;
      const Index u = g.voxel_index[cell + stride[ax]];
      if (u < 0) continue;
      g.adjacency.emplace_back(v, u);
      g.neighbors[v].push_back(u);
      g.neighbors[u].push_back(v);
    }
  }
  std::sort(g.adjacency.begin(), g.adjacency.end());
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

LatticeGraph build_full_lattice(const std::vector<int>& dims) {
  Index n = 1;
  for (int d : dims) n *= std::max(d, 0);
  return build_lattice(dims, std::vector<bool>(static_cast<std::size_t>(n), true));
}

Laplacian::Laplacian(const LatticeGraph& graph) {
  const Index n = graph.n_voxels();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) + 2 * graph.adjacency.size());
  for (Index v = 0; v < n; ++v) trip.emplace_back(v, v, static_cast<double>(graph.degree(v)));
  for (const auto& [a, b] : graph.adjacency) {
    trip.emplace_back(a, b, -1.0);
    trip.emplace_back(b, a, -1.0);
  }
  s_.resize(n, n);
  s_.setFromTriplets(trip.begin(), trip.end());
  s_.makeCompressed();
  sts_ = SparseMatrix(s_.transpose() * s_);
  sts_.prune(0.0);
  sts_.makeCompressed();
  sts_diag_.resize(static_cast<std::size_t>(n));
  for (Index v = 0; v < n; ++v) sts_diag_[v] = sts_.coeff(v, v);
}

Eigen::VectorXd Laplacian::apply_sts(const Eigen::VectorXd& x) const { return sts_ * x; }

double Laplacian::quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  // ||S x||^2 is exact and cheaper than forming (S^T S) x.
  const Eigen::VectorXd sx = s_ * x;
  return sx.squaredNorm();
}

SweepColoring color_for_sweep(const LatticeGraph& graph) {
  const Index n = graph.n_voxels();
  SweepColoring out;
  out.color.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> seen_at;  // seen_at[c] == v marks color c forbidden for v
  for (Index v = 0; v < n; ++v) {
    auto forbid = [&](Index u) {
      const int c = out.color[u];
      if (c >= 0) seen_at[c] = static_cast<int>(v);
    };
    for (Index u : graph.neighbors[v]) {
      forbid(u);
      for (Index w : graph.neighbors[u]) {
        if (w != v) forbid(w);
      }
    }
    int c = 0;
    while (c < out.n_colors && seen_at[c] == static_cast<int>(v)) ++c;
    if (c == out.n_colors) {
      ++out.n_colors;
      seen_at.push_back(-1);
    }
    out.color[v] = c;
  }
  out.groups.resize(static_cast<std::size_t>(out.n_colors));
  for (Index v = 0; v < n; ++v) out.groups[out.color[v]].push_back(v);
  return out;
}

double cube_neighbor_pair_count(double edge_length) {
  return 3.0 * edge_length * edge_length * (edge_length - 1.0);
}

std::int64_t cube_neighbor_pair_count(std::int64_t edge_length) {
  return 3 * edge_length * edge_length * (edge_length - 1);
}

}  // namespace svaro
