#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <utility>
#include <vector>

namespace svaro {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Masked 2D/3D voxel grid with first-order (axis-aligned) adjacency.
///
/// Grid cells are addressed in row-major order with the last axis varying
/// fastest. Masked-in cells receive a dense voxel index 0..N-1 in the same
/// raster order; masked-out cells are excluded from the graph entirely.
struct LatticeGraph {
  std::vector<int> dims;
  std::vector<bool> mask;
  /// Grid cell -> voxel index, or -1 for masked-out cells.
  std::vector<Index> voxel_index;
  /// Voxel index -> grid cell.
  std::vector<Index> cell_of;
  /// Neighbor pairs (a, b) with a < b.
  std::vector<std::pair<Index, Index>> adjacency;
  std::vector<std::vector<Index>> neighbors;

  Index n_voxels() const { return static_cast<Index>(cell_of.size()); }
  Index n_cells() const { return static_cast<Index>(mask.size()); }
  Index degree(Index n) const { return static_cast<Index>(neighbors[n].size()); }
  /// Grid coordinates of voxel n, one entry per axis.
  std::vector<int> coordinates(Index n) const;
};

/// Throws InvalidArgument on bad dims, mask length mismatch, or an empty
/// mask ("no voxels").
LatticeGraph build_lattice(const std::vector<int>& dims, std::vector<bool> mask);

/// Convenience for a fully masked-in grid.
LatticeGraph build_full_lattice(const std::vector<int>& dims);

/// Graph Laplacian S (degree on the diagonal, -1 per neighbor) and the
/// precomputed spatial precision pattern S^T S.
class Laplacian {
 public:
  explicit Laplacian(const LatticeGraph& graph);

  const SparseMatrix& S() const { return s_; }
  const SparseMatrix& StS() const { return sts_; }
  Index size() const { return s_.rows(); }

  double sts_diag(Index n) const { return sts_diag_[static_cast<std::size_t>(n)]; }

  /// Returns (S^T S) x.
  Eigen::VectorXd apply_sts(const Eigen::VectorXd& x) const;

  /// x^T (S^T S) x.
  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Calls f(j, value) for every nonzero (S^T S)_{nj} with j != n.
  template <class F>
  void for_each_offdiag(Index n, F&& f) const {
    for (SparseMatrix::InnerIterator it(sts_, n); it; ++it) {
      if (it.row() != n) f(it.row(), it.value());
    }
  }

 private:
  SparseMatrix s_;
  SparseMatrix sts_;
  std::vector<double> sts_diag_;
};

/// Voxel colors such that no two same-colored voxels interact through
/// S^T S (graph distance <= 2).
struct SweepColoring {
  std::vector<int> color;
  int n_colors = 0;
  /// Voxels grouped by color, each group in raster order.
  std::vector<std::vector<Index>> groups;
};

SweepColoring color_for_sweep(const LatticeGraph& graph);

/// Number of first-order neighbor pairs in a V x V x V cube: 3 V^2 (V - 1).
double cube_neighbor_pair_count(double edge_length);
std::int64_t cube_neighbor_pair_count(std::int64_t edge_length);

}  // namespace svaro
