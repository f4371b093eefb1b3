#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "park/kernel.hpp"

namespace park {

using Index = Eigen::Index;
using IndexList = std::vector<Index>;

enum class CentroidMode { greedy, uniform };

CentroidMode parse_centroid_mode(const std::string& name);
std::string to_string(CentroidMode mode);

/// Voronoi partition of the training set in feature space.
struct Partition {
  IndexList centroid_indices;         ///< Q indices into the training set
  std::vector<Index> assignment;      ///< cell id of every training point
  std::vector<IndexList> cells;       ///< [n]_q, ascending
  std::vector<double> cell_fractions; ///< rho_q = n_q / n

  Index num_cells() const { return static_cast<Index>(centroid_indices.size()); }
  Index num_points() const { return static_cast<Index>(assignment.size()); }
  Index cell_size(Index q) const { return static_cast<Index>(cells[q].size()); }

  /// Rebuild cells and fractions from the assignment vector.
  static Partition from_assignment(IndexList centroids, std::vector<Index> assignment);
  /// Throws InputError unless the partition invariants hold.
  void validate() const;
};

struct PartitionStats {
  Index empty_cells_removed = 0;
  Index min_cell = 0;
  Index max_cell = 0;
  double mean_cell = 0.0;
};

/// Optional per-step output of greedy_centroids.
struct GreedyTrace {
  /// Schur complement selected at each step.
  std::vector<double> pivots;
  /// residuals[s](c): Schur complement of every point after s+1 selections.
  std::vector<Eigen::VectorXd> residuals;
};

/// Greedy centroid selection by maximal Schur complement. The first centroid
/// maximizes K(c, c); each next one maximizes the residual diagonal of a
/// pivoted Cholesky factorization of the training Gram matrix. Ties go to
/// the smallest index.
IndexList greedy_centroids(const PointMatrix& X, const KernelSpec& spec, Index Q,
                           GreedyTrace* trace = nullptr);

/// Q distinct indices drawn uniformly without replacement, sorted ascending.
IndexList uniform_centroids(Index n, Index Q, std::uint64_t seed);

/// Nearest centroid in the RKHS metric, smallest cell id among exact ties.
std::vector<Index> assign(const PointMatrix& X, const IndexList& centroids,
                          const KernelSpec& spec);

/// Routing of one query point to its cell.
template <typename Derived>
Index nearest_centroid(const PointMatrix& centroids, const KernelSpec& spec,
                       const Eigen::MatrixBase<Derived>& x) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index q = 0; q < centroids.rows(); ++q) {
    const double d = kernel::rkhs_dist_sq(spec, x, centroids.row(q));
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

Partition build_partition(const PointMatrix& X, const KernelSpec& spec, Index Q,
                          CentroidMode mode, std::uint64_t seed, PartitionStats* stats = nullptr);

/// JSON artifact with centroid indices and the assignment vector.
std::string partition_to_json(const Partition& p);
Partition partition_from_json(const std::string& text);

}  // namespace park
