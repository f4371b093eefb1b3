#include "park/partition.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <random>

namespace park {

CentroidMode parse_centroid_mode(const std::string& name) {
  if (name == "greedy") return CentroidMode::greedy;
  if (name == "uniform") return CentroidMode::uniform;
  throw InputError("unknown partition mode '" + name + "'");
}

std::string to_string(CentroidMode mode) {
  return mode == CentroidMode::greedy ? "greedy" : "uniform";
}

Partition Partition::from_assignment(IndexList centroids, std::vector<Index> assignment) {
  Partition p;
  p.centroid_indices = std::move(centroids);
  p.assignment = std::move(assignment);
  const Index Q = p.num_cells();
  p.cells.assign(Q, {});
  for (Index i = 0; i < p.num_points(); ++i) {
    const Index q = p.assignment[i];
    if (q < 0 || q >= Q) throw InputError("partition: assignment refers to a missing cell");
    p.cells[q].push_back(i);
  }
  const double n = static_cast<double>(p.num_points());
  p.cell_fractions.resize(Q);
  for (Index q = 0; q < Q; ++q) p.cell_fractions[q] = static_cast<double>(p.cells[q].size()) / n;
  return p;
}

void Partition::validate() const {
  const Index Q = num_cells();
  const Index n = num_points();
  if (Q < 1 || n < 1) throw InputError("partition: empty");
  if (static_cast<Index>(cells.size()) != Q || static_cast<Index>(cell_fractions.size()) != Q)
    throw InputError("partition: cell table size mismatch");
  std::vector<char> seen(n, 0);
  Index total = 0;
  for (Index q = 0; q < Q; ++q) {
    for (Index i : cells[q]) {
      if (i < 0 || i >= n || seen[i]) throw InputError("partition: cells overlap or overflow");
      if (assignment[i] != q) throw InputError("partition: assignment disagrees with cells");
      seen[i] = 1;
    }
    total += cell_size(q);
  }
  if (total != n) throw InputError("partition: cells do not cover the training set");
  for (Index c : centroid_indices)
    if (c < 0 || c >= n) throw InputError("partition: centroid index out of range");
}

IndexList greedy_centroids(const PointMatrix& X, const KernelSpec& spec, Index Q,
                           GreedyTrace* trace) {
  const Index n = X.rows();
  if (Q < 1) throw InputError("greedy_centroids: Q must be at least 1");
  if (Q > n) throw InputError("greedy_centroids: Q exceeds the number of points");

  Eigen::VectorXd residual = kernel::diagonal(spec, X);
  const double kappa_sq = residual.maxCoeff();
  const double floor = 1e-12 * kappa_sq;
  // Rows of the partial pivoted Cholesky factor, one column per selection.
  Eigen::MatrixXd factor(n, Q);
  std::vector<char> taken(n, 0);
  IndexList selected;
  selected.reserve(Q);

  for (Index step = 0; step < Q; ++step) {
    Index pivot = -1;
    double best = floor;
    for (Index c = 0; c < n; ++c) {
      if (!taken[c] && residual(c) > best) {
        best = residual(c);
        pivot = c;
      }
    }
    if (pivot < 0) {
      throw DegenerateRankError("greedy_centroids: only " + std::to_string(step) +
                                    " centroids are selectable before the residual vanishes",
                                static_cast<std::size_t>(step));
    }
    selected.push_back(pivot);
    taken[pivot] = 1;
    if (trace) trace->pivots.push_back(best);

    const double root = std::sqrt(best);
    for (Index c = 0; c < n; ++c) {
      if (taken[c] && c != pivot) {
        factor(c, step) = 0.0;
        continue;
      }
      double v = kernel::eval(spec, X.row(c), X.row(pivot));
      for (Index j = 0; j < step; ++j) v -= factor(c, j) * factor(pivot, j);
      factor(c, step) = v / root;
    }
    for (Index c = 0; c < n; ++c) {
      if (taken[c]) {
        residual(c) = 0.0;
        continue;
      }
      residual(c) = std::max(residual(c) - factor(c, step) * factor(c, step), 0.0);
    }
    if (trace) trace->residuals.push_back(residual);
  }
  return selected;
}

IndexList uniform_centroids(Index n, Index Q, std::uint64_t seed) {
  if (Q < 1) throw InputError("uniform_centroids: Q must be at least 1");
  if (Q > n) throw InputError("uniform_centroids: Q exceeds the number of points");
  IndexList pool(n);
  std::iota(pool.begin(), pool.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index k = 0; k < Q; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  pool.resize(Q);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<Index> assign(const PointMatrix& X, const IndexList& centroids,
                          const KernelSpec& spec) {
  if (centroids.empty()) throw InputError("assign: no centroids");
  PointMatrix C(static_cast<Index>(centroids.size()), X.cols());
  for (std::size_t q = 0; q < centroids.size(); ++q) {
    if (centroids[q] < 0 || centroids[q] >= X.rows())
      throw InputError("assign: centroid index out of range");
    C.row(static_cast<Index>(q)) = X.row(centroids[q]);
  }
  std::vector<Index> out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out[i] = nearest_centroid(C, spec, X.row(i));
  return out;
}

Partition build_partition(const PointMatrix& X, const KernelSpec& spec, Index Q,
                          CentroidMode mode, std::uint64_t seed, PartitionStats* stats) {
  spec.validate();
  IndexList centroids = mode == CentroidMode::greedy ? greedy_centroids(X, spec, Q)
                                                     : uniform_centroids(X.rows(), Q, seed);
  std::vector<Index> labels = assign(X, centroids, spec);

  // Drop cells nobody landed in and renumber the rest in order.
  std::vector<Index> counts(centroids.size(), 0);
  for (Index l : labels) ++counts[l];
  std::vector<Index> remap(centroids.size(), -1);
  IndexList kept;
  for (std::size_t q = 0; q < centroids.size(); ++q) {
    if (counts[q] > 0) {
      remap[q] = static_cast<Index>(kept.size());
      kept.push_back(centroids[q]);
    }
  }
  for (Index& l : labels) l = remap[l];

  Partition p = Partition::from_assignment(std::move(kept), std::move(labels));
  if (stats) {
    stats->empty_cells_removed = static_cast<Index>(centroids.size()) - p.num_cells();
    stats->min_cell = p.num_points();
    stats->max_cell = 0;
    for (Index q = 0; q < p.num_cells(); ++q) {
      stats->min_cell = std::min(stats->min_cell, p.cell_size(q));
      stats->max_cell = std::max(stats->max_cell, p.cell_size(q));
    }
    stats->mean_cell = static_cast<double>(p.num_points()) / static_cast<double>(p.num_cells());
  }
  return p;
}

std::string partition_to_json(const Partition& p) {
  nlohmann::json j;
  j["format"] = "park-partition";
  j["version"] = 1;
  j["centroid_indices"] = p.centroid_indices;
  j["assignment"] = p.assignment;
  return j.dump();
}

Partition partition_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("partition json: ") + e.what());
  }
  if (j.value("format", "") != "park-partition")
    throw InputError("partition json: not a partition artifact");
  Partition p = Partition::from_assignment(j.at("centroid_indices").get<IndexList>(),
                                           j.at("assignment").get<std::vector<Index>>());
  p.validate();
  return p;
}

}  // namespace park
