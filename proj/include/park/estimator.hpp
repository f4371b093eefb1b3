#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "park/local_solver.hpp"
#include "park/partition.hpp"

namespace park {

struct ParkConfig {
  Index q = 32;                          ///< number of cells
  CentroidMode mode = CentroidMode::greedy;
  std::uint64_t partition_seed = 0;
  double lambda = 1e-6;                  ///< global regularization
  Index m = 1000;                        ///< global Nystrom budget
  SolverOptions solver;                  ///< t, tol, block size
  std::uint64_t solver_seed = 0;
  bool scale = true;                     ///< lambda_q = lambda / rho_q, m_q = ceil(m rho_q)
  bool parallel = false;                 ///< train cells concurrently

  void validate(Index n) const;
};

struct CellHyper {
  double lambda = 0.0;
  Index m = 0;
};

/// lambda_q = lambda / rho_q and m_q = min(ceil(m rho_q), n_q), at least 1.
std::vector<CellHyper> scale_hyperparameters(double lambda, Index m, const Partition& partition);

/// Seed of the Nystrom sampler of cell q; identical for sequential and
/// parallel schedules.
std::uint64_t cell_seed(std::uint64_t seed, Index q);

struct TrainTiming {
  double init_seconds = 0.0;   ///< centroid selection and assignment
  double train_seconds = 0.0;  ///< all local solvers
  std::vector<double> cell_seconds;
  double total() const { return init_seconds + train_seconds; }
};

/// Partitioned estimator: one local FALKON model per Voronoi cell.
struct ParkModel {
  KernelSpec spec;
  Partition partition;
  PointMatrix centroids;  ///< Q x d
  std::vector<LocalModel> cells;
  std::vector<CellHyper> hyper;
  double lambda = 0.0;
  Index m = 0;
  int t = 0;
  TrainTiming timing;

  Index num_cells() const { return static_cast<Index>(cells.size()); }
  Index dim() const { return centroids.cols(); }
};

ParkModel park_train(const PointMatrix& X, const Eigen::VectorXd& Y, const KernelSpec& spec,
                     const ParkConfig& config);

/// Train from a given partition (skips centroid selection).
ParkModel park_train(const PointMatrix& X, const Eigen::VectorXd& Y, const KernelSpec& spec,
                     const ParkConfig& config, Partition partition);

/// Counts local model evaluations made by park_predict.
struct PredictCounter {
  std::size_t local_evaluations = 0;
};

template <typename Derived>
Index park_route(const ParkModel& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.dim()) throw InputError("park_predict: query dimension mismatch");
  return nearest_centroid(model.centroids, model.spec, x);
}

template <typename Derived>
double park_predict(const ParkModel& model, const Eigen::MatrixBase<Derived>& x,
                    PredictCounter* counter = nullptr) {
  const Index q = park_route(model, x);
  if (counter) ++counter->local_evaluations;
  return local_predict(model.cells[q], model.spec, x);
}

Eigen::VectorXd park_predict(const ParkModel& model, const PointMatrix& X,
                             PredictCounter* counter = nullptr);

struct DncConfig {
  Index q = 32;
  std::uint64_t split_seed = 0;
  double lambda = 1e-6;
  Index m = 1000;
  double center_multiplier = 1.0;  ///< 1 for v1; >1 for v2
  SolverOptions solver;
  std::uint64_t solver_seed = 0;
  bool parallel = false;

  void validate(Index n) const;
};

/// Divide-and-conquer baseline: models on a uniform random split, averaged.
struct DncModel {
  KernelSpec spec;
  std::vector<IndexList> splits;
  std::vector<LocalModel> models;
  std::vector<CellHyper> hyper;
  double lambda = 0.0;
  Index m = 0;
  int t = 0;
  TrainTiming timing;

  Index dim() const { return models.empty() ? 0 : models.front().centers.points.cols(); }
};

/// Random split into Q subsets whose sizes differ by at most one; each subset
/// is sorted ascending.
std::vector<IndexList> random_split(Index n, Index Q, std::uint64_t seed);

DncModel dnc_train(const PointMatrix& X, const Eigen::VectorXd& Y, const KernelSpec& spec,
                   const DncConfig& config);

template <typename Derived>
double dnc_predict(const DncModel& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.dim()) throw InputError("dnc_predict: query dimension mismatch");
  double acc = 0.0;
  for (const LocalModel& local : model.models) acc += local_predict(local, model.spec, x);
  return acc / double(model.models.size());
}

Eigen::VectorXd dnc_predict(const DncModel& model, const PointMatrix& X);

/// Single global FALKON model, i.e. ParK with one cell.
ParkModel falkon_global_train(const PointMatrix& X, const Eigen::VectorXd& Y,
                              const KernelSpec& spec, double lambda, Index m,
                              const SolverOptions& solver, std::uint64_t solver_seed);

// Binary model artifact: magic "PARK1", little-endian, 64-bit floats.
void write_model(std::ostream& out, const ParkModel& model);
void write_model(std::ostream& out, const DncModel& model);
std::string serialize(const ParkModel& model);
std::string serialize(const DncModel& model);

enum class ModelKind : std::uint32_t { partitioned = 0, averaged = 1 };

/// Kind stored in an artifact header.
ModelKind peek_model_kind(const std::string& bytes);
ParkModel deserialize_park(const std::string& bytes);
DncModel deserialize_dnc(const std::string& bytes);

void save_model_file(const std::string& path, const std::string& bytes);
std::string load_model_file(const std::string& path);

}  // namespace park
