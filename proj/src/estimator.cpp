#include "park/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <numeric>
#include <random>

namespace park {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct CellJob {
  IndexList rows;
  CellHyper hyper;
  std::uint64_t seed = 0;
};

/// Trains every job, sequentially or with one task per job. Results are
/// independent of the schedule.
std::vector<LocalModel> train_cells(const PointMatrix& X, const Eigen::VectorXd& Y,
                                    const KernelSpec& spec, const std::vector<CellJob>& jobs,
                                    const SolverOptions& solver, bool parallel,
                                    std::vector<double>& seconds) {
  auto run = [&](const CellJob& job, double& elapsed) {
    const auto start = Clock::now();
    const PointMatrix Xq = gather_rows(X, job.rows);
    const Eigen::VectorXd Yq = gather(Y, job.rows);
    LocalModel model = falkon_fit(Xq, Yq, spec, job.hyper.lambda, job.hyper.m, job.seed, solver);
    elapsed = seconds_since(start);
    return model;
  };
  std::vector<LocalModel> models(jobs.size());
  seconds.assign(jobs.size(), 0.0);
  if (!parallel) {
    for (std::size_t q = 0; q < jobs.size(); ++q) models[q] = run(jobs[q], seconds[q]);
    return models;
  }
  std::vector<std::future<LocalModel>> pending;
  pending.reserve(jobs.size());
  for (std::size_t q = 0; q < jobs.size(); ++q)
    pending.push_back(std::async(std::launch::async, run, std::cref(jobs[q]), std::ref(seconds[q])));
  for (std::size_t q = 0; q < jobs.size(); ++q) models[q] = pending[q].get();
  return models;
}

void check_training_data(const PointMatrix& X, const Eigen::VectorXd& Y) {
  if (X.rows() < 1 || X.cols() < 1) throw InputError("training set is empty");
  if (Y.size() != X.rows()) throw InputError("X and Y disagree in length");
  if (!X.allFinite() || !Y.allFinite()) throw InputError("training data has non-finite values");
}

}  // namespace

void ParkConfig::validate(Index n) const {
  if (q < 1) throw InputError("partition.q must be at least 1");
  if (q > n) throw InputError("partition.q exceeds the number of training points");
  if (!(lambda > 0.0)) throw InputError("solver.lambda must be positive");
  if (m < q) throw InputError("solver.m must be at least partition.q");
  if (solver.t < 1) throw InputError("solver.t must be at least 1");
  if (solver.block_rows < 1) throw InputError("solver.block_rows must be at least 1");
}

void DncConfig::validate(Index n) const {
  if (q < 1) throw InputError("partition.q must be at least 1");
  if (q > n) throw InputError("partition.q exceeds the number of training points");
  if (!(lambda > 0.0)) throw InputError("solver.lambda must be positive");
  if (m < q) throw InputError("solver.m must be at least partition.q");
  if (!(center_multiplier >= 1.0)) throw InputError("dnc.center_multiplier must be >= 1");
  if (solver.t < 1) throw InputError("solver.t must be at least 1");
}

std::vector<CellHyper> scale_hyperparameters(double lambda, Index m, const Partition& partition) {
  const Index n = partition.num_points();
  std::vector<CellHyper> out(partition.num_cells());
  for (Index q = 0; q < partition.num_cells(); ++q) {
    const Index nq = partition.cell_size(q);
    out[q].lambda = lambda / partition.cell_fractions[q];
    // ceil(m * n_q / n) in exact integer arithmetic
    const Index mq = (m * nq + n - 1) / n;
    out[q].m = std::max<Index>(1, std::min(mq, nq));
  }
  return out;
}

std::uint64_t cell_seed(std::uint64_t seed, Index q) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(q)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (std::uint64_t(words[0]) << 32) | words[1];
}

ParkModel park_train(const PointMatrix& X, const Eigen::VectorXd& Y, const KernelSpec& spec,
                     const ParkConfig& config) {
  check_training_data(X, Y);
  spec.validate();
  config.validate(X.rows());
  const auto start = Clock::now();
  Partition partition = build_partition(X, spec, config.q, config.mode, config.partition_seed);
  const double init = seconds_since(start);
  ParkModel model = park_train(X, Y, spec, config, std::move(partition));
  model.timing.init_seconds = init;
  return model;
}

ParkModel park_train(const PointMatrix& X, const Eigen::VectorXd& Y, const KernelSpec& spec,
                     const ParkConfig& config, Partition partition) {
  check_training_data(X, Y);
  spec.validate();
  if (partition.num_points() != X.rows()) throw InputError("partition does not match X");
  partition.validate();

  ParkModel model;
  model.spec = spec;
  model.lambda = config.lambda;
  model.m = config.m;
  model.t = config.solver.t;
  model.centroids = gather_rows(X, partition.centroid_indices);
  if (config.scale) {
    model.hyper = scale_hyperparameters(config.lambda, config.m, partition);
  } else {
    model.hyper.assign(partition.num_cells(), CellHyper{config.lambda, config.m});
    for (Index q = 0; q < partition.num_cells(); ++q)
      model.hyper[q].m = std::min(config.m, partition.cell_size(q));
  }

  std::vector<CellJob> jobs(partition.num_cells());
  for (Index q = 0; q < partition.num_cells(); ++q)
    jobs[q] = {partition.cells[q], model.hyper[q], cell_seed(config.solver_seed, q)};
  const auto start = Clock::now();
  model.cells = train_cells(X, Y, spec, jobs, config.solver, config.parallel,
                            model.timing.cell_seconds);
  model.timing.train_seconds = seconds_since(start);
  model.partition = std::move(partition);
  return model;
}

Eigen::VectorXd park_predict(const ParkModel& model, const PointMatrix& X,
                             PredictCounter* counter) {
  Eigen::VectorXd out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out(i) = park_predict(model, X.row(i), counter);
  return out;
}

std::vector<IndexList> random_split(Index n, Index Q, std::uint64_t seed) {
  if (Q < 1 || Q > n) throw InputError("random_split: need 1 <= Q <= n");
  IndexList perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<IndexList> out(Q);
  for (Index k = 0; k < n; ++k) out[k % Q].push_back(perm[k]);
  for (auto& s : out) std::sort(s.begin(), s.end());
  return out;
}

DncModel dnc_train(const PointMatrix& X, const Eigen::VectorXd& Y, const KernelSpec& spec,
                   const DncConfig& config) {
  check_training_data(X, Y);
  spec.validate();
  config.validate(X.rows());
  DncModel model;
  model.spec = spec;
  model.lambda = config.lambda;
  model.m = config.m;
  model.t = config.solver.t;
  const auto start = Clock::now();
  model.splits = random_split(X.rows(), config.q, config.split_seed);

  const Index n = X.rows();
  std::vector<CellJob> jobs(model.splits.size());
  for (std::size_t q = 0; q < model.splits.size(); ++q) {
    const Index nq = static_cast<Index>(model.splits[q].size());
    CellHyper h;
    h.lambda = config.lambda * double(n) / double(nq);
    const Index base = (config.m * nq + n - 1) / n;
    const auto boosted = static_cast<Index>(std::ceil(config.center_multiplier * double(base)));
    h.m = std::max<Index>(1, std::min(boosted, nq));
    model.hyper.push_back(h);
    jobs[q] = {model.splits[q], h, cell_seed(config.solver_seed, static_cast<Index>(q))};
  }
  model.models = train_cells(X, Y, spec, jobs, config.solver, config.parallel,
                             model.timing.cell_seconds);
  model.timing.train_seconds = seconds_since(start);
  return model;
}

Eigen::VectorXd dnc_predict(const DncModel& model, const PointMatrix& X) {
  Eigen::VectorXd out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out(i) = dnc_predict(model, X.row(i));
  return out;
}

ParkModel falkon_global_train(const PointMatrix& X, const Eigen::VectorXd& Y,
                              const KernelSpec& spec, double lambda, Index m,
                              const SolverOptions& solver, std::uint64_t solver_seed) {
  ParkConfig config;
  config.q = 1;
  config.lambda = lambda;
  config.m = m;
  config.solver = solver;
  config.solver_seed = solver_seed;
  check_training_data(X, Y);
  config.validate(X.rows());
  Partition single = Partition::from_assignment({0}, std::vector<Index>(X.rows(), 0));
  return park_train(X, Y, spec, config, std::move(single));
}

}  // namespace park
