#pragma once

#include <cstdint>
#include <functional>
#include <limits>

#include "park/kernel.hpp"
#include "park/numerics.hpp"
#include "park/partition.hpp"

namespace park {

/// Nystrom centers of one cell.
struct NystromSet {
  IndexList center_indices;  ///< positions in the cell's point list
  PointMatrix points;        ///< m x d
  bool clamped = false;      ///< requested m exceeded n_q

  Index size() const { return points.rows(); }
};

/// Uniform without-replacement sample of m of the rows of Xq; all rows, in
/// order, when m >= n_q.
NystromSet sample_nystrom(const PointMatrix& Xq, Index m, std::uint64_t seed);

/// Sketched preconditioner B with
///   B B^T = ((n/m) K_m^2 + lambda n K_m)^{-1},
///   B = n^{-1/2} T^{-T} A^{-T},
/// where T T^T = K_m (+ jitter) and A A^T = T^T T / m + lambda I.
/// B is never formed; both products are pairs of triangular solves.
struct Preconditioner {
  numerics::CholFactor<double> T;
  numerics::CholFactor<double> A;
  Index n = 0;
  double lambda = 0.0;

  Index size() const { return T.size(); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& v) const;
  Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd& v) const;
  /// ((n/m) K^2 + lambda n K) v with K = T T^T.
  Eigen::MatrixXd apply_system(const Eigen::MatrixXd& v) const;
};

Preconditioner build_preconditioner(const Eigen::MatrixXd& K_m, Index n, double lambda);

/// max_k |B^T M B u_k - u_k| / |u_k| over `probes` gaussian vectors, with
/// M = (n/m) K_m^2 + lambda n K_m evaluated through the jittered factor
/// T T^T. Equivalent to B B^T M = I, written as a similarity so that no
/// product with T is solved back against T.
double preconditioner_probe(const Preconditioner& P, int probes, std::uint64_t seed);

struct SolverOptions {
  int t = 20;              ///< CG iterations
  double tol = 0.0;        ///< relative residual stop; 0 runs exactly t iterations
  Index block_rows = 4096; ///< rows of K_nm materialized at a time
  /// Record the preconditioner probe residual when m <= this size.
  Index probe_max_m = 200;
  /// Sees the beta iterate after every CG iteration.
  std::function<void(int, const Eigen::VectorXd&)> observer;
};

/// FALKON-style estimator of one cell, f(x) = sum_i alpha_i K(c_i, x).
struct LocalModel {
  NystromSet centers;
  Eigen::VectorXd coefficients;  ///< alpha = B beta
  double lambda = 0.0;
  Index n = 0;                   ///< training points in the cell
  Index iterations = 0;
  numerics::CgTrace trace;
  double kernel_jitter = 0.0;    ///< jitter added to K_m before factorizing
  double probe_error = std::numeric_limits<double>::quiet_NaN();
};

/// alpha = (K_n + lambda n I)^{-1} Y.
Eigen::VectorXd exact_krr(const PointMatrix& X, const Eigen::VectorXd& Y, const KernelSpec& spec,
                          double lambda);

/// argmin_a (1/n)|K_nm a - Y|^2 + lambda a^T K_m a through the normal equations.
Eigen::VectorXd exact_nystrom(const PointMatrix& Xq, const Eigen::VectorXd& Yq,
                              const NystromSet& centers, const KernelSpec& spec, double lambda);

/// L(beta) = (1/n)|K_nm B beta - Y|^2 + lambda beta^T B^T K_m B beta.
double local_objective(const PointMatrix& Xq, const Eigen::VectorXd& Yq, const NystromSet& centers,
                       const Preconditioner& P, const KernelSpec& spec, double lambda,
                       const Eigen::VectorXd& beta);

/// t iterations of CG on the preconditioned normal equations of L(beta).
LocalModel pcg_train(const PointMatrix& Xq, const Eigen::VectorXd& Yq, const NystromSet& centers,
                     const Preconditioner& P, const KernelSpec& spec, double lambda,
                     const SolverOptions& opts);

/// Sample centers, build the preconditioner and run pcg_train.
LocalModel falkon_fit(const PointMatrix& Xq, const Eigen::VectorXd& Yq, const KernelSpec& spec,
                      double lambda, Index m, std::uint64_t seed, const SolverOptions& opts);

template <typename Derived>
double local_predict(const LocalModel& model, const KernelSpec& spec,
                     const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.centers.points.cols())
    throw InputError("local_predict: query dimension does not match the model");
  double acc = 0.0;
  for (Index i = 0; i < model.centers.size(); ++i)
    acc += model.coefficients(i) * kernel::eval(spec, model.centers.points.row(i), x);
  return acc;
}

Eigen::VectorXd local_predict(const LocalModel& model, const KernelSpec& spec,
                              const PointMatrix& X);

/// Rows of X selected by idx.
PointMatrix gather_rows(const PointMatrix& X, const IndexList& idx);
Eigen::VectorXd gather(const Eigen::VectorXd& v, const IndexList& idx);

}  // namespace park
