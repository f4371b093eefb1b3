#include "park/local_solver.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace park {

using numerics::TriSide;

PointMatrix gather_rows(const PointMatrix& X, const IndexList& idx) {
  PointMatrix out(static_cast<Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = X.row(idx[k]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const IndexList& idx) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
  return out;
}

NystromSet sample_nystrom(const PointMatrix& Xq, Index m, std::uint64_t seed) {
  const Index n = Xq.rows();
  if (n < 1) throw InputError("sample_nystrom: empty cell");
  if (m < 1) throw InputError("sample_nystrom: m must be at least 1");
  NystromSet out;
  if (m >= n) {
    out.clamped = m > n;
    out.center_indices.resize(n);
    std::iota(out.center_indices.begin(), out.center_indices.end(), Index{0});
  } else {
    out.center_indices = uniform_centroids(n, m, seed);
  }
  out.points = gather_rows(Xq, out.center_indices);
  return out;
}

Eigen::MatrixXd Preconditioner::apply(const Eigen::MatrixXd& v) const {
  const Eigen::MatrixXd x = numerics::tri_solve(A, v, TriSide::lower_transposed);
  return numerics::tri_solve(T, x, TriSide::lower_transposed) / std::sqrt(double(n));
}

Eigen::MatrixXd Preconditioner::apply_transpose(const Eigen::MatrixXd& v) const {
  const Eigen::MatrixXd x = numerics::tri_solve(T, v, TriSide::lower);
  return numerics::tri_solve(A, x, TriSide::lower) / std::sqrt(double(n));
}

Preconditioner build_preconditioner(const Eigen::MatrixXd& K_m, Index n, double lambda) {
  if (!(lambda > 0.0)) throw InputError("build_preconditioner: lambda must be positive");
  if (n < 1) throw InputError("build_preconditioner: n must be at least 1");
  const Index m = K_m.rows();
  Preconditioner P;
  P.n = n;
  P.lambda = lambda;
  numerics::JitterPolicy kernel_policy;
  kernel_policy.jitter_first_attempt = true;
  try {
    P.T = numerics::cholesky(K_m, kernel_policy);
  } catch (const CholeskyError& e) {
    throw CholeskyError(std::string("preconditioner: factorization of K_m failed: ") + e.what(),
                        e.last_jitter());
  }
  Eigen::MatrixXd inner = P.T.L.transpose() * P.T.L / double(m);
  inner.diagonal().array() += lambda;
  try {
    P.A = numerics::cholesky(inner);
  } catch (const CholeskyError& e) {
    throw CholeskyError(
        std::string("preconditioner: factorization of T^T T / m + lambda I failed: ") + e.what(),
        e.last_jitter());
  }
  return P;
}

Eigen::MatrixXd Preconditioner::apply_system(const Eigen::MatrixXd& v) const {
  const double m = double(size());
  const Eigen::MatrixXd z = T.L.transpose() * v;
  const Eigen::MatrixXd inner = (double(n) / m) * (T.L.transpose() * (T.L * z)) + lambda * double(n) * z;
  return T.L * inner;
}

double preconditioner_probe(const Preconditioner& P, int probes, std::uint64_t seed) {
  const Index m = P.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    Eigen::VectorXd u(m);
    for (Index i = 0; i < m; ++i) u(i) = normal(rng);
    const Eigen::VectorXd back = P.apply_transpose(P.apply_system(P.apply(u)));
    worst = std::max(worst, (back - u).norm() / u.norm());
  }
  return worst;
}

namespace {

/// K_nm products computed block by block. The whole matrix is kept when it
/// fits in one block.
class StreamedKnm {
 public:
  StreamedKnm(const PointMatrix& X, const PointMatrix& C, const KernelSpec& spec, Index block_rows)
      : X_(X), C_(C), spec_(spec), block_(std::max<Index>(block_rows, 1)) {
    if (X_.rows() <= block_) cached_ = kernel::gram(spec_, X_, C_);
  }

  /// K_nm^T (K_nm v)
  Eigen::VectorXd normal(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(C_.rows());
    for_each_block([&](Index, const Eigen::MatrixXd& K) { out.noalias() += K.transpose() * (K * v); });
    return out;
  }

  /// K_nm^T u
  Eigen::VectorXd tmul(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(C_.rows());
    for_each_block([&](Index start, const Eigen::MatrixXd& K) {
      out.noalias() += K.transpose() * u.segment(start, K.rows());
    });
    return out;
  }

  /// K_nm v
  Eigen::VectorXd mul(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(X_.rows());
    for_each_block([&](Index start, const Eigen::MatrixXd& K) { out.segment(start, K.rows()) = K * v; });
    return out;
  }

 private:
  template <typename F>
  void for_each_block(F&& f) const {
    if (cached_.size() > 0 || X_.rows() == 0) {
      f(Index{0}, cached_);
      return;
    }
    for (Index start = 0; start < X_.rows(); start += block_) {
      const Index rows = std::min(block_, X_.rows() - start);
      f(start, kernel::gram(spec_, X_.middleRows(start, rows), C_));
    }
  }

  const PointMatrix& X_;
  const PointMatrix& C_;
  KernelSpec spec_;
  Index block_;
  Eigen::MatrixXd cached_;
};

}  // namespace

Eigen::VectorXd exact_krr(const PointMatrix& X, const Eigen::VectorXd& Y, const KernelSpec& spec,
                          double lambda) {
  if (!(lambda > 0.0)) throw InputError("exact_krr: lambda must be positive");
  const Index n = X.rows();
  if (n < 1) throw InputError("exact_krr: no training points");
  if (Y.size() != n) throw InputError("exact_krr: X and Y disagree in length");
  Eigen::MatrixXd K = kernel::gram(spec, X);
  K.diagonal().array() += lambda * double(n);
  const auto f = numerics::cholesky(K);
  return numerics::chol_solve(f, Y);
}

Eigen::VectorXd exact_nystrom(const PointMatrix& Xq, const Eigen::VectorXd& Yq,
                              const NystromSet& centers, const KernelSpec& spec, double lambda) {
  if (!(lambda > 0.0)) throw InputError("exact_nystrom: lambda must be positive");
  const Index n = Xq.rows();
  if (Yq.size() != n) throw InputError("exact_nystrom: X and Y disagree in length");
  const Eigen::MatrixXd Knm = kernel::gram(spec, Xq, centers.points);
  const Eigen::MatrixXd Km = kernel::gram(spec, centers.points);
  const Index m = Km.rows();
  // Stacked least squares [K_nm; sqrt(lambda n) R] a = [Y; 0] with R^T R = K_m,
  // solved by QR so the conditioning of K_nm is not squared.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Km);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd A(n + m, m);
  A.topRows(n) = Knm;
  A.bottomRows(m) = std::sqrt(lambda * double(n)) * root.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + m);
  b.head(n) = Yq;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  Eigen::VectorXd a = cod.solve(b);
  if (!a.allFinite()) throw NumericalError("exact_nystrom: least-squares solve failed");
  return a;
}

double local_objective(const PointMatrix& Xq, const Eigen::VectorXd& Yq, const NystromSet& centers,
                       const Preconditioner& P, const KernelSpec& spec, double lambda,
                       const Eigen::VectorXd& beta) {
  const Eigen::VectorXd alpha = P.apply(beta);
  const Eigen::MatrixXd Knm = kernel::gram(spec, Xq, centers.points);
  const Eigen::MatrixXd Km = kernel::gram(spec, centers.points);
  const double n = double(Xq.rows());
  return (Knm * alpha - Yq).squaredNorm() / n + lambda * alpha.dot(Km * alpha);
}

LocalModel pcg_train(const PointMatrix& Xq, const Eigen::VectorXd& Yq, const NystromSet& centers,
                     const Preconditioner& P, const KernelSpec& spec, double lambda,
                     const SolverOptions& opts) {
  if (opts.t < 1) throw InputError("pcg_train: t must be at least 1");
  if (!(lambda > 0.0)) throw InputError("pcg_train: lambda must be positive");
  const Index n = Xq.rows();
  if (Yq.size() != n) throw InputError("pcg_train: X and Y disagree in length");
  if (P.size() != centers.size()) throw InputError("pcg_train: preconditioner size mismatch");

  const StreamedKnm knm(Xq, centers.points, spec, opts.block_rows);
  const Eigen::MatrixXd Km = kernel::gram(spec, centers.points);
  const double inv_n = 1.0 / double(n);

  const Eigen::VectorXd rhs = P.apply_transpose(knm.tmul(Yq) * inv_n);
  auto op = [&](const Eigen::VectorXd& beta) -> Eigen::VectorXd {
    const Eigen::VectorXd v = P.apply(beta);
    const Eigen::VectorXd w = knm.normal(v) * inv_n + lambda * (Km * v);
    return P.apply_transpose(w);
  };
  auto result = numerics::cg<double>(op, rhs, opts.t, opts.tol, opts.observer);

  LocalModel model;
  model.centers = centers;
  model.coefficients = P.apply(result.solution);
  if (!model.coefficients.allFinite())
    throw numerics::CgError("pcg_train: non-finite coefficients", result.trace);
  model.lambda = lambda;
  model.n = n;
  model.iterations = result.trace.iterations;
  model.trace = std::move(result.trace);
  model.kernel_jitter = P.T.jitter_used;
  return model;
}

LocalModel falkon_fit(const PointMatrix& Xq, const Eigen::VectorXd& Yq, const KernelSpec& spec,
                      double lambda, Index m, std::uint64_t seed, const SolverOptions& opts) {
  NystromSet centers = sample_nystrom(Xq, m, seed);
  const Eigen::MatrixXd Km = kernel::gram(spec, centers.points);
  const Preconditioner P = build_preconditioner(Km, Xq.rows(), lambda);
  LocalModel model = pcg_train(Xq, Yq, centers, P, spec, lambda, opts);
  if (centers.size() <= opts.probe_max_m) model.probe_error = preconditioner_probe(P, 4, seed ^ 0x9e3779b97f4a7c15ULL);
  return model;
}

Eigen::VectorXd local_predict(const LocalModel& model, const KernelSpec& spec,
                              const PointMatrix& X) {
  Eigen::VectorXd out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out(i) = local_predict(model, spec, X.row(i));
  return out;
}

}  // namespace park
