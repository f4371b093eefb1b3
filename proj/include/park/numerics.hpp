#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "park/errors.hpp"

namespace park::numerics {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Jitter schedule for cholesky(): jitter_k = initial_relative * growth^k * trace/m.
struct JitterPolicy {
  double initial_relative = 1e-12;
  double growth = 10.0;
  int max_escalations = 10;
  /// When false the unjittered matrix is tried first.
  bool jitter_first_attempt = false;
};

/// Lower factor L with L L^T = A + jitter_used * I.
template <typename Scalar>
struct CholFactor {
  Mat<Scalar> L;
  Scalar jitter_used = Scalar(0);

  Eigen::Index size() const { return L.rows(); }
  Mat<Scalar> reconstruct() const { return L * L.transpose(); }
};

template <typename Derived>
CholFactor<typename Derived::Scalar> cholesky(const Eigen::MatrixBase<Derived>& A,
                                               const JitterPolicy& policy = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index m = A.rows();
  if (m < 1 || A.cols() != m) throw InputError("cholesky: matrix must be square and nonempty");
  if (!A.allFinite()) throw NumericalError("cholesky: matrix has non-finite entries");
  const Scalar norm = A.norm();
  if ((A - A.transpose()).norm() > Scalar(1e-10) * norm)
    throw InputError("cholesky: matrix is not symmetric");

  const Scalar trace = A.trace();
  const Scalar scale = trace > Scalar(0) ? trace / Scalar(m) : Scalar(1);

  auto attempt = [&](Scalar jitter, CholFactor<Scalar>& out) {
    Mat<Scalar> work = A;
    work.diagonal().array() += jitter;
    Eigen::LLT<Mat<Scalar>> llt(work);
    if (llt.info() != Eigen::Success) return false;
    out.L = llt.matrixL();
    if (!out.L.allFinite() || (out.L.diagonal().array() <= Scalar(0)).any()) return false;
    out.jitter_used = jitter;
    return true;
  };

  CholFactor<Scalar> f;
  if (!policy.jitter_first_attempt && attempt(Scalar(0), f)) return f;
  Scalar jitter = Scalar(policy.initial_relative) * scale;
  for (int k = 0; k <= policy.max_escalations; ++k) {
    if (attempt(jitter, f)) return f;
    if (k < policy.max_escalations) jitter *= Scalar(policy.growth);
  }
  throw CholeskyError("cholesky: factorization failed after jitter escalation (last jitter " +
                          std::to_string(static_cast<double>(jitter)) + ")",
                      static_cast<double>(jitter));
}

enum class TriSide {
  lower,             ///< solve L X = B
  upper,             ///< solve U X = B with U = L^T, the upper Cholesky factor
  lower_transposed,  ///< solve L^T X = B (same system as `upper`)
};

template <typename Scalar, typename Derived>
Mat<Scalar> tri_solve(const Mat<Scalar>& L, const Eigen::MatrixBase<Derived>& B, TriSide side) {
  if (L.rows() != L.cols() || L.rows() != B.rows())
    throw InputError("tri_solve: shapes are not conformable");
  for (Eigen::Index i = 0; i < L.rows(); ++i)
    if (L(i, i) == Scalar(0) || !std::isfinite(static_cast<double>(L(i, i))))
      throw NumericalError("tri_solve: singular triangular factor");
  if (B.cols() == 0) return Mat<Scalar>(B.rows(), 0);
  if (side == TriSide::lower) return L.template triangularView<Eigen::Lower>().solve(B);
  return L.transpose().template triangularView<Eigen::Upper>().solve(B);
}

template <typename Scalar, typename Derived>
Mat<Scalar> tri_solve(const CholFactor<Scalar>& f, const Eigen::MatrixBase<Derived>& B,
                      TriSide side) {
  return tri_solve<Scalar>(f.L, B, side);
}

/// Solve (L L^T) X = B.
template <typename Scalar, typename Derived>
Mat<Scalar> chol_solve(const CholFactor<Scalar>& f, const Eigen::MatrixBase<Derived>& B) {
  return tri_solve<Scalar>(f.L, tri_solve<Scalar>(f.L, B, TriSide::lower),
                           TriSide::lower_transposed);
}

template <typename Scalar>
struct SymEig {
  Vec<Scalar> values;   ///< ascending
  Mat<Scalar> vectors;  ///< orthonormal columns
};

template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  if (A.rows() != A.cols()) throw InputError("sym_eig: matrix must be square");
  if (A.rows() == 0) return {};
  if (!A.allFinite()) throw NumericalError("sym_eig: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(A.eval());
  if (es.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Per-iteration record of a conjugate gradient run.
struct CgTrace {
  double initial_residual = 0.0;
  std::vector<double> residual_norms;  ///< one entry per completed iteration
  int iterations = 0;
  bool converged = false;
};

class CgError : public NumericalError {
 public:
  CgError(const std::string& what, CgTrace trace) : NumericalError(what), trace_(std::move(trace)) {}
  const CgTrace& trace() const { return trace_; }

 private:
  CgTrace trace_;
};

template <typename Scalar>
struct CgResult {
  Vec<Scalar> solution;
  CgTrace trace;
};

/// Conjugate gradient from the zero iterate on a symmetric PSD operator.
///
/// `apply(v)` must return the operator applied to v. Stops after `t_max`
/// iterations, or once |r| <= tol * |b|, or on curvature breakdown
/// (p^T A p <= 0). `observer(k, x)`, when set, sees the iterate after each
/// iteration k = 1..iterations.
template <typename Scalar, typename Apply>
CgResult<Scalar> cg(Apply&& apply, const Vec<Scalar>& b, int t_max, double tol,
                    const std::function<void(int, const Vec<Scalar>&)>& observer = {}) {
  if (t_max < 1) throw InputError("cg: t_max must be at least 1");
  if (tol < 0.0) throw InputError("cg: tol must be nonnegative");
  CgResult<Scalar> out;
  out.solution = Vec<Scalar>::Zero(b.size());
  CgTrace& trace = out.trace;

  const double bnorm = static_cast<double>(b.norm());
  if (!std::isfinite(bnorm)) throw CgError("cg: right-hand side is not finite", trace);
  trace.initial_residual = bnorm;
  const double stop = tol * bnorm;
  if (bnorm <= stop) {
    trace.converged = true;
    return out;
  }

  Vec<Scalar> r = b;
  Vec<Scalar> p = r;
  Scalar rr = r.squaredNorm();
  for (int k = 1; k <= t_max; ++k) {
    const Vec<Scalar> Ap = apply(p);
    const Scalar pAp = p.dot(Ap);
    if (!std::isfinite(static_cast<double>(pAp)))
      throw CgError("cg: non-finite curvature at iteration " + std::to_string(k), trace);
    if (pAp <= Scalar(0)) break;
    const Scalar alpha = rr / pAp;
    out.solution.noalias() += alpha * p;
    r.noalias() -= alpha * Ap;
    const Scalar rr_next = r.squaredNorm();
    const double rnorm = std::sqrt(static_cast<double>(rr_next));
    trace.residual_norms.push_back(rnorm);
    trace.iterations = k;
    if (!std::isfinite(rnorm) || !out.solution.allFinite())
      throw CgError("cg: non-finite iterate at iteration " + std::to_string(k), trace);
    if (observer) observer(k, out.solution);
    if (rnorm <= stop) {
      trace.converged = true;
      break;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return out;
}

}  // namespace park::numerics
