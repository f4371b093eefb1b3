#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "park/errors.hpp"

namespace park {

/// Training inputs are stored one point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class KernelFamily { gaussian, laplacian, linear };

/// Kernel family plus its length-scale.
///
///   gaussian   K(x, x') = exp(-|x - x'|^2 / (2 s^2))
///   laplacian  K(x, x') = exp(-|x - x'|_1 / s)
///   linear     K(x, x') = <x, x'>        (bandwidth ignored)
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;

  void validate() const {
    if (family != KernelFamily::linear && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
      throw InputError("kernel bandwidth must be positive and finite");
  }

  /// sup_x K(x, x) when it is known a priori; 0 for the unbounded linear kernel.
  double kappa_sq() const { return family == KernelFamily::linear ? 0.0 : 1.0; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::laplacian: return "laplacian";
    case KernelFamily::linear: return "linear";
  }
  return "?";
}

inline KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian" || name == "rbf") return KernelFamily::gaussian;
  if (name == "laplacian") return KernelFamily::laplacian;
  if (name == "linear") return KernelFamily::linear;
  throw InputError("unknown kernel family '" + std::string(name) + "'");
}

namespace kernel {

namespace detail {
template <typename A, typename B>
void check_dims(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  if (x.size() != y.size() || x.size() == 0)
    throw InputError("kernel arguments must have the same nonzero dimension");
}
}  // namespace detail

/// K(x, x') for two points given as row or column vectors.
template <typename A, typename B>
typename A::Scalar eval(const KernelSpec& spec, const Eigen::MatrixBase<A>& x,
                        const Eigen::MatrixBase<B>& y) {
  using Scalar = typename A::Scalar;
  detail::check_dims(x, y);
  const Eigen::Index d = x.size();
  Scalar acc(0);
  switch (spec.family) {
    case KernelFamily::gaussian: {
      for (Eigen::Index k = 0; k < d; ++k) {
        const Scalar diff = x.coeff(k) - y.coeff(k);
        acc += diff * diff;
      }
      const Scalar s = Scalar(spec.bandwidth);
      return std::exp(-acc / (Scalar(2) * s * s));
    }
    case KernelFamily::laplacian: {
      for (Eigen::Index k = 0; k < d; ++k) acc += std::abs(x.coeff(k) - y.coeff(k));
      return std::exp(-acc / Scalar(spec.bandwidth));
    }
    case KernelFamily::linear: {
      for (Eigen::Index k = 0; k < d; ++k) acc += x.coeff(k) * y.coeff(k);
      return acc;
    }
  }
  return acc;
}

/// Squared RKHS distance |phi(x) - phi(c)|^2, clamped at zero.
template <typename A, typename B>
typename A::Scalar rkhs_dist_sq(const KernelSpec& spec, const Eigen::MatrixBase<A>& x,
                                const Eigen::MatrixBase<B>& c) {
  using Scalar = typename A::Scalar;
  const Scalar d = eval(spec, x, x) + eval(spec, c, c) - Scalar(2) * eval(spec, x, c);
  return std::max(d, Scalar(0));
}

/// Cross Gram matrix, entry (i, j) = eval(X_i, Y_j). Every entry goes
/// through eval(), so a Gram entry is bitwise equal to the pointwise value.
template <typename A, typename B>
Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, Eigen::Dynamic> gram(
    const KernelSpec& spec, const Eigen::MatrixBase<A>& X, const Eigen::MatrixBase<B>& Y) {
  if (X.cols() != Y.cols()) throw InputError("gram: point sets differ in dimension");
  Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, Eigen::Dynamic> G(X.rows(), Y.rows());
  for (Eigen::Index j = 0; j < Y.rows(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i) G(i, j) = eval(spec, X.row(i), Y.row(j));
  return G;
}

/// Symmetric Gram matrix of one point set; the upper triangle is mirrored.
template <typename A>
Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, Eigen::Dynamic> gram(
    const KernelSpec& spec, const Eigen::MatrixBase<A>& X) {
  const Eigen::Index n = X.rows();
  Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, Eigen::Dynamic> G(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      G(i, j) = eval(spec, X.row(i), X.row(j));
      G(j, i) = G(i, j);
    }
  }
  return G;
}

/// Diagonal K(x_i, x_i).
template <typename A>
Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, 1> diagonal(const KernelSpec& spec,
                                                             const Eigen::MatrixBase<A>& X) {
  Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, 1> v(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) v(i) = eval(spec, X.row(i), X.row(i));
  return v;
}

}  // namespace kernel
}  // namespace park
