#pragma once

#include <random>

#include <Eigen/Dense>

#include "park/kernel.hpp"

namespace park::testing {

inline PointMatrix random_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  PointMatrix X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) X(i, k) = scale * g(rng);
  return X;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

inline Eigen::MatrixXd random_spd(Eigen::Index m, std::uint64_t seed, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd G(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) G(i, j) = g(rng);
  Eigen::MatrixXd A = G * G.transpose();
  A.diagonal().array() += shift;
  return A;
}

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double denom = b.norm();
  return denom > 0 ? (a - b).norm() / denom : (a - b).norm();
}

}  // namespace park::testing
