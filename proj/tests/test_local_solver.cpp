#include <doctest.h>

#include <set>

#include "park/local_solver.hpp"
#include "support.hpp"

using namespace park;
using park::testing::random_points;
using park::testing::random_spd;
using park::testing::random_vector;
using park::testing::rel_err;

namespace {
const KernelSpec gauss{KernelFamily::gaussian, 1.0};

Eigen::VectorXd smooth_target(const PointMatrix& X, std::uint64_t seed) {
  Eigen::VectorXd y = X.col(0).array().sin() + 0.5 * X.col(1).array().cos();
  return y + 0.05 * random_vector(X.rows(), seed);
}

Eigen::MatrixXd bbt(const Preconditioner& P) {
  const Index m = P.size();
  return P.apply(P.apply_transpose(Eigen::MatrixXd::Identity(m, m)));
}
}  // namespace

TEST_CASE("exact_krr closed forms and defining equation") {
  PointMatrix x1 = PointMatrix::Zero(1, 2);
  Eigen::VectorXd y1(1);
  y1 << 3.0;
  CHECK(exact_krr(x1, y1, gauss, 0.5)(0) == doctest::Approx(3.0 / 1.5));

  const PointMatrix X = random_points(200, 2, 1);
  CHECK(exact_krr(X, Eigen::VectorXd::Zero(200), gauss, 1e-3).isZero(0.0));
  const Eigen::VectorXd Y = smooth_target(X, 2);
  const double lambda = 1e-4;
  const Eigen::VectorXd a = exact_krr(X, Y, gauss, lambda);
  Eigen::MatrixXd K = kernel::gram(gauss, X);
  K.diagonal().array() += lambda * 200;
  CHECK((K * a - Y).norm() / Y.norm() <= 1e-8);
  CHECK_THROWS_AS(exact_krr(X, Y, gauss, 0.0), InputError);
}

TEST_CASE("sample_nystrom") {
  const PointMatrix X = random_points(10, 2, 3);
  const NystromSet all = sample_nystrom(X, 15, 0);
  CHECK(all.clamped);
  CHECK(all.size() == 10);
  for (Index i = 0; i < 10; ++i) CHECK(all.center_indices[i] == i);
  CHECK(all.points == X);

  const NystromSet a = sample_nystrom(X, 4, 9), b = sample_nystrom(X, 4, 9);
  CHECK(a.center_indices == b.center_indices);
  CHECK(!a.clamped);
  CHECK(std::set<Index>(a.center_indices.begin(), a.center_indices.end()).size() == 4);
  for (Index k = 0; k < 4; ++k) CHECK(a.points.row(k) == X.row(a.center_indices[k]));

  std::vector<int> hits(10, 0);
  for (int s = 0; s < 1000; ++s)
    for (Index i : sample_nystrom(X, 3, static_cast<std::uint64_t>(s)).center_indices) ++hits[i];
  for (int h : hits) CHECK(std::abs(h / 1000.0 - 0.3) <= 0.05);

  CHECK_THROWS_AS(sample_nystrom(PointMatrix(0, 2), 1, 0), InputError);
  CHECK_THROWS_AS(sample_nystrom(X, 0, 0), InputError);
}

TEST_CASE("preconditioner on the identity") {
  const Index m = 6;
  const double lambda = 0.25;
  const Preconditioner P = build_preconditioner(Eigen::MatrixXd::Identity(m, m), m, lambda);
  // (n/m) I + lambda n I with n = m.
  const Eigen::MatrixXd expect = Eigen::MatrixXd::Identity(m, m) / (1.0 + lambda * double(m));
  CHECK(rel_err(bbt(P), expect) <= 1e-9);
}

TEST_CASE("preconditioner scalar case") {
  Eigen::MatrixXd K(1, 1);
  K << 0.8;
  const Index n = 30;
  const double lambda = 0.01;
  const Preconditioner P = build_preconditioner(K, n, lambda);
  const double expect = 1.0 / (double(n) * 0.8 * 0.8 + lambda * double(n) * 0.8);
  CHECK(bbt(P)(0, 0) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("preconditioner probe on random K_m") {
  const PointMatrix C = random_points(60, 3, 4);
  const Eigen::MatrixXd K = kernel::gram(gauss, C);
  const Preconditioner P = build_preconditioner(K, 500, 1e-3);
  CHECK(preconditioner_probe(P, 10, 5) <= 1e-6);

  // Ill-conditioned Gram matrices still pass; a corrupted inner factor does not.
  for (Index m : {100, 200}) {
    const Eigen::MatrixXd Kb = kernel::gram(KernelSpec{KernelFamily::gaussian, 3.0}, random_points(m, 2, 16));
    Preconditioner Pb = build_preconditioner(Kb, 1000, 1e-3);
    CHECK(preconditioner_probe(Pb, 10, 6) <= 1e-6);
    Pb.A.L *= 1.01;
    CHECK(preconditioner_probe(Pb, 10, 6) > 1e-3);
  }

  // Dense oracle for B B^T against the inverse of the defining matrix.
  const Eigen::MatrixXd SPD = random_spd(20, 6, 1.0);
  const Preconditioner Q = build_preconditioner(SPD, 100, 0.1);
  const Eigen::MatrixXd M = (100.0 / 20.0) * SPD * SPD + 0.1 * 100.0 * SPD;
  CHECK(rel_err(bbt(Q), M.inverse()) <= 1e-8);
  CHECK(rel_err(Q.apply(Eigen::MatrixXd::Identity(20, 20)).transpose(),
                Q.apply_transpose(Eigen::MatrixXd::Identity(20, 20))) <= 1e-12);
  CHECK_THROWS_AS(build_preconditioner(SPD, 100, 0.0), InputError);
}

TEST_CASE("exact_nystrom with all points as centers reduces to KRR") {
  const PointMatrix X = random_points(120, 2, 7);
  const Eigen::VectorXd Y = smooth_target(X, 8);
  const double lambda = 1e-3;
  const NystromSet all = sample_nystrom(X, 120, 0);
  const Eigen::VectorXd a = exact_nystrom(X, Y, all, gauss, lambda);
  const Eigen::VectorXd k = exact_krr(X, Y, gauss, lambda);
  const Eigen::MatrixXd K = kernel::gram(gauss, X);
  CHECK(rel_err(K * a, K * k) <= 1e-6);
  CHECK(exact_nystrom(X, Eigen::VectorXd::Zero(120), all, gauss, lambda).isZero(0.0));
}

TEST_CASE("exact_nystrom is a local minimum") {
  const PointMatrix X = random_points(300, 2, 9);
  const Eigen::VectorXd Y = smooth_target(X, 10);
  const double lambda = 1e-3;
  const NystromSet c = sample_nystrom(X, 40, 11);
  const Eigen::VectorXd a = exact_nystrom(X, Y, c, gauss, lambda);
  const Eigen::MatrixXd Knm = kernel::gram(gauss, X, c.points);
  const Eigen::MatrixXd Km = kernel::gram(gauss, c.points);
  auto objective = [&](const Eigen::VectorXd& v) {
    return (Knm * v - Y).squaredNorm() / 300.0 + lambda * v.dot(Km * v);
  };
  const double best = objective(a);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::VectorXd delta = 1e-3 * random_vector(40, 1000 + s);
    CHECK(best <= objective(a + delta) + 1e-14);
  }
}

TEST_CASE("pcg_train matches exact_nystrom and decreases the objective") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PointMatrix X = random_points(300, 2, 50 + seed);
    const Eigen::VectorXd Y = smooth_target(X, 90 + seed);
    const double lambda = 1e-3;
    const NystromSet c = sample_nystrom(X, 40, seed);
    const Preconditioner P = build_preconditioner(kernel::gram(gauss, c.points), 300, lambda);
    std::vector<double> objective;
    SolverOptions opts;
    opts.t = 60;
    opts.block_rows = 64;
    opts.observer = [&](int, const Eigen::VectorXd& beta) {
      objective.push_back(local_objective(X, Y, c, P, gauss, lambda, beta));
    };
    const LocalModel model = pcg_train(X, Y, c, P, gauss, lambda, opts);
    const Eigen::VectorXd ref = exact_nystrom(X, Y, c, gauss, lambda);
    const Eigen::MatrixXd Knm = kernel::gram(gauss, X, c.points);
    CHECK(rel_err(Knm * model.coefficients, Knm * ref) <= 1e-6);
    const double at_zero = local_objective(X, Y, c, P, gauss, lambda, Eigen::VectorXd::Zero(40));
    CHECK(at_zero == doctest::Approx(Y.squaredNorm() / 300.0));
    double prev = at_zero;
    for (double v : objective) {
      CHECK(v <= prev + 1e-10);
      prev = v;
    }
  }
}

TEST_CASE("pcg_train streaming does not change the result") {
  const PointMatrix X = random_points(257, 3, 13);
  const Eigen::VectorXd Y = smooth_target(X, 14);
  const NystromSet c = sample_nystrom(X, 30, 2);
  const Preconditioner P = build_preconditioner(kernel::gram(gauss, c.points), 257, 1e-2);
  SolverOptions a, b;
  a.t = b.t = 15;
  a.block_rows = 4096;
  b.block_rows = 10;
  const LocalModel ma = pcg_train(X, Y, c, P, gauss, 1e-2, a);
  const LocalModel mb = pcg_train(X, Y, c, P, gauss, 1e-2, b);
  CHECK(rel_err(mb.coefficients, ma.coefficients) <= 1e-10);
  CHECK(ma.iterations == 15);
}

TEST_CASE("zero targets give the zero model") {
  const PointMatrix X = random_points(50, 2, 15);
  const LocalModel m = falkon_fit(X, Eigen::VectorXd::Zero(50), gauss, 1e-3, 10, 0, SolverOptions{});
  CHECK(m.coefficients.isZero(0.0));
  CHECK(local_predict(m, gauss, X).isZero(0.0));
}

TEST_CASE("full centers and iterations reproduce exact KRR") {
  const PointMatrix X = random_points(150, 2, 16);
  const Eigen::VectorXd Y = smooth_target(X, 17);
  const double lambda = 1e-3;
  SolverOptions opts;
  opts.t = 150;
  const LocalModel m = falkon_fit(X, Y, gauss, lambda, 150, 3, opts);
  const Eigen::VectorXd k = exact_krr(X, Y, gauss, lambda);
  const Eigen::MatrixXd K = kernel::gram(gauss, X);
  CHECK(rel_err(local_predict(m, gauss, X), K * k) <= 1e-6);
  CHECK(m.probe_error <= 1e-6);
}

TEST_CASE("local_predict") {
  const PointMatrix X = random_points(20, 2, 18);
  const Eigen::VectorXd Y = smooth_target(X, 19);
  LocalModel m = falkon_fit(X, Y, gauss, 1e-2, 8, 1, SolverOptions{});
  const Eigen::VectorXd batch = local_predict(m, gauss, X);
  for (Index i = 0; i < X.rows(); ++i) CHECK(batch(i) == local_predict(m, gauss, X.row(i)));

  LocalModel one;
  one.centers.points = X.topRows(1);
  one.centers.center_indices = {0};
  one.coefficients = Eigen::VectorXd::Constant(1, 2.5);
  CHECK(local_predict(one, gauss, X.row(3)) == 2.5 * kernel::eval(gauss, X.row(0), X.row(3)));
  one.coefficients.setZero();
  CHECK(local_predict(one, gauss, X.row(3)) == 0.0);
  Eigen::RowVector3d wrong(1, 2, 3);
  CHECK_THROWS_AS(local_predict(one, gauss, wrong), InputError);
}
