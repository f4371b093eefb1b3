#include <doctest.h>

#include <numeric>

#include "park/dataset.hpp"
#include "park/diagnostics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace park;
using namespace park::diagnostics;
using park::testing::random_points;
using park::testing::random_vector;
using park::testing::rel_err;

namespace {
const KernelSpec gauss{KernelFamily::gaussian, 1.0};
const KernelSpec linear{KernelFamily::linear, 1.0};

Partition halves(Index n) {
  std::vector<Index> labels(n);
  for (Index i = 0; i < n; ++i) labels[i] = i < n / 2 ? 0 : 1;
  return Partition::from_assignment({0, n / 2}, labels);
}

Partition contiguous(Index n, Index Q) {
  std::vector<Index> labels(n);
  IndexList centroids;
  for (Index i = 0; i < n; ++i) labels[i] = i * Q / n;
  for (Index q = 0; q < Q; ++q) centroids.push_back(q * n / Q + (q * n % Q != 0));
  for (Index q = 0; q < Q; ++q)
    for (Index i = 0; i < n; ++i)
      if (labels[i] == q) {
        centroids[q] = i;
        break;
      }
  return Partition::from_assignment(centroids, labels);
}

/// Points on coordinate axis k of R^d, one cell per axis.
PointMatrix axis_points(Index per_axis, Index d, std::uint64_t seed) {
  PointMatrix X = PointMatrix::Zero(per_axis * d, d);
  const Eigen::VectorXd t = random_vector(per_axis * d, seed);
  for (Index i = 0; i < per_axis * d; ++i) X(i, i / per_axis) = 1.0 + 0.5 * t(i);
  return X;
}

GroundTruth truth_on(const PointMatrix& X, const IndexList& support, const Eigen::VectorXd& w,
                     const KernelSpec& spec) {
  GroundTruth g;
  g.support_indices = support;
  g.support = gather_rows(X, support);
  g.weights = w;
  g.values = g.evaluate(spec, X);
  return g;
}
}  // namespace

TEST_CASE("excess risk by hand") {
  Eigen::VectorXd a(5), b(5);
  a << 1, 2, 3, 4, 5;
  b << 1, 2, 3, 4, 10;
  CHECK(excess_risk(a, b) == 5.0);
  CHECK(excess_risk(a, a) == 0.0);
  CHECK(excess_risk((a.array() + 0.5).matrix(), a) == doctest::Approx(0.25));
  CHECK_THROWS_AS(excess_risk(a, Eigen::VectorXd::Zero(4)), InputError);
}

TEST_CASE("risk decomposition") {
  SynthOptions o;
  o.n = 300;
  o.clusters = 3;
  o.seed = 4;
  o.spec = gauss;
  const Dataset d = synth_fixed_design(o);
  ParkConfig c;
  c.q = 4;
  c.m = 60;
  c.lambda = 1e-3;
  const ParkModel model = park_train(d.X, d.Y, gauss, c);
  const RiskDecomposition r = risk_decomposition(model, d.X, d.truth->values);
  CHECK(r.relative_gap <= 1e-12);
  CHECK(r.total > 0.0);

  c.q = 1;
  const ParkModel single = park_train(d.X, d.Y, gauss, c);
  const RiskDecomposition r1 = risk_decomposition(single, d.X, d.truth->values);
  CHECK(r1.cell_risk[0] == doctest::Approx(r1.total).epsilon(1e-12));

  // A model fit to zero data against a zero target has zero risk everywhere.
  c.q = 3;
  const ParkModel zero = park_train(d.X, Eigen::VectorXd::Zero(d.n()), gauss, c);
  const RiskDecomposition rz = risk_decomposition(zero, d.X, Eigen::VectorXd::Zero(d.n()));
  CHECK(rz.total == 0.0);
  for (double v : rz.cell_risk) CHECK(v == 0.0);
  CHECK_THROWS_AS(risk_decomposition(model, d.X, Eigen::VectorXd::Zero(5)), InputError);
}

TEST_CASE("effective dimension") {
  const Index n = 12;
  const Eigen::MatrixXd nI = double(n) * Eigen::MatrixXd::Identity(n, n);
  CHECK(effective_dimension(nI, 0.5, n) == doctest::Approx(n / 1.5));

  const Eigen::MatrixXd K = kernel::gram(gauss, random_points(60, 2, 3));
  const Eigen::MatrixXd L = K / 60.0;
  for (double lam : {1e-3, 1e-2, 0.1, 1.0}) {
    const Eigen::MatrixXd shifted = L + lam * Eigen::MatrixXd::Identity(60, 60);
    const double direct = shifted.llt().solve(L).trace();
    CHECK(effective_dimension(K, lam, 60) == doctest::Approx(direct).epsilon(1e-9));
  }
  CHECK(effective_dimension(K, 1e3, 60) <= L.trace() / 1e3);
  double prev = std::numeric_limits<double>::infinity();
  for (double lam : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const double v = effective_dimension(K, lam, 60);
    CHECK(v < prev);
    CHECK(v > 0.0);
    CHECK(v <= 60.0);
    prev = v;
  }
  const Eigen::MatrixXd Klin = kernel::gram(linear, random_points(30, 3, 4));
  CHECK(effective_dimension(Klin, 1e-6, 30) <= 3.0 + 1e-9);
  CHECK_THROWS_AS(effective_dimension(K, 0.0, 60), InputError);
}

TEST_CASE("local effective dimensions on a single point") {
  const PointMatrix X = random_points(1, 3, 5);
  const Partition p = Partition::from_assignment({0}, {0});
  const LocalDimensions ld = local_effective_dimensions(X, p, gauss, {0.3});
  CHECK(ld.n_q[0] == doctest::Approx(1.0 / 1.3));
  CHECK(ld.n_inf_q[0] == doctest::Approx(1.0 / 1.3));
}

TEST_CASE("leverage identity against explicit feature coordinates") {
  // Linear kernel: the features are the inputs, covariance is d x d.
  const PointMatrix X = random_points(30, 5, 6);
  const Partition one = Partition::from_assignment({0}, std::vector<Index>(30, 0));
  for (double lam : {1e-3, 0.1, 2.0}) {
    const LocalDimensions ld = local_effective_dimensions(X, one, linear, {lam});
    const Eigen::MatrixXd F = X;
    CHECK(ld.n_inf_q[0] == doctest::Approx(oracle::n_inf_feature_space(F, lam)).epsilon(1e-9));
    CHECK(ld.n_q[0] == doctest::Approx(oracle::n_feature_space(F, lam)).epsilon(1e-9));
  }
  // Gaussian kernel on tiny cells: coordinates from the Gram eigendecomposition.
  for (std::uint64_t s = 0; s < 5; ++s) {
    const PointMatrix Y = random_points(8, 2, 60 + s);
    const Partition p = Partition::from_assignment({0}, std::vector<Index>(8, 0));
    const Eigen::MatrixXd F = oracle::feature_coordinates(kernel::gram(gauss, Y));
    for (double lam : {1e-2, 0.5}) {
      const LocalDimensions ld = local_effective_dimensions(Y, p, gauss, {lam});
      CHECK(ld.n_inf_q[0] == doctest::Approx(oracle::n_inf_feature_space(F, lam)).epsilon(1e-8));
      CHECK(ld.n_q[0] == doctest::Approx(oracle::n_feature_space(F, lam)).epsilon(1e-8));
    }
  }
}

TEST_CASE("local dimension chain") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Index n = 5 + Index(s % 20);
    const PointMatrix X = random_points(n, 2, 200 + s, 0.3 + 0.05 * double(s));
    const Partition p = Partition::from_assignment({0}, std::vector<Index>(n, 0));
    const double lam = std::pow(10.0, -3.0 + double(s % 4));
    const LocalDimensions ld = local_effective_dimensions(X, p, gauss, {lam});
    CHECK(ld.n_q[0] <= ld.n_inf_q[0] * (1 + 1e-12));
    CHECK(ld.n_inf_q[0] <= 1.0 / lam * (1 + 1e-12));  // sup K(x, x) / lambda
  }
  // The top eigenvalue of the cell covariance is not an upper bound for
  // lambda N_inf: two orthogonal unit features, lambda = 1.
  PointMatrix E(2, 2);
  E << 1, 0, 0, 1;
  const Partition p = Partition::from_assignment({0}, {0, 0});
  const LocalDimensions ld = local_effective_dimensions(E, p, linear, {1.0});
  CHECK(ld.n_inf_q[0] == doctest::Approx(2.0 / 3.0));
  CHECK(ld.top_eig_q[0] == doctest::Approx(0.5));
  CHECK(ld.n_inf_q[0] > ld.top_eig_q[0] / 1.0);
}

TEST_CASE("principal angles on constructed cases") {
  // Identical point sets.
  PointMatrix X(6, 2);
  X.topRows(3) = random_points(3, 2, 7);
  X.bottomRows(3) = X.topRows(3);
  const AngleReport same = principal_angles(halves(6), X, gauss);
  CHECK(same.cos_theta == doctest::Approx(1.0));

  // Linear kernel on two orthogonal axes.
  const PointMatrix A = axis_points(4, 2, 8);
  const AngleReport orth = principal_angles(halves(8), A, linear);
  CHECK(orth.cos_theta == 0.0);
  CHECK(orth.cosines(0, 0) == 1.0);

  CHECK_THROWS_AS(principal_angles(Partition::from_assignment({0}, {0, 0}), A.topRows(2), linear),
                  InputError);
}

TEST_CASE("principal angles against oracles") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const PointMatrix X = random_points(10, 2, 300 + s);
    const Partition p = halves(10);
    const double cos = principal_angles(p, X, gauss).cos_theta;

    // Generalized eigenproblem: max a^T K_ab b subject to a^T K_aa a = b^T K_bb b = 1.
    const Eigen::MatrixXd K = kernel::gram(gauss, X);
    Eigen::MatrixXd Aop = Eigen::MatrixXd::Zero(10, 10), Bop = Eigen::MatrixXd::Zero(10, 10);
    Aop.topRightCorner(5, 5) = K.topRightCorner(5, 5);
    Aop.bottomLeftCorner(5, 5) = K.bottomLeftCorner(5, 5);
    Bop.topLeftCorner(5, 5) = K.topLeftCorner(5, 5);
    Bop.bottomRightCorner(5, 5) = K.bottomRightCorner(5, 5);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Aop, Bop);
    CHECK(cos == doctest::Approx(ges.eigenvalues().maxCoeff()).epsilon(1e-6));

    const Eigen::MatrixXd F = oracle::feature_coordinates(K);
    CHECK(cos == doctest::Approx(oracle::first_principal_cosine(F, {0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}))
                     .epsilon(1e-6));
    CHECK(cos >= 0.0);
    CHECK(cos <= 1.0);
  }
}

TEST_CASE("adding a cell never lowers the maximal cosine") {
  const PointMatrix X = random_points(30, 2, 9);
  const double three = principal_angles(contiguous(30, 3), X, gauss).cos_theta;
  const double two = principal_angles(halves(20), X.topRows(20), gauss).cos_theta;
  CHECK(three >= two - 1e-12);
}

TEST_CASE("projection norms") {
  const PointMatrix X = random_points(20, 2, 10);
  const Partition p = halves(20);

  const GroundTruth zero = truth_on(X, {1, 2}, Eigen::VectorXd::Zero(2), gauss);
  const ProjectionNorms pz = projection_norms(zero, p, X, gauss);
  CHECK(pz.total_norm_sq == 0.0);
  for (double v : pz.per_cell) CHECK(v == doctest::Approx(0.0).scale(1.0));

  Eigen::VectorXd w(3);
  w << 0.5, -1.0, 0.7;
  const GroundTruth inside = truth_on(X, {1, 4, 7}, w, gauss);
  const ProjectionNorms pin = projection_norms(inside, p, X, gauss);
  CHECK(pin.per_cell[0] == doctest::Approx(pin.total_norm_sq).epsilon(1e-8));

  // Orthogonal cells: Pythagoras.
  const PointMatrix A = axis_points(5, 2, 11);
  Eigen::VectorXd w2(2);
  w2 << 1.5, -0.8;
  const GroundTruth across = truth_on(A, {2, 7}, w2, linear);
  const ProjectionNorms pa = projection_norms(across, halves(10), A, linear);
  CHECK(pa.sum() == doctest::Approx(pa.total_norm_sq).epsilon(1e-10));

  // Random instance against explicit coordinates of design plus support.
  const PointMatrix Z = random_points(3, 2, 12);
  GroundTruth outside;
  outside.support = Z;
  outside.weights = random_vector(3, 13);
  outside.values = outside.evaluate(gauss, X);
  PointMatrix all(23, 2);
  all << X, Z;
  const Eigen::MatrixXd F = oracle::feature_coordinates(kernel::gram(gauss, all));
  const Eigen::VectorXd f = F.bottomRows(3).transpose() * outside.weights;
  const ProjectionNorms po = projection_norms(outside, p, X, gauss);
  CHECK(po.total_norm_sq == doctest::Approx(f.squaredNorm()).epsilon(1e-8));
  std::vector<Index> left(10), right(10);
  std::iota(left.begin(), left.end(), Index{0});
  std::iota(right.begin(), right.end(), Index{10});
  CHECK(po.per_cell[0] == doctest::Approx(oracle::projection_norm_sq(F, left, f)).epsilon(1e-5));
  CHECK(po.per_cell[1] == doctest::Approx(oracle::projection_norm_sq(F, right, f)).epsilon(1e-5));
}

TEST_CASE("bound checks on an orthogonal design") {
  SynthOptions o;
  o.n = 200;
  o.d = 4;
  o.clusters = 4;
  o.layout = BlobLayout::rays;
  o.separation = 10.0;
  o.blob_std = 0.3;
  o.spec = linear;
  o.sigma = 0.05;
  o.seed = 14;
  const Dataset d = synth_fixed_design(o);
  ParkConfig c;
  c.q = 4;
  c.m = 200;
  c.lambda = 1e-2;
  c.solver.t = 30;
  const ParkModel model = park_train(d.X, d.Y, linear, c);
  const DiagnosticsReport r = check_bounds(model, d.X, *d.truth, c.lambda, 0.05);
  CHECK(r.angles.cos_theta <= 1e-8);
  CHECK(r.bessel.pass);
  CHECK(r.bessel.lhs == doctest::Approx(r.projections.total_norm_sq).epsilon(1e-8));
  CHECK(r.local_dimension.pass);
  CHECK(r.risk.relative_gap <= 1e-12);
  const nlohmann::json j = to_json(r);
  CHECK(j["checks"].size() == 4);
  CHECK(j["pairwise_cos"].size() == 4);
  CHECK(j["pairwise_cos"][0].size() == 4);
}

TEST_CASE("deterministic inequalities on random instances") {
  for (std::uint64_t s = 0; s < 6; ++s) {
    SynthOptions o;
    o.n = 120;
    o.clusters = 3;
    o.seed = 500 + s;
    o.separation = 1.0 + double(s);
    o.spec = gauss;
    const Dataset d = synth_fixed_design(o);
    ParkConfig c;
    c.q = 2 + Index(s % 3) * 2;
    c.m = 60;
    c.lambda = 1e-2;
    const ParkModel model = park_train(d.X, d.Y, gauss, c);
    const DiagnosticsReport r = check_bounds(model, d.X, *d.truth, c.lambda, 0.05);
    CHECK(r.bessel.pass);
    CHECK(r.local_dimension.pass);
  }
}

TEST_CASE("side-condition formulas") {
  CHECK(required_centers(1.0, 1.0, 0.1, 0.05) == doctest::Approx(75.0 * std::log(1600.0)));
  CHECK(required_iterations(0.5, 1.0, 0.05, 0.01) ==
        doctest::Approx(2.0 * std::log(6.0 * 0.5 * std::log(20.0) / 0.1)));
  CHECK(required_iterations(0.0, 1.0, 0.05, 0.01) == 0.0);
  CHECK(required_iterations_displayed(1.0, 0.25, 0.04) == doctest::Approx(2.0 * std::log(40.0)));
  CHECK(holds(1.0, 1.0));
  CHECK(!holds(1.0 + 1e-6, 1.0));
}

TEST_CASE("blobs on the axes under the linear kernel are near orthogonal") {
  for (Index Q : {2, 3, 4}) {
    SynthOptions o;
    o.n = 60 * Q;
    o.d = Q;
    o.clusters = Q;
    o.layout = BlobLayout::rays;
    o.separation = 50.0;
    o.spec = linear;
    o.seed = 40 + std::uint64_t(Q);
    const Dataset d = synth_fixed_design(o);
    const Partition p = build_partition(d.X, linear, Q, CentroidMode::greedy, 0);
    CHECK(principal_angles(p, d.X, linear).cos_theta <= 0.05);
  }
  // Isotropic blobs span all of R^d in every cell, so the same geometry is
  // maximally overlapping for the linear kernel.
  SynthOptions o;
  o.n = 120;
  o.d = 2;
  o.clusters = 2;
  o.layout = BlobLayout::axes;
  o.separation = 50.0;
  o.spec = linear;
  const Dataset d = synth_fixed_design(o);
  const Partition p = build_partition(d.X, linear, 2, CentroidMode::greedy, 0);
  CHECK(principal_angles(p, d.X, linear).cos_theta == doctest::Approx(1.0));
}
