#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "park/errors.hpp"
#include "park/partition.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace park;
using park::testing::random_points;

namespace {
const KernelSpec gauss{KernelFamily::gaussian, 1.0};
const KernelSpec linear{KernelFamily::linear, 1.0};

PointMatrix two_blobs(Index per_blob, std::uint64_t seed) {
  PointMatrix X = random_points(2 * per_blob, 2, seed, 0.3);
  for (Index i = per_blob; i < 2 * per_blob; ++i) X(i, 0) += 20.0;
  return X;
}
}  // namespace

TEST_CASE("first greedy pick with constant diagonal is index 0") {
  const PointMatrix X = random_points(30, 3, 1);
  CHECK(greedy_centroids(X, gauss, 1) == IndexList{0});
}

TEST_CASE("second greedy pick is the farthest point from the first") {
  const PointMatrix X = random_points(50, 2, 2);
  const IndexList c = greedy_centroids(X, gauss, 2);
  Index far = 0;
  double best = -1.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double k = kernel::eval(gauss, X.row(i), X.row(0));
    if (1.0 - k * k > best) {
      best = 1.0 - k * k;
      far = i;
    }
  }
  CHECK(c[1] == far);
}

TEST_CASE("greedy equals the brute-force Schur complement sequence") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PointMatrix X = random_points(200, 3, 100 + seed);
    CHECK(greedy_centroids(X, gauss, 8) == oracle::greedy_schur(X, gauss, 8));
    CHECK(greedy_centroids(X, linear, 3) == oracle::greedy_schur(X, linear, 3));
  }
}

TEST_CASE("greedy residuals do not increase across steps") {
  const PointMatrix X = random_points(120, 2, 5);
  GreedyTrace trace;
  const IndexList c = greedy_centroids(X, gauss, 12, &trace);
  REQUIRE(trace.residuals.size() == 12);
  REQUIRE(trace.pivots.size() == 12);
  for (std::size_t s = 1; s < trace.residuals.size(); ++s)
    CHECK((trace.residuals[s].array() <= trace.residuals[s - 1].array() + 1e-10).all());
  for (std::size_t s = 1; s < trace.pivots.size(); ++s) CHECK(trace.pivots[s] <= trace.pivots[s - 1] + 1e-10);
  CHECK(std::set<Index>(c.begin(), c.end()).size() == c.size());
}

TEST_CASE("greedy selection is permutation covariant") {
  // The linear kernel has distinct diagonals, so no ties at the first pick.
  const PointMatrix X = random_points(60, 5, 9);
  std::vector<Index> perm(60);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(4);
  std::shuffle(perm.begin(), perm.end(), rng);
  PointMatrix Xp(60, 5);
  for (Index i = 0; i < 60; ++i) Xp.row(i) = X.row(perm[i]);
  const IndexList a = greedy_centroids(X, linear, 4);
  const IndexList b = greedy_centroids(Xp, linear, 4);
  for (std::size_t s = 0; s < a.size(); ++s) CHECK(perm[b[s]] == a[s]);
}

TEST_CASE("greedy errors") {
  const PointMatrix X = random_points(5, 2, 3);
  CHECK_THROWS_AS(greedy_centroids(X, gauss, 6), InputError);
  CHECK_THROWS_AS(greedy_centroids(X, gauss, 0), InputError);
  // Rank two data under the linear kernel admits two centroids only.
  try {
    greedy_centroids(X, linear, 3);
    FAIL("expected DegenerateRankError");
  } catch (const DegenerateRankError& e) {
    CHECK(e.selectable() == 2);
  }
  const PointMatrix dup = PointMatrix::Ones(4, 2);
  CHECK_THROWS_AS(greedy_centroids(dup, gauss, 2), DegenerateRankError);
}

TEST_CASE("uniform centroids") {
  CHECK(uniform_centroids(10, 3, 7) == uniform_centroids(10, 3, 7));
  IndexList all = uniform_centroids(9, 9, 1);
  IndexList expect(9);
  std::iota(expect.begin(), expect.end(), Index{0});
  CHECK(all == expect);
  CHECK_THROWS_AS(uniform_centroids(3, 4, 0), InputError);

  std::vector<int> hits(10, 0);
  const int draws = 1000;
  for (int s = 0; s < draws; ++s) {
    const IndexList c = uniform_centroids(10, 3, static_cast<std::uint64_t>(s));
    CHECK(std::set<Index>(c.begin(), c.end()).size() == 3);
    for (Index i : c) ++hits[i];
  }
  for (int h : hits) CHECK(std::abs(double(h) / draws - 0.3) <= 0.05);
}

TEST_CASE("assignment matches the exhaustive loop") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const PointMatrix X = random_points(300, 3, 40 + seed);
    const IndexList c = uniform_centroids(300, 5, seed);
    CHECK(assign(X, c, gauss) == oracle::exhaustive_assign(X, c, gauss));
    CHECK(assign(X, c, linear) == oracle::exhaustive_assign(X, c, linear));
  }
}

TEST_CASE("centroids belong to their own cells and ties go to the smaller cell") {
  const PointMatrix X = random_points(40, 2, 8);
  const IndexList c = greedy_centroids(X, gauss, 6);
  const auto a = assign(X, c, gauss);
  for (std::size_t q = 0; q < c.size(); ++q) CHECK(a[c[q]] == Index(q));

  PointMatrix tie(3, 1);
  tie << -1.0, 1.0, 0.0;
  const auto at = assign(tie, {0, 1}, gauss);
  CHECK(at[2] == 0);
  CHECK(assign(X, {3}, gauss) == std::vector<Index>(40, 0));
}

TEST_CASE("partition invariants") {
  for (CentroidMode mode : {CentroidMode::greedy, CentroidMode::uniform}) {
    const PointMatrix X = random_points(500, 3, 12);
    PartitionStats stats;
    const Partition p = build_partition(X, gauss, 32, mode, 3, &stats);
    CHECK_NOTHROW(p.validate());
    Index total = 0;
    double rho = 0.0;
    std::vector<int> seen(500, 0);
    for (Index q = 0; q < p.num_cells(); ++q) {
      total += p.cell_size(q);
      rho += p.cell_fractions[q];
      CHECK(std::is_sorted(p.cells[q].begin(), p.cells[q].end()));
      for (Index i : p.cells[q]) {
        ++seen[i];
        CHECK(p.assignment[i] == q);
      }
    }
    CHECK(total == 500);
    CHECK(rho == doctest::Approx(1.0));
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    CHECK(stats.min_cell >= 1);
  }
  const Partition one = build_partition(random_points(20, 2, 1), gauss, 1, CentroidMode::greedy, 0);
  CHECK(one.cell_size(0) == 20);
  CHECK(one.cell_fractions[0] == 1.0);
}

TEST_CASE("two separated blobs give pure cells") {
  const PointMatrix X = two_blobs(50, 21);
  const Partition p = build_partition(X, gauss, 2, CentroidMode::greedy, 0);
  REQUIRE(p.num_cells() == 2);
  for (Index q = 0; q < 2; ++q) {
    const bool first = p.cells[q].front() < 50;
    for (Index i : p.cells[q]) CHECK((i < 50) == first);
  }
}

TEST_CASE("single blob works with both modes") {
  const PointMatrix X = random_points(80, 2, 30);
  CHECK_NOTHROW(build_partition(X, gauss, 4, CentroidMode::greedy, 0).validate());
  CHECK_NOTHROW(build_partition(X, gauss, 4, CentroidMode::uniform, 0).validate());
}

TEST_CASE("empty cells are dropped and renumbered") {
  // Duplicate rows under uniform selection: two centroids at the same point,
  // the second one loses every tie and ends up empty.
  PointMatrix X(4, 1);
  X << 0.0, 0.0, 5.0, 6.0;
  Index removed = -1;
  for (std::uint64_t seed = 0; seed < 200 && removed <= 0; ++seed) {
    PartitionStats stats;
    const Partition p = build_partition(X, gauss, 2, CentroidMode::uniform, seed, &stats);
    CHECK_NOTHROW(p.validate());
    const IndexList c = uniform_centroids(4, 2, seed);
    if (c == IndexList{0, 1}) {
      CHECK(p.num_cells() == 1);
      removed = stats.empty_cells_removed;
    }
  }
  CHECK(removed == 1);
}

TEST_CASE("partition JSON round trip") {
  const PointMatrix X = random_points(60, 2, 3);
  const Partition p = build_partition(X, gauss, 5, CentroidMode::greedy, 0);
  const Partition r = partition_from_json(partition_to_json(p));
  CHECK(r.centroid_indices == p.centroid_indices);
  CHECK(r.assignment == p.assignment);
  CHECK(r.cells == p.cells);
  CHECK_THROWS_AS(partition_from_json("{\"format\":\"other\"}"), InputError);
  CHECK_THROWS_AS(partition_from_json("not json"), InputError);
}

TEST_CASE("mode names") {
  CHECK(parse_centroid_mode("greedy") == CentroidMode::greedy);
  CHECK(to_string(CentroidMode::uniform) == "uniform");
  CHECK_THROWS_AS(parse_centroid_mode("kmeans"), InputError);
}
