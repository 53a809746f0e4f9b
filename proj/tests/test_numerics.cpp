#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "supalign/error.hpp"
#include "supalign/numerics.hpp"
#include "supalign/rng.hpp"

using namespace supalign;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out[i++] = x;
  return out;
}

Mat random_mat(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  RngStream rng(seed);
  Mat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  }
  return m;
}

}  // namespace

TEST_CASE("rng streams are reproducible and derived streams differ") {
  RngStream a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(RngStream(42).next_u64() != c.next_u64());
  RngStream x = RngStream(5).derive("x"), y = RngStream(5).derive("y");
  CHECK(x.next_u64() != y.next_u64());
  CHECK(RngStream(5).derive(1).next_u64() != RngStream(5).derive(2).next_u64());
  RngStream u(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.below(7) < 7);
  }
}

TEST_CASE("pearson_corr examples") {
  CHECK(pearson_corr(vec({1, 2, 3}), vec({2, 4, 6})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson_corr(vec({1, 2, 3}), vec({3, 2, 1})) == doctest::Approx(-1.0).epsilon(1e-15));
  // Hand computation: centered x = [-1.5,-.5,.5,1.5], y = [-1.5,.5,-.5,1.5];
  // cross sum 4, squared sums 5 and 5, so r = 4/5.
  CHECK(pearson_corr(vec({1, 2, 3, 4}), vec({1, 3, 2, 4})) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(pearson_corr(vec({1, 1, 1}), vec({1, 2, 3})) == 0.0);
  CHECK_THROWS_AS(pearson_corr(vec({1, 2}), vec({1, 2, 3})), DimensionError);
  CHECK_THROWS_AS(pearson_corr(vec({1}), vec({1})), DegenerateInputError);
}

TEST_CASE("pearson_corr properties") {
  const Mat m = random_mat(50, 2, 3);
  const Vec x = m.col(0), y = m.col(1);
  const double r = pearson_corr(x, y);
  CHECK(r == doctest::Approx(oracle::pearson(x, y)).epsilon(1e-13));
  CHECK(pearson_corr(y, x) == doctest::Approx(r).epsilon(1e-15));
  const Vec scaled = (3.0 * x.array() + 7.0).matrix();
  const Vec flipped = (-2.0 * x.array() + 1.0).matrix();
  CHECK(pearson_corr(scaled, y) == doctest::Approx(r).epsilon(1e-12));
  CHECK(pearson_corr(flipped, y) == doctest::Approx(-r).epsilon(1e-12));
  CHECK(std::abs(r) <= 1.0);
}

TEST_CASE("center_normalize_columns examples") {
  Mat c(3, 1);
  c << 1, 1, 1;
  auto out = center_normalize_columns(c);
  CHECK(out.data.isZero());
  CHECK(out.zero_variance[0]);

  Mat two(2, 1);
  two << 0, 2;
  out = center_normalize_columns(two);
  CHECK(out.data(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(out.data(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK_FALSE(out.zero_variance[0]);

  out = center_normalize_columns(random_mat(5, 3, 11));
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(std::abs(out.data.col(j).sum()) < 1e-12);
    CHECK(std::abs(out.data.col(j).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("cross_corr_matrix examples") {
  const Mat ya = random_mat(40, 4, 1);
  const Mat self = cross_corr_matrix(ya, ya);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(self(i, i) == doctest::Approx(1.0).epsilon(1e-12));

  // Permuting columns of Yb permutes the output columns.
  Mat yb(40, 4);
  const int perm[4] = {2, 0, 3, 1};
  for (int j = 0; j < 4; ++j) yb.col(j) = ya.col(perm[j]);
  const Mat permuted = cross_corr_matrix(ya, yb);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(permuted(i, j) == doctest::Approx(self(i, perm[j])).epsilon(1e-12));
  }

  const Mat a = random_mat(6, 2, 21), b = random_mat(6, 3, 22);
  const Mat c = cross_corr_matrix(a, b);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(c(i, j) == doctest::Approx(oracle::pearson(a.col(i), b.col(j))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(cross_corr_matrix(random_mat(5, 2, 1), random_mat(6, 2, 1)), DimensionError);
}

TEST_CASE("normalized dot product equals cross correlation") {
  const Mat a = random_mat(30, 3, 5), b = random_mat(30, 4, 6);
  const Mat prod = center_normalize_columns(a).data.transpose() * center_normalize_columns(b).data;
  CHECK((prod - cross_corr_matrix(a, b)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("zero-variance columns correlate 0") {
  Mat a = random_mat(10, 2, 8);
  a.col(1).setConstant(4.0);
  const Mat c = cross_corr_matrix(a, a);
  CHECK(c(1, 1) == 0.0);
  CHECK(c(0, 1) == 0.0);
  CHECK(c.allFinite());
}

TEST_CASE("kfold_split examples") {
  const FoldPlan even = kfold_split(10, 5, RngStream(1));
  for (std::size_t f = 0; f < 5; ++f) CHECK(even.fold_size(f) == 2);

  const FoldPlan odd = kfold_split(11, 5, RngStream(1));
  std::multiset<std::size_t> sizes;
  for (std::size_t f = 0; f < 5; ++f) sizes.insert(odd.fold_size(f));
  CHECK(sizes == std::multiset<std::size_t>{2, 2, 2, 2, 3});

  CHECK(kfold_split(100, 5, RngStream(3)).assignments == kfold_split(100, 5, RngStream(3)).assignments);
  CHECK(kfold_split(100, 5, RngStream(3)).assignments != kfold_split(100, 5, RngStream(4)).assignments);

  // Train and test rows partition every fold.
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(odd.train_rows(f).size() + odd.test_rows(f).size() == 11);
  }
  CHECK_THROWS_AS(kfold_split(3, 5, RngStream(1)), DegenerateInputError);
  CHECK_THROWS_AS(kfold_split(10, 1, RngStream(1)), ParameterError);
}
