#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "supalign/datagen.hpp"
#include "supalign/error.hpp"
#include "supalign/metrics.hpp"
#include "supalign/theory.hpp"

using namespace supalign;

TEST_CASE("deflation closed forms") {
  CHECK(std::abs(deflation_equal_mix(3) - 1.0 / std::sqrt(3.0)) < 1e-12);
  for (const std::size_t n : {1, 2, 4, 9}) {
    CHECK(std::abs(deflation_equal_mix(n) - 1.0 / std::sqrt(static_cast<double>(n))) < 1e-12);
  }
  for (const std::size_t f : {4, 8, 16}) CHECK(std::abs(deflation_shifted_support(f) - 0.5) < 1e-12);
  CHECK(std::abs(deflation_shifted_support(8, false) - 1.0) < 1e-12);
  CHECK_THROWS_AS(deflation_equal_mix(0), ParameterError);
  CHECK_THROWS_AS(paired_support(5, 0), ParameterError);
}

TEST_CASE("mixing matrices for the deflation constructions") {
  const Mat single = equal_mix_single(3, 9);
  const Mat mixed = equal_mix_mixed(3, 9);
  CHECK(single.cols() == 3);
  CHECK((single.colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK((mixed.colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-15);
  const Mat g = mixing_cross_corr(single, mixed);
  CHECK(std::abs(g(1, 1) - 1.0 / std::sqrt(3.0)) < 1e-15);
  CHECK(g(0, 1) == 0.0);
  CHECK_THROWS_AS(mixing_cross_corr(single, equal_mix_mixed(2, 8)), DimensionError);
}

TEST_CASE("perm_score_from_G examples") {
  CHECK(perm_score_from_G(Mat::Identity(4, 4)) == doctest::Approx(1.0));
  Mat g(2, 2);
  g << 0.1, 0.9, 0.8, 0.2;
  CHECK(perm_score_from_G(g) == doctest::Approx(0.85));
  CHECK_THROWS_AS(perm_score_from_G(Mat::Zero(2, 3)), DimensionError);
}

TEST_CASE("sparse_recover: orthonormal K=1 recovery") {
  const Mat a = Mat::Identity(6, 6);
  RngStream rng(1);
  const Mat z = gen_sparse_rows(40, 6, 1, rng);
  CHECK((sparse_recover(z * a, a, 1) - z).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sparse_recover: random Gaussian mixings with K=2") {
  const SparseMixingInstance inst = make_sparse_mixing_instance(100, 10, 8, 2, RngStream(2));
  CHECK((sparse_recover(inst.z * inst.a_a, inst.a_a, 2) - inst.z).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((inst.a_a.colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("sparse_recover: ambiguity and failure") {
  // Identical rows of A make features 0 and 1 indistinguishable.
  Mat a = Mat::Zero(4, 3);
  a.row(0) << 1, 0, 0;
  a.row(1) << 1, 0, 0;
  a.row(2) << 0, 1, 0;
  a.row(3) << 0, 0, 1;
  Mat z = Mat::Zero(1, 4);
  z(0, 0) = 1.0;
  CHECK_THROWS_AS(sparse_recover(z * a, a, 1), RecoveryFailureError);

  // A 3-sparse row has no 1-sparse explanation through an orthonormal A.
  const Mat id = Mat::Identity(4, 4);
  Mat dense = Mat::Ones(1, 4);
  CHECK_THROWS_AS(sparse_recover(dense, id, 1), RecoveryFailureError);
  CHECK_THROWS_AS(sparse_recover(dense, Mat::Identity(13, 4), 1), ParameterError);
  CHECK_THROWS_AS(sparse_recover(dense, id, 3), ParameterError);
}

TEST_CASE("Proposition 1: recovery restores perfect alignment") {
  int deflated = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const SparseMixingInstance inst = make_sparse_mixing_instance(200, 10, 8, 2, RngStream(100 + i));
    CHECK(std::abs(prop1_check(inst.z, inst.a_a, inst.a_b, 2) - 1.0) < 1e-6);
    if (perm_score(inst.z * inst.a_a, inst.z * inst.a_b) < 1.0 - 1e-6) ++deflated;
  }
  CHECK(deflated == 10);
}

TEST_CASE("raw alignment shrinks as mixing spreads features") {
  double prev = 2.0;
  for (const std::size_t n : {1, 2, 3, 4, 6}) {
    const double s = deflation_equal_mix(n, 12);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("run_theory_checks all pass") {
  const auto checks = run_theory_checks(7, 3);
  CHECK(checks.size() == 5 + 4 + 1 + 6);
  for (const auto& c : checks) {
    INFO(c.name);
    CHECK(c.pass);
  }
}
