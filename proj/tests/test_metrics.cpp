#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "supalign/assignment.hpp"
#include "supalign/error.hpp"
#include "supalign/metrics.hpp"
#include "supalign/ridge.hpp"
#include "supalign/transport.hpp"

using namespace supalign;

namespace {

Mat gaussian(Eigen::Index r, Eigen::Index c, RngStream rng) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  }
  return m;
}

Mat uniform_mat(Eigen::Index r, Eigen::Index c, RngStream rng) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

ActivationMatrix act(const Mat& data, const FoldPlan& folds, SourceTag tag = SourceTag::kNeurons) {
  return make_activation_matrix(data, tag, folds);
}

// The transportation problem with marginals 1/Na, 1/Nb is an assignment
// problem once row i is copied Nb times and column j Na times.
double expanded_assignment_optimum(const Mat& c) {
  const Eigen::Index na = c.rows(), nb = c.cols();
  Mat big(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na * nb; ++i) {
    for (Eigen::Index j = 0; j < na * nb; ++j) big(i, j) = c(i / nb, j / na);
  }
  return max_weight_assignment(big).total / static_cast<double>(na * nb);
}

}  // namespace

TEST_CASE("assignment matches brute force") {
  RngStream rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto r = static_cast<Eigen::Index>(1 + rng.below(6));
    const auto c = r + static_cast<Eigen::Index>(rng.below(2));
    const Mat w = uniform_mat(r, c, rng.derive(static_cast<std::uint64_t>(t)));
    const Assignment a = max_weight_assignment(w);
    CHECK(a.total == doctest::Approx(oracle::brute_force_assignment(w)).epsilon(1e-12));
    double s = 0;
    for (Eigen::Index i = 0; i < r; ++i) s += w(i, a.col_of_row[static_cast<std::size_t>(i)]);
    CHECK(s == doctest::Approx(a.total).epsilon(1e-12));
  }
}

TEST_CASE("transport: identity and constant costs") {
  const TransportPlan id = solve_transport(Mat::Identity(5, 5));
  CHECK(id.objective == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((id.p - Mat::Identity(5, 5) / 5.0).cwiseAbs().maxCoeff() < 1e-12);

  const TransportPlan flat = solve_transport(Mat::Constant(4, 3, 0.3));
  CHECK(flat.objective == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(marginal_error(flat.p) < 1e-12);
  CHECK((flat.p.array() >= 0.0).all());
}

TEST_CASE("transport equals the permutation optimum on square problems") {
  RngStream rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<Eigen::Index>(1 + rng.below(6));
    const Mat c = uniform_mat(n, n, rng.derive(static_cast<std::uint64_t>(t)));
    const TransportPlan plan = soft_match_plan(c);
    CHECK(std::abs(plan.objective - oracle::brute_force_assignment(c) / static_cast<double>(n)) < 1e-9);
    CHECK(std::abs((plan.p.array() * c.array()).sum() - plan.objective) < 1e-12);
    CHECK(marginal_error(plan.p) < 1e-9);
  }
}

TEST_CASE("transport marginals and optimum on rectangular problems") {
  RngStream rng(3);
  for (int t = 0; t < 60; ++t) {
    const auto na = static_cast<Eigen::Index>(1 + rng.below(7));
    const auto nb = static_cast<Eigen::Index>(1 + rng.below(5));
    const Mat c = uniform_mat(na, nb, rng.derive(static_cast<std::uint64_t>(t)));
    const TransportPlan plan = solve_transport(c);
    CHECK(marginal_error(plan.p) < 1e-9);
    CHECK((plan.p.array() >= -1e-15).all());
    CHECK(std::abs(plan.objective - expanded_assignment_optimum(c)) < 1e-9);
  }
  const TransportPlan big = solve_transport(uniform_mat(7, 5, RngStream(4)));
  CHECK(marginal_error(big.p) < 1e-9);
}

TEST_CASE("transport with ties and degenerate structure") {
  Mat c = Mat::Zero(6, 6);
  c.topLeftCorner(3, 3).setOnes();
  c.bottomRightCorner(3, 3).setOnes();
  const TransportPlan plan = solve_transport(c);
  CHECK(plan.objective == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(marginal_error(plan.p) < 1e-12);
}

TEST_CASE("semi-match examples") {
  const FoldPlan folds = kfold_split(2000, 5, RngStream(5));
  const Mat y = gaussian(2000, 8, RngStream(6));
  const AlignmentReport self = semi_match_score(act(y, folds), act(y, folds));
  CHECK(self.per_fold_scores.size() == 5);
  CHECK(self.mean == doctest::Approx(1.0).epsilon(1e-12));

  Mat perm(2000, 8);
  const int order[8] = {3, 0, 7, 1, 6, 2, 5, 4};
  for (int j = 0; j < 8; ++j) perm.col(j) = 2.5 * y.col(order[j]) + Mat::Constant(2000, 1, 1.0);
  CHECK(semi_match_score(act(y, folds), act(perm, folds)).mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(semi_match_assign(cross_corr_matrix(y, perm))[3] == 0);
}

TEST_CASE("semi-match of independent noise stays near zero") {
  const FoldPlan folds = kfold_split(10000, 5, RngStream(7));
  const AlignmentReport r = semi_match_score(act(gaussian(10000, 16, RngStream(8)), folds),
                                             act(gaussian(10000, 16, RngStream(9)), folds));
  CHECK(std::abs(r.mean) < 0.1);
}

TEST_CASE("soft-match examples and relations") {
  const FoldPlan folds = kfold_split(1500, 5, RngStream(10));
  const Mat y = gaussian(1500, 6, RngStream(11));
  CHECK(soft_match_score(act(y, folds), act(y, folds)).mean == doctest::Approx(1.0).epsilon(1e-9));

  // Equal widths: the train-fold optimum is a permutation, so the plan is P/N.
  const Mat mix = gaussian(6, 6, RngStream(12));
  const Mat yb = y * mix + 0.5 * gaussian(1500, 6, RngStream(13));
  const Mat ctrain = cross_corr_matrix(select_rows(y, folds.train_rows(0)), select_rows(yb, folds.train_rows(0)));
  CHECK(soft_match_plan(ctrain).objective ==
        doctest::Approx(oracle::brute_force_assignment(ctrain) / 6.0).epsilon(1e-9));

  // Semi-matching relaxes the column constraint, so on train data it is never below.
  const Mat yc = gaussian(1500, 4, RngStream(14)) * gaussian(4, 9, RngStream(15));
  const Mat c = cross_corr_matrix(y.leftCols(4) * gaussian(4, 4, RngStream(16)), yc);
  double semi = 0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) semi += c.row(i).maxCoeff();
  CHECK(semi / static_cast<double>(c.rows()) >= soft_match_plan(c).objective - 1e-12);
}

TEST_CASE("perm_score examples") {
  const Mat y = gaussian(500, 5, RngStream(17));
  Mat shuffled(500, 5);
  for (int j = 0; j < 5; ++j) shuffled.col(j) = y.col((j + 2) % 5);
  CHECK(perm_score(y, shuffled) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(perm_score(y, y.leftCols(4)), DimensionError);
  CHECK_THROWS_AS(perm_score(y, y.topRows(400)), DimensionError);
}

TEST_CASE("pruning removes columns dead in any fold") {
  FoldPlan folds;
  folds.num_rows = 6;
  folds.k = 2;
  folds.assignments = {0, 0, 0, 1, 1, 1};
  Mat y(6, 4);
  y << 1, 0, 1, 0,
       2, 0, 0, 0,
       3, 0, 2, 1,
       1, 1, 0, 0,
       0, 0, 0, 0,
       2, 0, 0, 0;
  const ActivationMatrix pruned = prune_dead_latents(act(y, folds, SourceTag::kSaeLatents));
  CHECK(pruned.pruned == 3);
  CHECK(pruned.kept_columns == std::vector<std::size_t>{0});
  CHECK(pruned.data.cols() == 1);
  CHECK_THROWS_AS(prune_dead_latents(act(Mat::Zero(6, 3), folds)), DegenerateInputError);
}

TEST_CASE("ridge_fit matches the normal equations") {
  const Mat x = gaussian(60, 4, RngStream(18));
  const Mat y = gaussian(60, 3, RngStream(19));
  const double alpha = 0.7;
  const RidgeFit fit = ridge_fit(x, y, alpha);
  const Mat xc = x.rowwise() - x.colwise().mean();
  const Mat yc = y.rowwise() - y.colwise().mean();
  const Mat w = (xc.transpose() * xc + alpha * Mat::Identity(4, 4)).inverse() * (xc.transpose() * yc);
  CHECK((fit.coef - w).cwiseAbs().maxCoeff() < 1e-10);
  const Vec b = y.colwise().mean().transpose() - w.transpose() * x.colwise().mean().transpose();
  CHECK((fit.intercept - b).cwiseAbs().maxCoeff() < 1e-10);

  const RidgePath path(x, y);
  for (const double a : {1e-8, 1e-3, 1.0, 1e3}) {
    CHECK((path.fit(a).coef - ridge_fit(x, y, a).coef).cwiseAbs().maxCoeff() < 1e-9);
  }

  const Mat ols = (xc.transpose() * xc).inverse() * (xc.transpose() * yc);
  CHECK((ridge_fit(x, y, 1e-10).coef - ols).cwiseAbs().maxCoeff() < 1e-6);

  // Huge alpha shrinks to the mean predictor.
  const Mat pred = ridge_predict(ridge_fit(x, y, 1e12), x);
  CHECK((pred.rowwise() - y.colwise().mean()).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(ridge_fit(x, y, 0.0), ParameterError);
}

TEST_CASE("ridge_score examples") {
  const FoldPlan folds = kfold_split(1000, 5, RngStream(20));
  const Mat y = gaussian(1000, 6, RngStream(21));
  const AlignmentReport self = ridge_score(act(y, folds), act(y, folds), default_alpha_exponents());
  CHECK(self.mean >= 0.999);
  CHECK(self.alpha_exponent.size() == 5);
  for (const auto& e : self.alpha_exponent) CHECK(e.has_value());

  // Linear image of the same latents: Y_b = Z A_b, X = Z A_a with A_a invertible.
  const Mat z = gaussian(1000, 5, RngStream(22));
  const Mat xa = z * gaussian(5, 5, RngStream(23));
  const Mat yb = z * gaussian(5, 3, RngStream(24));
  CHECK(ridge_score(act(xa, folds), act(yb, folds), default_alpha_exponents()).mean > 0.999);
  CHECK(ridge_score(act(gaussian(1000, 5, RngStream(25)), folds), act(yb, folds), default_alpha_exponents()).mean < 0.2);
}

TEST_CASE("metric names and summaries") {
  CHECK(parse_metric("soft") == Metric::kSoftMatch);
  CHECK(parse_metric("semi_match") == Metric::kSemiMatch);
  CHECK(parse_metric("ridge") == Metric::kRidge);
  CHECK(to_string(Metric::kSoftMatch) == "soft_match");
  CHECK(parse_source_tag("rand_sae_latents") == SourceTag::kRandSaeLatents);
  AlignmentReport r;
  r.per_fold_scores = {1.0, 2.0, 3.0};
  summarize(r);
  CHECK(r.mean == 2.0);
  CHECK(r.stderr_ == doctest::Approx(1.0 / std::sqrt(3.0)));
  const Mat a = gaussian(100, 3, RngStream(26));
  CHECK(mean_columnwise_corr(a, 2.0 * a) == doctest::Approx(1.0));
}
