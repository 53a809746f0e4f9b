#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "oracles.hpp"
#include "supalign/error.hpp"
#include "supalign/toymodel.hpp"

using namespace supalign;

namespace {

Mat random_batch(Eigen::Index b, Eigen::Index f, std::uint64_t seed) {
  RngStream rng(seed);
  Mat m(b, f);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < f; ++j) m(i, j) = rng.uniform();
  }
  return m;
}

}  // namespace

TEST_CASE("init_toy shape, scale and seeding") {
  const ToyModel m = init_toy(64, 8, RngStream(1));
  CHECK(m.w.rows() == 64);
  CHECK(m.w.cols() == 8);
  CHECK(m.w.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
  CHECK(m.b_dec.isZero());
  CHECK(init_toy(64, 8, RngStream(1)).w == m.w);
  CHECK(init_toy(64, 8, RngStream(2)).w != m.w);
  CHECK_THROWS_AS(init_toy(8, 8, RngStream(1)), ParameterError);
}

TEST_CASE("forward_toy examples") {
  for (const auto act : {OutputActivation::kNone, OutputActivation::kRelu}) {
    ToyModel m = init_toy(6, 3, RngStream(3), act);
    const ToyForward zero = forward_toy(m, Vec::Zero(6));
    CHECK(zero.z_hat.isZero());

    ToyModel one;
    one.output = act;
    one.w = Mat::Zero(4, 1);
    one.w(0, 0) = 1.0;
    one.b_dec = Vec::Zero(4);
    const ToyForward e1 = forward_toy(one, Vec::Unit(4, 0));
    CHECK(e1.h.size() == 1);
    CHECK(e1.h[0] == 1.0);
    CHECK(e1.z_hat == Vec::Unit(4, 0));

    m.b_dec = random_batch(1, 6, 4).row(0).transpose().array() - 0.5;
    const Vec z = random_batch(1, 6, 5).row(0).transpose();
    Vec h(3);
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int i = 0; i < 6; ++i) s += m.w(i, j) * z[i];
      h[j] = std::max(0.0, s);
    }
    Vec expect(6);
    for (int i = 0; i < 6; ++i) {
      double s = m.b_dec[i];
      for (int j = 0; j < 3; ++j) s += m.w(i, j) * h[j];
      expect[i] = act == OutputActivation::kRelu ? std::max(0.0, s) : s;
    }
    const ToyForward out = forward_toy(m, z);
    CHECK((out.h - h).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((out.z_hat - expect).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("toy loss gradient matches central finite differences") {
  for (const auto act : {OutputActivation::kNone, OutputActivation::kRelu}) {
    ToyModel m = init_toy(3, 2, RngStream(11), act);
    m.b_dec << 0.05, -0.02, 0.1;
    const Mat batch = random_batch(2, 3, 12);
    const Vec importance = gen_importance(3);
    const ToyLossGrad g = toy_loss_grad(m, batch, importance);
    CHECK(g.loss == doctest::Approx(toy_loss(m, batch, importance)).epsilon(1e-14));
    const Mat num_w = oracle::numeric_gradient(m.w, [&] { return toy_loss(m, batch, importance); });
    const Vec num_b = oracle::numeric_gradient(m.b_dec, [&] { return toy_loss(m, batch, importance); });
    CHECK(oracle::relative_error(g.d_w, num_w) < 1e-5);
    CHECK(oracle::relative_error(g.d_b, num_b) < 1e-5);
  }
}

TEST_CASE("train_toy lowers held-out loss and is deterministic") {
  FeatureDataset data = gen_features(20000, 20, 0.1, RngStream(21));
  data.importance = gen_importance(20);
  ToyTrainConfig cfg;
  cfg.batch_size = 256;
  cfg.epochs = 2;
  const ToyModel init = init_toy(20, 5, RngStream(22));
  const ToyTrainResult a = train_toy(init, data, cfg, RngStream(23));
  const ToyTrainResult b = train_toy(init, data, cfg, RngStream(23));
  CHECK(a.log.final_probe_loss < a.log.initial_probe_loss);
  CHECK(a.model.w == b.model.w);
  CHECK(a.log.steps == 2 * ((20000 + 255) / 256));
  CHECK(a.model.w.allFinite());
  // Parameters are stored at float precision.
  CHECK(a.model.w.cast<float>().cast<double>() == a.model.w);

  FeatureDataset bad = data;
  bad.importance = Vec();
  CHECK_THROWS_AS(train_toy(init, bad, cfg, RngStream(1)), ParameterError);
}

TEST_CASE("train_toy reports divergence") {
  FeatureDataset data = gen_features(2000, 10, 0.5, RngStream(31));
  data.importance = gen_importance(10);
  data.importance[0] = std::numeric_limits<double>::infinity();
  ToyTrainConfig cfg;
  CHECK_THROWS_AS(train_toy(init_toy(10, 3, RngStream(32)), data, cfg, RngStream(33)), TrainingDivergenceError);
}

TEST_CASE("feature_norms examples") {
  ToyModel m;
  m.w = Mat::Zero(5, 3);
  m.w.topRows(3) = Mat::Identity(3, 3);
  m.b_dec = Vec::Zero(5);
  const Vec n = feature_norms(m);
  CHECK(n.head(3) == Vec::Ones(3));
  CHECK(n.tail(2).isZero());
  CHECK((feature_norms(init_toy(10, 4, RngStream(1))).array() >= 0.0).all());
}

TEST_CASE("shared_features examples") {
  ToyModel m;
  m.w = Mat::Zero(4, 2);
  m.w << 1, 0, 0, 1, 0.6, 0.8, -0.8, 0.6;
  m.b_dec = Vec::Zero(4);
  const SharedFeatureSet all = shared_features(m, m, 1.0 - 1e-12);
  CHECK(all.indices.size() == 4);
  CHECK(shared_features(m, m, std::numeric_limits<double>::infinity()).indices.empty());
  ToyModel other = m;
  other.w.row(2) *= 0.5;
  const SharedFeatureSet s = shared_features(m, other, 0.9);
  CHECK(s.indices == std::vector<std::size_t>{0, 1, 3});
  ToyModel wrong = init_toy(5, 2, RngStream(1));
  CHECK_THROWS_AS(shared_features(m, wrong), DimensionError);
}

TEST_CASE("arrangement_similarity examples") {
  const ToyModel m1 = init_toy(12, 4, RngStream(41));
  ToyModel m2 = m1;
  const int perm[4] = {3, 1, 0, 2};
  for (int j = 0; j < 4; ++j) m2.w.col(j) = m1.w.col(perm[j]);
  SharedFeatureSet all;
  for (std::size_t i = 0; i < 12; ++i) all.indices.push_back(i);
  const Vec sim = arrangement_similarity(m1, m2, all);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(sim[i] == doctest::Approx(1.0).epsilon(1e-12));

  // Columns built to be uncorrelated over the shared rows.
  ToyModel a, b;
  a.w = Mat::Zero(4, 1);
  b.w = Mat::Zero(4, 1);
  a.w.col(0) << 1, -1, 1, -1;
  b.w.col(0) << 1, 1, -1, -1;
  a.b_dec = b.b_dec = Vec::Zero(4);
  SharedFeatureSet four{{0, 1, 2, 3}, {}};
  CHECK(std::abs(arrangement_similarity(a, b, four)[0]) < 1e-12);

  SharedFeatureSet one{{0}, {1.0}};
  CHECK_THROWS_AS(arrangement_similarity(m1, m2, one), DegenerateInputError);
}
