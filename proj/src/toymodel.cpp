#include "supalign/toymodel.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "supalign/error.hpp"
#include "supalign/kernels.hpp"

namespace supalign {

void round_to_float(Mat& m) { m = m.cast<float>().cast<double>(); }
void round_to_float(Vec& v) { v = v.cast<float>().cast<double>(); }

ToyModel init_toy(std::size_t f, std::size_t n, const RngStream& rng, OutputActivation output) {
  if (n < 1 || n >= f) {
    throw ParameterError("init_toy: need 1 <= N < F (N=" + std::to_string(n) +
                         ", F=" + std::to_string(f) + ")");
  }
  RngStream s = rng;
  ToyModel model;
  model.seed = rng.seed();
  model.output = output;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  model.w.resize(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < model.w.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.w.cols(); ++j) model.w(i, j) = s.uniform(-scale, scale);
  }
  model.b_dec = Vec::Zero(static_cast<Eigen::Index>(f));
  round_to_float(model.w);
  return model;
}

ToyForward forward_toy(const ToyModel& model, const Eigen::Ref<const Vec>& z) {
  if (z.size() != model.num_features()) {
    throw DimensionError("forward_toy: input has " + std::to_string(z.size()) +
                         " features, model expects " + std::to_string(model.num_features()));
  }
  ToyForward out;
  out.h = (model.w.transpose() * z).cwiseMax(0.0);
  out.z_hat = model.w * out.h + model.b_dec;
  if (model.output == OutputActivation::kRelu) out.z_hat = out.z_hat.cwiseMax(0.0);
  return out;
}

Mat hidden_activations(const ToyModel& model, const RowMatF& z) {
  return kernels::parallel::relu_project(z, model.w);
}

namespace {

void check_batch(const ToyModel& model, const Mat& batch, const Vec& importance) {
  if (batch.cols() != model.num_features() || importance.size() != model.num_features()) {
    throw DimensionError("toy loss: batch/importance width does not match F");
  }
  if (batch.rows() == 0) throw DegenerateInputError("toy loss: empty batch");
}

}  // namespace

ToyLossGrad toy_loss_grad(const ToyModel& model, const Mat& batch, const Vec& importance) {
  check_batch(model, batch, importance);
  const double inv_b = 1.0 / static_cast<double>(batch.rows());
  const Mat pre_h = batch * model.w;  // B x N
  const Mat h = pre_h.cwiseMax(0.0);
  Mat out = h * model.w.transpose();  // B x F
  out.rowwise() += model.b_dec.transpose();
  Mat z_hat = out;
  if (model.output == OutputActivation::kRelu) z_hat = out.cwiseMax(0.0);

  const Mat diff = z_hat - batch;
  const Eigen::RowVectorXd t = importance.transpose();
  ToyLossGrad g;
  g.loss = (diff.array().square().rowwise() * t.array()).sum() * inv_b;

  Mat r = (diff.array().rowwise() * t.array()).matrix() * (2.0 * inv_b);
  if (model.output == OutputActivation::kRelu) {
    r = (out.array() > 0.0).select(r, 0.0);
  }
  const Mat dh = (r * model.w).cwiseProduct((pre_h.array() > 0.0).cast<double>().matrix());
  g.d_w = r.transpose() * h + batch.transpose() * dh;
  g.d_b = r.colwise().sum().transpose();
  return g;
}

double toy_loss(const ToyModel& model, const Mat& batch, const Vec& importance) {
  check_batch(model, batch, importance);
  Mat out = batch * model.w;
  out = out.cwiseMax(0.0) * model.w.transpose();
  out.rowwise() += model.b_dec.transpose();
  if (model.output == OutputActivation::kRelu) out = out.cwiseMax(0.0);
  const Mat diff = out - batch;
  return (diff.array().square().rowwise() * importance.transpose().array()).sum() /
         static_cast<double>(batch.rows());
}

ToyTrainResult train_toy(ToyModel model, const FeatureDataset& data, const ToyTrainConfig& cfg,
                         const RngStream& rng) {
  const Eigen::Index f = model.num_features();
  if (data.importance.size() != f) {
    throw ParameterError("train_toy: dataset importance must be set and match F");
  }
  if (data.num_features() != f) throw DimensionError("train_toy: dataset width does not match F");
  if (cfg.batch_size < 1) throw ParameterError("train_toy: batch size must be positive");
  if (data.num_rows() < 1) throw DegenerateInputError("train_toy: empty dataset");

  const FeatureDataset probe_ds =
      gen_features(cfg.probe_rows, static_cast<std::size_t>(f), data.p, rng.derive("probe"));
  const Mat probe = probe_ds.z.cast<double>();

  ToyTrainResult result;
  result.log.initial_probe_loss = toy_loss(model, probe, data.importance);

  AdamSlot slot_w(model.w.rows(), model.w.cols());
  AdamSlot slot_b(f, 1);
  RngStream order_rng = rng.derive("order");
  const auto m = static_cast<std::size_t>(data.num_rows());
  std::vector<std::size_t> order(m);
  Mat batch;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < m; start += cfg.batch_size) {
      const std::size_t rows = std::min(cfg.batch_size, m - start);
      batch.resize(static_cast<Eigen::Index>(rows), f);
      for (std::size_t i = 0; i < rows; ++i) {
        batch.row(static_cast<Eigen::Index>(i)) =
            data.z.row(static_cast<Eigen::Index>(order[start + i])).cast<double>();
      }
      const ToyLossGrad g = toy_loss_grad(model, batch, data.importance);
      if (!std::isfinite(g.loss) || !g.d_w.allFinite()) {
        throw TrainingDivergenceError("train_toy: non-finite loss", step);
      }
      ++step;
      slot_w.apply(model.w, g.d_w, cfg.adam, step);
      slot_b.apply(model.b_dec, g.d_b, cfg.adam, step);
      result.log.batch_loss.push_back(g.loss);
    }
  }
  if (!model.w.allFinite() || !model.b_dec.allFinite()) {
    throw TrainingDivergenceError("train_toy: non-finite parameters", step);
  }
  round_to_float(model.w);
  round_to_float(model.b_dec);
  result.log.steps = step;
  result.log.final_probe_loss = toy_loss(model, probe, data.importance);
  result.model = std::move(model);
  return result;
}

Vec feature_norms(const ToyModel& model) { return model.w.rowwise().norm(); }

SharedFeatureSet shared_features(const ToyModel& m1, const ToyModel& m2, double threshold) {
  if (m1.num_features() != m2.num_features()) {
    throw DimensionError("shared_features: models have different feature counts");
  }
  const Vec n1 = feature_norms(m1);
  const Vec n2 = feature_norms(m2);
  SharedFeatureSet out;
  for (Eigen::Index i = 0; i < n1.size(); ++i) {
    const double prod = n1[i] * n2[i];
    if (prod >= threshold) {
      out.indices.push_back(static_cast<std::size_t>(i));
      out.norm_products.push_back(prod);
    }
  }
  return out;
}

Vec arrangement_similarity(const ToyModel& m1, const ToyModel& m2, const SharedFeatureSet& shared) {
  if (m1.num_features() != m2.num_features()) {
    throw DimensionError("arrangement_similarity: models have different feature counts");
  }
  if (shared.indices.size() < 2) {
    throw DegenerateInputError("arrangement_similarity: need at least 2 shared features, got " +
                               std::to_string(shared.indices.size()));
  }
  const Mat ws1 = select_rows(m1.w, shared.indices);
  const Mat ws2 = select_rows(m2.w, shared.indices);
  return cross_corr_matrix(ws1, ws2).rowwise().maxCoeff();
}

}  // namespace supalign
