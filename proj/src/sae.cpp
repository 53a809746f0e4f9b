#include "supalign/sae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "supalign/error.hpp"
#include "supalign/kernels.hpp"
#include "supalign/toymodel.hpp"

namespace supalign {

SaeModel init_sae(std::size_t n, std::size_t f_lat, int k, const Vec& data_mean,
                  const RngStream& rng) {
  if (f_lat < n) throw ParameterError("init_sae: latent count must be >= input dimension");
  if (k < 1 || static_cast<std::size_t>(k) > f_lat) {
    throw ParameterError("init_sae: need 1 <= k <= F_lat, got k=" + std::to_string(k));
  }
  if (static_cast<std::size_t>(data_mean.size()) != n) {
    throw DimensionError("init_sae: data mean length does not match N");
  }
  RngStream s = rng;
  SaeModel sae;
  sae.k = k;
  sae.w_dec.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f_lat));
  for (Eigen::Index j = 0; j < sae.w_dec.cols(); ++j) {
    for (Eigen::Index i = 0; i < sae.w_dec.rows(); ++i) sae.w_dec(i, j) = s.normal();
    sae.w_dec.col(j).normalize();
  }
  sae.w_enc = sae.w_dec.transpose();
  sae.b_enc = Vec::Zero(static_cast<Eigen::Index>(f_lat));
  sae.b_dec = data_mean;
  return sae;
}

namespace {

void check_input(const SaeModel& sae, Eigen::Index n) {
  if (n != sae.input_dim()) {
    throw DimensionError("sae: input has " + std::to_string(n) + " units, model expects " +
                         std::to_string(sae.input_dim()));
  }
}

// Row-wise TopK mask of `pre` restricted to `allowed` columns (all when empty).
Mat topk_mask(const Mat& pre, int k, const std::vector<bool>& allowed) {
  Mat mask = Mat::Zero(pre.rows(), pre.cols());
  if (allowed.empty()) {
    for (Eigen::Index r = 0; r < pre.rows(); ++r) {
      for (const int j : kernels::topk_indices(pre.row(r), k)) mask(r, j) = 1.0;
    }
    return mask;
  }
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < allowed.size(); ++j) {
    if (allowed[j]) cols.push_back(static_cast<Eigen::Index>(j));
  }
  if (cols.empty()) return mask;
  if (static_cast<std::size_t>(k) >= cols.size()) {
    for (const auto j : cols) mask.col(j).setOnes();
    return mask;
  }
  Eigen::RowVectorXd sub(static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index r = 0; r < pre.rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) sub[static_cast<Eigen::Index>(c)] = pre(r, cols[c]);
    for (const int c : kernels::topk_indices(sub, k)) mask(r, cols[static_cast<std::size_t>(c)]) = 1.0;
  }
  return mask;
}

}  // namespace

Vec encode(const SaeModel& sae, const Eigen::Ref<const Vec>& x) {
  check_input(sae, x.size());
  const Eigen::RowVectorXd pre = (sae.w_enc * x + sae.b_enc).transpose();
  Vec z = Vec::Zero(sae.num_latents());
  for (const int j : kernels::topk_indices(pre, sae.k)) z[j] = pre[j];
  return z;
}

Vec latents_for_alignment(const SaeModel& sae, const Eigen::Ref<const Vec>& x) {
  return encode(sae, x).cwiseMax(0.0);
}

Vec decode(const SaeModel& sae, const Eigen::Ref<const Vec>& z) {
  if (z.size() != sae.num_latents()) {
    throw DimensionError("decode: code has " + std::to_string(z.size()) + " latents, model has " +
                         std::to_string(sae.num_latents()));
  }
  return sae.w_dec * z + sae.b_dec;
}

Mat alignment_latents(const SaeModel& sae, const Mat& x) {
  check_input(sae, x.cols());
  return kernels::parallel::topk_relu_encode(x, sae.w_enc, sae.b_enc, sae.k);
}

std::vector<bool> DeadLatentTracker::dead_mask() const {
  std::vector<bool> out(steps_since_fire_.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = is_dead(j);
  return out;
}

std::size_t DeadLatentTracker::dead_count() const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < steps_since_fire_.size(); ++j) n += is_dead(j) ? 1 : 0;
  return n;
}

void DeadLatentTracker::record(const std::vector<bool>& fired) {
  for (std::size_t j = 0; j < steps_since_fire_.size(); ++j) {
    steps_since_fire_[j] = fired[j] ? 0 : steps_since_fire_[j] + 1;
  }
}

SaeLossGrad sae_loss_grad(const SaeModel& sae, const Mat& batch, const std::vector<bool>& dead,
                          double alpha_aux, int k_aux) {
  check_input(sae, batch.cols());
  if (batch.rows() == 0) throw DegenerateInputError("sae_loss_grad: empty batch");
  const auto f_lat = sae.num_latents();
  if (!dead.empty() && static_cast<Eigen::Index>(dead.size()) != f_lat) {
    throw DimensionError("sae_loss_grad: dead mask length does not match F_lat");
  }
  if (k_aux <= 0) k_aux = static_cast<int>(f_lat);
  const double inv_b = 1.0 / static_cast<double>(batch.rows());

  Mat pre = batch * sae.w_enc.transpose();
  pre.rowwise() += sae.b_enc.transpose();
  const Mat mask = topk_mask(pre, sae.k, {});
  const Mat z = pre.cwiseProduct(mask);
  Mat x_hat = z * sae.w_dec.transpose();
  x_hat.rowwise() += sae.b_dec.transpose();
  const Mat e = batch - x_hat;

  SaeLossGrad g;
  g.mse = e.squaredNorm() * inv_b;
  const Mat d_xhat = e * (-2.0 * inv_b);
  g.d_w_dec = d_xhat.transpose() * z;
  g.d_b_dec = d_xhat.colwise().sum().transpose();
  Mat d_pre = (d_xhat * sae.w_dec).cwiseProduct(mask);

  const bool any_dead = std::find(dead.begin(), dead.end(), true) != dead.end();
  if (any_dead && alpha_aux != 0.0) {
    const Mat aux_mask = topk_mask(pre, k_aux, dead);
    const Mat z_dead = pre.cwiseProduct(aux_mask);
    Mat e_hat = z_dead * sae.w_dec.transpose();
    e_hat.rowwise() += sae.b_dec.transpose();
    const Mat r = e_hat - e;
    g.aux = r.squaredNorm() * inv_b;
    const Mat d_ehat = r * (2.0 * inv_b * alpha_aux);
    g.d_w_dec += d_ehat.transpose() * z_dead;
    g.d_b_dec += d_ehat.colwise().sum().transpose();
    d_pre += (d_ehat * sae.w_dec).cwiseProduct(aux_mask);
  }
  g.loss = g.mse + alpha_aux * g.aux;
  g.d_w_enc = d_pre.transpose() * batch;
  g.d_b_enc = d_pre.colwise().sum().transpose();

  g.fired.assign(static_cast<std::size_t>(f_lat), false);
  for (Eigen::Index j = 0; j < f_lat; ++j) {
    g.fired[static_cast<std::size_t>(j)] = (z.col(j).array() != 0.0).any();
  }
  return g;
}

SaeTrainer::SaeTrainer(SaeModel model, const SaeHyper& hp)
    : model_(std::move(model)),
      hp_(hp),
      s_w_enc_(model_.w_enc.rows(), model_.w_enc.cols()),
      s_b_enc_(model_.b_enc.size(), 1),
      s_w_dec_(model_.w_dec.rows(), model_.w_dec.cols()),
      s_b_dec_(model_.b_dec.size(), 1),
      tracker_(static_cast<std::size_t>(model_.num_latents()), hp.dead_steps) {
  adam_.lr = hp.lr;
}

SaeLogRow SaeTrainer::step(const Mat& batch) {
  const std::vector<bool> dead = tracker_.dead_mask();
  const SaeLossGrad g = sae_loss_grad(model_, batch, dead, hp_.alpha_aux, hp_.k_aux);
  if (!std::isfinite(g.loss)) throw TrainingDivergenceError("train_sae: non-finite loss", steps_);
  ++steps_;
  s_w_enc_.apply(model_.w_enc, g.d_w_enc, adam_, steps_);
  s_b_enc_.apply(model_.b_enc, g.d_b_enc, adam_, steps_);
  s_w_dec_.apply(model_.w_dec, g.d_w_dec, adam_, steps_);
  s_b_dec_.apply(model_.b_dec, g.d_b_dec, adam_, steps_);
  for (Eigen::Index j = 0; j < model_.w_dec.cols(); ++j) {
    const double norm = model_.w_dec.col(j).norm();
    if (norm > 0.0) model_.w_dec.col(j) /= norm;
  }
  tracker_.record(g.fired);
  SaeLogRow row;
  row.step = steps_;
  row.mse = g.mse;
  row.aux = g.aux;
  row.dead_count = static_cast<std::size_t>(std::count(dead.begin(), dead.end(), true));
  return row;
}

SaeTrainResult train_sae(SaeModel sae, const Mat& activations, const SaeHyper& hp,
                         const RngStream& rng) {
  check_input(sae, activations.cols());
  if (hp.batch_size < 1) throw ParameterError("train_sae: batch size must be positive");
  if (activations.rows() < 1) throw DegenerateInputError("train_sae: no training rows");

  SaeTrainer trainer(std::move(sae), hp);
  SaeTrainResult result;
  RngStream order_rng = rng.derive("order");
  const auto m = static_cast<std::size_t>(activations.rows());
  std::vector<std::size_t> order(m);
  Mat batch;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < m; start += hp.batch_size) {
      const std::size_t rows = std::min(hp.batch_size, m - start);
      batch.resize(static_cast<Eigen::Index>(rows), activations.cols());
      for (std::size_t i = 0; i < rows; ++i) {
        batch.row(static_cast<Eigen::Index>(i)) =
            activations.row(static_cast<Eigen::Index>(order[start + i]));
      }
      result.log.push_back(trainer.step(batch));
    }
  }
  result.model = trainer.release();
  round_to_float(result.model.w_enc);
  round_to_float(result.model.b_enc);
  round_to_float(result.model.w_dec);
  round_to_float(result.model.b_dec);
  return result;
}

double reconstruction_mse(const SaeModel& sae, const Mat& x) {
  check_input(sae, x.cols());
  if (x.rows() == 0) throw DegenerateInputError("reconstruction_mse: no rows");
  Mat pre = x * sae.w_enc.transpose();
  pre.rowwise() += sae.b_enc.transpose();
  const Mat z = pre.cwiseProduct(topk_mask(pre, sae.k, {}));
  Mat x_hat = z * sae.w_dec.transpose();
  x_hat.rowwise() += sae.b_dec.transpose();
  return (x - x_hat).squaredNorm() / static_cast<double>(x.rows());
}

std::vector<bool> dead_latents_on_fold(const Mat& latents) {
  std::vector<bool> dead(static_cast<std::size_t>(latents.cols()));
  for (Eigen::Index j = 0; j < latents.cols(); ++j) {
    dead[static_cast<std::size_t>(j)] = (latents.col(j).array() == 0.0).all();
  }
  return dead;
}

}  // namespace supalign
