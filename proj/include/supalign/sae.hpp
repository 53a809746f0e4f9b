#pragma once

#include <cstddef>
#include <vector>

#include "supalign/adam.hpp"
#include "supalign/numerics.hpp"
#include "supalign/rng.hpp"

namespace supalign {

/// TopK sparse autoencoder over N-dimensional activations.
struct SaeModel {
  Mat w_enc;  // F_lat x N
  Vec b_enc;  // F_lat
  Mat w_dec;  // N x F_lat, unit-norm columns
  Vec b_dec;  // N
  int k = 1;

  Eigen::Index num_latents() const { return w_enc.rows(); }
  Eigen::Index input_dim() const { return w_enc.cols(); }
};

/// Gaussian decoder with unit-norm columns, encoder = decoder^T, zero encoder
/// bias, decoder bias = `data_mean`. Requires F_lat >= N and 1 <= k <= F_lat.
SaeModel init_sae(std::size_t n, std::size_t f_lat, int k, const Vec& data_mean,
                  const RngStream& rng);

/// TopK(W_enc x + b_enc): keeps the k largest pre-activations (lowest index
/// wins ties), zeroes the rest. Kept values may be negative.
Vec encode(const SaeModel& sae, const Eigen::Ref<const Vec>& x);

/// ReLU(encode(x)); the representation used for alignment.
Vec latents_for_alignment(const SaeModel& sae, const Eigen::Ref<const Vec>& x);

Vec decode(const SaeModel& sae, const Eigen::Ref<const Vec>& z);

/// Row-wise latents_for_alignment over a sample-by-neuron matrix.
Mat alignment_latents(const SaeModel& sae, const Mat& x);

/// Counts steps since each latent last fired; dead once the count reaches t.
class DeadLatentTracker {
 public:
  DeadLatentTracker(std::size_t num_latents, std::size_t threshold)
      : steps_since_fire_(num_latents, 0), threshold_(threshold) {}

  bool is_dead(std::size_t j) const { return steps_since_fire_[j] >= threshold_; }
  std::vector<bool> dead_mask() const;
  std::size_t dead_count() const;
  void record(const std::vector<bool>& fired);

 private:
  std::vector<std::size_t> steps_since_fire_;
  std::size_t threshold_;
};

struct SaeHyper {
  double lr = 1e-3;
  std::size_t batch_size = 1024;
  std::size_t dead_steps = 1;   // t
  double alpha_aux = 1e-1;
  int k_aux = 0;                // 0 means F_lat
  std::size_t epochs = 1;
};

struct SaeLossGrad {
  double loss = 0.0;
  double mse = 0.0;
  double aux = 0.0;
  Mat d_w_enc;
  Vec d_b_enc;
  Mat d_w_dec;
  Vec d_b_dec;
  std::vector<bool> fired;  // latents selected by TopK for some row
};

/// L = L_mse + alpha_aux * L_aux on one batch. The auxiliary target is the
/// (constant) residual x - x_hat; its prediction decodes the top-k_aux
/// pre-activations of the `dead` latents, live latents zeroed.
SaeLossGrad sae_loss_grad(const SaeModel& sae, const Mat& batch, const std::vector<bool>& dead,
                          double alpha_aux, int k_aux);

struct SaeLogRow {
  std::size_t step = 0;
  double mse = 0.0;
  double aux = 0.0;
  std::size_t dead_count = 0;
};

/// One optimizer step at a time; exposes the model between steps.
class SaeTrainer {
 public:
  SaeTrainer(SaeModel model, const SaeHyper& hp);

  SaeLogRow step(const Mat& batch);
  const SaeModel& model() const { return model_; }
  SaeModel release() { return std::move(model_); }

 private:
  SaeModel model_;
  SaeHyper hp_;
  AdamConfig adam_;
  AdamSlot s_w_enc_, s_b_enc_, s_w_dec_, s_b_dec_;
  DeadLatentTracker tracker_;
  std::size_t steps_ = 0;
};

struct SaeTrainResult {
  SaeModel model;
  std::vector<SaeLogRow> log;
};

/// Trains on rows of `activations`, reshuffled each epoch with `rng`.
/// Parameters are rounded to float32 when training ends.
SaeTrainResult train_sae(SaeModel sae, const Mat& activations, const SaeHyper& hp,
                         const RngStream& rng);

/// Mean squared reconstruction error (summed over units, averaged over rows).
double reconstruction_mse(const SaeModel& sae, const Mat& x);

/// True where a latent column is identically zero.
std::vector<bool> dead_latents_on_fold(const Mat& latents);

}  // namespace supalign
