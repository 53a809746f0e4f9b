#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "supalign/adam.hpp"
#include "supalign/datagen.hpp"
#include "supalign/numerics.hpp"
#include "supalign/rng.hpp"

namespace supalign {

/// Nonlinearity applied to the reconstruction.
enum class OutputActivation : std::uint8_t {
  kNone = 0,  // z_hat = W ReLU(W^T z) + b_dec
  kRelu = 1,  // z_hat = ReLU(W ReLU(W^T z) + b_dec)
};

/// Tied-weight autoencoder; the encoder is exactly W^T.
struct ToyModel {
  Mat w;      // F x N
  Vec b_dec;  // F
  std::uint64_t seed = 0;
  OutputActivation output = OutputActivation::kRelu;

  Eigen::Index num_features() const { return w.rows(); }
  Eigen::Index num_neurons() const { return w.cols(); }
};

/// W uniform in [-1/sqrt(N), 1/sqrt(N)], b_dec zero. Requires N < F.
ToyModel init_toy(std::size_t f, std::size_t n, const RngStream& rng,
                  OutputActivation output = OutputActivation::kRelu);

struct ToyForward {
  Vec h;      // N hidden activations
  Vec z_hat;  // F reconstruction
};

ToyForward forward_toy(const ToyModel& model, const Eigen::Ref<const Vec>& z);

/// Hidden activations ReLU(W^T z) for every row of `z`.
Mat hidden_activations(const ToyModel& model, const RowMatF& z);

struct ToyLossGrad {
  double loss = 0.0;
  Mat d_w;
  Vec d_b;
};

/// Importance-weighted batch loss (1/B) sum_i T^T (z_i - z_hat_i)^2 and its
/// gradient. Rows of `batch` are samples.
ToyLossGrad toy_loss_grad(const ToyModel& model, const Mat& batch, const Vec& importance);
double toy_loss(const ToyModel& model, const Mat& batch, const Vec& importance);

struct ToyTrainConfig {
  std::size_t batch_size = 1024;
  std::size_t epochs = 1;
  AdamConfig adam{};
  std::size_t probe_rows = 4096;
};

struct ToyTrainLog {
  std::size_t steps = 0;
  double initial_probe_loss = 0.0;
  double final_probe_loss = 0.0;
  std::vector<double> batch_loss;
};

struct ToyTrainResult {
  ToyModel model;
  ToyTrainLog log;
};

/// Adam over shuffled minibatches. `rng` drives the row order and the
/// held-out probe batch used for the before/after loss. Trained parameters
/// are rounded to float32, the checkpoint storage precision.
ToyTrainResult train_toy(ToyModel model, const FeatureDataset& data, const ToyTrainConfig& cfg,
                         const RngStream& rng);

/// Euclidean norm of each row of W (one per feature).
Vec feature_norms(const ToyModel& model);

struct SharedFeatureSet {
  std::vector<std::size_t> indices;
  std::vector<double> norm_products;
};

SharedFeatureSet shared_features(const ToyModel& m1, const ToyModel& m2, double threshold = 1.0);

/// For each neuron of m1, the maximum Pearson correlation of its column of W
/// (restricted to shared feature rows) against every column of m2.
Vec arrangement_similarity(const ToyModel& m1, const ToyModel& m2, const SharedFeatureSet& shared);

/// Rounds every entry to the nearest float32 value.
void round_to_float(Mat& m);
void round_to_float(Vec& v);

}  // namespace supalign
