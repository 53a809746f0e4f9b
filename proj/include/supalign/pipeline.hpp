#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "supalign/config.hpp"
#include "supalign/datagen.hpp"
#include "supalign/metrics.hpp"
#include "supalign/sae.hpp"
#include "supalign/toymodel.hpp"

namespace supalign {

/// Rows used to train SAEs and the disjoint holdout used for validation and
/// alignment, with the holdout's fold plan.
struct DataSplit {
  std::vector<std::size_t> sae_rows;
  std::vector<std::size_t> holdout_rows;
  FoldPlan folds;  // over holdout_rows
};

/// Features from RngStream(data_seed), importance rounded to float32 so an
/// in-memory run matches one that reloads the dataset checkpoint.
FeatureDataset make_dataset(const ExperimentConfig& cfg);
DataSplit make_split(const ExperimentConfig& cfg);

ToyTrainResult train_toy_for(const ExperimentConfig& cfg, const FeatureDataset& data, std::size_t n,
                             std::uint64_t seed);
SaeHyper sae_hyper(const ExperimentConfig& cfg);
SaeTrainResult train_sae_for(const ExperimentConfig& cfg, const Mat& hidden_train, std::size_t n,
                             std::uint64_t seed);
/// Untrained SAE with the same architecture and initialization scheme.
SaeModel random_sae_for(const ExperimentConfig& cfg, const Mat& hidden_train, std::size_t n,
                        std::uint64_t seed);

/// Per ground-truth feature, the maximum correlation against any neuron and
/// against any alignment latent on the holdout rows.
struct DisentanglementTable {
  Vec neuron_max;
  Vec sae_max;
  double neuron_mean = 0.0;
  double sae_mean = 0.0;
};

DisentanglementTable validate_disentanglement(const FeatureDataset& dataset, const ToyModel& model,
                                              const SaeModel& sae,
                                              const std::vector<std::size_t>& holdout_rows);
DisentanglementTable validate_disentanglement(const Mat& z_holdout, const Mat& neurons,
                                              const Mat& latents);

struct ModelPair {
  std::array<ToyModel, 2> toy;
  std::array<SaeModel, 2> sae;
  std::array<SaeModel, 2> rand_sae;
};

struct ToySummary {
  std::size_t n = 0;
  std::array<std::size_t, 2> represented{};  // features with norm >= 0.9
  std::size_t shared = 0;
  Vec arrangement;                           // per neuron of model a
  double frac_arrangement_below_half = 0.0;
  std::array<double, 2> probe_loss_initial{};
  std::array<double, 2> probe_loss_final{};
  double train_seconds = 0.0;                // wall time for the pair
};

struct ValidationSummary {
  std::size_t n = 0;
  std::array<DisentanglementTable, 2> sae;   // trained SAE, per model
  std::array<DisentanglementTable, 2> rand;  // untrained SAE, per model
  double neuron_mean = 0.0;                  // averaged over both models
  double sae_mean = 0.0;
  double rand_mean = 0.0;
};

/// Alignment comparisons for one N: matching metrics use Neuron->Neuron,
/// SAE->SAE and RandSAE->SAE; ridge uses Neuron->Neuron, SAE->Neuron,
/// RandSAE->Neuron and SAE->SAE.
std::vector<AlignmentReport> align_pair(const ExperimentConfig& cfg, const FeatureDataset& data,
                                        const DataSplit& split, const ModelPair& models, std::size_t n);

struct NResult {
  std::size_t n = 0;
  ToySummary toy;
  ValidationSummary validation;
  std::vector<AlignmentReport> reports;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<NResult> per_n;
  std::vector<AlignmentReport> reports;
};

std::string experiment_id_for(const ExperimentConfig& cfg, std::size_t n);

/// The full protocol: dataset, per-N seed pair, SAEs, validation, alignment,
/// checkpoints, CSV tables and SVG charts under cfg.out_dir. Stage failures
/// are rethrown as StageError with the stage name.
RunResult run_experiment(const ExperimentConfig& cfg);

/// Runs `fn` and rethrows any failure as a StageError tagged with `stage`.
void run_stage(const std::string& stage, const std::function<void()>& fn);

void log_line(const std::string& msg);

}  // namespace supalign
