#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "supalign/metrics.hpp"
#include "supalign/toymodel.hpp"

namespace supalign {

struct ToyConfig {
  std::size_t batch_size = 1024;
  std::size_t epochs = 20;
  double lr = 1e-3;
  OutputActivation output_activation = OutputActivation::kRelu;
  double shared_threshold = 1.0;
};

struct SaeConfig {
  int k = 7;
  std::size_t f_lat = 0;  // 0 means F
  double lr = 1e-3;
  std::size_t batch_size = 1024;
  double alpha_aux = 0.1;
  std::size_t dead_steps = 1;
  int k_aux = 0;  // 0 means F_lat
  std::size_t epochs = 20;
};

struct ExperimentConfig {
  std::string experiment_id = "toy";
  std::size_t m = 512000;
  std::size_t f = 64;
  double p = 0.1;
  std::vector<std::size_t> n_list = {8, 16, 32};
  std::uint64_t data_seed = 0;
  std::uint64_t seed_a = 1;
  std::uint64_t seed_b = 2;
  ToyConfig toy;
  SaeConfig sae;
  double holdout = 0.2;
  std::size_t folds = 5;
  std::vector<int> alpha_exponents = default_alpha_exponents();
  std::vector<Metric> metrics = {Metric::kSemiMatch, Metric::kSoftMatch, Metric::kRidge};
  std::filesystem::path out_dir = "runs/default";
  bool paper_scale = false;

  std::size_t latents() const { return sae.f_lat == 0 ? f : sae.f_lat; }
};

/// Throws ConfigError on any violated constraint.
void validate(const ExperimentConfig& cfg);

/// Strict JSON: unknown keys and wrong types are rejected.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);

/// M = 10,240,000 with one epoch for the toy models and the SAEs.
void apply_paper_scale(ExperimentConfig& cfg);

/// FNV-1a of the canonical JSON, excluding the output directory.
std::uint64_t config_hash(const ExperimentConfig& cfg);

std::vector<Metric> parse_metric_list(const std::string& csv);

}  // namespace supalign
