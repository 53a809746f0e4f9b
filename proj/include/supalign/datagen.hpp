#pragma once

#include <cstddef>

#include "supalign/numerics.hpp"
#include "supalign/rng.hpp"

namespace supalign {

/// Sparse ground-truth features: rows are samples, columns features.
struct FeatureDataset {
  RowMatF z;          // M x F, entries 0 or in (0, 1)
  double p = 0.0;     // per-feature activation probability
  Vec importance;     // F, empty until gen_importance is applied

  Eigen::Index num_rows() const { return z.rows(); }
  Eigen::Index num_features() const { return z.cols(); }
};

/// Each entry independently active with probability p, active values uniform
/// in [0, 1). Importance is left empty.
FeatureDataset gen_features(std::size_t m, std::size_t f, double p, const RngStream& rng);

/// Power-law importance 1/x^2 on F evenly spaced points of [1, 3 - 2/F].
Vec gen_importance(std::size_t f);

/// K-sparse random rows, then columns centered and orthogonalized so that
/// Z^T Z / M = I. Only the theory oracles use this.
Mat gen_whitened_sparse(std::size_t m, std::size_t f, std::size_t k, RngStream rng);

/// The K-sparse matrix `gen_whitened_sparse` starts from, before whitening.
Mat gen_sparse_rows(std::size_t m, std::size_t f, std::size_t k, RngStream& rng);

}  // namespace supalign
