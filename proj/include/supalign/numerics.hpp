#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "supalign/rng.hpp"

namespace supalign {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
/// Row-major float32 storage for large sample-by-feature tables.
using RowMatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Assignment of rows to k cross-validation folds.
struct FoldPlan {
  std::size_t num_rows = 0;
  std::size_t k = 0;
  std::vector<int> assignments;  // per row, in [0, k)

  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
  std::size_t fold_size(std::size_t fold) const;
};

/// Shuffled k-fold partition with sizes differing by at most one.
FoldPlan kfold_split(std::size_t num_rows, std::size_t k, RngStream rng);

/// Sample Pearson correlation. Returns 0 if either input has zero variance.
double pearson_corr(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y);

struct NormalizedColumns {
  Mat data;                        // centered, unit Euclidean norm columns
  std::vector<bool> zero_variance; // columns replaced by zeros
};

NormalizedColumns center_normalize_columns(const Mat& y);

/// Entry (i, j) is the Pearson correlation of column i of `ya` and column j
/// of `yb`; zero-variance columns correlate 0 with everything.
Mat cross_corr_matrix(const Mat& ya, const Mat& yb);

/// Gathers the listed rows of `m`.
Mat select_rows(const Mat& m, const std::vector<std::size_t>& rows);

/// Keeps the listed columns of `m`.
Mat select_cols(const Mat& m, const std::vector<std::size_t>& cols);

/// True when the centered column is numerically zero relative to its scale.
bool is_constant_column(const Eigen::Ref<const Vec>& col);

}  // namespace supalign
