#include "supalign/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "supalign/error.hpp"
#include "supalign/kernels.hpp"

namespace supalign {

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < assignments.size(); ++r) {
    if (static_cast<std::size_t>(assignments[r]) == fold) rows.push_back(r);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < assignments.size(); ++r) {
    if (static_cast<std::size_t>(assignments[r]) != fold) rows.push_back(r);
  }
  return rows;
}

std::size_t FoldPlan::fold_size(std::size_t fold) const {
  return static_cast<std::size_t>(
      std::count(assignments.begin(), assignments.end(), static_cast<int>(fold)));
}

FoldPlan kfold_split(std::size_t num_rows, std::size_t k, RngStream rng) {
  if (k < 2) throw ParameterError("kfold_split: k must be at least 2");
  if (num_rows < k) {
    throw DegenerateInputError("kfold_split: " + std::to_string(num_rows) +
                               " rows cannot fill " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(num_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  FoldPlan plan;
  plan.num_rows = num_rows;
  plan.k = k;
  plan.assignments.assign(num_rows, 0);
  // Position i of the shuffled order goes to fold i mod k.
  for (std::size_t i = 0; i < num_rows; ++i) {
    plan.assignments[order[i]] = static_cast<int>(i % k);
  }
  return plan;
}

bool is_constant_column(const Eigen::Ref<const Vec>& col) {
  const Eigen::Index m = col.size();
  if (m == 0) return true;
  const double scale = col.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  double mean = col.sum() / static_cast<double>(m);
  mean += (col.array() - mean).sum() / static_cast<double>(m);
  const double spread = (col.array() - mean).matrix().norm();
  return spread <= 1e-13 * scale * std::sqrt(static_cast<double>(m));
}

double pearson_corr(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y) {
  if (x.size() != y.size()) {
    throw DimensionError("pearson_corr: length mismatch " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
  }
  if (x.size() < 2) throw DegenerateInputError("pearson_corr: need at least 2 samples");
  if (is_constant_column(x) || is_constant_column(y)) return 0.0;
  const Vec dx = x.array() - x.mean();
  const Vec dy = y.array() - y.mean();
  const double r = dx.dot(dy) / (dx.norm() * dy.norm());
  return std::clamp(r, -1.0, 1.0);
}

NormalizedColumns center_normalize_columns(const Mat& y) {
  if (y.rows() < 2) throw DegenerateInputError("center_normalize_columns: need at least 2 rows");
  NormalizedColumns out;
  out.data = kernels::parallel::standardize_columns(y, out.zero_variance);
  return out;
}

Mat cross_corr_matrix(const Mat& ya, const Mat& yb) {
  if (ya.rows() != yb.rows()) {
    throw DimensionError("cross_corr_matrix: row count mismatch " + std::to_string(ya.rows()) +
                         " vs " + std::to_string(yb.rows()));
  }
  if (ya.rows() < 2) throw DegenerateInputError("cross_corr_matrix: need at least 2 rows");
  return kernels::parallel::corr_matrix(ya, yb);
}

Mat select_rows(const Mat& m, const std::vector<std::size_t>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Mat select_cols(const Mat& m, const std::vector<std::size_t>& cols) {
  Mat out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(cols[j]));
  }
  return out;
}

}  // namespace supalign
