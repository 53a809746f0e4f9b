#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP version used by the
// library and a plain serial version kept as the test reference. Parallel
// kernels split work over independent outputs only (rows, columns, row
// blocks), so results do not depend on the thread count.

#include <cstddef>
#include <vector>

#include "supalign/numerics.hpp"
#include "supalign/rng.hpp"

namespace supalign::kernels {

/// Rows per independently seeded block in `sparse_uniform_fill`.
inline constexpr std::size_t kRowBlock = 4096;

/// Indices of the k largest values of `row`, ties broken by lowest index,
/// returned in ascending index order.
std::vector<int> topk_indices(const Eigen::Ref<const Eigen::RowVectorXd>& row, int k);

namespace serial {

/// Columns centered and scaled to unit norm; zero-variance columns are zeroed
/// and flagged in `zero_variance` (resized to cols).
Mat standardize_columns(const Mat& y, std::vector<bool>& zero_variance);

/// Pearson cross-correlation by the textbook two-pass formula per entry.
Mat corr_matrix(const Mat& ya, const Mat& yb);

/// Entries are 0 with probability 1-p, else uniform in [0,1). Row block b
/// draws from rng.derive(b).
void sparse_uniform_fill(RowMatF& out, double p, const RngStream& rng);

/// ReLU(Z W) for float rows Z and weights W (F x N).
Mat relu_project(const RowMatF& z, const Mat& w);

/// ReLU(TopK(X W_enc^T + b_enc)).
Mat topk_relu_encode(const Mat& x, const Mat& w_enc, const Vec& b_enc, int k);

}  // namespace serial

namespace parallel {

Mat standardize_columns(const Mat& y, std::vector<bool>& zero_variance);
Mat corr_matrix(const Mat& ya, const Mat& yb);
void sparse_uniform_fill(RowMatF& out, double p, const RngStream& rng);
Mat relu_project(const RowMatF& z, const Mat& w);
Mat topk_relu_encode(const Mat& x, const Mat& w_enc, const Vec& b_enc, int k);

}  // namespace parallel

}  // namespace supalign::kernels
