#include "supalign/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "supalign/error.hpp"

namespace supalign::kernels {

std::vector<int> topk_indices(const Eigen::Ref<const Eigen::RowVectorXd>& row, int k) {
  const int n = static_cast<int>(row.size());
  k = std::clamp(k, 0, n);
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  auto before = [&row](int a, int b) {
    return row[a] > row[b] || (row[a] == row[b] && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), before);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

void check_rows(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("row count mismatch: " + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()));
  }
}

// Mean with one compensation pass so constant columns center to exact zeros.
double column_mean(const double* x, Eigen::Index m) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) s += x[r];
  double mean = s / static_cast<double>(m);
  double c = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) c += x[r] - mean;
  return mean + c / static_cast<double>(m);
}

// Returns true when the column had zero variance and was zeroed.
bool standardize_one(const Mat& y, Mat& out, Eigen::Index j) {
  const Eigen::Index m = y.rows();
  const double* x = y.col(j).data();
  double* o = out.col(j).data();
  const double mean = column_mean(x, m);
  double ss = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    o[r] = x[r] - mean;
    ss += o[r] * o[r];
  }
  const double norm = std::sqrt(ss);
  if (is_constant_column(y.col(j))) {
    std::fill(o, o + m, 0.0);
    return true;
  }
  for (Eigen::Index r = 0; r < m; ++r) o[r] /= norm;
  return false;
}

void fill_block(RowMatF& out, double p, const RngStream& rng, std::size_t block) {
  RngStream s = rng.derive(static_cast<std::uint64_t>(block));
  const auto begin = static_cast<Eigen::Index>(block * kRowBlock);
  const auto end = std::min<Eigen::Index>(begin + static_cast<Eigen::Index>(kRowBlock), out.rows());
  for (Eigen::Index r = begin; r < end; ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const double gate = s.uniform();
      const double value = s.uniform();
      // Round toward zero so the stored float stays strictly below 1.
      float v = static_cast<float>(value);
      if (v >= 1.0f) v = std::nextafter(1.0f, 0.0f);
      out(r, c) = gate < p ? v : 0.0f;
    }
  }
}

std::size_t num_blocks(Eigen::Index rows) {
  return (static_cast<std::size_t>(rows) + kRowBlock - 1) / kRowBlock;
}

void encode_row(const Mat& x, const Mat& w_enc, const Vec& b_enc, int k, Eigen::Index r,
                Mat& out) {
  const Eigen::RowVectorXd pre = x.row(r) * w_enc.transpose() + b_enc.transpose();
  for (const int j : topk_indices(pre, k)) out(r, j) = std::max(0.0, pre[j]);
}

void check_encode(const Mat& x, const Mat& w_enc, const Vec& b_enc) {
  if (x.cols() != w_enc.cols() || w_enc.rows() != b_enc.size()) {
    throw DimensionError("encoder shape mismatch");
  }
}

}  // namespace

namespace serial {

Mat standardize_columns(const Mat& y, std::vector<bool>& zero_variance) {
  zero_variance.assign(static_cast<std::size_t>(y.cols()), false);
  Mat out(y.rows(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    zero_variance[static_cast<std::size_t>(j)] = standardize_one(y, out, j);
  }
  return out;
}

Mat corr_matrix(const Mat& ya, const Mat& yb) {
  check_rows(ya, yb);
  const Eigen::Index m = ya.rows();
  std::vector<double> mean_a(static_cast<std::size_t>(ya.cols()));
  std::vector<double> mean_b(static_cast<std::size_t>(yb.cols()));
  std::vector<bool> const_a(mean_a.size()), const_b(mean_b.size());
  for (Eigen::Index i = 0; i < ya.cols(); ++i) {
    mean_a[i] = column_mean(ya.col(i).data(), m);
    const_a[i] = is_constant_column(ya.col(i));
  }
  for (Eigen::Index j = 0; j < yb.cols(); ++j) {
    mean_b[j] = column_mean(yb.col(j).data(), m);
    const_b[j] = is_constant_column(yb.col(j));
  }
  Mat out = Mat::Zero(ya.cols(), yb.cols());
  for (Eigen::Index i = 0; i < ya.cols(); ++i) {
    for (Eigen::Index j = 0; j < yb.cols(); ++j) {
      if (const_a[i] || const_b[j]) continue;
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (Eigen::Index r = 0; r < m; ++r) {
        const double dx = ya(r, i) - mean_a[i];
        const double dy = yb(r, j) - mean_b[j];
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
      }
      out(i, j) = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    }
  }
  return out;
}

void sparse_uniform_fill(RowMatF& out, double p, const RngStream& rng) {
  const std::size_t blocks = num_blocks(out.rows());
  for (std::size_t b = 0; b < blocks; ++b) fill_block(out, p, rng, b);
}

Mat relu_project(const RowMatF& z, const Mat& w) {
  if (z.cols() != w.rows()) throw DimensionError("relu_project: feature count mismatch");
  Mat out(z.rows(), w.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index f = 0; f < z.cols(); ++f) s += static_cast<double>(z(r, f)) * w(f, j);
      out(r, j) = std::max(0.0, s);
    }
  }
  return out;
}

Mat topk_relu_encode(const Mat& x, const Mat& w_enc, const Vec& b_enc, int k) {
  check_encode(x, w_enc, b_enc);
  Mat out = Mat::Zero(x.rows(), w_enc.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) encode_row(x, w_enc, b_enc, k, r, out);
  return out;
}

}  // namespace serial

namespace parallel {

Mat standardize_columns(const Mat& y, std::vector<bool>& zero_variance) {
  zero_variance.assign(static_cast<std::size_t>(y.cols()), false);
  Mat out(y.rows(), y.cols());
  // vector<bool> packs bits, so collect flags in a byte array first.
  std::vector<char> flags(zero_variance.size(), 0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    flags[static_cast<std::size_t>(j)] = standardize_one(y, out, j) ? 1 : 0;
  }
  for (std::size_t j = 0; j < flags.size(); ++j) zero_variance[j] = flags[j] != 0;
  return out;
}

Mat corr_matrix(const Mat& ya, const Mat& yb) {
  check_rows(ya, yb);
  std::vector<bool> za, zb;
  const Mat sa = standardize_columns(ya, za);
  const Mat sb = standardize_columns(yb, zb);
  Mat out(ya.cols(), yb.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < yb.cols(); ++j) {
    out.col(j) = (sa.transpose() * sb.col(j)).cwiseMax(-1.0).cwiseMin(1.0);
  }
  return out;
}

void sparse_uniform_fill(RowMatF& out, double p, const RngStream& rng) {
  const auto blocks = static_cast<std::ptrdiff_t>(num_blocks(out.rows()));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) fill_block(out, p, rng, static_cast<std::size_t>(b));
}

Mat relu_project(const RowMatF& z, const Mat& w) {
  if (z.cols() != w.rows()) throw DimensionError("relu_project: feature count mismatch");
  Mat out(z.rows(), w.cols());
  const auto blocks = static_cast<std::ptrdiff_t>(num_blocks(z.rows()));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const auto begin = static_cast<Eigen::Index>(b) * static_cast<Eigen::Index>(kRowBlock);
    const auto n = std::min<Eigen::Index>(static_cast<Eigen::Index>(kRowBlock), z.rows() - begin);
    const Mat zb = z.middleRows(begin, n).cast<double>();
    out.middleRows(begin, n) = (zb * w).cwiseMax(0.0);
  }
  return out;
}

Mat topk_relu_encode(const Mat& x, const Mat& w_enc, const Vec& b_enc, int k) {
  check_encode(x, w_enc, b_enc);
  Mat out = Mat::Zero(x.rows(), w_enc.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < x.rows(); ++r) encode_row(x, w_enc, b_enc, k, r, out);
  return out;
}

}  // namespace parallel

}  // namespace supalign::kernels
