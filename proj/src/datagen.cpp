#include "supalign/datagen.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "supalign/error.hpp"
#include "supalign/kernels.hpp"

namespace supalign {

FeatureDataset gen_features(std::size_t m, std::size_t f, double p, const RngStream& rng) {
  if (m < 1 || f < 1) throw ParameterError("gen_features: M and F must be positive");
  if (!(p > 0.0 && p <= 1.0)) {
    throw ParameterError("gen_features: activation probability must lie in (0, 1], got " +
                         std::to_string(p));
  }
  FeatureDataset ds;
  ds.p = p;
  ds.z.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(f));
  kernels::parallel::sparse_uniform_fill(ds.z, p, rng);
  return ds;
}

Vec gen_importance(std::size_t f) {
  if (f < 2) throw ParameterError("gen_importance: F must be at least 2");
  const double fd = static_cast<double>(f);
  const double step = (2.0 - 2.0 / fd) / (fd - 1.0);
  Vec t(static_cast<Eigen::Index>(f));
  for (std::size_t i = 0; i < f; ++i) {
    // Pin the last grid point to the closed-form endpoint.
    const double x = (i + 1 == f) ? 3.0 - 2.0 / fd : 1.0 + static_cast<double>(i) * step;
    t[static_cast<Eigen::Index>(i)] = 1.0 / (x * x);
  }
  return t;
}

Mat gen_sparse_rows(std::size_t m, std::size_t f, std::size_t k, RngStream& rng) {
  if (k < 1 || k > f) throw ParameterError("gen_sparse_rows: need 1 <= K <= F");
  Mat z = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(f));
  std::vector<std::size_t> idx(f);
  for (std::size_t r = 0; r < m; ++r) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots become the row's support.
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(f - i));
      std::swap(idx[i], idx[j]);
      z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(idx[i])) = rng.normal();
    }
  }
  return z;
}

Mat gen_whitened_sparse(std::size_t m, std::size_t f, std::size_t k, RngStream rng) {
  if (m <= f) {
    throw ParameterError("gen_whitened_sparse: need M > F to center and whiten (M=" +
                         std::to_string(m) + ", F=" + std::to_string(f) + ")");
  }
  Mat z = gen_sparse_rows(m, f, k, rng);
  z.rowwise() -= z.colwise().mean();
  // Thin Q of the centered matrix; its columns stay centered.
  Eigen::HouseholderQR<Mat> qr(z);
  Mat q = qr.householderQ() * Mat::Identity(z.rows(), z.cols());
  // Fix column signs so each whitened column correlates positively with its source.
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (q.col(j).dot(z.col(j)) < 0.0) q.col(j) = -q.col(j);
  }
  return q * std::sqrt(static_cast<double>(m));
}

}  // namespace supalign
