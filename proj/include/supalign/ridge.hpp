#pragma once

#include "supalign/numerics.hpp"

namespace supalign {

struct RidgeFit {
  Mat coef;       // S x T
  Vec intercept;  // T
};

/// Solves (Xc^T Xc + alpha I) W = Xc^T Yc on column-centered data; the
/// intercept restores the means. Requires alpha > 0 and finite inputs.
RidgeFit ridge_fit(const Mat& x, const Mat& y, double alpha);

Mat ridge_predict(const RidgeFit& fit, const Mat& x);

/// Ridge solutions for many alphas from one eigendecomposition of Xc^T Xc.
class RidgePath {
 public:
  RidgePath(const Mat& x, const Mat& y);
  RidgeFit fit(double alpha) const;

 private:
  Vec x_mean_, y_mean_;
  Vec eigvals_;
  Mat eigvecs_;
  Mat projected_;  // V^T Xc^T Yc
};

}  // namespace supalign
