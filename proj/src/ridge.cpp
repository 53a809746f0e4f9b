#include "supalign/ridge.hpp"

#include <cmath>
#include <string>

#include "supalign/error.hpp"

namespace supalign {

namespace {

void check_inputs(const Mat& x, const Mat& y) {
  if (x.rows() != y.rows()) {
    throw DimensionError("ridge: X has " + std::to_string(x.rows()) + " rows, Y has " +
                         std::to_string(y.rows()));
  }
  if (x.rows() < 1) throw DegenerateInputError("ridge: no rows");
  if (!x.allFinite() || !y.allFinite()) throw DegenerateInputError("ridge: non-finite input");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ParameterError("ridge: alpha must be positive and finite");
  }
}

}  // namespace

RidgeFit ridge_fit(const Mat& x, const Mat& y, double alpha) {
  check_inputs(x, y);
  check_alpha(alpha);
  const Vec x_mean = x.colwise().mean();
  const Vec y_mean = y.colwise().mean();
  const Mat xc = x.rowwise() - x_mean.transpose();
  const Mat yc = y.rowwise() - y_mean.transpose();
  Mat gram = xc.transpose() * xc;
  gram.diagonal().array() += alpha;
  RidgeFit fit;
  fit.coef = gram.ldlt().solve(xc.transpose() * yc);
  fit.intercept = y_mean - fit.coef.transpose() * x_mean;
  return fit;
}

Mat ridge_predict(const RidgeFit& fit, const Mat& x) {
  if (x.cols() != fit.coef.rows()) throw DimensionError("ridge_predict: width mismatch");
  Mat out = x * fit.coef;
  out.rowwise() += fit.intercept.transpose();
  return out;
}

RidgePath::RidgePath(const Mat& x, const Mat& y) {
  check_inputs(x, y);
  x_mean_ = x.colwise().mean();
  y_mean_ = y.colwise().mean();
  const Mat xc = x.rowwise() - x_mean_.transpose();
  const Mat yc = y.rowwise() - y_mean_.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> eig(xc.transpose() * xc);
  eigvals_ = eig.eigenvalues().cwiseMax(0.0);
  eigvecs_ = eig.eigenvectors();
  projected_ = eigvecs_.transpose() * (xc.transpose() * yc);
}

RidgeFit RidgePath::fit(double alpha) const {
  check_alpha(alpha);
  const Vec inv = (eigvals_.array() + alpha).inverse();
  RidgeFit out;
  out.coef = eigvecs_ * (inv.asDiagonal() * projected_);
  out.intercept = y_mean_ - out.coef.transpose() * x_mean_;
  return out;
}

}  // namespace supalign
