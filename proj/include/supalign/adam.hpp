#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

namespace supalign {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment state for one parameter tensor.
class AdamSlot {
 public:
  AdamSlot() = default;
  AdamSlot(Eigen::Index rows, Eigen::Index cols)
      : m_(Eigen::MatrixXd::Zero(rows, cols)), v_(Eigen::MatrixXd::Zero(rows, cols)) {}

  /// In-place update of `param` given its gradient; `step` counts from 1.
  template <typename Param, typename Grad>
  void apply(Param& param, const Grad& grad, const AdamConfig& cfg, std::size_t step) {
    m_ = cfg.beta1 * m_ + (1.0 - cfg.beta1) * grad;
    v_ = cfg.beta2 * v_ + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    param.array() -= cfg.lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + cfg.eps);
  }

 private:
  Eigen::MatrixXd m_;
  Eigen::MatrixXd v_;
};

}  // namespace supalign
