#pragma once

#include <Eigen/Core>

namespace fpbnn {

/// Adam with an exponential step-size decay from `learning_rate` down to
/// `learning_rate * final_lr_fraction` over the epoch budget.
struct AdamConfig {
  int epochs = 5000;
  double learning_rate = 1e-3;
  double final_lr_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// 0 means full batch.
  int batch_size = 0;

  void validate() const;
  double rate_at(int epoch) const;
};

class Adam {
 public:
  Adam(const AdamConfig& config, Eigen::Index dim);

  /// One in-place update of `params` with gradient `grad` and step size `lr`.
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

 private:
  AdamConfig config_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  double beta1_power_ = 1.0;
  double beta2_power_ = 1.0;
};

}  // namespace fpbnn
