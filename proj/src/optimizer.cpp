#include "fpbnn/optimizer.hpp"

#include <cmath>

#include "fpbnn/errors.hpp"

namespace fpbnn {

void AdamConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0))
    throw ConfigError("final_lr_fraction must lie in (0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (batch_size < 0) throw ConfigError("batch_size must be >= 0");
}

double AdamConfig::rate_at(int epoch) const {
  if (epochs <= 1) return learning_rate;
  return learning_rate * std::pow(final_lr_fraction, double(epoch) / double(epochs - 1));
}

Adam::Adam(const AdamConfig& config, Eigen::Index dim)
    : config_(config), m_(Eigen::VectorXd::Zero(dim)), v_(Eigen::VectorXd::Zero(dim)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  beta1_power_ *= config_.beta1;
  beta2_power_ *= config_.beta2;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 / (1.0 - beta1_power_);
  const double c2 = 1.0 / (1.0 - beta2_power_);
  params.array() -= lr * (m_.array() * c1) / ((v_.array() * c2).sqrt() + config_.epsilon);
}

}  // namespace fpbnn
