#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Core>

#include "fpbnn/low_rank_gaussian.hpp"
#include "fpbnn/network.hpp"

namespace fpbnn {

enum class PriorFamily { IsotropicZeroMean, FactorizedGaussian, FactorizedGenNorm, Multivariate };

std::string to_string(PriorFamily family);
PriorFamily parse_prior_family(const std::string& name);

/// Per-parameter marginal description obtained by pooling each layer's
/// kernel (and separately bias) entries.
struct FactorizedScales {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::VectorXd gennorm_alpha;
  Eigen::VectorXd gennorm_beta;
};

FactorizedScales fit_factorized(std::span<const ParamVector> members);

/// A parameter-space prior from one of the four families compared when
/// mapping parameter priors back to function space.
struct ParameterPrior {
  PriorFamily family = PriorFamily::IsotropicZeroMean;
  double isotropic_variance = 1.0;
  FactorizedScales factorized;
  LowRankGaussian multivariate;

  static ParameterPrior isotropic(double variance);
  static ParameterPrior factorized_gaussian(FactorizedScales scales);
  static ParameterPrior factorized_gennorm(FactorizedScales scales);
  static ParameterPrior correlated(LowRankGaussian prior);
};

Eigen::VectorXd sample_parameters(const ParameterPrior& prior, Eigen::Index dim, std::uint64_t seed);

struct PredictiveBand {
  Eigen::MatrixXd mean;  // Q x output_dim
  Eigen::MatrixXd std;   // Q x output_dim
};

/// Draws n_samples parameter vectors from `prior`, evaluates the network at
/// `eval_points` and returns pointwise mean and standard deviation.
PredictiveBand reconstruct_functional(const ParameterPrior& prior, const NetworkSpec& spec,
                                      const Eigen::MatrixXd& eval_points, int n_samples,
                                      std::uint64_t seed);

}  // namespace fpbnn
