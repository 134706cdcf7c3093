#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpbnn/network.hpp"

namespace fpbnn {

/// Maximum-likelihood generalized-normal fit p(x) ~ exp(-(|x|/alpha)^beta)
/// to zero-centred samples. alpha is profiled out in closed form; beta is
/// found by a bounded 1-D search over log(beta).
struct GenNormFit {
  double alpha = 0.0;
  double beta = 2.0;
};

GenNormFit fit_gennorm(const Eigen::VectorXd& centered);

/// Per-layer spread of an ensemble of parameter vectors around its mean.
struct LayerSpread {
  double kernel_variance = 0.0;
  double bias_variance = 0.0;
  GenNormFit kernel_gennorm;
  GenNormFit bias_gennorm;
};

struct PriorStats {
  std::vector<double> per_layer_kernel_variance;
  std::vector<double> per_layer_bias_variance;
  std::vector<double> gennorm_shape_per_layer;
  std::vector<double> gennorm_scale_per_layer;
  double pooled_kernel_variance = 0.0;
  Eigen::VectorXd singular_values;
  std::vector<Eigen::Index> correlation_indices;
  Eigen::MatrixXd selected_correlations;
};

/// Demeaned entries of `layer`'s kernel (or bias) pooled over members.
Eigen::VectorXd pooled_demeaned(const Eigen::MatrixXd& W, const Eigen::VectorXd& mean,
                                const LayerSlice& slice, bool kernel);

std::vector<LayerSpread> layer_spreads(std::span<const ParamVector> members, bool fit_shapes = true);

/// Sample correlation matrix of the selected coordinates across members.
Eigen::MatrixXd coordinate_correlations(const Eigen::MatrixXd& W,
                                        const std::vector<Eigen::Index>& indices);

PriorStats compute_prior_stats(std::span<const ParamVector> members,
                               const std::vector<Eigen::Index>& correlation_indices = {});

/// One CSV row per layer.
void write_prior_stats_csv(const std::string& path, const PriorStats& stats);
void write_singular_values_csv(const std::string& path, const Eigen::VectorXd& s);

}  // namespace fpbnn
