#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpbnn/network.hpp"

namespace fpbnn {

/// Degenerate Gaussian N(mean, V S^2 V^T / (K-1)) fitted to K pre-trained
/// weight vectors. Only the span of V carries density; directions orthogonal
/// to it are unpenalized.
struct LowRankGaussian {
  Eigen::VectorXd mean;            // mu0, length d
  Eigen::MatrixXd right_vectors;   // V, d x r, orthonormal columns
  Eigen::VectorXd singular_values; // S, length r, descending, > 0
  int ensemble_size = 0;           // K
  std::uint64_t spec_hash = 0;
  std::uint64_t init_token = 0;

  Eigen::Index dim() const { return mean.size(); }
  Eigen::Index rank() const { return singular_values.size(); }

  /// Dense V S^2 V^T / (K-1). O(d^2) memory; diagnostics and tests only.
  Eigen::MatrixXd covariance() const;
  /// Dense (K-1) V S^-2 V^T.
  Eigen::MatrixXd pseudo_inverse() const;
};

constexpr double kDefaultTruncationTol = 1e-8;

/// mu0 = mean of the rows, thin SVD of the centered K x d matrix; directions
/// with S <= tol * S_max are dropped.
LowRankGaussian build_anchor_prior(const Eigen::MatrixXd& weights_by_row,
                                   double truncation_tol = kDefaultTruncationTol);

/// A pre-trained ensemble member together with the fingerprint of the shared
/// initialization it started from.
struct PretrainedMember {
  ParamVector weights;
  double fit_rmse = 0.0;
  std::uint64_t init_token = 0;
};

/// Ensemble version: all members must share one initialization token, since
/// the mean of independently initialized networks is meaningless.
LowRankGaussian build_anchor_prior(std::span<const PretrainedMember> members,
                                   double truncation_tol = kDefaultTruncationTol);

Eigen::MatrixXd stack_rows(std::span<const ParamVector> params);

/// -(K-1)/2 * |S^-1 V^T (w - mu0)|^2, additive constant omitted.
double log_density(const LowRankGaussian& prior, const Eigen::VectorXd& w);

/// mu0 + V S z / sqrt(K-1).
Eigen::VectorXd sample_with(const LowRankGaussian& prior, const Eigen::VectorXd& z);
Eigen::VectorXd sample(const LowRankGaussian& prior, std::uint64_t seed);

void save_anchor_prior(const std::string& path, const LowRankGaussian& prior);
LowRankGaussian load_anchor_prior(const std::string& path);
void write_anchor_prior(Container& c, const LowRankGaussian& prior, const std::string& prefix);
LowRankGaussian read_anchor_prior(const Container& c, const std::string& prefix);

}  // namespace fpbnn
