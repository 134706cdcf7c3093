#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpbnn/dataset.hpp"
#include "fpbnn/functional_prior.hpp"

namespace fpbnn {

// ---- 1D interpolation / extrapolation problem ------------------------------

struct Benchmark1DConfig {
  int n_region1 = 25;
  int n_region2 = 5;
  double region1_lo = -0.6, region1_hi = 0.1;
  double region2_lo = 0.6, region2_hi = 0.65;
  double noise_std = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 1.5 (x - 0.2) + sin(8 (x - 0.2)).
double benchmark_1d_truth(double x);

struct RawSamples {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
};

/// Inputs and noisy targets; noise_std may be 0 here.
RawSamples gen_1d_samples(const Benchmark1DConfig& config);
/// Same draws wrapped as a Dataset with identity scaling and noise_std^2.
Dataset gen_1d_dataset(const Benchmark1DConfig& config);

// ---- synthetic composite surrogate -----------------------------------------

struct SplitDistribution {
  enum class Kind { Uniform, Beta };
  Kind kind = Kind::Uniform;
  double alpha = 3.0;
  double beta = 3.0;

  static SplitDistribution uniform() { return {}; }
  static SplitDistribution beta_dist(double a, double b) { return {Kind::Beta, a, b}; }
  std::string describe() const;
};

struct SyntheticRVEConfig {
  std::vector<std::string> input_names{"vf", "E_f", "b_m", "c_m"};
  Eigen::VectorXd input_lo;
  Eigen::VectorXd input_hi;
  std::vector<std::string> output_names{"b_eff", "c_eff", "E_eff", "nu_eff", "p_sigma"};
  Eigen::VectorXd cov;
  SplitDistribution test_distribution = SplitDistribution::uniform();
  SplitDistribution ind_distribution = SplitDistribution::uniform();
  SplitDistribution ood_distribution = SplitDistribution::beta_dist(3.0, 3.0);
  int n_test = 1000;
  int n_train = 100;
  std::uint64_t seed = 0;

  /// Ranges and CoVs from the frozen oracle constants.
  SyntheticRVEConfig();
  void validate() const;
};

/// Noiseless oracle. Throws DomainError outside the declared input box.
Eigen::VectorXd synthetic_rve_oracle(const Eigen::VectorXd& x);
Eigen::MatrixXd synthetic_rve_oracle(const Eigen::MatrixXd& X);

Eigen::MatrixXd sample_inputs(const SplitDistribution& dist, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi, int n, std::uint64_t seed);

/// oracle(x) * (1 + cov_j * eps), eps ~ N(0, 1) per entry. cov may be zero.
Eigen::MatrixXd noisy_outputs(const Eigen::MatrixXd& noiseless, const Eigen::VectorXd& cov,
                              std::uint64_t seed);

/// Median and standard deviation of the noiseless outputs over a fixed
/// uniform reference sample, per channel.
struct ReferenceOutputStats {
  Eigen::VectorXd median;
  Eigen::VectorXd std_dev;
};
ReferenceOutputStats reference_output_stats(const SyntheticRVEConfig& config);

struct MaterialsDatasets {
  Dataset train_ind;
  Dataset train_ood;
  Dataset test;
};

/// Inputs scaled onto [-1, 1]; outputs divided by the reference standard
/// deviation (no centering). Noise variance per channel is
/// (cov_j * median_j)^2 in physical units.
MaterialsDatasets gen_materials_datasets(const SyntheticRVEConfig& config);

// ---- prior construction ------------------------------------------------------

struct MutualInformation {
  double nats = 0.0;
  /// Constant input or output; nats is 0.
  bool degenerate = false;
};

/// Kraskov k-nearest-neighbour estimator (first variant), clamped at 0.
MutualInformation mutual_information(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int k = 3);

struct MaterialsPrior {
  MultiOutputPrior priors;
  Eigen::MatrixXd mi;             // outputs x inputs, nats
  std::vector<bool> fell_back;    // empty subset replaced by {vf}
};

inline constexpr double kMaterialsKernelAmp = 0.2;
inline constexpr double kMaterialsLengthscale = 0.8;
inline constexpr double kDefaultMiThreshold = 0.05;

/// Per output: inputs with MI >= threshold, mean theta * vf (physical vf),
/// RBF kernel over the subset, lower bound 0. Operates in the dataset's
/// scaled units.
MaterialsPrior build_materials_prior(const Dataset& train, double threshold = kDefaultMiThreshold,
                                     int vf_feature = 0);

}  // namespace fpbnn
