#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fpbnn {

/// Mean function of a GP prior, evaluated in scaled input space.
///
///   zero              m(x) = 0
///   linear            m(x) = slope * x[feature]
///   random_cubic      m(x) = cubic_scale * u * x[feature]^3, u ~ U(-1, 1) per realization
///   linear_in_feature m(x) = theta * (feature_scale * x[feature] + feature_offset)
///
/// The affine feature map of linear_in_feature lets the mean be stated in
/// physical units of the feature (e.g. raw volume fraction) while the prior
/// lives in scaled space.
struct MeanFunction {
  enum class Kind { Zero, Linear, RandomCubic, LinearInFeature };

  Kind kind = Kind::Zero;
  int feature = 0;
  double slope = 0.0;
  double cubic_scale = 5.0;
  double theta = 0.0;
  double feature_scale = 1.0;
  double feature_offset = 0.0;

  static MeanFunction zero();
  static MeanFunction linear(double slope, int feature = 0);
  static MeanFunction random_cubic(double scale, int feature = 0);
  static MeanFunction linear_in_feature(double theta, int feature, double feature_scale = 1.0,
                                        double feature_offset = 0.0);

  bool is_random() const { return kind == Kind::RandomCubic; }
  /// `u` is the per-realization random coefficient; ignored by deterministic kinds.
  double operator()(const Eigen::VectorXd& x, double u = 0.0) const;
  /// Expectation over u.
  double expected(const Eigen::VectorXd& x) const;
};

std::string to_string(MeanFunction::Kind kind);
MeanFunction::Kind parse_mean_kind(const std::string& name);

struct OutputBounds {
  std::optional<double> lower;
  std::optional<double> upper;

  bool empty() const { return !lower && !upper; }
};

/// GP prior over one output channel.
struct FunctionalPrior {
  MeanFunction mean;
  double kernel_amp = 1.0;
  double lengthscale = 1.0;
  std::vector<int> features{0};
  OutputBounds bounds;

  void validate(int input_dim) const;
};

/// One prior per output channel; channels are sampled independently.
using MultiOutputPrior = std::vector<FunctionalPrior>;

struct PriorRealization {
  Eigen::MatrixXd points;  // M x input_dim
  Eigen::MatrixXd values;  // M x output_dim
};

/// k0 * exp(-|x~ - x~'|^2 / (2 L^2)), x~ restricted to `features`.
double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& x2, double k0, double L,
                  const std::vector<int>& features);
double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& x2, const FunctionalPrior& prior);

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& points, const FunctionalPrior& prior);

/// Lower Cholesky factor of `gram` + eps I, starting at eps = 1e-8 * scale and
/// doubling up to 1e-4 * scale. Throws FactorizationError when all fail.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& gram, double scale);

/// Latin-hypercube stratified standard-normal draws, M x dim.
Eigen::MatrixXd lhs_standard_normal(int M, int dim, std::uint64_t seed);

PriorRealization sample_realization(const FunctionalPrior& prior, const Eigen::MatrixXd& points,
                                    std::uint64_t seed);
PriorRealization sample_realization(const MultiOutputPrior& priors, const Eigen::MatrixXd& points,
                                    std::uint64_t seed);

/// Pointwise clamp of each output column into its bounds.
PriorRealization constrain_realization(PriorRealization realization,
                                       const std::vector<OutputBounds>& bounds);

/// theta = argmin sum_i (y_i - theta * f(x_i))^2 with f the affine feature
/// map of `feature` (no intercept).
double fit_linear_mean(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int feature,
                       double feature_scale = 1.0, double feature_offset = 0.0);

}  // namespace fpbnn
