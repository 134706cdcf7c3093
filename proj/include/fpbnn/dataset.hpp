#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fpbnn {

/// Per-dimension affine map x_scaled = (x - shift) / scale.
struct AffineScaling {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  static AffineScaling identity(Eigen::Index dim);
  /// Maps [lo, hi] onto [-1, 1] per dimension.
  static AffineScaling to_unit_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  /// Pure rescaling (no shift); keeps the sign of every value.
  static AffineScaling divide_by(const Eigen::VectorXd& scale);

  Eigen::Index dim() const { return scale.size(); }
  void validate() const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& scaled) const;
};

/// Paired inputs/outputs in scaled units together with the transforms back
/// to physical units and the known diagonal noise covariance (scaled units).
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  Eigen::VectorXd noise_var;
  AffineScaling input_scaling;
  AffineScaling output_scaling;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;

  /// Builds a dataset from physical-unit arrays; noise_var_raw is in squared
  /// physical output units.
  static Dataset from_raw(const Eigen::MatrixXd& X_raw, const Eigen::MatrixXd& Y_raw,
                          const Eigen::VectorXd& noise_var_raw, AffineScaling input_scaling,
                          AffineScaling output_scaling);

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index input_dim() const { return X.cols(); }
  Eigen::Index output_dim() const { return Y.cols(); }
  Eigen::MatrixXd raw_X() const { return input_scaling.invert(X); }
  Eigen::MatrixXd raw_Y() const { return output_scaling.invert(Y); }
  Eigen::VectorXd raw_noise_var() const;

  void validate() const;
  /// First n rows (n <= size()).
  Dataset head(Eigen::Index n) const;
};

/// y~_i ~ N(y_i, noise_cov); inputs unchanged.
Dataset resample_likelihood(const Dataset& data, std::uint64_t seed);
/// N rows drawn with replacement.
Dataset resample_bootstrap(const Dataset& data, std::uint64_t seed);

/// Free-form provenance stored in the sidecar file.
struct DatasetProvenance {
  std::string generator;
  std::string distribution;
  std::uint64_t seed = 0;
  std::vector<double> coefficients_of_variation;
};

/// CSV (physical units, header = input names then output names) plus a JSON
/// sidecar `<path>.meta.json` with scaling, noise and provenance.
void write_dataset(const std::string& csv_path, const Dataset& data,
                   const DatasetProvenance& provenance = {});
Dataset read_dataset(const std::string& csv_path);

/// Reads a plain numeric CSV with a header row.
Eigen::MatrixXd read_csv_matrix(const std::string& path, std::vector<std::string>* header = nullptr);
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& header);

std::string content_hash(const std::string& path);

}  // namespace fpbnn
