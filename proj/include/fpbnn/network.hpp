#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpbnn/container.hpp"

namespace fpbnn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully-connected architecture with leaky-ReLU hidden layers and a linear
/// output layer.
struct NetworkSpec {
  int input_dim = 1;
  std::vector<int> hidden_widths;
  int output_dim = 1;
  double activation_slope = 0.01;

  NetworkSpec() = default;
  NetworkSpec(int input_dim, std::vector<int> hidden_widths, int output_dim,
              double activation_slope = 0.01);

  void validate() const;
  int num_layers() const { return static_cast<int>(hidden_widths.size()) + 1; }
  /// Unit counts n_0 .. n_{L+1}.
  std::vector<int> layer_sizes() const;
  Eigen::Index param_count() const;
  std::string describe() const;
  std::uint64_t hash() const;

  bool operator==(const NetworkSpec&) const = default;
};

Eigen::Index param_count(const NetworkSpec& spec);

/// Offsets of one layer inside the flat parameter vector. The kernel block is
/// stored row-major (output-unit-major) and followed by the bias block.
struct LayerSlice {
  int fan_in = 0;
  int fan_out = 0;
  Eigen::Index kernel_offset = 0;
  Eigen::Index bias_offset = 0;

  Eigen::Index kernel_size() const { return Eigen::Index(fan_in) * fan_out; }
};

std::vector<LayerSlice> parameter_layout(const NetworkSpec& spec);

class ParamVector {
 public:
  explicit ParamVector(NetworkSpec spec);
  ParamVector(NetworkSpec spec, Eigen::VectorXd values);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<LayerSlice>& layout() const { return layout_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  Eigen::Index size() const { return values_.size(); }

  Eigen::Map<const RowMatrix> kernel(int layer) const;
  Eigen::Map<RowMatrix> kernel(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);

 private:
  NetworkSpec spec_;
  std::vector<LayerSlice> layout_;
  Eigen::VectorXd values_;
};

struct Layer {
  Eigen::MatrixXd kernel;  // fan_out x fan_in
  Eigen::VectorXd bias;
};

std::vector<Layer> unflatten(const ParamVector& params);
ParamVector flatten(const NetworkSpec& spec, const std::vector<Layer>& layers);

double leaky_relu(double z, double slope);

Eigen::VectorXd forward(const ParamVector& params, const Eigen::VectorXd& x);
/// Row-per-sample batch evaluation: X is N x input_dim, result N x output_dim.
Eigen::MatrixXd forward_batch(const ParamVector& params, const Eigen::MatrixXd& X);

/// Sum over samples and outputs of w_j * (y_ij - f_j(x_i))^2. With
/// w = diag(noise_cov)^-1 this is the Gaussian negative log-likelihood data
/// term, up to a factor 1/2 and a constant.
struct SquaredErrorLoss {
  Eigen::VectorXd output_weights;
};

struct LossAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

LossAndGradient backward(const ParamVector& params, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& Y, const SquaredErrorLoss& loss);

/// Kernel entries N(0, 2/fan_in), biases zero.
ParamVector he_init(const NetworkSpec& spec, std::uint64_t seed);

/// params + scale * eps with eps ~ N(0, I).
ParamVector perturb(const ParamVector& params, double scale, std::uint64_t seed);

void write_spec(Container& c, const NetworkSpec& spec);
NetworkSpec read_spec(const Container& c);

void save_network(const std::string& path, const ParamVector& params);
ParamVector load_network(const std::string& path);

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fingerprint(const Eigen::VectorXd& values);

}  // namespace fpbnn
