#include "fpbnn/network.hpp"

#include <cmath>
#include <cstring>

#include "fpbnn/errors.hpp"
#include "fpbnn/rng.hpp"
#include "fpbnn/text.hpp"

namespace fpbnn {

NetworkSpec::NetworkSpec(int input_dim_, std::vector<int> hidden_widths_, int output_dim_,
                         double activation_slope_)
    : input_dim(input_dim_),
      hidden_widths(std::move(hidden_widths_)),
      output_dim(output_dim_),
      activation_slope(activation_slope_) {
  validate();
}

void NetworkSpec::validate() const {
  if (input_dim < 1) throw ConfigError("network input_dim must be >= 1");
  if (output_dim < 1) throw ConfigError("network output_dim must be >= 1");
  for (int w : hidden_widths)
    if (w < 1) throw ConfigError("hidden layer widths must be >= 1");
  if (!(activation_slope >= 0.0 && activation_slope < 1.0))
    throw ConfigError("activation_slope must lie in [0, 1)");
}

std::vector<int> NetworkSpec::layer_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(hidden_widths.size() + 2);
  sizes.push_back(input_dim);
  sizes.insert(sizes.end(), hidden_widths.begin(), hidden_widths.end());
  sizes.push_back(output_dim);
  return sizes;
}

Eigen::Index NetworkSpec::param_count() const {
  const auto sizes = layer_sizes();
  Eigen::Index d = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    d += Eigen::Index(sizes[l]) * sizes[l + 1] + sizes[l + 1];
  return d;
}

std::string NetworkSpec::describe() const {
  return std::to_string(input_dim) + "-[" + join_ints(hidden_widths) + "]-" +
         std::to_string(output_dim) + " slope=" + format_double(activation_slope);
}

std::uint64_t NetworkSpec::hash() const {
  const std::string s = describe();
  return fnv1a(s.data(), s.size());
}

Eigen::Index param_count(const NetworkSpec& spec) { return spec.param_count(); }

std::vector<LayerSlice> parameter_layout(const NetworkSpec& spec) {
  const auto sizes = spec.layer_sizes();
  std::vector<LayerSlice> layout;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    LayerSlice s;
    s.fan_in = sizes[l];
    s.fan_out = sizes[l + 1];
    s.kernel_offset = offset;
    s.bias_offset = offset + s.kernel_size();
    offset = s.bias_offset + s.fan_out;
    layout.push_back(s);
  }
  return layout;
}

ParamVector::ParamVector(NetworkSpec spec)
    : spec_(std::move(spec)), layout_(parameter_layout(spec_)),
      values_(Eigen::VectorXd::Zero(spec_.param_count())) {}

ParamVector::ParamVector(NetworkSpec spec, Eigen::VectorXd values)
    : spec_(std::move(spec)), layout_(parameter_layout(spec_)), values_(std::move(values)) {
  if (values_.size() != spec_.param_count())
    throw InputShapeError("parameter vector has length " + std::to_string(values_.size()) +
                          ", network " + spec_.describe() + " needs " +
                          std::to_string(spec_.param_count()));
}

Eigen::Map<const RowMatrix> ParamVector::kernel(int layer) const {
  const auto& s = layout_.at(layer);
  return {values_.data() + s.kernel_offset, s.fan_out, s.fan_in};
}

Eigen::Map<RowMatrix> ParamVector::kernel(int layer) {
  const auto& s = layout_.at(layer);
  return {values_.data() + s.kernel_offset, s.fan_out, s.fan_in};
}

Eigen::Map<const Eigen::VectorXd> ParamVector::bias(int layer) const {
  const auto& s = layout_.at(layer);
  return {values_.data() + s.bias_offset, s.fan_out};
}

Eigen::Map<Eigen::VectorXd> ParamVector::bias(int layer) {
  const auto& s = layout_.at(layer);
  return {values_.data() + s.bias_offset, s.fan_out};
}

std::vector<Layer> unflatten(const ParamVector& params) {
  std::vector<Layer> layers;
  for (int l = 0; l < params.spec().num_layers(); ++l)
    layers.push_back({params.kernel(l), params.bias(l)});
  return layers;
}

ParamVector flatten(const NetworkSpec& spec, const std::vector<Layer>& layers) {
  ParamVector p(spec);
  if (static_cast<int>(layers.size()) != spec.num_layers())
    throw InputShapeError("layer count does not match network spec");
  for (int l = 0; l < spec.num_layers(); ++l) {
    const auto& s = p.layout()[l];
    if (layers[l].kernel.rows() != s.fan_out || layers[l].kernel.cols() != s.fan_in ||
        layers[l].bias.size() != s.fan_out)
      throw InputShapeError("layer " + std::to_string(l) + " has wrong shape");
    p.kernel(l) = layers[l].kernel;
    p.bias(l) = layers[l].bias;
  }
  return p;
}

double leaky_relu(double z, double slope) { return z >= 0.0 ? z : slope * z; }

namespace {

// Column-per-sample activations.
Eigen::MatrixXd forward_columns(const ParamVector& params, Eigen::MatrixXd a) {
  const int L = params.spec().num_layers();
  const double slope = params.spec().activation_slope;
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = params.kernel(l) * a;
    z.colwise() += params.bias(l);
    if (l + 1 < L) z = z.unaryExpr([slope](double v) { return leaky_relu(v, slope); });
    a = std::move(z);
  }
  return a;
}

}  // namespace

Eigen::VectorXd forward(const ParamVector& params, const Eigen::VectorXd& x) {
  if (x.size() != params.spec().input_dim)
    throw InputShapeError("input has " + std::to_string(x.size()) + " entries, network expects " +
                          std::to_string(params.spec().input_dim));
  return forward_columns(params, x);
}

Eigen::MatrixXd forward_batch(const ParamVector& params, const Eigen::MatrixXd& X) {
  if (X.cols() != params.spec().input_dim)
    throw InputShapeError("input batch has " + std::to_string(X.cols()) +
                          " columns, network expects " + std::to_string(params.spec().input_dim));
  return forward_columns(params, X.transpose()).transpose();
}

LossAndGradient backward(const ParamVector& params, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& Y, const SquaredErrorLoss& loss) {
  const NetworkSpec& spec = params.spec();
  if (X.cols() != spec.input_dim) throw InputShapeError("input batch has wrong width");
  if (Y.cols() != spec.output_dim || Y.rows() != X.rows())
    throw InputShapeError("target batch shape does not match inputs/network");
  if (loss.output_weights.size() != spec.output_dim)
    throw InputShapeError("loss weights must have one entry per output");

  LossAndGradient out;
  out.gradient = Eigen::VectorXd::Zero(params.size());
  if (X.rows() == 0) return out;

  const int L = spec.num_layers();
  const double slope = spec.activation_slope;

  // acts[l] is the input to layer l; pre[l] the pre-activation of hidden layer l.
  std::vector<Eigen::MatrixXd> acts(L);
  std::vector<Eigen::MatrixXd> pre(L - 1);
  acts[0] = X.transpose();
  for (int l = 0; l + 1 < L; ++l) {
    pre[l] = params.kernel(l) * acts[l];
    pre[l].colwise() += params.bias(l);
    acts[l + 1] = pre[l].unaryExpr([slope](double v) { return leaky_relu(v, slope); });
  }
  Eigen::MatrixXd residual = params.kernel(L - 1) * acts[L - 1];
  residual.colwise() += params.bias(L - 1);
  residual -= Y.transpose();

  Eigen::MatrixXd delta = residual.array().colwise() * loss.output_weights.array();
  out.value = (delta.array() * residual.array()).sum();
  if (!std::isfinite(out.value)) throw NumericOverflowError("non-finite loss in backward pass");
  delta *= 2.0;

  Eigen::VectorXd& g = out.gradient;
  for (int l = L - 1; l >= 0; --l) {
    const auto& s = params.layout()[l];
    Eigen::Map<RowMatrix>(g.data() + s.kernel_offset, s.fan_out, s.fan_in).noalias() =
        delta * acts[l].transpose();
    Eigen::Map<Eigen::VectorXd>(g.data() + s.bias_offset, s.fan_out) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd upstream = params.kernel(l).transpose() * delta;
      delta = upstream.binaryExpr(pre[l - 1], [slope](double d, double z) {
        return z >= 0.0 ? d : slope * d;
      });
    }
  }
  if (!g.allFinite()) throw NumericOverflowError("non-finite gradient in backward pass");
  return out;
}

ParamVector he_init(const NetworkSpec& spec, std::uint64_t seed) {
  ParamVector p(spec);
  Rng rng = make_rng(seed);
  for (int l = 0; l < spec.num_layers(); ++l) {
    const auto& s = p.layout()[l];
    const double sd = std::sqrt(2.0 / s.fan_in);
    for (Eigen::Index i = 0; i < s.kernel_size(); ++i)
      p.values()[s.kernel_offset + i] = sd * standard_normal(rng);
  }
  return p;
}

ParamVector perturb(const ParamVector& params, double scale, std::uint64_t seed) {
  if (scale < 0.0) throw ConfigError("perturbation scale must be >= 0");
  ParamVector out = params;
  if (scale == 0.0) return out;
  Rng rng = make_rng(seed);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.values()[i] += scale * standard_normal(rng);
  return out;
}

void write_spec(Container& c, const NetworkSpec& spec) {
  c.set_meta("input_dim", std::to_string(spec.input_dim));
  c.set_meta("hidden_widths", spec.hidden_widths.empty() ? "-" : join_ints(spec.hidden_widths));
  c.set_meta("output_dim", std::to_string(spec.output_dim));
  c.set_meta("activation_slope", format_double(spec.activation_slope));
}

NetworkSpec read_spec(const Container& c) {
  try {
    return NetworkSpec(std::stoi(c.meta("input_dim")), parse_ints(c.meta("hidden_widths")),
                       std::stoi(c.meta("output_dim")), std::stod(c.meta("activation_slope")));
  } catch (const std::invalid_argument&) {
    throw FormatError("malformed network spec in container");
  }
}

void save_network(const std::string& path, const ParamVector& params) {
  Container c("network");
  write_spec(c, params.spec());
  c.add_array("params", params.values());
  c.write(path);
}

ParamVector load_network(const std::string& path) {
  Container c = Container::read(path, "network");
  NetworkSpec spec = read_spec(c);
  const auto& a = c.array("params");
  if (a.cols() != 1) throw FormatError("params array must be a column");
  return ParamVector(spec, a.col(0));
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fingerprint(const Eigen::VectorXd& values) {
  return fnv1a(values.data(), sizeof(double) * static_cast<std::size_t>(values.size()));
}

}  // namespace fpbnn
