#include "fpbnn/prior_stats.hpp"

#include <cmath>
#include <fstream>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "fpbnn/errors.hpp"
#include "fpbnn/low_rank_gaussian.hpp"
#include "fpbnn/text.hpp"

namespace fpbnn {

GenNormFit fit_gennorm(const Eigen::VectorXd& x) {
  const double n = static_cast<double>(x.size());
  const Eigen::ArrayXd ax = x.array().abs();
  if (x.size() == 0 || ax.maxCoeff() == 0.0) return {0.0, 2.0};
  // Scale out the magnitude so the power sums stay well conditioned.
  const double ref = std::sqrt(ax.square().mean());
  const Eigen::ArrayXd u = ax / ref;
  const Eigen::ArrayXd logu = (u > 0.0).select(u.log(), -745.0);

  auto alpha_hat = [&](double beta) {
    return std::pow(beta / n * (beta * logu).exp().sum(), 1.0 / beta);
  };
  // Negative profile log-likelihood in units of the rescaled samples.
  auto nll = [&](double log_beta) {
    const double beta = std::exp(log_beta);
    const double a = alpha_hat(beta);
    return -(n * std::log(beta / (2.0 * a * boost::math::tgamma(1.0 / beta))) - n / beta);
  };
  const auto [log_beta, value] =
      boost::math::tools::brent_find_minima(nll, std::log(0.1), std::log(20.0), 40);
  (void)value;
  const double beta = std::exp(log_beta);
  return {alpha_hat(beta) * ref, beta};
}

Eigen::VectorXd pooled_demeaned(const Eigen::MatrixXd& W, const Eigen::VectorXd& mean,
                                const LayerSlice& slice, bool kernel) {
  const Eigen::Index off = kernel ? slice.kernel_offset : slice.bias_offset;
  const Eigen::Index len = kernel ? slice.kernel_size() : slice.fan_out;
  Eigen::MatrixXd block = W.middleCols(off, len).rowwise() - mean.segment(off, len).transpose();
  return Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
}

namespace {

// Unbiased per-coordinate variance averaged over the block.
double pooled_variance(const Eigen::VectorXd& demeaned, Eigen::Index K, Eigen::Index width) {
  if (K < 2 || width == 0) return 0.0;
  return demeaned.squaredNorm() / double(width * (K - 1));
}

}  // namespace

std::vector<LayerSpread> layer_spreads(std::span<const ParamVector> members, bool fit_shapes) {
  if (members.size() < 2) throw InsufficientEnsembleError("layer statistics need K >= 2");
  const Eigen::MatrixXd W = stack_rows(members);
  const Eigen::VectorXd mean = W.colwise().mean().transpose();
  const Eigen::Index K = W.rows();
  std::vector<LayerSpread> out;
  for (const auto& slice : members.front().layout()) {
    LayerSpread s;
    const Eigen::VectorXd k = pooled_demeaned(W, mean, slice, true);
    const Eigen::VectorXd b = pooled_demeaned(W, mean, slice, false);
    s.kernel_variance = pooled_variance(k, K, slice.kernel_size());
    s.bias_variance = pooled_variance(b, K, slice.fan_out);
    if (fit_shapes) {
      s.kernel_gennorm = fit_gennorm(k);
      s.bias_gennorm = fit_gennorm(b);
    }
    out.push_back(s);
  }
  return out;
}

Eigen::MatrixXd coordinate_correlations(const Eigen::MatrixXd& W,
                                        const std::vector<Eigen::Index>& indices) {
  const Eigen::Index m = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd cols(W.rows(), m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (indices[j] < 0 || indices[j] >= W.cols()) throw InputShapeError("correlation index out of range");
    cols.col(j) = W.col(indices[j]);
  }
  cols.rowwise() -= cols.colwise().mean();
  Eigen::MatrixXd C = cols.transpose() * cols;
  const Eigen::VectorXd sd = C.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      C(i, j) = (sd[i] > 0.0 && sd[j] > 0.0) ? C(i, j) / (sd[i] * sd[j]) : (i == j ? 1.0 : 0.0);
  return C;
}

PriorStats compute_prior_stats(std::span<const ParamVector> members,
                               const std::vector<Eigen::Index>& correlation_indices) {
  const auto spreads = layer_spreads(members, true);
  PriorStats st;
  double num = 0.0, den = 0.0;
  for (std::size_t l = 0; l < spreads.size(); ++l) {
    st.per_layer_kernel_variance.push_back(spreads[l].kernel_variance);
    st.per_layer_bias_variance.push_back(spreads[l].bias_variance);
    st.gennorm_shape_per_layer.push_back(spreads[l].kernel_gennorm.beta);
    st.gennorm_scale_per_layer.push_back(spreads[l].kernel_gennorm.alpha);
    const double w = double(members.front().layout()[l].kernel_size());
    num += w * spreads[l].kernel_variance;
    den += w;
  }
  st.pooled_kernel_variance = den > 0 ? num / den : 0.0;
  const Eigen::MatrixXd W = stack_rows(members);
  st.singular_values = build_anchor_prior(W).singular_values;
  st.correlation_indices = correlation_indices;
  st.selected_correlations = coordinate_correlations(W, correlation_indices);
  return st;
}

void write_prior_stats_csv(const std::string& path, const PriorStats& stats) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "'");
  out << "layer,kernel_variance,bias_variance,gennorm_beta,gennorm_alpha\n";
  for (std::size_t l = 0; l < stats.per_layer_kernel_variance.size(); ++l)
    out << l << ',' << format_double(stats.per_layer_kernel_variance[l]) << ','
        << format_double(stats.per_layer_bias_variance[l]) << ','
        << format_double(stats.gennorm_shape_per_layer[l]) << ','
        << format_double(stats.gennorm_scale_per_layer[l]) << '\n';
  out << "pooled," << format_double(stats.pooled_kernel_variance) << ",,,\n";
}

void write_singular_values_csv(const std::string& path, const Eigen::VectorXd& s) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "'");
  out << "index,singular_value\n";
  for (Eigen::Index i = 0; i < s.size(); ++i) out << i << ',' << format_double(s[i]) << '\n';
}

}  // namespace fpbnn
