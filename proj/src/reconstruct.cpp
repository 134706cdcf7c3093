#include "fpbnn/reconstruct.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "fpbnn/errors.hpp"
#include "fpbnn/prior_stats.hpp"
#include "fpbnn/rng.hpp"

namespace fpbnn {

std::string to_string(PriorFamily family) {
  switch (family) {
    case PriorFamily::IsotropicZeroMean:
      return "isotropic";
    case PriorFamily::FactorizedGaussian:
      return "factorized_gaussian";
    case PriorFamily::FactorizedGenNorm:
      return "factorized_gennorm";
    case PriorFamily::Multivariate:
      return "multivariate";
  }
  return "isotropic";
}

PriorFamily parse_prior_family(const std::string& name) {
  if (name == "isotropic") return PriorFamily::IsotropicZeroMean;
  if (name == "factorized_gaussian") return PriorFamily::FactorizedGaussian;
  if (name == "factorized_gennorm") return PriorFamily::FactorizedGenNorm;
  if (name == "multivariate") return PriorFamily::Multivariate;
  throw ConfigError("unknown parameter-prior family '" + name + "'");
}

FactorizedScales fit_factorized(std::span<const ParamVector> members) {
  const auto spreads = layer_spreads(members, true);
  const Eigen::MatrixXd W = stack_rows(members);
  const Eigen::Index d = W.cols();
  FactorizedScales f{W.colwise().mean().transpose(), Eigen::VectorXd(d), Eigen::VectorXd(d),
                     Eigen::VectorXd(d)};
  const auto& layout = members.front().layout();
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& s = layout[l];
    const auto& sp = spreads[l];
    f.variance.segment(s.kernel_offset, s.kernel_size()).setConstant(sp.kernel_variance);
    f.gennorm_alpha.segment(s.kernel_offset, s.kernel_size()).setConstant(sp.kernel_gennorm.alpha);
    f.gennorm_beta.segment(s.kernel_offset, s.kernel_size()).setConstant(sp.kernel_gennorm.beta);
    f.variance.segment(s.bias_offset, s.fan_out).setConstant(sp.bias_variance);
    f.gennorm_alpha.segment(s.bias_offset, s.fan_out).setConstant(sp.bias_gennorm.alpha);
    f.gennorm_beta.segment(s.bias_offset, s.fan_out).setConstant(sp.bias_gennorm.beta);
  }
  return f;
}

ParameterPrior ParameterPrior::isotropic(double variance) {
  ParameterPrior p;
  p.family = PriorFamily::IsotropicZeroMean;
  p.isotropic_variance = variance;
  return p;
}

ParameterPrior ParameterPrior::factorized_gaussian(FactorizedScales scales) {
  ParameterPrior p;
  p.family = PriorFamily::FactorizedGaussian;
  p.factorized = std::move(scales);
  return p;
}

ParameterPrior ParameterPrior::factorized_gennorm(FactorizedScales scales) {
  ParameterPrior p;
  p.family = PriorFamily::FactorizedGenNorm;
  p.factorized = std::move(scales);
  return p;
}

ParameterPrior ParameterPrior::correlated(LowRankGaussian prior) {
  ParameterPrior p;
  p.family = PriorFamily::Multivariate;
  p.multivariate = std::move(prior);
  return p;
}

Eigen::VectorXd sample_parameters(const ParameterPrior& prior, Eigen::Index dim, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  switch (prior.family) {
    case PriorFamily::IsotropicZeroMean:
      return std::sqrt(prior.isotropic_variance) * standard_normal_vector(dim, rng);
    case PriorFamily::FactorizedGaussian: {
      const auto& f = prior.factorized;
      if (f.mean.size() != dim) throw InputShapeError("factorized prior has wrong dimension");
      return f.mean + f.variance.cwiseSqrt().cwiseProduct(standard_normal_vector(dim, rng));
    }
    case PriorFamily::FactorizedGenNorm: {
      const auto& f = prior.factorized;
      if (f.mean.size() != dim) throw InputShapeError("factorized prior has wrong dimension");
      Eigen::VectorXd w(dim);
      // |x| = alpha * G^(1/beta), G ~ Gamma(1/beta, 1), with a random sign.
      for (Eigen::Index j = 0; j < dim; ++j) {
        std::gamma_distribution<double> gamma(1.0 / f.gennorm_beta[j], 1.0);
        const double mag = f.gennorm_alpha[j] * std::pow(gamma(rng), 1.0 / f.gennorm_beta[j]);
        w[j] = f.mean[j] + (open_uniform(rng) < 0.5 ? -mag : mag);
      }
      return w;
    }
    case PriorFamily::Multivariate:
      if (prior.multivariate.dim() != dim) throw InputShapeError("multivariate prior has wrong dimension");
      return sample_with(prior.multivariate, standard_normal_vector(prior.multivariate.rank(), rng));
  }
  throw ConfigError("unknown parameter-prior family");
}

PredictiveBand reconstruct_functional(const ParameterPrior& prior, const NetworkSpec& spec,
                                      const Eigen::MatrixXd& eval_points, int n_samples,
                                      std::uint64_t seed) {
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  const Eigen::Index Q = eval_points.rows();
  std::vector<Eigen::MatrixXd> draws;
  draws.reserve(static_cast<std::size_t>(n_samples));
  PredictiveBand band{Eigen::MatrixXd::Zero(Q, spec.output_dim), Eigen::MatrixXd::Zero(Q, spec.output_dim)};
  for (int s = 0; s < n_samples; ++s) {
    const ParamVector w(spec, sample_parameters(prior, spec.param_count(), splitmix64(seed + s)));
    draws.push_back(forward_batch(w, eval_points));
    band.mean += draws.back();
  }
  band.mean /= n_samples;
  if (n_samples > 1) {
    for (const auto& f : draws) band.std += (f - band.mean).cwiseAbs2();
    band.std = (band.std / (n_samples - 1)).cwiseSqrt();
  }
  return band;
}

}  // namespace fpbnn
