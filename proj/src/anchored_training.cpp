#include "fpbnn/anchored_training.hpp"

#include <cmath>
#include <fstream>

#include "fpbnn/errors.hpp"
#include "fpbnn/parallel.hpp"
#include "fpbnn/prior_stats.hpp"
#include "fpbnn/rng.hpp"
#include "fpbnn/text.hpp"

namespace fpbnn {

std::string to_string(ResamplingScheme scheme) {
  switch (scheme) {
    case ResamplingScheme::Likelihood:
      return "likelihood";
    case ResamplingScheme::Bootstrap:
      return "bootstrap";
    case ResamplingScheme::None:
      return "none";
  }
  return "likelihood";
}

ResamplingScheme parse_resampling(const std::string& name) {
  if (name == "likelihood") return ResamplingScheme::Likelihood;
  if (name == "bootstrap") return ResamplingScheme::Bootstrap;
  if (name == "none") return ResamplingScheme::None;
  throw ConfigError("unknown resampling scheme '" + name + "'");
}

double data_fit_term(const ParamVector& w, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const Eigen::MatrixXd r = forward_batch(w, data.X) - data.Y;
  return (r.cwiseAbs2().array().rowwise() / data.noise_var.transpose().array()).sum();
}

double correlated_reg_term(const Eigen::VectorXd& w, const Eigen::VectorXd& anchor,
                           const LowRankGaussian& prior) {
  if (w.size() != prior.dim() || anchor.size() != prior.dim())
    throw InputShapeError("regularizer dimension mismatch");
  if (prior.rank() == 0) return 0.0;
  const Eigen::VectorXd proj =
      (prior.right_vectors.transpose() * (w - anchor)).cwiseQuotient(prior.singular_values);
  return double(prior.ensemble_size - 1) * proj.squaredNorm();
}

double factorized_reg_term(const Eigen::VectorXd& w, const Eigen::VectorXd& anchor,
                           const Eigen::VectorXd& precision) {
  if (w.size() != anchor.size() || w.size() != precision.size())
    throw InputShapeError("regularizer dimension mismatch");
  return (w - anchor).cwiseAbs2().dot(precision);
}

double factorized_reg_term(const Eigen::VectorXd& w, const Eigen::VectorXd& anchor, double lambda) {
  if (w.size() != anchor.size()) throw InputShapeError("regularizer dimension mismatch");
  return lambda * (w - anchor).squaredNorm();
}

Eigen::VectorXd layer_precision(const NetworkSpec& spec, const std::vector<double>& kernel_variance,
                                const std::vector<double>& bias_variance) {
  const auto layout = parameter_layout(spec);
  if (kernel_variance.size() != layout.size() || bias_variance.size() != layout.size())
    throw InputShapeError("need one variance per layer");
  Eigen::VectorXd p(spec.param_count());
  for (std::size_t l = 0; l < layout.size(); ++l) {
    if (!(kernel_variance[l] > 0.0) || !(bias_variance[l] > 0.0))
      throw ConfigError("factorized prior variances must be > 0 (layer " + std::to_string(l) + ")");
    p.segment(layout[l].kernel_offset, layout[l].kernel_size()).setConstant(1.0 / kernel_variance[l]);
    p.segment(layout[l].bias_offset, layout[l].fan_out).setConstant(1.0 / bias_variance[l]);
  }
  return p;
}

ObjectiveValue evaluate_objective(const ParamVector& w, const Dataset& data, const Regularizer& reg) {
  const SquaredErrorLoss loss{data.noise_var.cwiseInverse()};
  LossAndGradient lg = backward(w, data.X, data.Y, loss);
  ObjectiveValue out{lg.value, 0.0, 0.0, std::move(lg.gradient)};
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, FactorizedRegularizer>) {
          const Eigen::VectorXd diff = w.values() - r.anchor;
          out.reg = factorized_reg_term(w.values(), r.anchor, r.precision);
          out.gradient += 2.0 * r.precision.cwiseProduct(diff);
        } else if constexpr (std::is_same_v<T, CorrelatedRegularizer>) {
          const LowRankGaussian& p = *r.prior;
          out.reg = correlated_reg_term(w.values(), r.anchor, p);
          if (p.rank() > 0) {
            const Eigen::VectorXd coef = (p.right_vectors.transpose() * (w.values() - r.anchor))
                                             .cwiseQuotient(p.singular_values.cwiseAbs2());
            out.gradient += 2.0 * double(p.ensemble_size - 1) * (p.right_vectors * coef);
          }
        }
      },
      reg);
  out.total = out.data_fit + out.reg;
  if (!std::isfinite(out.total) || !out.gradient.allFinite())
    throw NumericOverflowError("non-finite objective");
  return out;
}

MemberFit train_member(const ParamVector& init, const Dataset& data, const Regularizer& reg,
                       const AdamConfig& config, int member_index, int trace_every) {
  config.validate();
  if (data.input_dim() != init.spec().input_dim || data.output_dim() != init.spec().output_dim)
    throw InputShapeError("dataset dimensions do not match the network");
  if (const auto* c = std::get_if<CorrelatedRegularizer>(&reg); c && !c->prior)
    throw ConfigError("correlated regularizer without anchor prior");

  ParamVector w = init;
  Adam adam(config, w.size());
  MemberFit fit{w, {}};
  double best = 0.0;
  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    ObjectiveValue v;
    try {
      v = evaluate_objective(w, data, reg);
    } catch (const NumericOverflowError& e) {
      throw TrainingFailure(member_index, epoch, e.what());
    }
    if (epoch == 0 || v.total < best) {
      best = v.total;
      fit.weights.values() = w.values();
    }
    if (trace_every > 0 && (epoch % trace_every == 0 || epoch == config.epochs))
      fit.trace.push_back({epoch, v.data_fit, v.reg, v.total});
    if (epoch == config.epochs) break;
    adam.step(w.values(), v.gradient, config.rate_at(epoch));
  }
  return fit;
}

void EnsembleConfig::validate() const {
  if (ensemble_size < 1) throw ConfigError("ensemble size must be >= 1");
  optimizer.validate();
  pretrain.validate();
  if (factorized_lambda && !(*factorized_lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

namespace {

Dataset member_dataset(const Dataset& data, ResamplingScheme scheme, std::uint64_t seed) {
  switch (scheme) {
    case ResamplingScheme::Likelihood:
      return resample_likelihood(data, seed);
    case ResamplingScheme::Bootstrap:
      return data.size() ? resample_bootstrap(data, seed) : data;
    case ResamplingScheme::None:
      return data;
  }
  return data;
}

EnsembleModel model_shell(const NetworkSpec& spec, const Dataset& data, TrainingMode mode) {
  EnsembleModel m;
  m.spec = spec;
  m.mode = mode;
  m.noise_var = data.noise_var;
  m.input_scaling = data.input_scaling;
  m.output_scaling = data.output_scaling;
  m.input_names = data.input_names;
  m.output_names = data.output_names;
  return m;
}

// Trains member k of every mode: init at its anchor (or He init for vanilla).
EnsembleFit run_stage_two(EnsembleModel model, const Dataset& data, const EnsembleConfig& config) {
  const int K = config.ensemble_size;
  EnsembleFit fit;
  fit.traces.resize(static_cast<std::size_t>(K));
  model.members.assign(static_cast<std::size_t>(K), ParamVector(model.spec));
  parallel_for(K, config.workers, [&](int k) {
    const Dataset dk =
        member_dataset(data, config.resampling, derive_seed(config.master_seed, Stream::Resample, k));
    Regularizer reg = NoRegularizer{};
    ParamVector init(model.spec);
    switch (model.mode) {
      case TrainingMode::Vanilla:
        init = he_init(model.spec, derive_seed(config.master_seed, Stream::MemberInit, k));
        break;
      case TrainingMode::Factorized:
        init = model.anchors[k];
        reg = FactorizedRegularizer{model.anchors[k].values(), model.factorized_precision};
        break;
      case TrainingMode::Correlated:
        init = model.anchors[k];
        reg = CorrelatedRegularizer{model.anchors[k].values(), &*model.anchor_prior};
        break;
    }
    MemberFit mf = train_member(init, dk, reg, config.optimizer, k, config.trace_every);
    model.members[k] = std::move(mf.weights);
    fit.traces[k] = std::move(mf.trace);
  });
  fit.model = std::move(model);
  return fit;
}

}  // namespace

EnsembleFit train_ensemble_from_anchors(const Dataset& data, const EnsembleConfig& config,
                                        const PretrainedEnsemble& pretrained) {
  config.validate();
  data.validate();
  if (config.mode == TrainingMode::Vanilla)
    throw ConfigError("vanilla ensembles do not use anchors");
  if (static_cast<int>(pretrained.members.size()) != config.ensemble_size)
    throw ConfigError("pre-trained ensemble size differs from ensemble_size");
  const NetworkSpec& spec = pretrained.shared_init.spec();
  EnsembleModel model = model_shell(spec, data, config.mode);
  model.anchors = pretrained.weights();
  if (config.mode == TrainingMode::Correlated) {
    model.anchor_prior = build_anchor_prior(pretrained.members, config.truncation_tol);
  } else {
    const auto spreads = layer_spreads(model.anchors, false);
    std::vector<double> kv, bv;
    for (const auto& s : spreads) {
      kv.push_back(std::max(s.kernel_variance, 1e-12));
      bv.push_back(std::max(s.bias_variance, 1e-12));
    }
    model.factorized_precision = layer_precision(spec, kv, bv);
  }
  EnsembleFit fit = run_stage_two(std::move(model), data, config);
  fit.pretrained = pretrained;
  return fit;
}

EnsembleFit train_ensemble(const NetworkSpec& spec, const Dataset& data, const EnsembleConfig& config,
                           const MultiOutputPrior* prior) {
  config.validate();
  spec.validate();
  data.validate();
  if (data.input_dim() != spec.input_dim || data.output_dim() != spec.output_dim)
    throw ConfigError("dataset dimensions do not match the network");

  switch (config.mode) {
    case TrainingMode::Vanilla:
      return run_stage_two(model_shell(spec, data, config.mode), data, config);
    case TrainingMode::Factorized:
      if (!prior && config.factorized_lambda) {
        EnsembleModel model = model_shell(spec, data, config.mode);
        const double sd = 1.0 / std::sqrt(*config.factorized_lambda);
        for (int k = 0; k < config.ensemble_size; ++k) {
          Rng rng = make_rng(derive_seed(config.master_seed, Stream::Anchor, k));
          model.anchors.emplace_back(spec, sd * standard_normal_vector(spec.param_count(), rng));
        }
        model.factorized_precision =
            Eigen::VectorXd::Constant(spec.param_count(), *config.factorized_lambda);
        return run_stage_two(std::move(model), data, config);
      }
      [[fallthrough]];
    case TrainingMode::Correlated:
      if (!prior) throw ConfigError(to_string(config.mode) + " mode requires a functional prior");
      break;
  }
  const PretrainedEnsemble pre = pretrain_ensemble(spec, *prior, config.ensemble_size, config.pretrain,
                                                   config.master_seed, config.workers);
  return train_ensemble_from_anchors(data, config, pre);
}

void write_trace_csv(const std::string& path, const std::vector<std::vector<TraceRow>>& traces) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "'");
  out << "member,epoch,data_fit,reg,total\n";
  for (std::size_t k = 0; k < traces.size(); ++k)
    for (const auto& r : traces[k])
      out << k << ',' << r.epoch << ',' << format_double(r.data_fit) << ',' << format_double(r.reg)
          << ',' << format_double(r.total) << '\n';
}

}  // namespace fpbnn
