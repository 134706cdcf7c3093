#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "fpbnn/dataset.hpp"
#include "fpbnn/ensemble_model.hpp"
#include "fpbnn/functional_prior.hpp"
#include "fpbnn/low_rank_gaussian.hpp"
#include "fpbnn/network.hpp"
#include "fpbnn/optimizer.hpp"
#include "fpbnn/pretrain.hpp"

namespace fpbnn {

enum class ResamplingScheme { Likelihood, Bootstrap, None };

std::string to_string(ResamplingScheme scheme);
ResamplingScheme parse_resampling(const std::string& name);

/// sum_i (y_i - f(x_i))^T noise_cov^-1 (y_i - f(x_i)).
double data_fit_term(const ParamVector& w, const Dataset& data);

/// (K-1) |S^-1 V^T (w - anchor)|^2.
double correlated_reg_term(const Eigen::VectorXd& w, const Eigen::VectorXd& anchor,
                           const LowRankGaussian& prior);

/// sum_j precision_j (w_j - anchor_j)^2.
double factorized_reg_term(const Eigen::VectorXd& w, const Eigen::VectorXd& anchor,
                           const Eigen::VectorXd& precision);
/// lambda |w - anchor|^2.
double factorized_reg_term(const Eigen::VectorXd& w, const Eigen::VectorXd& anchor, double lambda);

/// Per-parameter precision 1/sigma_j^2 from per-layer kernel and bias variances.
Eigen::VectorXd layer_precision(const NetworkSpec& spec, const std::vector<double>& kernel_variance,
                                const std::vector<double>& bias_variance);

struct NoRegularizer {};

struct FactorizedRegularizer {
  Eigen::VectorXd anchor;
  Eigen::VectorXd precision;
};

struct CorrelatedRegularizer {
  Eigen::VectorXd anchor;
  const LowRankGaussian* prior = nullptr;
};

using Regularizer = std::variant<NoRegularizer, FactorizedRegularizer, CorrelatedRegularizer>;

struct ObjectiveValue {
  double data_fit = 0.0;
  double reg = 0.0;
  double total = 0.0;
  Eigen::VectorXd gradient;
};

/// data_fit_term + regularizer, with exact gradient.
ObjectiveValue evaluate_objective(const ParamVector& w, const Dataset& data, const Regularizer& reg);

struct TraceRow {
  int epoch = 0;
  double data_fit = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct MemberFit {
  ParamVector weights;
  std::vector<TraceRow> trace;
};

/// Full-batch minimization of the Stage-2 objective from `init`. Returns the
/// lowest-loss iterate, so the final loss never exceeds the initial one.
MemberFit train_member(const ParamVector& init, const Dataset& data, const Regularizer& reg,
                       const AdamConfig& config, int member_index = 0, int trace_every = 10);

struct EnsembleConfig {
  int ensemble_size = 10;
  TrainingMode mode = TrainingMode::Correlated;
  ResamplingScheme resampling = ResamplingScheme::Likelihood;
  AdamConfig optimizer{};
  PretrainConfig pretrain{};
  /// Factorized mode without a functional prior: isotropic anchors
  /// N(0, 1/lambda) and penalty lambda |w - anchor|^2.
  std::optional<double> factorized_lambda;
  double truncation_tol = kDefaultTruncationTol;
  int workers = 1;
  int trace_every = 10;
  std::uint64_t master_seed = 0;

  void validate() const;
};

struct EnsembleFit {
  EnsembleModel model;
  std::vector<std::vector<TraceRow>> traces;
  std::optional<PretrainedEnsemble> pretrained;
};

/// Both stages: pre-trains to `prior` when the mode needs anchors, then fits
/// every member to its own resampled dataset.
EnsembleFit train_ensemble(const NetworkSpec& spec, const Dataset& data, const EnsembleConfig& config,
                           const MultiOutputPrior* prior = nullptr);

/// Stage 2 only, reusing an already pre-trained ensemble as anchors.
EnsembleFit train_ensemble_from_anchors(const Dataset& data, const EnsembleConfig& config,
                                        const PretrainedEnsemble& pretrained);

void write_trace_csv(const std::string& path, const std::vector<std::vector<TraceRow>>& traces);

}  // namespace fpbnn
