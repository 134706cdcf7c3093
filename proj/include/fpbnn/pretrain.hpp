#pragma once

#include <cstdint>
#include <vector>

#include "fpbnn/functional_prior.hpp"
#include "fpbnn/low_rank_gaussian.hpp"
#include "fpbnn/network.hpp"
#include "fpbnn/optimizer.hpp"

namespace fpbnn {

struct PretrainConfig {
  /// Mini-batch epochs over the prior dataset.
  AdamConfig optimizer{.epochs = 200, .learning_rate = 1e-3, .final_lr_fraction = 1.0,
                       .batch_size = 32};
  double init_perturbation = 0.01;
  int measurement_points = 500;
  /// When false every member gets its own Latin-hypercube point set.
  bool shared_points = false;

  void validate() const;
};

/// Fits one member, started at perturb(shared_init, init_perturbation, seed),
/// to a prior realization by unregularized least squares. Returns the
/// iterate with the lowest full-dataset loss seen at epoch boundaries.
PretrainedMember pretrain_member(const ParamVector& shared_init, const PriorRealization& target,
                                 const PretrainConfig& config, std::uint64_t seed,
                                 int member_index = 0);

struct PretrainedEnsemble {
  ParamVector shared_init;
  std::vector<PretrainedMember> members;

  std::vector<ParamVector> weights() const;
};

/// Stage 1 for K members: shared He initialization, per-member measurement
/// points and realization, pre-training. Deterministic in master_seed
/// regardless of `workers`.
PretrainedEnsemble pretrain_ensemble(const NetworkSpec& spec, const MultiOutputPrior& prior, int K,
                                     const PretrainConfig& config, std::uint64_t master_seed,
                                     int workers = 1);

}  // namespace fpbnn
