#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpbnn/dataset.hpp"
#include "fpbnn/low_rank_gaussian.hpp"
#include "fpbnn/network.hpp"

namespace fpbnn {

enum class TrainingMode { Vanilla, Factorized, Correlated };

std::string to_string(TrainingMode mode);
TrainingMode parse_training_mode(const std::string& name);

/// A trained ensemble: K members, their anchors (anchored modes only), the
/// anchor prior (correlated mode), noise model and the scaling transforms
/// that map physical units to the space the networks were trained in.
struct EnsembleModel {
  NetworkSpec spec;
  TrainingMode mode = TrainingMode::Vanilla;
  std::vector<ParamVector> members;
  std::vector<ParamVector> anchors;
  std::optional<LowRankGaussian> anchor_prior;
  /// Per-parameter precision used by factorized anchoring.
  Eigen::VectorXd factorized_precision;
  Eigen::VectorXd noise_var;  // scaled units
  AffineScaling input_scaling;
  AffineScaling output_scaling;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;

  int size() const { return static_cast<int>(members.size()); }
  void validate() const;
};

void save_ensemble(const std::string& path, const EnsembleModel& model);
EnsembleModel load_ensemble(const std::string& path);

}  // namespace fpbnn
