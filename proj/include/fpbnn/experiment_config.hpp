#pragma once

#include <optional>
#include <string>

#include "fpbnn/anchored_training.hpp"
#include "fpbnn/benchmarks.hpp"
#include "fpbnn/dataset.hpp"
#include "fpbnn/functional_prior.hpp"
#include "fpbnn/network.hpp"

namespace fpbnn {

/// Where training (and optionally test) data come from.
struct DataSource {
  /// "csv", "1d" or "synthetic-materials".
  std::string generator = "csv";
  std::string train_path;
  std::string test_path;
  Benchmark1DConfig one_d;
  SyntheticRVEConfig rve;
  /// Materials split used for training: "ind" or "ood".
  std::string split = "ind";
  int n_train = 50;
  /// True when data.seed was not given and follows the master seed.
  bool seed_follows_master = true;
};

enum class PriorSource { None, Explicit, Materials };

/// Config file schema (JSON); see docs/config.md.
struct ExperimentConfig {
  NetworkSpec network{1, {20, 20, 20, 20}, 1};
  PriorSource prior_source = PriorSource::None;
  MultiOutputPrior prior;
  /// Output channels whose linear mean slope is fitted to the training data.
  std::vector<bool> fit_slope;
  double mi_threshold = kDefaultMiThreshold;
  DataSource data;
  EnsembleConfig ensemble;
  std::string out_dir = "fpbnn-out";

  /// Consistency checks that need no data: K, mode/prior, file existence,
  /// generator dimensions. Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses without running validate(), so command-line overrides can be
/// applied first. Syntax errors report the line, schema errors the field.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& origin = "<config>");
ExperimentConfig load_experiment_config(const std::string& path);

/// Sets the master seed and, unless the data seed was given explicitly, the
/// generator seed.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

std::string read_text_file(const std::string& path);

struct LoadedData {
  Dataset train;
  std::optional<Dataset> test;
};

LoadedData load_data(const DataSource& source);

/// The functional prior for training on `train`: explicit priors (with
/// fitted slopes where requested) or the mutual-information materials prior.
MultiOutputPrior resolve_prior(const ExperimentConfig& config, const Dataset& train);

}  // namespace fpbnn
