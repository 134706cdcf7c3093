#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpbnn/anchored_training.hpp"
#include "fpbnn/benchmarks.hpp"
#include "fpbnn/experiment_config.hpp"
#include "fpbnn/functional_prior.hpp"
#include "fpbnn/metrics.hpp"
#include "fpbnn/prediction.hpp"
#include "fpbnn/prior_stats.hpp"

namespace fpbnn {

// ---- prior study -------------------------------------------------------------

struct NamedPrior {
  std::string name;
  FunctionalPrior prior;
  int pretrain_epochs = 200;
};

/// Priors A-D over a scalar input: A/B/C share mean 2x and k0 = 0.6 with
/// lengthscales 0.8 / 0.2 / 0.05; D has a random cubic mean, k0 = 0.1, L = 0.2.
std::vector<NamedPrior> default_study_priors();

/// Pointwise mean and std of the GP prior itself (bounds ignored).
void prior_marginals(const FunctionalPrior& prior, const Eigen::VectorXd& x, Eigen::VectorXd& mean,
                     Eigen::VectorXd& std_dev);

struct PriorStudyConfig {
  NetworkSpec network{1, {20, 20}, 1};
  std::vector<NamedPrior> priors = default_study_priors();
  int ensemble_size = 20;
  /// Epoch count is taken from each NamedPrior.
  PretrainConfig pretrain;
  int reconstruction_samples = 200;
  int eval_points = 101;
  double eval_lo = -1.0;
  double eval_hi = 1.0;
  double isotropic_variance = 1.0;
  int correlation_coordinates = 8;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

struct PriorStudyEntry {
  std::string name;
  PriorStats stats;
  double median_kernel_beta = 0.0;
  double mean_fit_rmse = 0.0;
  /// Prior std at the measurement scale, for judging fit quality.
  double target_std = 0.0;
  Eigen::Index rank = 0;
};

struct PriorStudyResult {
  std::vector<PriorStudyEntry> entries;
  /// Pooled kernel variance strictly increasing over the first three priors.
  bool variance_ordered = false;
  std::string summary;
};

/// Pre-trains one ensemble per prior and writes, when out_dir is non-empty:
/// <name>_layer_stats.csv, <name>_singular_values.csv,
/// <name>_correlations.csv, <name>_reconstruction.csv, summary.csv, summary.txt.
PriorStudyResult run_prior_study(const PriorStudyConfig& config, const std::string& out_dir);

/// JSON keys: network, priors (array of prior objects with "name" and
/// "epochs"), ensemble_size, pretrain, reconstruction_samples, eval_points,
/// eval_lo, eval_hi, isotropic_variance, seed, workers. Missing keys keep
/// their defaults.
PriorStudyConfig parse_prior_study_config(const std::string& text,
                                          const std::string& origin = "<config>");

// ---- 1D benchmark ------------------------------------------------------------

struct OneDConfig {
  Benchmark1DConfig data;
  NetworkSpec network{1, {20, 20, 20, 20}, 1};
  int ensemble_size = 40;
  double kernel_amp = 0.6;
  double flexible_lengthscale = 0.1;
  double constrained_lengthscale = 1.0;
  AdamConfig optimizer;
  PretrainConfig pretrain;
  int grid_points = 221;
  double grid_lo = -1.0;
  double grid_hi = 1.2;
  double gap_lo = 0.15;
  double gap_hi = 0.55;
  double probe_x = 1.0;
  std::uint64_t seed = 0;
  int workers = 1;

  OneDConfig();
  void validate() const;
};

struct OneDRun {
  std::string name;
  PredictiveSummary grid;
  double gap_std = 0.0;
  /// |predictive mean - prior mean| at probe_x.
  double probe_deviation = 0.0;
};

struct OneDResult {
  Eigen::VectorXd grid_x;
  double prior_slope = 0.0;
  std::vector<OneDRun> runs;  // vanilla, correlated_flexible, correlated_constrained, factorized_flexible
  bool flexible_exceeds_constrained = false;  // gap std ratio >= 2
  bool vanilla_below_flexible = false;
  bool factorized_drifts_more = false;
  std::string summary;

  const OneDRun& run(const std::string& name) const;
};

OneDResult run_reproduce_1d(const OneDConfig& config, const std::string& out_dir);

// ---- synthetic materials -----------------------------------------------------

struct MaterialsConfig {
  SyntheticRVEConfig data;
  NetworkSpec network{4, {20, 20, 20, 20}, 5};
  int ensemble_size = 20;
  AdamConfig optimizer;
  PretrainConfig pretrain;
  double mi_threshold = kDefaultMiThreshold;
  std::vector<int> ind_sizes{25, 50, 100};
  int ood_size = 50;
  bool run_ind = true;
  bool run_factorized = true;
  /// Strain grid of the propagated behavior law.
  double strain_lo = 0.001;
  double strain_hi = 0.1;
  int strain_points = 50;
  std::uint64_t seed = 0;
  int workers = 1;

  MaterialsConfig();
  void validate() const;
};

struct MaterialsRow {
  std::string split;  // "ind" or "ood"
  int n = 0;
  std::string mode;   // "prior", "vanilla", "factorized", "correlated"
  EvaluationReport report;
};

struct MaterialsResult {
  std::vector<MaterialsRow> rows;
  bool ood_rmse_better = false;
  bool ood_calibration_better = false;
  bool ood_elppd_better = false;
  bool ind_rmse_monotone = false;
  bool ind_elppd_monotone = false;
  bool ind_calibration_monotone = false;
  std::string summary;

  const MaterialsRow& row(const std::string& split, int n, const std::string& mode) const;
};

MaterialsResult run_reproduce_materials(const MaterialsConfig& config, const std::string& out_dir);

// ---- generic commands --------------------------------------------------------

struct FitOutcome {
  EnsembleFit fit;
  Dataset train;
  std::optional<Dataset> test;
  MultiOutputPrior prior;
};

/// Loads data, resolves the prior and trains. Writes model.fpbnn,
/// trace.csv, train.csv and (if any) test.csv into out_dir when non-empty.
FitOutcome run_fit(const ExperimentConfig& config, const std::string& out_dir);

/// Columns: inputs, then <output>_mean, <output>_epistemic_std,
/// <output>_total_std per output.
void write_predictions_csv(const std::string& path, const Eigen::MatrixXd& X_raw,
                           const PredictiveSummary& summary,
                           const std::vector<std::string>& input_names,
                           const std::vector<std::string>& output_names);

/// Writes metrics.csv and calibration.csv into out_dir.
EvaluationReport run_evaluate(const EnsembleModel& model, const Dataset& data,
                              const std::string& out_dir);

void ensure_directory(const std::string& dir);

}  // namespace fpbnn
