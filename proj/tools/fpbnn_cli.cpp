// fpbnn command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 training failure,
// 4 evaluation error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fpbnn/ensemble_model.hpp"
#include "fpbnn/errors.hpp"
#include "fpbnn/experiment_config.hpp"
#include "fpbnn/experiments.hpp"
#include "fpbnn/text.hpp"

using namespace fpbnn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;
constexpr int kExitEvaluation = 4;

// Flags shared by the commands that train; each mirrors a config key.
struct Overrides {
  std::optional<int> ensemble_size;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  std::optional<int> epochs;
  std::optional<int> pretrain_epochs;

  void attach(CLI::App* cmd) {
    cmd->add_option("--ensemble-size", ensemble_size, "Number of ensemble members K");
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--out-dir", out_dir, "Output directory");
    cmd->add_option("--workers", workers, "Concurrent member trainings");
    cmd->add_option("--epochs", epochs, "Training epochs per member");
    cmd->add_option("--pretrain-epochs", pretrain_epochs, "Pre-training epochs per member");
  }
};

// Picks the model's columns out of a CSV by header name, falling back to
// position when the names do not match.
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& table, const std::vector<std::string>& header,
                               const std::vector<std::string>& names, Eigen::Index offset,
                               Eigen::Index count) {
  Eigen::MatrixXd out(table.rows(), count);
  for (Eigen::Index j = 0; j < count; ++j) {
    Eigen::Index col = offset + j;
    if (j < Eigen::Index(names.size()))
      for (std::size_t h = 0; h < header.size(); ++h)
        if (header[h] == names[j]) col = Eigen::Index(h);
    if (col >= table.cols()) throw InputShapeError("CSV has too few columns for the model");
    out.col(j) = table.col(col);
  }
  return out;
}

int run_guarded(const std::function<void()>& body, int failure_code) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingFailure& e) {
    std::cerr << "training failure (member " << e.member() << ", epoch " << e.epoch()
              << "): " << e.what() << "\n";
    return kExitTraining;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure_code;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensembles of neural networks anchored to functional priors"};
  app.require_subcommand(1);

  // prior-study
  auto* study = app.add_subcommand("prior-study", "Pre-train ensembles to functional priors and export statistics");
  std::string study_config;
  Overrides study_ov;
  study->add_option("--config", study_config, "Prior-study JSON config");
  study_ov.attach(study);

  // fit
  auto* fit = app.add_subcommand("fit", "Train an ensemble from an experiment config");
  std::string fit_config;
  Overrides fit_ov;
  fit->add_option("--config", fit_config, "Experiment JSON config")->required();
  fit->add_option("--mode", fit_ov.mode, "vanilla | factorized | correlated");
  fit_ov.attach(fit);

  // predict
  auto* pred = app.add_subcommand("predict", "Predictive moments of a trained ensemble");
  std::string pred_model, pred_input, pred_out;
  pred->add_option("--model", pred_model, "Model checkpoint")->required();
  pred->add_option("--input", pred_input, "CSV with a header row of input names")->required();
  pred->add_option("--out", pred_out, "Output CSV")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Metrics of a trained ensemble on a labelled CSV");
  std::string eval_model, eval_data, eval_out = "fpbnn-eval";
  eval->add_option("--model", eval_model, "Model checkpoint")->required();
  eval->add_option("--data", eval_data, "CSV with input and output columns")->required();
  eval->add_option("--out-dir", eval_out, "Output directory");

  // reproduce
  auto* repro = app.add_subcommand("reproduce", "Run a built-in experiment end to end");
  std::string experiment;
  Overrides repro_ov;
  repro->add_option("experiment", experiment, "1d | prior-study | synthetic-materials")
      ->required()
      ->check(CLI::IsMember({"1d", "prior-study", "synthetic-materials"}));
  repro_ov.attach(repro);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*study) {
    return run_guarded([&] {
      PriorStudyConfig c;
      if (!study_config.empty()) c = parse_prior_study_config(read_text_file(study_config), study_config);
      if (study_ov.ensemble_size) c.ensemble_size = *study_ov.ensemble_size;
      if (study_ov.seed) c.seed = *study_ov.seed;
      if (study_ov.workers) c.workers = *study_ov.workers;
      if (study_ov.pretrain_epochs)
        for (auto& p : c.priors) p.pretrain_epochs = *study_ov.pretrain_epochs;
      c.validate();
      const PriorStudyResult r = run_prior_study(c, study_ov.out_dir.value_or("prior-study"));
      std::cout << r.summary;
    }, kExitTraining);
  }

  if (*fit) {
    return run_guarded([&] {
      ExperimentConfig c = load_experiment_config(fit_config);
      if (fit_ov.mode) c.ensemble.mode = parse_training_mode(*fit_ov.mode);
      if (fit_ov.ensemble_size) c.ensemble.ensemble_size = *fit_ov.ensemble_size;
      if (fit_ov.seed) apply_seed(c, *fit_ov.seed);
      if (fit_ov.workers) c.ensemble.workers = *fit_ov.workers;
      if (fit_ov.epochs) c.ensemble.optimizer.epochs = *fit_ov.epochs;
      if (fit_ov.pretrain_epochs) c.ensemble.pretrain.optimizer.epochs = *fit_ov.pretrain_epochs;
      if (fit_ov.out_dir) c.out_dir = *fit_ov.out_dir;
      c.validate();
      const FitOutcome out = run_fit(c, c.out_dir);
      std::cout << "trained " << out.fit.model.size() << " " << to_string(out.fit.model.mode)
                << " members on " << out.train.size() << " points; wrote " << c.out_dir
                << "/model.fpbnn\n";
      if (out.fit.model.size() == 1)
        std::cerr << "warning: K = 1, epistemic covariance is reported as zero\n";
    }, kExitTraining);
  }

  if (*pred) {
    return run_guarded([&] {
      const EnsembleModel model = load_ensemble(pred_model);
      std::vector<std::string> header;
      const Eigen::MatrixXd table = read_csv_matrix(pred_input, &header);
      const Eigen::MatrixXd X =
          select_columns(table, header, model.input_names, 0, model.spec.input_dim);
      const PredictiveSummary s = predict(model, X);
      if (s.single_member) std::cerr << "warning: K = 1, epistemic covariance is reported as zero\n";
      write_predictions_csv(pred_out, X, s, model.input_names, model.output_names);
    }, kExitEvaluation);
  }

  if (*eval) {
    return run_guarded([&] {
      const EnsembleModel model = load_ensemble(eval_model);
      std::vector<std::string> header;
      const Eigen::MatrixXd table = read_csv_matrix(eval_data, &header);
      if (table.cols() < model.spec.input_dim + model.spec.output_dim)
        throw EvaluationError("data has " + std::to_string(table.cols()) + " columns, model needs " +
                              std::to_string(model.spec.input_dim + model.spec.output_dim));
      const Eigen::MatrixXd X = select_columns(table, header, model.input_names, 0, model.spec.input_dim);
      const Eigen::MatrixXd Y = select_columns(table, header, model.output_names, model.spec.input_dim,
                                               model.spec.output_dim);
      Dataset d = Dataset::from_raw(X, Y, model.noise_var.cwiseProduct(model.output_scaling.scale.cwiseAbs2()),
                                    model.input_scaling, model.output_scaling);
      d.output_names = model.output_names;
      const EvaluationReport r = run_evaluate(model, d, eval_out);
      if (r.calibration.unreliable)
        std::cerr << "warning: fewer than 10 test points, calibration is unreliable\n";
      std::cout << "pooled rmse " << format_double(r.rmse_std.pooled) << ", miscalibration area "
                << format_double(r.calibration.pooled_area) << ", elppd "
                << format_double(r.elppd_std.joint) << "; wrote " << eval_out << "/metrics.csv\n";
    }, kExitEvaluation);
  }

  if (*repro) {
    return run_guarded([&] {
      const std::string dir = repro_ov.out_dir.value_or("reproduce-" + experiment);
      if (experiment == "1d") {
        OneDConfig c;
        if (repro_ov.seed) c.seed = c.data.seed = *repro_ov.seed;
        if (repro_ov.ensemble_size) c.ensemble_size = *repro_ov.ensemble_size;
        if (repro_ov.workers) c.workers = *repro_ov.workers;
        if (repro_ov.epochs) c.optimizer.epochs = *repro_ov.epochs;
        if (repro_ov.pretrain_epochs) c.pretrain.optimizer.epochs = *repro_ov.pretrain_epochs;
        c.validate();
        std::cout << run_reproduce_1d(c, dir).summary;
      } else if (experiment == "prior-study") {
        PriorStudyConfig c;
        if (repro_ov.seed) c.seed = *repro_ov.seed;
        if (repro_ov.ensemble_size) c.ensemble_size = *repro_ov.ensemble_size;
        if (repro_ov.workers) c.workers = *repro_ov.workers;
        if (repro_ov.pretrain_epochs)
          for (auto& p : c.priors) p.pretrain_epochs = *repro_ov.pretrain_epochs;
        c.validate();
        std::cout << run_prior_study(c, dir).summary;
      } else {
        MaterialsConfig c;
        if (repro_ov.seed) c.seed = c.data.seed = *repro_ov.seed;
        if (repro_ov.ensemble_size) c.ensemble_size = *repro_ov.ensemble_size;
        if (repro_ov.workers) c.workers = *repro_ov.workers;
        if (repro_ov.epochs) c.optimizer.epochs = *repro_ov.epochs;
        if (repro_ov.pretrain_epochs) c.pretrain.optimizer.epochs = *repro_ov.pretrain_epochs;
        c.validate();
        std::cout << run_reproduce_materials(c, dir).summary;
      }
    }, kExitTraining);
  }
  return 0;
}
