#include "fpbnn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpbnn/errors.hpp"
#include "fpbnn/parallel.hpp"
#include "fpbnn/pretrain.hpp"
#include "fpbnn/reconstruct.hpp"
#include "fpbnn/rng.hpp"
#include "fpbnn/rve_constants.hpp"
#include "fpbnn/text.hpp"

namespace fpbnn {

namespace {

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  return out;
}

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Evaluates every member of an ensemble on a grid and summarizes.
PredictiveBand ensemble_band(const std::vector<ParamVector>& members, const Eigen::MatrixXd& X) {
  std::vector<Eigen::MatrixXd> outs;
  for (const auto& m : members) outs.push_back(forward_batch(m, X));
  const PredictiveSummary s =
      summarize_members(std::move(outs), Eigen::VectorXd::Zero(members.front().spec().output_dim));
  return {s.mean, s.epistemic_std()};
}

}  // namespace

void ensure_directory(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create directory '" + dir + "': " + ec.message());
}

// ---- prior study -------------------------------------------------------------

std::vector<NamedPrior> default_study_priors() {
  const auto gp = [](MeanFunction m, double k0, double L) {
    FunctionalPrior p;
    p.mean = m;
    p.kernel_amp = k0;
    p.lengthscale = L;
    return p;
  };
  return {
      {"A", gp(MeanFunction::linear(2.0), 0.6, 0.8), 100},
      {"B", gp(MeanFunction::linear(2.0), 0.6, 0.2), 200},
      {"C", gp(MeanFunction::linear(2.0), 0.6, 0.05), 2000},
      {"D", gp(MeanFunction::random_cubic(5.0), 0.1, 0.2), 200},
  };
}

void prior_marginals(const FunctionalPrior& prior, const Eigen::VectorXd& x, Eigen::VectorXd& mean,
                     Eigen::VectorXd& std_dev) {
  mean.resize(x.size());
  std_dev.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Eigen::VectorXd xi = Eigen::VectorXd::Constant(1, x[i]);
    mean[i] = prior.mean.expected(xi);
    double var = prior.kernel_amp;
    if (prior.mean.is_random()) {
      // u ~ U(-1, 1) has variance 1/3.
      const double c = prior.mean.cubic_scale * x[i] * x[i] * x[i];
      var += c * c / 3.0;
    }
    std_dev[i] = std::sqrt(var);
  }
}

void PriorStudyConfig::validate() const {
  network.validate();
  if (network.input_dim != 1 || network.output_dim != 1)
    throw ConfigError("prior study uses scalar input and output");
  if (ensemble_size < 2) throw ConfigError("prior study needs ensemble_size >= 2");
  if (priors.empty()) throw ConfigError("prior study needs at least one prior");
  for (const auto& p : priors) {
    p.prior.validate(1);
    if (p.pretrain_epochs < 1) throw ConfigError("prior '" + p.name + "' needs epochs >= 1");
  }
  if (reconstruction_samples < 2 || eval_points < 2 || !(eval_lo < eval_hi))
    throw ConfigError("invalid reconstruction settings");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  pretrain.validate();
}

PriorStudyResult run_prior_study(const PriorStudyConfig& config, const std::string& out_dir) {
  config.validate();
  ensure_directory(out_dir);
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(config.eval_points, config.eval_lo, config.eval_hi);
  const Eigen::MatrixXd X = xs;

  PriorStudyResult result;
  for (std::size_t pi = 0; pi < config.priors.size(); ++pi) {
    const NamedPrior& np = config.priors[pi];
    PretrainConfig pc = config.pretrain;
    pc.optimizer.epochs = np.pretrain_epochs;
    const PretrainedEnsemble pre = pretrain_ensemble(config.network, {np.prior}, config.ensemble_size,
                                                     pc, config.seed, config.workers);
    const std::vector<ParamVector> weights = pre.weights();

    std::vector<Eigen::Index> corr_idx;
    const Eigen::Index d = config.network.param_count();
    const int nc = static_cast<int>(std::min<Eigen::Index>(config.correlation_coordinates, d));
    for (int i = 0; i < nc; ++i) corr_idx.push_back(Eigen::Index(i) * d / nc);

    PriorStudyEntry e;
    e.name = np.name;
    e.stats = compute_prior_stats(weights, corr_idx);
    e.median_kernel_beta = median_of(e.stats.gennorm_shape_per_layer);
    e.rank = e.stats.singular_values.size();
    for (const auto& m : pre.members) e.mean_fit_rmse += m.fit_rmse / double(pre.members.size());
    e.target_std = std::sqrt(np.prior.kernel_amp);

    if (!out_dir.empty()) {
      write_prior_stats_csv(path_in(out_dir, np.name + "_layer_stats.csv"), e.stats);
      write_singular_values_csv(path_in(out_dir, np.name + "_singular_values.csv"),
                                e.stats.singular_values);
      {
        std::ofstream out = open_out(path_in(out_dir, np.name + "_correlations.csv"));
        out << "index";
        for (auto i : corr_idx) out << ",w" << i;
        out << '\n';
        for (std::size_t r = 0; r < corr_idx.size(); ++r) {
          out << 'w' << corr_idx[r];
          for (std::size_t c = 0; c < corr_idx.size(); ++c)
            out << ',' << format_double(e.stats.selected_correlations(r, c));
          out << '\n';
        }
      }

      // Function-space view of each parameter-space family.
      const FactorizedScales scales = fit_factorized(weights);
      const std::vector<std::pair<std::string, ParameterPrior>> families = {
          {"isotropic", ParameterPrior::isotropic(config.isotropic_variance)},
          {"factorized_gaussian", ParameterPrior::factorized_gaussian(scales)},
          {"factorized_gennorm", ParameterPrior::factorized_gennorm(scales)},
          {"multivariate", ParameterPrior::correlated(build_anchor_prior(pre.members))},
      };
      std::vector<PredictiveBand> bands;
      for (std::size_t f = 0; f < families.size(); ++f)
        bands.push_back(reconstruct_functional(families[f].second, config.network, X,
                                               config.reconstruction_samples,
                                               derive_seed(config.seed, Stream::Sampling, f)));
      bands.push_back(ensemble_band(weights, X));
      Eigen::VectorXd gp_mean, gp_std;
      prior_marginals(np.prior, xs, gp_mean, gp_std);

      std::ofstream out = open_out(path_in(out_dir, np.name + "_reconstruction.csv"));
      out << "x,prior_mean,prior_std";
      for (const auto& f : families) out << ',' << f.first << "_mean," << f.first << "_std";
      out << ",ensemble_mean,ensemble_std\n";
      for (Eigen::Index i = 0; i < xs.size(); ++i) {
        out << format_double(xs[i]) << ',' << format_double(gp_mean[i]) << ','
            << format_double(gp_std[i]);
        for (const auto& b : bands)
          out << ',' << format_double(b.mean(i, 0)) << ',' << format_double(b.std(i, 0));
        out << '\n';
      }
    }
    result.entries.push_back(std::move(e));
  }

  const auto& en = result.entries;
  result.variance_ordered = en.size() >= 3 &&
                            en[0].stats.pooled_kernel_variance < en[1].stats.pooled_kernel_variance &&
                            en[1].stats.pooled_kernel_variance < en[2].stats.pooled_kernel_variance;

  std::ostringstream s;
  s << "prior study: K=" << config.ensemble_size << ", architecture " << config.network.describe()
    << ", seed " << config.seed << "\n";
  for (const auto& e : en)
    s << "  prior " << e.name << ": pooled kernel variance " << fmt(e.stats.pooled_kernel_variance)
      << ", median layer beta " << fmt(e.median_kernel_beta) << ", rank " << e.rank
      << ", mean fit rmse " << fmt(e.mean_fit_rmse) << " (prior std " << fmt(e.target_std) << ")\n";
  if (en.size() >= 3)
    s << "claim pooled kernel variance " << en[0].name << " < " << en[1].name << " < " << en[2].name
      << ": " << verdict(result.variance_ordered) << "\n";
  result.summary = s.str();

  if (!out_dir.empty()) {
    std::ofstream out = open_out(path_in(out_dir, "summary.csv"));
    out << "prior,pooled_kernel_variance,median_kernel_beta,rank,mean_fit_rmse\n";
    for (const auto& e : en)
      out << e.name << ',' << format_double(e.stats.pooled_kernel_variance) << ','
          << format_double(e.median_kernel_beta) << ',' << e.rank << ','
          << format_double(e.mean_fit_rmse) << '\n';
    open_out(path_in(out_dir, "summary.txt")) << result.summary;
  }
  return result;
}

// ---- 1D benchmark ------------------------------------------------------------

OneDConfig::OneDConfig() { pretrain.optimizer.epochs = 500; }

void OneDConfig::validate() const {
  data.validate();
  network.validate();
  if (network.input_dim != 1 || network.output_dim != 1)
    throw ConfigError("1d benchmark uses scalar input and output");
  if (ensemble_size < 2) throw ConfigError("1d benchmark needs ensemble_size >= 2");
  if (!(kernel_amp > 0.0) || !(flexible_lengthscale > 0.0) || !(constrained_lengthscale > 0.0))
    throw ConfigError("1d prior parameters must be > 0");
  if (grid_points < 2 || !(grid_lo < grid_hi) || !(gap_lo < gap_hi))
    throw ConfigError("invalid prediction grid");
  optimizer.validate();
  pretrain.validate();
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

const OneDRun& OneDResult::run(const std::string& name) const {
  for (const auto& r : runs)
    if (r.name == name) return r;
  throw EvaluationError("no 1d run named '" + name + "'");
}

OneDResult run_reproduce_1d(const OneDConfig& config, const std::string& out_dir) {
  config.validate();
  ensure_directory(out_dir);
  const Dataset data = gen_1d_dataset(config.data);

  OneDResult result;
  result.prior_slope = fit_linear_mean(data.X, data.Y.col(0), 0);
  result.grid_x = Eigen::VectorXd::LinSpaced(config.grid_points, config.grid_lo, config.grid_hi);

  FunctionalPrior flexible;
  flexible.mean = MeanFunction::linear(result.prior_slope);
  flexible.kernel_amp = config.kernel_amp;
  flexible.lengthscale = config.flexible_lengthscale;
  FunctionalPrior constrained = flexible;
  constrained.lengthscale = config.constrained_lengthscale;

  EnsembleConfig ec;
  ec.ensemble_size = config.ensemble_size;
  ec.optimizer = config.optimizer;
  ec.pretrain = config.pretrain;
  ec.workers = config.workers;
  ec.master_seed = config.seed;

  const PretrainedEnsemble pre_flex =
      pretrain_ensemble(config.network, {flexible}, config.ensemble_size, config.pretrain,
                        derive_seed(config.seed, Stream::Anchor, 1), config.workers);
  const PretrainedEnsemble pre_con =
      pretrain_ensemble(config.network, {constrained}, config.ensemble_size, config.pretrain,
                        derive_seed(config.seed, Stream::Anchor, 2), config.workers);

  std::vector<std::pair<std::string, EnsembleFit>> fits;
  {
    EnsembleConfig c = ec;
    c.mode = TrainingMode::Vanilla;
    fits.emplace_back("vanilla", train_ensemble(config.network, data, c));
  }
  {
    EnsembleConfig c = ec;
    c.mode = TrainingMode::Correlated;
    fits.emplace_back("correlated_flexible", train_ensemble_from_anchors(data, c, pre_flex));
    fits.emplace_back("correlated_constrained", train_ensemble_from_anchors(data, c, pre_con));
    c.mode = TrainingMode::Factorized;
    fits.emplace_back("factorized_flexible", train_ensemble_from_anchors(data, c, pre_flex));
  }

  const Eigen::MatrixXd grid = result.grid_x;
  const double prior_at_probe = result.prior_slope * config.probe_x;
  for (auto& [name, fit] : fits) {
    OneDRun run;
    run.name = name;
    run.grid = predict(fit.model, grid);
    const Eigen::MatrixXd sd = run.grid.epistemic_std();
    double acc = 0.0;
    int n = 0;
    for (Eigen::Index i = 0; i < grid.rows(); ++i)
      if (grid(i, 0) >= config.gap_lo && grid(i, 0) <= config.gap_hi) {
        acc += sd(i, 0);
        ++n;
      }
    run.gap_std = n ? acc / n : 0.0;
    const PredictiveSummary probe =
        predict(fit.model, Eigen::MatrixXd::Constant(1, 1, config.probe_x));
    run.probe_deviation = std::abs(probe.mean(0, 0) - prior_at_probe);
    result.runs.push_back(std::move(run));
  }

  const double flex = result.run("correlated_flexible").gap_std;
  const double con = result.run("correlated_constrained").gap_std;
  const double van = result.run("vanilla").gap_std;
  result.flexible_exceeds_constrained = flex >= 2.0 * con;
  result.vanilla_below_flexible = van < flex;
  result.factorized_drifts_more = result.run("factorized_flexible").probe_deviation >
                                  result.run("correlated_flexible").probe_deviation;

  std::ostringstream s;
  s << "1d benchmark: K=" << config.ensemble_size << ", " << data.size() << " points, seed "
    << config.seed << ", prior mean slope " << fmt(result.prior_slope) << "\n";
  for (const auto& r : result.runs)
    s << "  " << r.name << ": gap epistemic std " << fmt(r.gap_std) << ", |mean - prior mean| at x="
      << fmt(config.probe_x) << " " << fmt(r.probe_deviation) << "\n";
  s << "claim flexible-prior gap std >= 2 x constrained-prior gap std: "
    << verdict(result.flexible_exceeds_constrained) << " (" << fmt(flex) << " vs " << fmt(con) << ")\n";
  s << "claim vanilla gap std < flexible anchored gap std: " << verdict(result.vanilla_below_flexible)
    << " (" << fmt(van) << " vs " << fmt(flex) << ")\n";
  s << "claim factorized anchoring drifts further from the prior mean than correlated: "
    << verdict(result.factorized_drifts_more) << " ("
    << fmt(result.run("factorized_flexible").probe_deviation) << " vs "
    << fmt(result.run("correlated_flexible").probe_deviation) << ")\n";
  result.summary = s.str();

  if (!out_dir.empty()) {
    write_dataset(path_in(out_dir, "data.csv"), data,
                  {"1d", "two-region uniform", config.data.seed, {config.data.noise_std}});
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
      const OneDRun& run = result.runs[r];
      const Eigen::MatrixXd esd = run.grid.epistemic_std();
      const Eigen::MatrixXd tsd = run.grid.total_std();
      std::ofstream out = open_out(path_in(out_dir, run.name + "_predictions.csv"));
      out << "x,mean,epistemic_std,lower,upper,total_std,prior_mean,truth\n";
      for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        const double m = run.grid.mean(i, 0), sd = esd(i, 0);
        out << format_double(grid(i, 0)) << ',' << format_double(m) << ',' << format_double(sd) << ','
            << format_double(m - kBandWidth * sd) << ',' << format_double(m + kBandWidth * sd) << ','
            << format_double(tsd(i, 0)) << ',' << format_double(result.prior_slope * grid(i, 0))
            << ',' << format_double(benchmark_1d_truth(grid(i, 0))) << '\n';
      }
      write_trace_csv(path_in(out_dir, run.name + "_trace.csv"), fits[r].second.traces);
    }
    std::ofstream out = open_out(path_in(out_dir, "summary.csv"));
    out << "run,gap_std,probe_deviation\n";
    for (const auto& r : result.runs)
      out << r.name << ',' << format_double(r.gap_std) << ',' << format_double(r.probe_deviation)
          << '\n';
    open_out(path_in(out_dir, "summary.txt")) << result.summary;
  }
  return result;
}

// ---- synthetic materials -----------------------------------------------------

MaterialsConfig::MaterialsConfig() { pretrain.optimizer.epochs = 300; }

void MaterialsConfig::validate() const {
  data.validate();
  network.validate();
  if (network.input_dim != 4 || network.output_dim != 5)
    throw ConfigError("materials benchmark needs 4 inputs and 5 outputs");
  if (ensemble_size < 2) throw ConfigError("materials benchmark needs ensemble_size >= 2");
  for (int n : ind_sizes)
    if (n < 2 || n > data.n_train) throw ConfigError("in-distribution sizes must be in [2, n_train]");
  if (ood_size < 2 || ood_size > data.n_train) throw ConfigError("ood_size must be in [2, n_train]");
  if (!(strain_lo > 0.0) || !(strain_lo < strain_hi) || strain_points < 2)
    throw ConfigError("strain grid must be positive and increasing");
  optimizer.validate();
  pretrain.validate();
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

const MaterialsRow& MaterialsResult::row(const std::string& split, int n, const std::string& mode) const {
  for (const auto& r : rows)
    if (r.split == split && r.n == n && r.mode == mode) return r;
  throw EvaluationError("no materials row " + split + "/" + std::to_string(n) + "/" + mode);
}

MaterialsResult run_reproduce_materials(const MaterialsConfig& config, const std::string& out_dir) {
  config.validate();
  ensure_directory(out_dir);
  const MaterialsDatasets ds = gen_materials_datasets(config.data);
  const Eigen::MatrixXd test_X = ds.test.raw_X();
  const Eigen::MatrixXd test_Y = ds.test.raw_Y();

  EnsembleConfig ec;
  ec.ensemble_size = config.ensemble_size;
  ec.optimizer = config.optimizer;
  ec.pretrain = config.pretrain;
  ec.workers = config.workers;
  ec.master_seed = config.seed;

  MaterialsResult result;
  const auto tag = [](const std::string& split, int n, const std::string& mode) {
    return split + "_N" + std::to_string(n) + "_" + mode;
  };
  const auto record = [&](const std::string& split, int n, const std::string& mode,
                          const EnsembleModel& model) {
    const PredictiveSummary s = predict(model, test_X);
    MaterialsRow row{split, n, mode, evaluate(s, test_Y, ds.test.output_names)};
    if (!out_dir.empty()) {
      write_metrics_csv(path_in(out_dir, "metrics_" + tag(split, n, mode) + ".csv"), row.report);
      write_calibration_csv(path_in(out_dir, "calibration_" + tag(split, n, mode) + ".csv"),
                            row.report.calibration, ds.test.output_names);
      if (split == "ood" && mode != "prior") {
        const Eigen::VectorXd strain =
            Eigen::VectorXd::LinSpaced(config.strain_points, config.strain_lo, config.strain_hi);
        Eigen::VectorXd b(s.members()), c(s.members());
        for (int k = 0; k < s.members(); ++k) {
          b[k] = s.member_outputs[k](0, 0);
          c[k] = s.member_outputs[k](0, 1);
        }
        write_band_csv(path_in(out_dir, "behavior_law_" + tag(split, n, mode) + ".csv"),
                       propagate_behavior_law(b, c, strain, rve::kYieldOffset));
      }
    }
    result.rows.push_back(std::move(row));
  };

  // Anchored runs for one training set; the prior is designed from that set.
  const auto anchored_block = [&](const std::string& split, const Dataset& train, std::uint64_t index,
                                  bool factorized) {
    const MaterialsPrior mp = build_materials_prior(train, config.mi_threshold);
    if (!out_dir.empty()) {
      std::ofstream out = open_out(path_in(out_dir, "prior_" + split + "_N" +
                                                        std::to_string(train.size()) + "_mi.csv"));
      out << "output";
      for (const auto& n : train.input_names) out << ",mi_" << n;
      out << ",subset,theta\n";
      for (Eigen::Index j = 0; j < mp.mi.rows(); ++j) {
        out << train.output_names[j];
        for (Eigen::Index i = 0; i < mp.mi.cols(); ++i) out << ',' << format_double(mp.mi(j, i));
        std::string subset;
        for (int f : mp.priors[j].features) subset += (subset.empty() ? "" : " ") + train.input_names[f];
        out << ',' << subset << ',' << format_double(mp.priors[j].mean.theta) << '\n';
      }
    }
    const PretrainedEnsemble pre =
        pretrain_ensemble(config.network, mp.priors, config.ensemble_size, config.pretrain,
                          derive_seed(config.seed, Stream::Anchor, index), config.workers);
    const int n = static_cast<int>(train.size());
    EnsembleConfig c = ec;
    c.mode = TrainingMode::Correlated;
    {
      EnsembleConfig c0 = c;
      c0.optimizer.epochs = 0;
      record(split, n, "prior", train_ensemble_from_anchors(train.head(0), c0, pre).model);
    }
    record(split, n, "correlated", train_ensemble_from_anchors(train, c, pre).model);
    if (factorized) {
      c.mode = TrainingMode::Factorized;
      record(split, n, "factorized", train_ensemble_from_anchors(train, c, pre).model);
    }
  };

  if (config.run_ind)
    for (int n : config.ind_sizes) anchored_block("ind", ds.train_ind.head(n), 100 + n, false);

  const Dataset ood = ds.train_ood.head(config.ood_size);
  {
    EnsembleConfig c = ec;
    c.mode = TrainingMode::Vanilla;
    record("ood", config.ood_size, "vanilla", train_ensemble(config.network, ood, c).model);
  }
  anchored_block("ood", ood, 200 + config.ood_size, config.run_factorized);

  const auto& van = result.row("ood", config.ood_size, "vanilla").report;
  const auto& cor = result.row("ood", config.ood_size, "correlated").report;
  result.ood_rmse_better = cor.rmse_std.pooled < van.rmse_std.pooled;
  result.ood_calibration_better = cor.calibration.pooled_area < van.calibration.pooled_area;
  result.ood_elppd_better = cor.elppd_std.joint > van.elppd_std.joint;
  if (config.run_ind && config.ind_sizes.size() >= 2) {
    result.ind_rmse_monotone = result.ind_elppd_monotone = result.ind_calibration_monotone = true;
    for (std::size_t i = 1; i < config.ind_sizes.size(); ++i) {
      const auto& a = result.row("ind", config.ind_sizes[i - 1], "correlated").report;
      const auto& b = result.row("ind", config.ind_sizes[i], "correlated").report;
      result.ind_rmse_monotone = result.ind_rmse_monotone && b.rmse_std.pooled < a.rmse_std.pooled;
      result.ind_elppd_monotone = result.ind_elppd_monotone && b.elppd_std.joint > a.elppd_std.joint;
      result.ind_calibration_monotone =
          result.ind_calibration_monotone && b.calibration.pooled_area < a.calibration.pooled_area;
    }
  }

  std::ostringstream s;
  s << "synthetic materials: K=" << config.ensemble_size << ", test points " << ds.test.size()
    << ", seed " << config.seed << "\n";
  s << "  split  N    mode        rmse      miscal    elppd\n";
  for (const auto& r : result.rows) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-5s %4d  %-10s %9.4f %9.4f %11.2f\n", r.split.c_str(), r.n,
                  r.mode.c_str(), r.report.rmse_std.pooled, r.report.calibration.pooled_area,
                  r.report.elppd_std.joint);
    s << line;
  }
  s << "claim OOD correlated pooled RMSE < vanilla: " << verdict(result.ood_rmse_better) << "\n";
  s << "claim OOD correlated miscalibration area < vanilla: " << verdict(result.ood_calibration_better)
    << "\n";
  s << "claim OOD correlated ELPPD > vanilla: " << verdict(result.ood_elppd_better) << "\n";
  if (config.run_ind) {
    s << "claim in-distribution RMSE decreases with N: " << verdict(result.ind_rmse_monotone) << "\n";
    s << "claim in-distribution ELPPD increases with N: " << verdict(result.ind_elppd_monotone) << "\n";
    s << "claim in-distribution miscalibration decreases with N: "
      << verdict(result.ind_calibration_monotone) << "\n";
  }
  result.summary = s.str();

  if (!out_dir.empty()) {
    const std::vector<double> cov(config.data.cov.data(), config.data.cov.data() + config.data.cov.size());
    write_dataset(path_in(out_dir, "train_ind.csv"), ds.train_ind,
                  {"synthetic-materials", config.data.ind_distribution.describe(), config.data.seed, cov});
    write_dataset(path_in(out_dir, "train_ood.csv"), ds.train_ood,
                  {"synthetic-materials", config.data.ood_distribution.describe(), config.data.seed, cov});
    write_dataset(path_in(out_dir, "test.csv"), ds.test,
                  {"synthetic-materials", config.data.test_distribution.describe(), config.data.seed, cov});
    std::ofstream out = open_out(path_in(out_dir, "table.csv"));
    out << "split,n,mode,rmse,rmse_raw,miscalibration_area,elppd,elppd_raw\n";
    for (const auto& r : result.rows)
      out << r.split << ',' << r.n << ',' << r.mode << ',' << format_double(r.report.rmse_std.pooled)
          << ',' << format_double(r.report.rmse_raw.pooled) << ','
          << format_double(r.report.calibration.pooled_area) << ','
          << format_double(r.report.elppd_std.joint) << ',' << format_double(r.report.elppd_raw.joint)
          << '\n';
    open_out(path_in(out_dir, "summary.txt")) << result.summary;
  }
  return result;
}

// ---- generic commands --------------------------------------------------------

FitOutcome run_fit(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  LoadedData data = load_data(config.data);
  if (data.train.input_dim() != config.network.input_dim ||
      data.train.output_dim() != config.network.output_dim)
    throw ConfigError("field 'network': dataset has " + std::to_string(data.train.input_dim()) +
                      " inputs / " + std::to_string(data.train.output_dim()) + " outputs");
  MultiOutputPrior prior = resolve_prior(config, data.train);
  EnsembleFit fit = train_ensemble(config.network, data.train, config.ensemble,
                                   prior.empty() ? nullptr : &prior);
  if (!out_dir.empty()) {
    ensure_directory(out_dir);
    save_ensemble(path_in(out_dir, "model.fpbnn"), fit.model);
    write_trace_csv(path_in(out_dir, "trace.csv"), fit.traces);
    write_dataset(path_in(out_dir, "train.csv"), data.train, {config.data.generator, "", config.ensemble.master_seed, {}});
    if (data.test)
      write_dataset(path_in(out_dir, "test.csv"), *data.test, {config.data.generator, "", config.ensemble.master_seed, {}});
  }
  return {std::move(fit), std::move(data.train), std::move(data.test), std::move(prior)};
}

void write_predictions_csv(const std::string& path, const Eigen::MatrixXd& X_raw,
                           const PredictiveSummary& s, const std::vector<std::string>& input_names,
                           const std::vector<std::string>& output_names) {
  std::ofstream out = open_out(path);
  const auto name = [](const std::vector<std::string>& v, Eigen::Index i, const char* p) {
    return i < Eigen::Index(v.size()) ? v[i] : p + std::to_string(i);
  };
  for (Eigen::Index i = 0; i < X_raw.cols(); ++i) out << (i ? "," : "") << name(input_names, i, "x");
  for (Eigen::Index j = 0; j < s.outputs(); ++j) {
    const std::string n = name(output_names, j, "y");
    out << ',' << n << "_mean," << n << "_epistemic_std," << n << "_total_std";
  }
  out << '\n';
  const Eigen::MatrixXd esd = s.epistemic_std(), tsd = s.total_std();
  for (Eigen::Index q = 0; q < s.points(); ++q) {
    for (Eigen::Index i = 0; i < X_raw.cols(); ++i) out << (i ? "," : "") << format_double(X_raw(q, i));
    for (Eigen::Index j = 0; j < s.outputs(); ++j)
      out << ',' << format_double(s.mean(q, j)) << ',' << format_double(esd(q, j)) << ','
          << format_double(tsd(q, j));
    out << '\n';
  }
}

EvaluationReport run_evaluate(const EnsembleModel& model, const Dataset& data,
                              const std::string& out_dir) {
  const EvaluationReport r = evaluate(model, data);
  if (!out_dir.empty()) {
    ensure_directory(out_dir);
    write_metrics_csv(path_in(out_dir, "metrics.csv"), r);
    write_calibration_csv(path_in(out_dir, "calibration.csv"), r.calibration, r.output_names);
  }
  return r;
}

}  // namespace fpbnn
