#include "fpbnn/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "fpbnn/errors.hpp"
#include "fpbnn/text.hpp"

namespace fpbnn {

RmseResult rmse(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& Y_true) {
  if (mean.rows() != Y_true.rows() || mean.cols() != Y_true.cols())
    throw InputShapeError("prediction and target shapes differ");
  const Eigen::ArrayXXd sq = (Y_true - mean).array().square();
  RmseResult r;
  r.per_output = sq.colwise().sum().sqrt().transpose().matrix();
  r.pooled = std::sqrt(sq.sum());
  return r;
}

RmseResult rmse(const PredictiveSummary& summary, const Eigen::MatrixXd& Y_true) {
  return rmse(summary.mean, Y_true);
}

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

ElppdResult elppd(const std::vector<Eigen::MatrixXd>& member_outputs, const Eigen::MatrixXd& Y_true,
                  const Eigen::VectorXd& noise_var) {
  if (member_outputs.empty()) throw InputShapeError("no member outputs");
  const Eigen::Index Q = Y_true.rows(), P = Y_true.cols();
  if (noise_var.size() != P || !(noise_var.array() > 0.0).all())
    throw InputShapeError("noise variance must be positive with one entry per output");
  for (const auto& m : member_outputs)
    if (m.rows() != Q || m.cols() != P) throw InputShapeError("member outputs differ in shape");

  const int K = static_cast<int>(member_outputs.size());
  const double logK = std::log(double(K));
  const Eigen::ArrayXd log_norm = -0.5 * (2.0 * std::numbers::pi * noise_var.array()).log();
  ElppdResult r;
  r.per_output = Eigen::VectorXd::Zero(P);
  Eigen::VectorXd joint_terms(K);
  Eigen::MatrixXd per_terms(K, P);
  for (Eigen::Index i = 0; i < Q; ++i) {
    for (int k = 0; k < K; ++k) {
      const Eigen::ArrayXd e = (Y_true.row(i) - member_outputs[k].row(i)).transpose().array();
      const Eigen::ArrayXd lp = log_norm - 0.5 * e.square() / noise_var.array();
      per_terms.row(k) = lp.transpose().matrix();
      joint_terms[k] = lp.sum();
    }
    r.joint += log_sum_exp(joint_terms) - logK;
    for (Eigen::Index j = 0; j < P; ++j) r.per_output[j] += log_sum_exp(per_terms.col(j)) - logK;
  }
  return r;
}

ElppdResult elppd(const PredictiveSummary& summary, const Eigen::MatrixXd& Y_true) {
  return elppd(summary.member_outputs, Y_true, summary.noise_var);
}

Eigen::VectorXd default_levels() { return Eigen::VectorXd::LinSpaced(99, 0.01, 0.99); }

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw InputShapeError("trapezoid needs equal lengths");
  double s = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

CalibrationCurve calibration_curve(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& sd,
                                   const Eigen::MatrixXd& Y_true, const Eigen::VectorXd& levels) {
  if (mean.rows() != Y_true.rows() || mean.cols() != Y_true.cols() || sd.rows() != mean.rows() ||
      sd.cols() != mean.cols())
    throw InputShapeError("calibration inputs differ in shape");
  for (Eigen::Index i = 0; i < levels.size(); ++i)
    if (!(levels[i] > 0.0 && levels[i] < 1.0) || (i && levels[i] <= levels[i - 1]))
      throw ConfigError("calibration levels must be increasing and inside (0, 1)");
  if (Y_true.rows() == 0) throw EvaluationError("calibration needs at least one test point");

  const Eigen::Index Q = Y_true.rows(), P = Y_true.cols(), L = levels.size();
  const boost::math::normal_distribution<double> unit;
  const Eigen::ArrayXXd abs_err = (Y_true - mean).array().abs();

  CalibrationCurve c;
  c.unreliable = Q < 10;
  c.expected.resize(L + 2);
  c.expected << 0.0, levels, 1.0;
  c.observed = Eigen::MatrixXd::Zero(L + 2, P);
  c.pooled_observed = Eigen::VectorXd::Zero(L + 2);
  c.observed.row(L + 1).setOnes();
  c.pooled_observed[L + 1] = 1.0;
  for (Eigen::Index l = 0; l < L; ++l) {
    const double z = boost::math::quantile(unit, 0.5 * (1.0 + levels[l]));
    Eigen::Index total = 0;
    for (Eigen::Index j = 0; j < P; ++j) {
      Eigen::Index hits = 0;
      for (Eigen::Index i = 0; i < Q; ++i) {
        // z * inf is inf, so an infinite std always covers.
        if (abs_err(i, j) <= z * sd(i, j)) ++hits;
      }
      c.observed(l + 1, j) = double(hits) / double(Q);
      total += hits;
    }
    c.pooled_observed[l + 1] = double(total) / double(Q * P);
  }
  c.area.resize(P);
  for (Eigen::Index j = 0; j < P; ++j)
    c.area[j] = trapezoid(c.expected, (c.observed.col(j) - c.expected).cwiseAbs());
  c.pooled_area = trapezoid(c.expected, (c.pooled_observed - c.expected).cwiseAbs());
  return c;
}

CalibrationCurve calibration_curve(const PredictiveSummary& summary, const Eigen::MatrixXd& Y_true,
                                   const Eigen::VectorXd& levels) {
  return calibration_curve(summary.mean, summary.total_std(), Y_true, levels);
}

BehaviorBand propagate_behavior_law(const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                                    const Eigen::VectorXd& strain, double a) {
  if (b.size() != c.size() || b.size() == 0)
    throw InputShapeError("need matching, non-empty b and c member values");
  if (strain.size() && !(strain.array() > 0.0).all())
    throw DomainError("behavior law strain grid must be > 0");
  const Eigen::Index K = b.size();
  BehaviorBand band;
  band.strain = strain;
  band.mean.resize(strain.size());
  band.std.resize(strain.size());
  Eigen::VectorXd s(K);
  for (Eigen::Index e = 0; e < strain.size(); ++e) {
    for (Eigen::Index k = 0; k < K; ++k) s[k] = a + b[k] * std::pow(strain[e], c[k]);
    band.mean[e] = s.mean();
    band.std[e] = K > 1 ? std::sqrt((s.array() - band.mean[e]).square().sum() / double(K - 1)) : 0.0;
  }
  band.lower = band.mean - kBandWidth * band.std;
  band.upper = band.mean + kBandWidth * band.std;
  return band;
}

EvaluationReport evaluate(const PredictiveSummary& summary, const Eigen::MatrixXd& Y_true,
                          const std::vector<std::string>& output_names,
                          const Eigen::VectorXd& levels) {
  if (summary.mean.rows() != Y_true.rows() || summary.mean.cols() != Y_true.cols())
    throw EvaluationError("prediction shape " + std::to_string(summary.mean.rows()) + "x" +
                          std::to_string(summary.mean.cols()) + " does not match targets " +
                          std::to_string(Y_true.rows()) + "x" + std::to_string(Y_true.cols()));
  if (Y_true.rows() < 2) throw EvaluationError("evaluation needs at least two test points");
  const Eigen::Index P = Y_true.cols();
  EvaluationReport r;
  r.output_names = output_names;
  if (r.output_names.empty())
    for (Eigen::Index j = 0; j < P; ++j) r.output_names.push_back("y" + std::to_string(j));

  const Eigen::RowVectorXd mu = Y_true.colwise().mean();
  r.target_scale =
      ((Y_true.rowwise() - mu).array().square().colwise().sum() / double(Y_true.rows() - 1))
          .sqrt()
          .transpose();
  for (Eigen::Index j = 0; j < P; ++j)
    if (!(r.target_scale[j] > 0.0)) r.target_scale[j] = 1.0;

  const Eigen::ArrayXd inv = r.target_scale.cwiseInverse().array();
  const auto standardize = [&](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    return (m.array().rowwise() * inv.transpose()).matrix();
  };
  std::vector<Eigen::MatrixXd> members_std;
  for (const auto& m : summary.member_outputs) members_std.push_back(standardize(m));
  const Eigen::MatrixXd Ys = standardize(Y_true);

  r.rmse_raw = rmse(summary.mean, Y_true);
  r.rmse_std = rmse(standardize(summary.mean), Ys);
  r.elppd_raw = elppd(summary.member_outputs, Y_true, summary.noise_var);
  r.elppd_std = elppd(members_std, Ys, summary.noise_var.cwiseProduct(inv.square().matrix()));
  // Coverage is invariant under per-output rescaling.
  r.calibration = calibration_curve(summary, Y_true, levels);
  return r;
}

EvaluationReport evaluate(const EnsembleModel& model, const Dataset& test,
                          const Eigen::VectorXd& levels) {
  if (test.input_dim() != model.spec.input_dim || test.output_dim() != model.spec.output_dim)
    throw EvaluationError("dataset has " + std::to_string(test.input_dim()) + " inputs / " +
                          std::to_string(test.output_dim()) + " outputs, model expects " +
                          std::to_string(model.spec.input_dim) + " / " +
                          std::to_string(model.spec.output_dim));
  const PredictiveSummary s = predict(model, test.raw_X());
  return evaluate(s, test.raw_Y(), model.output_names.empty() ? test.output_names : model.output_names,
                  levels);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

void write_metrics_csv(const std::string& path, const EvaluationReport& r) {
  std::ofstream out = open_out(path);
  out << "output,rmse,rmse_raw,miscalibration_area,elppd,elppd_raw\n";
  for (std::size_t j = 0; j < r.output_names.size(); ++j)
    out << r.output_names[j] << ',' << format_double(r.rmse_std.per_output[j]) << ','
        << format_double(r.rmse_raw.per_output[j]) << ',' << format_double(r.calibration.area[j])
        << ',' << format_double(r.elppd_std.per_output[j]) << ','
        << format_double(r.elppd_raw.per_output[j]) << '\n';
  out << "pooled," << format_double(r.rmse_std.pooled) << ',' << format_double(r.rmse_raw.pooled)
      << ',' << format_double(r.calibration.pooled_area) << ',' << format_double(r.elppd_std.joint)
      << ',' << format_double(r.elppd_raw.joint) << '\n';
}

void write_calibration_csv(const std::string& path, const CalibrationCurve& c,
                           const std::vector<std::string>& names) {
  std::ofstream out = open_out(path);
  out << "expected";
  for (Eigen::Index j = 0; j < c.observed.cols(); ++j)
    out << ',' << (j < Eigen::Index(names.size()) ? names[j] : "y" + std::to_string(j));
  out << ",pooled\n";
  for (Eigen::Index l = 0; l < c.expected.size(); ++l) {
    out << format_double(c.expected[l]);
    for (Eigen::Index j = 0; j < c.observed.cols(); ++j) out << ',' << format_double(c.observed(l, j));
    out << ',' << format_double(c.pooled_observed[l]) << '\n';
  }
}

void write_band_csv(const std::string& path, const BehaviorBand& band) {
  std::ofstream out = open_out(path);
  out << "strain,mean,std,lower,upper\n";
  for (Eigen::Index e = 0; e < band.strain.size(); ++e)
    out << format_double(band.strain[e]) << ',' << format_double(band.mean[e]) << ','
        << format_double(band.std[e]) << ',' << format_double(band.lower[e]) << ','
        << format_double(band.upper[e]) << '\n';
}

}  // namespace fpbnn
