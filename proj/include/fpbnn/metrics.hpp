#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpbnn/dataset.hpp"
#include "fpbnn/prediction.hpp"

namespace fpbnn {

struct RmseResult {
  Eigen::VectorXd per_output;
  double pooled = 0.0;
};

/// sqrt(sum_i (y_i - mean_i)^2), per output column and over all columns.
RmseResult rmse(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& Y_true);
RmseResult rmse(const PredictiveSummary& summary, const Eigen::MatrixXd& Y_true);

struct ElppdResult {
  double joint = 0.0;           // multivariate density with diagonal noise
  Eigen::VectorXd per_output;   // each output's marginal mixture
};

/// sum_i log((1/K) sum_k N(y_i; f_k(x_i), diag(noise_var))), log-sum-exp
/// over members.
ElppdResult elppd(const std::vector<Eigen::MatrixXd>& member_outputs, const Eigen::MatrixXd& Y_true,
                  const Eigen::VectorXd& noise_var);
ElppdResult elppd(const PredictiveSummary& summary, const Eigen::MatrixXd& Y_true);

/// p = 0.01 .. 0.99.
Eigen::VectorXd default_levels();

struct CalibrationCurve {
  Eigen::VectorXd expected;  // 0, levels..., 1
  Eigen::MatrixXd observed;  // rows match expected, one column per output
  Eigen::VectorXd pooled_observed;
  Eigen::VectorXd area;      // per output
  double pooled_area = 0.0;
  /// Fewer than 10 test points.
  bool unreliable = false;
};

/// Fraction of points with |y - mean| <= z_{(1+p)/2} * std for each level p;
/// the area is the trapezoidal integral of |observed - expected| over [0, 1].
CalibrationCurve calibration_curve(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& sd,
                                   const Eigen::MatrixXd& Y_true,
                                   const Eigen::VectorXd& levels = default_levels());
/// Uses the total (epistemic + noise) standard deviation.
CalibrationCurve calibration_curve(const PredictiveSummary& summary, const Eigen::MatrixXd& Y_true,
                                   const Eigen::VectorXd& levels = default_levels());

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// sigma = a + b * eps^c per member, summarized over members.
struct BehaviorBand {
  Eigen::VectorXd strain;
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  Eigen::VectorXd lower;  // mean - 2 std
  Eigen::VectorXd upper;  // mean + 2 std
};

constexpr double kBandWidth = 2.0;

BehaviorBand propagate_behavior_law(const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                                    const Eigen::VectorXd& strain, double a);

/// Metrics for one model on one labelled dataset. Standardized values divide
/// each output by the standard deviation of the test targets; raw values are
/// in physical units.
struct EvaluationReport {
  std::vector<std::string> output_names;
  RmseResult rmse_std;
  RmseResult rmse_raw;
  ElppdResult elppd_std;
  ElppdResult elppd_raw;
  CalibrationCurve calibration;
  Eigen::VectorXd target_scale;
};

EvaluationReport evaluate(const PredictiveSummary& summary, const Eigen::MatrixXd& Y_true,
                          const std::vector<std::string>& output_names = {},
                          const Eigen::VectorXd& levels = default_levels());
EvaluationReport evaluate(const EnsembleModel& model, const Dataset& test,
                          const Eigen::VectorXd& levels = default_levels());

/// Columns output,rmse,rmse_raw,miscalibration_area,elppd,elppd_raw; one row
/// per output and a final "pooled" row.
void write_metrics_csv(const std::string& path, const EvaluationReport& report);
/// Columns expected, one observed column per output, pooled.
void write_calibration_csv(const std::string& path, const CalibrationCurve& curve,
                           const std::vector<std::string>& output_names);
/// Columns strain,mean,std,lower,upper.
void write_band_csv(const std::string& path, const BehaviorBand& band);

}  // namespace fpbnn
