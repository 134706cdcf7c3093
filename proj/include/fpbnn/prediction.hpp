#pragma once

#include <vector>

#include <Eigen/Core>

#include "fpbnn/ensemble_model.hpp"

namespace fpbnn {

/// Ensemble predictive moments at Q query points, in physical output units.
struct PredictiveSummary {
  Eigen::MatrixXd mean;                        // Q x out
  std::vector<Eigen::MatrixXd> epistemic_cov;  // Q entries, out x out
  std::vector<Eigen::MatrixXd> total_cov;      // epistemic + diag(noise_var)
  std::vector<Eigen::MatrixXd> member_outputs; // K entries, Q x out
  Eigen::VectorXd noise_var;
  /// Set when K = 1: epistemic covariance is reported as zero.
  bool single_member = false;

  Eigen::Index points() const { return mean.rows(); }
  Eigen::Index outputs() const { return mean.cols(); }
  int members() const { return static_cast<int>(member_outputs.size()); }
  /// Square roots of the diagonals, Q x out.
  Eigen::MatrixXd epistemic_std() const;
  Eigen::MatrixXd total_std() const;
};

/// Mean and unbiased covariance across the members' outputs.
PredictiveSummary summarize_members(std::vector<Eigen::MatrixXd> member_outputs,
                                    const Eigen::VectorXd& noise_var);

/// X_query is in physical input units; scaling is taken from the model.
PredictiveSummary predict(const EnsembleModel& model, const Eigen::MatrixXd& X_query);

}  // namespace fpbnn
