#include "fpbnn/prediction.hpp"

#include "fpbnn/errors.hpp"

namespace fpbnn {

Eigen::MatrixXd PredictiveSummary::epistemic_std() const {
  Eigen::MatrixXd s(points(), outputs());
  for (Eigen::Index q = 0; q < points(); ++q)
    s.row(q) = epistemic_cov[q].diagonal().cwiseMax(0.0).cwiseSqrt().transpose();
  return s;
}

Eigen::MatrixXd PredictiveSummary::total_std() const {
  Eigen::MatrixXd s(points(), outputs());
  for (Eigen::Index q = 0; q < points(); ++q)
    s.row(q) = total_cov[q].diagonal().cwiseMax(0.0).cwiseSqrt().transpose();
  return s;
}

PredictiveSummary summarize_members(std::vector<Eigen::MatrixXd> member_outputs,
                                    const Eigen::VectorXd& noise_var) {
  if (member_outputs.empty()) throw InputShapeError("no member outputs");
  const Eigen::Index Q = member_outputs.front().rows();
  const Eigen::Index P = member_outputs.front().cols();
  for (const auto& m : member_outputs)
    if (m.rows() != Q || m.cols() != P) throw InputShapeError("member outputs differ in shape");
  if (noise_var.size() != P) throw InputShapeError("noise variance must have one entry per output");

  const int K = static_cast<int>(member_outputs.size());
  PredictiveSummary s;
  s.noise_var = noise_var;
  s.single_member = K == 1;
  s.mean = Eigen::MatrixXd::Zero(Q, P);
  for (const auto& m : member_outputs) s.mean += m;
  s.mean /= K;

  s.epistemic_cov.assign(Q, Eigen::MatrixXd::Zero(P, P));
  s.total_cov.resize(Q);
  Eigen::MatrixXd dev(K, P);
  for (Eigen::Index q = 0; q < Q; ++q) {
    if (K > 1) {
      for (int k = 0; k < K; ++k) dev.row(k) = member_outputs[k].row(q) - s.mean.row(q);
      s.epistemic_cov[q] = dev.transpose() * dev / double(K - 1);
    }
    s.total_cov[q] = s.epistemic_cov[q];
    s.total_cov[q].diagonal() += noise_var;
  }
  s.member_outputs = std::move(member_outputs);
  return s;
}

PredictiveSummary predict(const EnsembleModel& model, const Eigen::MatrixXd& X_query) {
  model.validate();
  if (X_query.cols() != model.spec.input_dim)
    throw InputShapeError("query inputs have " + std::to_string(X_query.cols()) +
                          " columns, model expects " + std::to_string(model.spec.input_dim));
  const Eigen::MatrixXd Xs = model.input_scaling.apply(X_query);
  std::vector<Eigen::MatrixXd> outs;
  outs.reserve(model.members.size());
  for (const auto& m : model.members) outs.push_back(model.output_scaling.invert(forward_batch(m, Xs)));
  const Eigen::VectorXd noise_raw =
      model.noise_var.cwiseProduct(model.output_scaling.scale.cwiseAbs2());
  return summarize_members(std::move(outs), noise_raw);
}

}  // namespace fpbnn
