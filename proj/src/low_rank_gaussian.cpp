#include "fpbnn/low_rank_gaussian.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/SVD>

#include "fpbnn/container.hpp"
#include "fpbnn/errors.hpp"
#include "fpbnn/rng.hpp"
#include "fpbnn/text.hpp"

namespace fpbnn {

Eigen::MatrixXd LowRankGaussian::covariance() const {
  const Eigen::MatrixXd VS = right_vectors * singular_values.asDiagonal();
  return VS * VS.transpose() / double(ensemble_size - 1);
}

Eigen::MatrixXd LowRankGaussian::pseudo_inverse() const {
  const Eigen::MatrixXd VSi = right_vectors * singular_values.cwiseInverse().asDiagonal();
  return double(ensemble_size - 1) * VSi * VSi.transpose();
}

LowRankGaussian build_anchor_prior(const Eigen::MatrixXd& W, double truncation_tol) {
  const Eigen::Index K = W.rows();
  if (K < 2) throw InsufficientEnsembleError("anchor prior needs K >= 2 members, got " + std::to_string(K));
  LowRankGaussian prior;
  prior.ensemble_size = static_cast<int>(K);
  prior.mean = W.colwise().mean().transpose();
  const Eigen::MatrixXd centered = W.rowwise() - prior.mean.transpose();

  // The thin SVD of the K x d matrix is taken through its transpose so the
  // expensive side stays d x K.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered.transpose(), Eigen::ComputeThinU);
  const Eigen::VectorXd& S = svd.singularValues();
  const double smax = S.size() ? S[0] : 0.0;
  Eigen::Index r = 0;
  while (r < S.size() && r < K - 1 && S[r] > truncation_tol * smax && S[r] > 0.0) ++r;
  prior.singular_values = S.head(r);
  prior.right_vectors = svd.matrixU().leftCols(r);
  return prior;
}

Eigen::MatrixXd stack_rows(std::span<const ParamVector> params) {
  if (params.empty()) return {};
  Eigen::MatrixXd W(static_cast<Eigen::Index>(params.size()), params.front().size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != W.cols() || !(params[k].spec() == params.front().spec()))
      throw InputShapeError("ensemble members have different architectures");
    W.row(static_cast<Eigen::Index>(k)) = params[k].values().transpose();
  }
  return W;
}

LowRankGaussian build_anchor_prior(std::span<const PretrainedMember> members, double truncation_tol) {
  if (members.size() < 2)
    throw InsufficientEnsembleError("anchor prior needs K >= 2 members, got " +
                                    std::to_string(members.size()));
  std::vector<ParamVector> weights;
  weights.reserve(members.size());
  for (const auto& m : members) {
    if (m.init_token != members.front().init_token)
      throw InsufficientEnsembleError(
          "ensemble members were not pre-trained from one shared initialization");
    weights.push_back(m.weights);
  }
  LowRankGaussian prior = build_anchor_prior(stack_rows(weights), truncation_tol);
  prior.spec_hash = members.front().weights.spec().hash();
  prior.init_token = members.front().init_token;
  return prior;
}

double log_density(const LowRankGaussian& prior, const Eigen::VectorXd& w) {
  if (w.size() != prior.dim()) throw InputShapeError("parameter vector length does not match prior");
  if (prior.rank() == 0) return 0.0;
  const Eigen::VectorXd proj =
      (prior.right_vectors.transpose() * (w - prior.mean)).cwiseQuotient(prior.singular_values);
  return -0.5 * double(prior.ensemble_size - 1) * proj.squaredNorm();
}

Eigen::VectorXd sample_with(const LowRankGaussian& prior, const Eigen::VectorXd& z) {
  if (z.size() != prior.rank()) throw InputShapeError("latent draw must have length r");
  if (prior.rank() == 0) return prior.mean;
  return prior.mean + prior.right_vectors * prior.singular_values.cwiseProduct(z) /
                          std::sqrt(double(prior.ensemble_size - 1));
}

Eigen::VectorXd sample(const LowRankGaussian& prior, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_with(prior, standard_normal_vector(prior.rank(), rng));
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t unhex(const std::string& s) { return std::stoull(s, nullptr, 16); }

}  // namespace

void write_anchor_prior(Container& c, const LowRankGaussian& prior, const std::string& prefix) {
  c.set_meta(prefix + "ensemble_size", std::to_string(prior.ensemble_size));
  c.set_meta(prefix + "dim", std::to_string(prior.dim()));
  c.set_meta(prefix + "rank", std::to_string(prior.rank()));
  c.set_meta(prefix + "spec_hash", hex(prior.spec_hash));
  c.set_meta(prefix + "init_token", hex(prior.init_token));
  c.add_array(prefix + "mean", prior.mean);
  c.add_array(prefix + "right_vectors", prior.right_vectors);
  c.add_array(prefix + "singular_values", prior.singular_values);
}

LowRankGaussian read_anchor_prior(const Container& c, const std::string& prefix) {
  LowRankGaussian p;
  p.ensemble_size = std::stoi(c.meta(prefix + "ensemble_size"));
  p.spec_hash = unhex(c.meta(prefix + "spec_hash"));
  p.init_token = unhex(c.meta(prefix + "init_token"));
  p.mean = c.array(prefix + "mean").col(0);
  p.right_vectors = c.array(prefix + "right_vectors");
  const auto& s = c.array(prefix + "singular_values");
  p.singular_values = s.size() ? Eigen::VectorXd(s.col(0)) : Eigen::VectorXd();
  if (p.right_vectors.rows() != p.dim() || p.right_vectors.cols() != p.rank())
    throw FormatError("anchor prior arrays have inconsistent shapes");
  if (std::stol(c.meta(prefix + "dim")) != p.dim()) throw FormatError("anchor prior dim mismatch");
  return p;
}

void save_anchor_prior(const std::string& path, const LowRankGaussian& prior) {
  Container c("anchor-prior");
  write_anchor_prior(c, prior, "");
  c.write(path);
}

LowRankGaussian load_anchor_prior(const std::string& path) {
  return read_anchor_prior(Container::read(path, "anchor-prior"), "");
}

}  // namespace fpbnn
