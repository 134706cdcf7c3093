#include "fpbnn/functional_prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>

#include "fpbnn/errors.hpp"
#include "fpbnn/rng.hpp"

namespace fpbnn {

MeanFunction MeanFunction::zero() { return {}; }

MeanFunction MeanFunction::linear(double slope, int feature) {
  MeanFunction m;
  m.kind = Kind::Linear;
  m.slope = slope;
  m.feature = feature;
  return m;
}

MeanFunction MeanFunction::random_cubic(double scale, int feature) {
  MeanFunction m;
  m.kind = Kind::RandomCubic;
  m.cubic_scale = scale;
  m.feature = feature;
  return m;
}

MeanFunction MeanFunction::linear_in_feature(double theta, int feature, double feature_scale,
                                             double feature_offset) {
  MeanFunction m;
  m.kind = Kind::LinearInFeature;
  m.theta = theta;
  m.feature = feature;
  m.feature_scale = feature_scale;
  m.feature_offset = feature_offset;
  return m;
}

double MeanFunction::operator()(const Eigen::VectorXd& x, double u) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Linear:
      return slope * x[feature];
    case Kind::RandomCubic:
      return cubic_scale * u * x[feature] * x[feature] * x[feature];
    case Kind::LinearInFeature:
      return theta * (feature_scale * x[feature] + feature_offset);
  }
  return 0.0;
}

double MeanFunction::expected(const Eigen::VectorXd& x) const {
  return kind == Kind::RandomCubic ? 0.0 : (*this)(x);
}

std::string to_string(MeanFunction::Kind kind) {
  switch (kind) {
    case MeanFunction::Kind::Zero:
      return "zero";
    case MeanFunction::Kind::Linear:
      return "linear";
    case MeanFunction::Kind::RandomCubic:
      return "random_cubic";
    case MeanFunction::Kind::LinearInFeature:
      return "linear_in_feature";
  }
  return "zero";
}

MeanFunction::Kind parse_mean_kind(const std::string& name) {
  if (name == "zero") return MeanFunction::Kind::Zero;
  if (name == "linear") return MeanFunction::Kind::Linear;
  if (name == "random_cubic") return MeanFunction::Kind::RandomCubic;
  if (name == "linear_in_feature") return MeanFunction::Kind::LinearInFeature;
  throw ConfigError("unknown mean kind '" + name + "'");
}

void FunctionalPrior::validate(int input_dim) const {
  if (!(kernel_amp >= 0.0)) throw InvalidPriorError("kernel amplitude must be >= 0");
  if (!(lengthscale > 0.0)) throw InvalidPriorError("lengthscale must be > 0");
  if (features.empty()) throw InvalidPriorError("feature subset must be non-empty");
  for (int f : features)
    if (f < 0 || f >= input_dim) throw InvalidPriorError("feature index out of range");
  if (mean.kind != MeanFunction::Kind::Zero && (mean.feature < 0 || mean.feature >= input_dim))
    throw InvalidPriorError("mean feature index out of range");
  if (bounds.lower && bounds.upper && *bounds.lower > *bounds.upper)
    throw InvalidPriorError("lower bound exceeds upper bound");
}

double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& x2, double k0, double L,
                  const std::vector<int>& features) {
  if (!(L > 0.0)) throw InvalidPriorError("lengthscale must be > 0");
  double sq = 0.0;
  for (int f : features) {
    const double d = x[f] - x2[f];
    sq += d * d;
  }
  return k0 * std::exp(-sq / (2.0 * L * L));
}

double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& x2, const FunctionalPrior& prior) {
  return rbf_kernel(x, x2, prior.kernel_amp, prior.lengthscale, prior.features);
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& points, const FunctionalPrior& prior) {
  const Eigen::Index M = points.rows();
  if (!(prior.lengthscale > 0.0)) throw InvalidPriorError("lengthscale must be > 0");
  const double inv = 1.0 / (2.0 * prior.lengthscale * prior.lengthscale);
  Eigen::MatrixXd K(M, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    K(i, i) = prior.kernel_amp;
    for (Eigen::Index j = 0; j < i; ++j) {
      double sq = 0.0;
      for (int f : prior.features) {
        const double d = points(i, f) - points(j, f);
        sq += d * d;
      }
      K(i, j) = prior.kernel_amp * std::exp(-sq * inv);
      K(j, i) = K(i, j);
    }
  }
  return K;
}

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& gram, double scale) {
  const Eigen::Index M = gram.rows();
  for (double eps = 1e-8 * scale; eps <= 1e-4 * scale * (1.0 + 1e-12); eps *= 2.0) {
    Eigen::MatrixXd A = gram;
    A.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd Lf = llt.matrixL();
      if (Lf.allFinite() && (Lf.diagonal().array() > 0.0).all()) return Lf;
    }
  }
  throw FactorizationError("Gram matrix of size " + std::to_string(M) +
                           " not positive definite after maximum jitter");
}

Eigen::MatrixXd lhs_standard_normal(int M, int dim, std::uint64_t seed) {
  if (M < 1) throw ConfigError("LHS needs M >= 1");
  Rng rng = make_rng(seed);
  const boost::math::normal_distribution<double> unit;
  Eigen::MatrixXd out(M, dim);
  std::vector<int> perm(M);
  for (int j = 0; j < dim; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with our own uniform draws keeps the result library-independent.
    for (int i = M - 1; i > 0; --i) {
      const int k = static_cast<int>(open_uniform(rng) * (i + 1));
      std::swap(perm[i], perm[std::min(k, i)]);
    }
    for (int i = 0; i < M; ++i) {
      const double u = (perm[i] + open_uniform(rng)) / M;
      out(i, j) = boost::math::quantile(unit, u);
    }
  }
  return out;
}

namespace {

Eigen::VectorXd sample_channel(const FunctionalPrior& prior, const Eigen::MatrixXd& points,
                               Rng& rng) {
  const Eigen::Index M = points.rows();
  const double u = prior.mean.is_random() ? 2.0 * open_uniform(rng) - 1.0 : 0.0;
  Eigen::VectorXd values(M);
  for (Eigen::Index i = 0; i < M; ++i) values[i] = prior.mean(points.row(i).transpose(), u);
  if (prior.kernel_amp > 0.0) {
    const Eigen::MatrixXd Lf = jittered_cholesky(gram_matrix(points, prior), prior.kernel_amp);
    values += Lf * standard_normal_vector(M, rng);
  }
  return values;
}

}  // namespace

PriorRealization sample_realization(const FunctionalPrior& prior, const Eigen::MatrixXd& points,
                                    std::uint64_t seed) {
  return sample_realization(MultiOutputPrior{prior}, points, seed);
}

PriorRealization sample_realization(const MultiOutputPrior& priors, const Eigen::MatrixXd& points,
                                    std::uint64_t seed) {
  if (priors.empty()) throw InvalidPriorError("no output priors given");
  PriorRealization r;
  r.points = points;
  r.values.resize(points.rows(), static_cast<Eigen::Index>(priors.size()));
  std::vector<OutputBounds> bounds;
  for (std::size_t j = 0; j < priors.size(); ++j) {
    priors[j].validate(static_cast<int>(points.cols()));
    Rng rng = make_rng(splitmix64(seed + j));
    r.values.col(static_cast<Eigen::Index>(j)) = sample_channel(priors[j], points, rng);
    bounds.push_back(priors[j].bounds);
  }
  if (!r.values.allFinite()) throw InvalidPriorError("non-finite prior realization");
  return constrain_realization(std::move(r), bounds);
}

PriorRealization constrain_realization(PriorRealization realization,
                                       const std::vector<OutputBounds>& bounds) {
  if (bounds.empty()) return realization;
  if (static_cast<Eigen::Index>(bounds.size()) != realization.values.cols())
    throw InputShapeError("one bound set per output channel required");
  for (Eigen::Index j = 0; j < realization.values.cols(); ++j) {
    const auto& b = bounds[static_cast<std::size_t>(j)];
    if (b.lower) realization.values.col(j) = realization.values.col(j).cwiseMax(*b.lower);
    if (b.upper) realization.values.col(j) = realization.values.col(j).cwiseMin(*b.upper);
  }
  return realization;
}

double fit_linear_mean(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int feature,
                       double feature_scale, double feature_offset) {
  if (X.rows() != y.size()) throw InputShapeError("X and y have different lengths");
  if (X.rows() < 2) throw DegenerateFitError("linear mean fit needs at least 2 points");
  if (feature < 0 || feature >= X.cols()) throw InputShapeError("feature index out of range");
  const Eigen::VectorXd f = (feature_scale * X.col(feature)).array() + feature_offset;
  const double spread = f.maxCoeff() - f.minCoeff();
  if (!(spread > 0.0)) throw DegenerateFitError("feature has zero variance");
  return f.dot(y) / f.squaredNorm();
}

}  // namespace fpbnn
