#include "fpbnn/benchmarks.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "fpbnn/errors.hpp"
#include "fpbnn/rng.hpp"
#include "fpbnn/rve_constants.hpp"

namespace fpbnn {

void Benchmark1DConfig::validate() const {
  if (n_region1 < 0 || n_region2 < 0 || n_region1 + n_region2 == 0)
    throw ConfigError("1d benchmark needs a positive number of points");
  if (!(region1_lo < region1_hi) || !(region2_lo < region2_hi))
    throw ConfigError("1d benchmark regions must have lo < hi");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
}

double benchmark_1d_truth(double x) { return 1.5 * (x - 0.2) + std::sin(8.0 * (x - 0.2)); }

RawSamples gen_1d_samples(const Benchmark1DConfig& config) {
  config.validate();
  Rng rng = make_rng(derive_seed(config.seed, Stream::Dataset));
  const int n = config.n_region1 + config.n_region2;
  RawSamples s{Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, 1)};
  for (int i = 0; i < n; ++i) {
    const bool first = i < config.n_region1;
    const double lo = first ? config.region1_lo : config.region2_lo;
    const double hi = first ? config.region1_hi : config.region2_hi;
    s.X(i, 0) = lo + (hi - lo) * open_uniform(rng);
  }
  for (int i = 0; i < n; ++i)
    s.Y(i, 0) = benchmark_1d_truth(s.X(i, 0)) + config.noise_std * standard_normal(rng);
  return s;
}

Dataset gen_1d_dataset(const Benchmark1DConfig& config) {
  if (!(config.noise_std > 0.0)) throw ConfigError("noise_std must be > 0 for a dataset");
  RawSamples s = gen_1d_samples(config);
  Dataset d = Dataset::from_raw(s.X, s.Y, Eigen::VectorXd::Constant(1, config.noise_std * config.noise_std),
                                AffineScaling::identity(1), AffineScaling::identity(1));
  d.input_names = {"x"};
  d.output_names = {"y"};
  return d;
}

std::string SplitDistribution::describe() const {
  if (kind == Kind::Uniform) return "uniform";
  char buf[64];
  std::snprintf(buf, sizeof buf, "beta(%g,%g)", alpha, beta);
  return buf;
}

SyntheticRVEConfig::SyntheticRVEConfig() {
  input_lo = Eigen::Vector4d(rve::kVfLo, rve::kEfLo, rve::kBmLo, rve::kCmLo);
  input_hi = Eigen::Vector4d(rve::kVfHi, rve::kEfHi, rve::kBmHi, rve::kCmHi);
  cov = Eigen::Map<const Eigen::VectorXd>(rve::kCoV, 5);
}

void SyntheticRVEConfig::validate() const {
  if (input_names.size() != 4 || input_lo.size() != 4 || input_hi.size() != 4)
    throw ConfigError("synthetic benchmark has exactly four inputs");
  if (output_names.size() != 5 || cov.size() != 5)
    throw ConfigError("synthetic benchmark has exactly five outputs");
  if (!(cov.array() > 0.0).all()) throw ConfigError("coefficients of variation must be > 0");
  if (!(input_lo.array() < input_hi.array()).all()) throw ConfigError("input ranges must have lo < hi");
  for (const auto* d : {&test_distribution, &ind_distribution, &ood_distribution})
    if (d->kind == SplitDistribution::Kind::Beta && !(d->alpha > 0.0 && d->beta > 0.0))
      throw ConfigError("beta parameters must be > 0");
  if (n_test < 2 || n_train < 1) throw ConfigError("split sizes must be positive");
}

Eigen::VectorXd synthetic_rve_oracle(const Eigen::VectorXd& x) {
  if (x.size() != 4) throw InputShapeError("oracle expects (vf, E_f, b_m, c_m)");
  const double vf = x[0], Ef = x[1], bm = x[2], cm = x[3];
  const double tol = 1e-12;
  if (vf < rve::kVfLo - tol || vf > rve::kVfHi + tol || Ef < rve::kEfLo - tol ||
      Ef > rve::kEfHi + tol || bm < rve::kBmLo - tol || bm > rve::kBmHi + tol ||
      cm < rve::kCmLo - tol || cm > rve::kCmHi + tol || !x.allFinite())
    throw DomainError("oracle input outside the declared ranges");

  const double Em = rve::kMatrixModulus;
  const double ratio = Ef / Em;
  const double eta = (ratio - 1.0) / (ratio + rve::kHalpinTsaiXi);
  Eigen::VectorXd y(5);
  y[0] = bm * (1.0 + rve::kBHardeningGain * vf * Ef / (Ef + 2.0 * Em));
  y[1] = cm * (1.0 - rve::kCVfDrop * vf) * (1.0 + rve::kCBmCoupling * (bm - 400.0) / 200.0);
  y[2] = Em * (1.0 + rve::kHalpinTsaiXi * eta * vf) / (1.0 - eta * vf);
  y[3] = rve::kMatrixPoisson * (1.0 - vf) + rve::kFibrePoisson * vf;
  const double t = rve::kP0 + rve::kPVf * (vf - 0.25) / 0.25 + rve::kPEf * (Ef - 300.0) / 100.0 +
                   rve::kPBm * (bm - 400.0) / 200.0 + rve::kPCm * (cm - 0.4) / 0.2;
  y[4] = 1.0 / (1.0 + std::exp(-t));
  return y;
}

Eigen::MatrixXd synthetic_rve_oracle(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Y(X.rows(), 5);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    Y.row(i) = synthetic_rve_oracle(Eigen::VectorXd(X.row(i).transpose())).transpose();
  return Y;
}

Eigen::MatrixXd sample_inputs(const SplitDistribution& dist, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Eigen::MatrixXd X(n, lo.size());
  for (int i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < lo.size(); ++j) {
      double u = open_uniform(rng);
      if (dist.kind == SplitDistribution::Kind::Beta)
        u = boost::math::ibeta_inv(dist.alpha, dist.beta, u);
      X(i, j) = lo[j] + (hi[j] - lo[j]) * u;
    }
  return X;
}

Eigen::MatrixXd noisy_outputs(const Eigen::MatrixXd& noiseless, const Eigen::VectorXd& cov,
                              std::uint64_t seed) {
  if (cov.size() != noiseless.cols()) throw InputShapeError("one CoV per output required");
  Rng rng = make_rng(seed);
  Eigen::MatrixXd Y = noiseless;
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    for (Eigen::Index j = 0; j < Y.cols(); ++j) Y(i, j) *= 1.0 + cov[j] * standard_normal(rng);
  return Y;
}

namespace {

constexpr int kReferencePoints = 2001;
constexpr std::uint64_t kReferenceIndex = 99;

double median(Eigen::VectorXd v) {
  std::sort(v.data(), v.data() + v.size());
  const Eigen::Index n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ReferenceOutputStats reference_output_stats(const SyntheticRVEConfig& config) {
  const Eigen::MatrixXd X =
      sample_inputs(SplitDistribution::uniform(), config.input_lo, config.input_hi, kReferencePoints,
                    derive_seed(config.seed, Stream::Dataset, kReferenceIndex));
  const Eigen::MatrixXd Y = synthetic_rve_oracle(X);
  ReferenceOutputStats r{Eigen::VectorXd(Y.cols()), Eigen::VectorXd(Y.cols())};
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    r.median[j] = median(Y.col(j));
    const double mu = Y.col(j).mean();
    r.std_dev[j] = std::sqrt((Y.col(j).array() - mu).square().sum() / double(Y.rows() - 1));
  }
  return r;
}

MaterialsDatasets gen_materials_datasets(const SyntheticRVEConfig& config) {
  config.validate();
  const ReferenceOutputStats ref = reference_output_stats(config);
  const Eigen::VectorXd noise_var = config.cov.cwiseProduct(ref.median).cwiseAbs2();
  const AffineScaling in = AffineScaling::to_unit_box(config.input_lo, config.input_hi);
  // Unit spread without centering, so zero (the positivity bound and the
  // intercept-free prior mean) stays at zero.
  const AffineScaling out = AffineScaling::divide_by(ref.std_dev);

  const auto make = [&](const SplitDistribution& dist, int n, std::uint64_t index) {
    const Eigen::MatrixXd X = sample_inputs(dist, config.input_lo, config.input_hi, n,
                                            derive_seed(config.seed, Stream::Dataset, index));
    const Eigen::MatrixXd Y = noisy_outputs(synthetic_rve_oracle(X), config.cov,
                                            derive_seed(config.seed, Stream::Dataset, index + 10));
    Dataset d = Dataset::from_raw(X, Y, noise_var, in, out);
    d.input_names = config.input_names;
    d.output_names = config.output_names;
    return d;
  };
  return {make(config.ind_distribution, config.n_train, 1),
          make(config.ood_distribution, config.n_train, 2),
          make(config.test_distribution, config.n_test, 0)};
}

MaterialsPrior build_materials_prior(const Dataset& train, double threshold, int vf_feature) {
  if (train.size() < 2) throw DegenerateFitError("materials prior needs training data");
  if (vf_feature < 0 || vf_feature >= train.input_dim())
    throw InputShapeError("volume-fraction feature index out of range");
  const Eigen::Index P = train.output_dim(), D = train.input_dim();
  MaterialsPrior out;
  out.mi.resize(P, D);
  for (Eigen::Index j = 0; j < P; ++j) {
    FunctionalPrior p;
    p.kernel_amp = kMaterialsKernelAmp;
    p.lengthscale = kMaterialsLengthscale;
    p.bounds.lower = 0.0;
    p.features.clear();
    for (Eigen::Index i = 0; i < D; ++i) {
      out.mi(j, i) = mutual_information(train.X.col(i), train.Y.col(j)).nats;
      if (out.mi(j, i) >= threshold) p.features.push_back(static_cast<int>(i));
    }
    out.fell_back.push_back(p.features.empty());
    if (p.features.empty()) p.features = {vf_feature};
    // The mean is linear in physical vf; X holds the scaled value.
    const double fs = train.input_scaling.scale[vf_feature];
    const double fo = train.input_scaling.shift[vf_feature];
    const double theta = fit_linear_mean(train.X, train.Y.col(j), vf_feature, fs, fo);
    p.mean = MeanFunction::linear_in_feature(theta, vf_feature, fs, fo);
    out.priors.push_back(std::move(p));
  }
  return out;
}

}  // namespace fpbnn
