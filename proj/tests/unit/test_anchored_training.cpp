#include <cmath>
#include <set>

#include <Eigen/Cholesky>

#include "doctest.h"

#include "fpbnn/anchored_training.hpp"
#include "fpbnn/errors.hpp"
#include "fpbnn/rng.hpp"

using namespace fpbnn;

namespace {

Dataset make_data(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double noise_var) {
  return Dataset::from_raw(X, Y, Eigen::VectorXd::Constant(Y.cols(), noise_var),
                           AffineScaling::identity(X.cols()), AffineScaling::identity(Y.cols()));
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

}  // namespace

TEST_CASE("data fit term weights residuals by the noise precision") {
  ParamVector p(NetworkSpec(1, {}, 1));
  p.values() << 1.0, 0.0;
  Eigen::MatrixXd X(1, 1), Y(1, 1);
  X << 0.5;
  Y << 0.7;
  CHECK(data_fit_term(p, make_data(X, Y, 0.01)) == doctest::Approx(4.0));
  // unit noise is the plain residual sum of squares
  Eigen::MatrixXd X3(3, 1), Y3(3, 1);
  X3 << 0, 1, 2;
  Y3 << 0.1, 1.0, 1.7;
  CHECK(data_fit_term(p, make_data(X3, Y3, 1.0)) == doctest::Approx(0.01 + 0.09));
  CHECK(data_fit_term(p, make_data(X3, X3, 0.3)) == 0.0);
}

TEST_CASE("correlated penalty: zero at the anchor and off the span, K-1 per singular step") {
  const LowRankGaussian prior = build_anchor_prior(random_matrix(4, 10, 1));
  const Eigen::VectorXd anchor = random_matrix(10, 1, 2).col(0);
  CHECK(correlated_reg_term(anchor, anchor, prior) == 0.0);
  Eigen::VectorXd v = random_matrix(10, 1, 3).col(0);
  v -= prior.right_vectors * (prior.right_vectors.transpose() * v);
  CHECK(correlated_reg_term(anchor + v, anchor, prior) < 1e-20);
  const Eigen::VectorXd step = prior.right_vectors.col(0) * prior.singular_values[0];
  CHECK(correlated_reg_term(anchor + step, anchor, prior) == doctest::Approx(3.0));
  CHECK_THROWS_AS(correlated_reg_term(anchor.head(3), anchor, prior), InputShapeError);
}

TEST_CASE("factorized penalty: scalar and per-layer forms agree") {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(4), w(4);
  w << 0.3, 0.4, 0.0, 0.0;
  CHECK(factorized_reg_term(a, a, 2.0) == 0.0);
  CHECK(factorized_reg_term(w, a, 2.0) == doctest::Approx(0.5));

  const NetworkSpec spec(2, {3}, 1);
  const Eigen::VectorXd prec = layer_precision(spec, {0.5, 0.5}, {0.5, 0.5});
  CHECK(prec.size() == param_count(spec));
  CHECK((prec.array() == 2.0).all());
  const Eigen::VectorXd anchor = random_matrix(spec.param_count(), 1, 4).col(0);
  const Eigen::VectorXd x = random_matrix(spec.param_count(), 1, 5).col(0);
  CHECK(factorized_reg_term(x, anchor, prec) == doctest::Approx(factorized_reg_term(x, anchor, 2.0)));

  // layer variances land on the right slots
  const Eigen::VectorXd p2 = layer_precision(spec, {0.25, 1.0}, {0.5, 0.1});
  const auto layout = parameter_layout(spec);
  CHECK(p2[layout[0].kernel_offset] == doctest::Approx(4.0));
  CHECK(p2[layout[0].bias_offset] == doctest::Approx(2.0));
  CHECK(p2[layout[1].kernel_offset] == doctest::Approx(1.0));
  CHECK(p2[layout[1].bias_offset] == doctest::Approx(10.0));
  CHECK_THROWS_AS(layer_precision(spec, {0.0, 1.0}, {1.0, 1.0}), ConfigError);
}

TEST_CASE("likelihood resampling has the noise mean and variance") {
  Eigen::MatrixXd X(1, 1), Y(1, 2);
  X << 0.0;
  Y << 1.5, -2.0;
  Dataset d = make_data(X, Y, 0.04);
  d.noise_var << 0.04, 0.25;
  const int R = 10000;
  Eigen::MatrixXd draws(R, 2);
  for (int r = 0; r < R; ++r) draws.row(r) = resample_likelihood(d, derive_seed(3, Stream::Resample, r)).Y.row(0);
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  for (int j = 0; j < 2; ++j) {
    const double sd = std::sqrt(d.noise_var[j]);
    CHECK(std::abs(mean[j] - Y(0, j)) < 3 * sd / 100);
    const double var = (draws.col(j).array() - mean[j]).square().sum() / (R - 1);
    CHECK(var == doctest::Approx(d.noise_var[j]).epsilon(0.05));
  }
  CHECK(resample_likelihood(d, 1).X == d.X);
  CHECK(resample_likelihood(d, 1).Y != resample_likelihood(d, 2).Y);
  // zero noise is rejected at construction; the limit is checked instead
  CHECK((resample_likelihood(make_data(X, Y, 1e-30), 1).Y - Y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(make_data(X, Y, 0.0), ConfigError);
}

TEST_CASE("bootstrap keeps about 63% distinct rows") {
  const int N = 500;
  Eigen::MatrixXd X = Eigen::VectorXd::LinSpaced(N, 0, N - 1);
  const Dataset d = make_data(X, X, 0.1);
  double frac = 0;
  const int R = 200;
  for (int r = 0; r < R; ++r) {
    const Dataset b = resample_bootstrap(d, derive_seed(7, Stream::Resample, r));
    CHECK(b.size() == N);
    std::set<double> seen(b.X.data(), b.X.data() + N);
    frac += double(seen.size()) / N;
    CHECK(b.X == b.Y);  // rows stay paired
  }
  CHECK(frac / R == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.01));
  CHECK(resample_bootstrap(d, 5).X == resample_bootstrap(d, 5).X);
  const Dataset one = d.head(1);
  CHECK(resample_bootstrap(one, 9).X == one.X);
}

TEST_CASE("objective gradient matches finite differences for every regularizer") {
  const NetworkSpec spec(2, {4, 3}, 2);
  const ParamVector w = perturb(he_init(spec, 1), 0.2, 2);
  const Dataset d = make_data(random_matrix(7, 2, 3), random_matrix(7, 2, 4), 0.3);
  std::vector<ParamVector> members;
  for (int k = 0; k < 5; ++k) members.push_back(perturb(w, 0.1, 10 + k));
  const LowRankGaussian prior = build_anchor_prior(stack_rows(members));
  const Eigen::VectorXd anchor = members[0].values();
  const Eigen::VectorXd prec = Eigen::VectorXd::LinSpaced(spec.param_count(), 0.5, 3.0);

  const std::vector<Regularizer> regs = {NoRegularizer{}, FactorizedRegularizer{anchor, prec},
                                         CorrelatedRegularizer{anchor, &prior}};
  for (const auto& reg : regs) {
    const ObjectiveValue g = evaluate_objective(w, d, reg);
    CHECK(g.total == doctest::Approx(g.data_fit + g.reg));
    double worst = 0.0;
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      ParamVector a = w, b = w;
      a.values()[j] += h;
      b.values()[j] -= h;
      const double fd = (evaluate_objective(a, d, reg).total - evaluate_objective(b, d, reg).total) / (2 * h);
      worst = std::max(worst, std::abs(fd - g.gradient[j]) / std::max(1.0, std::abs(fd)));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("with no data a correlated member stays at its anchor") {
  const NetworkSpec spec(1, {5}, 1);
  std::vector<ParamVector> members;
  for (int k = 0; k < 4; ++k) members.push_back(perturb(he_init(spec, 1), 0.1, k));
  const LowRankGaussian prior = build_anchor_prior(stack_rows(members));
  const Dataset empty = make_data(Eigen::MatrixXd(0, 1), Eigen::MatrixXd(0, 1), 0.1);
  AdamConfig cfg;
  cfg.epochs = 50;
  const MemberFit f = train_member(members[2], empty, CorrelatedRegularizer{members[2].values(), &prior}, cfg);
  CHECK(correlated_reg_term(f.weights.values(), members[2].values(), prior) < 1e-12);
}

TEST_CASE("vanilla training interpolates noise-free data") {
  const NetworkSpec spec(1, {20, 20}, 1);
  const Eigen::MatrixXd X = Eigen::VectorXd::LinSpaced(12, -1, 1);
  const Eigen::MatrixXd Y = (2.0 * X.array()).sin();
  // unit noise so data_fit is the residual sum of squares
  const Dataset d = make_data(X, Y, 1.0);
  AdamConfig cfg;
  cfg.epochs = 5000;
  cfg.learning_rate = 1e-2;
  cfg.final_lr_fraction = 0.01;
  const MemberFit f = train_member(he_init(spec, 3), d, NoRegularizer{}, cfg);
  CHECK(data_fit_term(f.weights, d) < 1e-4 * d.size());
  CHECK(f.trace.back().total <= f.trace.front().total);
}

TEST_CASE("linear network with correlated anchoring hits the penalized least-squares optimum") {
  const NetworkSpec spec(1, {}, 1);
  std::vector<ParamVector> members;
  for (int k = 0; k < 6; ++k) members.push_back(ParamVector(spec, random_matrix(2, 1, 20 + k).col(0)));
  const LowRankGaussian prior = build_anchor_prior(stack_rows(members));
  REQUIRE(prior.rank() == 2);
  const Eigen::MatrixXd X = random_matrix(8, 1, 30);
  const Eigen::MatrixXd Y = 0.7 * X.array() - 0.2 + 0.3 * random_matrix(8, 1, 31).array();
  const double s2 = 0.09;
  const Dataset d = make_data(X, Y, s2);
  const Eigen::VectorXd anchor = members[1].values();

  // minimize |y - Phi w|^2 / s2 + (w - a)^T P (w - a), P = Sigma^+
  Eigen::MatrixXd Phi(8, 2);
  Phi.col(0) = X.col(0);
  Phi.col(1).setOnes();
  const Eigen::MatrixXd P = prior.pseudo_inverse();
  const Eigen::Vector2d w_star =
      (Phi.transpose() * Phi / s2 + P).ldlt().solve(Phi.transpose() * Y.col(0) / s2 + P * anchor);

  AdamConfig cfg;
  cfg.epochs = 20000;
  cfg.learning_rate = 2e-2;
  cfg.final_lr_fraction = 1e-3;
  const MemberFit f = train_member(members[1], d, CorrelatedRegularizer{anchor, &prior}, cfg);
  CHECK((f.weights.values() - w_star).norm() / w_star.norm() < 1e-3);
}

TEST_CASE("ensembles are deterministic and independent of the worker count") {
  const NetworkSpec spec(1, {8}, 1);
  const Eigen::MatrixXd X = Eigen::VectorXd::LinSpaced(10, -1, 1);
  const Dataset d = make_data(X, X.array().square(), 0.01);
  FunctionalPrior prior;
  prior.mean = MeanFunction::linear(1.0);
  prior.kernel_amp = 0.5;
  prior.lengthscale = 0.5;
  const MultiOutputPrior mp{prior};
  EnsembleConfig cfg;
  cfg.ensemble_size = 4;
  cfg.optimizer.epochs = 50;
  cfg.pretrain.optimizer.epochs = 5;
  cfg.pretrain.measurement_points = 40;
  cfg.master_seed = 11;
  for (TrainingMode mode : {TrainingMode::Vanilla, TrainingMode::Factorized, TrainingMode::Correlated}) {
    cfg.mode = mode;
    cfg.workers = 1;
    const EnsembleFit a = train_ensemble(spec, d, cfg, &mp);
    cfg.workers = 3;
    const EnsembleFit b = train_ensemble(spec, d, cfg, &mp);
    REQUIRE(a.model.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(a.model.members[k].values() == b.model.members[k].values());
    CHECK(a.model.members[0].values() != a.model.members[1].values());
    CHECK(a.model.mode == mode);
  }
  cfg.mode = TrainingMode::Correlated;
  CHECK_THROWS_AS(train_ensemble(spec, d, cfg, nullptr), ConfigError);
}

TEST_CASE("single-member vanilla ensemble") {
  const NetworkSpec spec(1, {4}, 1);
  const Eigen::MatrixXd X = Eigen::VectorXd::LinSpaced(5, -1, 1);
  EnsembleConfig cfg;
  cfg.ensemble_size = 1;
  cfg.mode = TrainingMode::Vanilla;
  cfg.optimizer.epochs = 20;
  const EnsembleFit f = train_ensemble(spec, make_data(X, X, 0.1), cfg);
  CHECK(f.model.size() == 1);
  CHECK(f.model.anchors.empty());
}

TEST_CASE("a diverging member reports its index") {
  const NetworkSpec spec(1, {}, 1);
  Eigen::MatrixXd X(2, 1), Y(2, 1);
  X << 1e200, -1e200;
  Y << 1e300, -1e300;
  Dataset d = make_data(X, Eigen::MatrixXd::Zero(2, 1), 1.0);
  d.X = X;
  d.Y = Y;
  AdamConfig cfg;
  cfg.epochs = 5;
  try {
    train_member(ParamVector(spec, Eigen::Vector2d(1.0, 0.0)), d, NoRegularizer{}, cfg, 3);
    FAIL("expected a training failure");
  } catch (const TrainingFailure& e) {
    CHECK(e.member() == 3);
    CHECK(e.epoch() == 0);
  }
}

TEST_CASE("ensemble config validation") {
  EnsembleConfig c;
  c.ensemble_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.ensemble_size = 2;
  c.workers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.workers = 1;
  c.factorized_lambda = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.factorized_lambda.reset();
  CHECK_NOTHROW(c.validate());
  CHECK(parse_resampling(to_string(ResamplingScheme::Bootstrap)) == ResamplingScheme::Bootstrap);
  CHECK_THROWS_AS(parse_resampling("jackknife"), ConfigError);
  CHECK(parse_training_mode("correlated") == TrainingMode::Correlated);
}
