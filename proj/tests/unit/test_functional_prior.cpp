#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "doctest.h"

#include "fpbnn/errors.hpp"
#include "fpbnn/functional_prior.hpp"

using namespace fpbnn;

TEST_CASE("rbf kernel values") {
  Eigen::VectorXd a(2), b(2);
  a << 0.0, 5.0;
  b << 0.8, -3.0;
  CHECK(rbf_kernel(a, a, 0.6, 0.8, {0, 1}) == doctest::Approx(0.6));
  // distance L along the only active feature -> k0 exp(-1/2)
  CHECK(rbf_kernel(a, b, 0.6, 0.8, {0}) == doctest::Approx(0.6 * std::exp(-0.5)));
  // inactive coordinates are ignored
  Eigen::VectorXd c = a;
  c[1] = 100.0;
  CHECK(rbf_kernel(a, c, 1.0, 0.3, {0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(rbf_kernel(a, b, 1.0, 0.0, {0}), InvalidPriorError);
}

TEST_CASE("gram matrix is symmetric, has k0 on the diagonal and factorizes") {
  FunctionalPrior p;
  p.kernel_amp = 0.6;
  p.lengthscale = 0.2;
  const Eigen::MatrixXd pts = lhs_standard_normal(200, 1, 3);
  const Eigen::MatrixXd K = gram_matrix(pts, p);
  CHECK((K - K.transpose()).norm() == 0.0);
  CHECK((K.diagonal().array() - 0.6).abs().maxCoeff() == 0.0);
  const Eigen::MatrixXd L = jittered_cholesky(K, p.kernel_amp);
  CHECK((L * L.transpose() - K).cwiseAbs().maxCoeff() < 1e-4 * 0.6 * 1.01);
  CHECK(L.isLowerTriangular());
}

TEST_CASE("cholesky of an indefinite matrix fails after maximum jitter") {
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(jittered_cholesky(A, 1.0), FactorizationError);
}

TEST_CASE("latin hypercube: one point per equiprobable stratum in every dimension") {
  const int M = 500, D = 3;
  const Eigen::MatrixXd X = lhs_standard_normal(M, D, 17);
  const boost::math::normal_distribution<double> unit;
  for (int j = 0; j < D; ++j) {
    std::vector<int> count(M, 0);
    for (int i = 0; i < M; ++i) {
      const double u = boost::math::cdf(unit, X(i, j));
      count[std::min(M - 1, int(u * M))] += 1;
    }
    CHECK(std::all_of(count.begin(), count.end(), [](int c) { return c == 1; }));
  }
  CHECK(lhs_standard_normal(M, D, 17) == X);
  CHECK(lhs_standard_normal(M, D, 18) != X);
}

TEST_CASE("realizations have the prior mean, variance and correlation") {
  FunctionalPrior p;
  p.mean = MeanFunction::linear(2.0);
  p.kernel_amp = 0.6;
  p.lengthscale = 0.8;
  Eigen::MatrixXd pts(3, 1);
  pts << -0.5, 0.0, 0.4;
  const int R = 20000;
  Eigen::MatrixXd draws(R, 3);
  for (int r = 0; r < R; ++r) draws.row(r) = sample_realization(p, pts, 1000 + r).values.col(0).transpose();
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd c = draws.rowwise() - mean;
  const Eigen::MatrixXd cov = c.transpose() * c / double(R - 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(mean[i] - 2.0 * pts(i, 0)) < 0.025);
    CHECK(cov(i, i) == doctest::Approx(0.6).epsilon(0.04));
  }
  const double rho = cov(0, 2) / std::sqrt(cov(0, 0) * cov(2, 2));
  CHECK(rho == doctest::Approx(std::exp(-0.81 / (2 * 0.64))).epsilon(0.03));
}

TEST_CASE("priors with different lengthscales share the pointwise variance") {
  Eigen::MatrixXd pts(1, 1);
  pts << 0.3;
  for (double L : {0.8, 0.2, 0.05}) {
    FunctionalPrior p;
    p.mean = MeanFunction::linear(2.0);
    p.kernel_amp = 0.6;
    p.lengthscale = L;
    double s = 0, s2 = 0;
    const int R = 20000;
    for (int r = 0; r < R; ++r) {
      const double v = sample_realization(p, pts, 7 * r + 1).values(0, 0) - 0.6;
      s += v;
      s2 += v * v;
    }
    CHECK((s2 - s * s / R) / (R - 1) == doctest::Approx(0.6).epsilon(0.04));
  }
}

TEST_CASE("zero kernel amplitude returns the mean") {
  FunctionalPrior p;
  p.mean = MeanFunction::linear(-1.5);
  p.kernel_amp = 0.0;
  const Eigen::MatrixXd pts = lhs_standard_normal(20, 1, 2);
  CHECK((sample_realization(p, pts, 9).values.col(0) + 1.5 * pts.col(0)).norm() < 1e-14);
}

TEST_CASE("random cubic mean has zero expectation and varies by realization") {
  FunctionalPrior p;
  p.mean = MeanFunction::random_cubic(5.0);
  p.kernel_amp = 0.0;
  Eigen::MatrixXd pts(1, 1);
  pts << 1.0;
  Eigen::VectorXd x(1);
  x << 0.7;
  CHECK(p.mean.expected(x) == 0.0);
  CHECK(p.mean(x, 0.5) == doctest::Approx(5.0 * 0.5 * 0.343));
  double s = 0;
  for (int r = 0; r < 4000; ++r) {
    const double v = sample_realization(p, pts, r).values(0, 0);
    CHECK(std::abs(v) <= 5.0);
    s += v;
  }
  CHECK(std::abs(s / 4000) < 0.15);
}

TEST_CASE("bounds clamp realizations and leave feasible values unchanged") {
  PriorRealization r;
  r.points = Eigen::MatrixXd::Zero(3, 1);
  r.values.resize(3, 2);
  r.values << -1.0, 0.5, 2.0, 3.0, 0.1, -0.2;
  OutputBounds pos;
  pos.lower = 0.0;
  OutputBounds box;
  box.lower = 0.0;
  box.upper = 1.0;
  const PriorRealization c = constrain_realization(r, {pos, box});
  CHECK(c.values(0, 0) == 0.0);
  CHECK(c.values(1, 0) == 2.0);
  CHECK(c.values(1, 1) == 1.0);
  CHECK(c.values(2, 1) == 0.0);
  CHECK(c.values(0, 1) == 0.5);

  FunctionalPrior p;
  p.mean = MeanFunction::linear(0.0);
  p.kernel_amp = 1.0;
  p.lengthscale = 0.3;
  p.bounds.lower = 0.0;
  const PriorRealization s = sample_realization(p, lhs_standard_normal(50, 1, 1), 4);
  CHECK(s.values.minCoeff() >= 0.0);
}

TEST_CASE("multi-output realizations sample channels independently") {
  FunctionalPrior a, b;
  a.kernel_amp = b.kernel_amp = 1.0;
  a.lengthscale = b.lengthscale = 0.5;
  const Eigen::MatrixXd pts = lhs_standard_normal(30, 1, 8);
  const PriorRealization r = sample_realization({a, b}, pts, 5);
  CHECK(r.values.cols() == 2);
  CHECK((r.values.col(0) - r.values.col(1)).norm() > 1e-3);
  CHECK(sample_realization({a, b}, pts, 5).values == r.values);
}

TEST_CASE("prior validation") {
  FunctionalPrior p;
  p.kernel_amp = -1.0;
  CHECK_THROWS_AS(p.validate(1), InvalidPriorError);
  p.kernel_amp = 1.0;
  p.lengthscale = 0.0;
  CHECK_THROWS_AS(p.validate(1), InvalidPriorError);
  p.lengthscale = 1.0;
  p.features = {2};
  CHECK_THROWS_AS(p.validate(2), InvalidPriorError);
  p.features = {};
  CHECK_THROWS_AS(p.validate(2), InvalidPriorError);
  p.features = {0};
  p.bounds.lower = 1.0;
  p.bounds.upper = 0.0;
  CHECK_THROWS_AS(p.validate(1), InvalidPriorError);
}

TEST_CASE("least-squares slope without intercept") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 9, 2, 9, 3, 9, -1, 9;
  Eigen::VectorXd y = 3.0 * X.col(0);
  CHECK(fit_linear_mean(X, y, 0) == doctest::Approx(3.0));
  // affine feature map: f = 0.5 x + 1
  const Eigen::VectorXd f = 0.5 * X.col(0).array() + 1.0;
  CHECK(fit_linear_mean(X, Eigen::VectorXd(-2.0 * f), 0, 0.5, 1.0) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(fit_linear_mean(X, y, 1), DegenerateFitError);
  CHECK_THROWS_AS(fit_linear_mean(X.topRows(1), y.head(1), 0), DegenerateFitError);
}

TEST_CASE("mean kinds round trip through their names") {
  for (auto k : {MeanFunction::Kind::Zero, MeanFunction::Kind::Linear, MeanFunction::Kind::RandomCubic,
                 MeanFunction::Kind::LinearInFeature})
    CHECK(parse_mean_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_mean_kind("quadratic"), ConfigError);
}
