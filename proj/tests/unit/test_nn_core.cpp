#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "doctest.h"

#include "fpbnn/container.hpp"
#include "fpbnn/errors.hpp"
#include "fpbnn/network.hpp"
#include "fpbnn/optimizer.hpp"
#include "fpbnn/parallel.hpp"
#include "fpbnn/rng.hpp"

using namespace fpbnn;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fpbnn_unit";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

// Plain loop reference for a forward pass; shares nothing with the library
// beyond the layout accessors.
Eigen::VectorXd reference_forward(const ParamVector& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd a = x;
  const int L = p.spec().num_layers();
  for (int l = 0; l < L; ++l) {
    const auto W = p.kernel(l);
    const auto b = p.bias(l);
    Eigen::VectorXd z(W.rows());
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      double s = b[i];
      for (Eigen::Index j = 0; j < W.cols(); ++j) s += W(i, j) * a[j];
      z[i] = (l + 1 < L && s < 0.0) ? p.spec().activation_slope * s : s;
    }
    a = z;
  }
  return a;
}

}  // namespace

TEST_CASE("parameter count of small and reference architectures") {
  // 2*3 + 3 + 3*1 + 1
  CHECK(param_count(NetworkSpec(2, {3}, 1)) == 13);
  CHECK(param_count(NetworkSpec(1, {}, 1)) == 2);
  CHECK(param_count(NetworkSpec(1, {50, 50, 50, 50}, 1)) == 7801);
  CHECK(param_count(NetworkSpec(4, {20, 20, 20, 20}, 5)) == 4 * 20 + 20 + 3 * (400 + 20) + 100 + 5);
}

TEST_CASE("spec validation rejects empty layers") {
  CHECK_THROWS_AS(NetworkSpec(0, {3}, 1).validate(), Error);
  CHECK_THROWS_AS(NetworkSpec(1, {0}, 1).validate(), Error);
  CHECK_THROWS_AS(NetworkSpec(1, {3}, 0).validate(), Error);
}

TEST_CASE("layout is kernel then bias per layer, contiguous") {
  const NetworkSpec spec(3, {4, 2}, 2);
  const auto layout = parameter_layout(spec);
  REQUIRE(layout.size() == 3);
  Eigen::Index off = 0;
  for (const auto& s : layout) {
    CHECK(s.kernel_offset == off);
    CHECK(s.bias_offset == off + s.kernel_size());
    off = s.bias_offset + s.fan_out;
  }
  CHECK(off == param_count(spec));
}

TEST_CASE("leaky relu") {
  CHECK(leaky_relu(2.0, 0.01) == 2.0);
  CHECK(leaky_relu(-2.0, 0.01) == doctest::Approx(-0.02));
  CHECK(leaky_relu(0.0, 0.01) == 0.0);
}

TEST_CASE("forward matches a hand-computed network") {
  // One hidden unit: h = lrelu(2x - 1), y = 3h + 0.5
  ParamVector p(NetworkSpec(1, {1}, 1));
  p.values() << 2.0, -1.0, 3.0, 0.5;
  CHECK(forward(p, Eigen::VectorXd::Constant(1, 1.0))[0] == doctest::Approx(3.5));
  // z = -3 -> h = -0.03 -> y = 0.41
  CHECK(forward(p, Eigen::VectorXd::Constant(1, -1.0))[0] == doctest::Approx(0.41));
}

TEST_CASE("batch forward agrees with the loop reference") {
  const NetworkSpec spec(3, {5, 4}, 2, 0.1);
  const ParamVector p = perturb(he_init(spec, 3), 0.3, 4);
  Rng rng = make_rng(5);
  Eigen::MatrixXd X(7, 3);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = standard_normal(rng);
  const Eigen::MatrixXd Y = forward_batch(p, X);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd ref = reference_forward(p, X.row(i).transpose());
    CHECK((Y.row(i).transpose() - ref).norm() < 1e-12);
  }
  CHECK_THROWS_AS(forward_batch(p, Eigen::MatrixXd::Zero(2, 2)), InputShapeError);
}

TEST_CASE("output is positively homogeneous in the last layer") {
  const NetworkSpec spec(2, {6, 6}, 3);
  ParamVector p = perturb(he_init(spec, 11), 0.1, 12);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 2);
  const Eigen::MatrixXd y0 = forward_batch(p, X);
  const int last = spec.num_layers() - 1;
  p.kernel(last) *= 2.5;
  p.bias(last) *= 2.5;
  CHECK((forward_batch(p, X) - 2.5 * y0).norm() < 1e-12);
}

TEST_CASE("backward matches central finite differences") {
  Rng arch = make_rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> widths;
    const int depth = int(arch() % 4);
    for (int l = 0; l < depth; ++l) widths.push_back(1 + int(arch() % 10));
    const NetworkSpec spec(1 + int(arch() % 3), widths, 1 + int(arch() % 3));
    ParamVector p = perturb(he_init(spec, trial), 0.2, 100 + trial);
    Rng rng = make_rng(200 + trial);
    Eigen::MatrixXd X(6, spec.input_dim), Y(6, spec.output_dim);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = standard_normal(rng);
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = standard_normal(rng);
    SquaredErrorLoss loss{Eigen::VectorXd::LinSpaced(spec.output_dim, 0.5, 2.0)};
    const LossAndGradient g = backward(p, X, Y, loss);

    double worst = 0.0;
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      ParamVector a = p, b = p;
      a.values()[j] += h;
      b.values()[j] -= h;
      const double fd = (backward(a, X, Y, loss).value - backward(b, X, Y, loss).value) / (2 * h);
      worst = std::max(worst, std::abs(fd - g.gradient[j]) / std::max(1.0, std::abs(fd)));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("backward value is the weighted squared error") {
  ParamVector p(NetworkSpec(1, {}, 1));
  p.values() << 1.0, 0.0;  // y = x
  Eigen::MatrixXd X(2, 1), Y(2, 1);
  X << 1.0, 2.0;
  Y << 1.2, 2.0;
  const LossAndGradient g = backward(p, X, Y, {Eigen::VectorXd::Constant(1, 100.0)});
  CHECK(g.value == doctest::Approx(4.0));
}

TEST_CASE("flatten and unflatten round trip") {
  const NetworkSpec spec(2, {3, 4}, 2);
  const ParamVector p = perturb(he_init(spec, 1), 0.5, 2);
  const ParamVector q = flatten(spec, unflatten(p));
  CHECK(q.values() == p.values());
  const auto layers = unflatten(p);
  CHECK(layers[1].kernel.rows() == 4);
  CHECK(layers[1].kernel.cols() == 3);
  CHECK(layers[1].kernel(2, 1) == p.kernel(1)(2, 1));
}

TEST_CASE("he initialization: zero biases, kernel variance 2/fan_in, deterministic") {
  const NetworkSpec spec(200, {300}, 1);
  const ParamVector p = he_init(spec, 42);
  CHECK(p.bias(0).cwiseAbs().maxCoeff() == 0.0);
  const auto W = p.kernel(0);
  const double var = W.array().square().mean();
  CHECK(var == doctest::Approx(2.0 / 200).epsilon(0.03));
  CHECK(he_init(spec, 42).values() == p.values());
  CHECK(he_init(spec, 43).values() != p.values());
}

TEST_CASE("perturb adds scaled standard normal noise") {
  const NetworkSpec spec(10, {100}, 10);
  const ParamVector p = he_init(spec, 0);
  const ParamVector q = perturb(p, 0.01, 7);
  const Eigen::VectorXd d = q.values() - p.values();
  CHECK(std::sqrt(d.squaredNorm() / double(d.size())) == doctest::Approx(0.01).epsilon(0.05));
  CHECK(perturb(p, 0.0, 7).values() == p.values());
}

TEST_CASE("network checkpoint round trip") {
  const NetworkSpec spec(2, {5}, 3, 0.2);
  const ParamVector p = perturb(he_init(spec, 8), 0.1, 9);
  const std::string path = temp_path("net.fpbnn");
  save_network(path, p);
  const ParamVector q = load_network(path);
  CHECK(q.spec() == spec);
  CHECK(q.values() == p.values());
}

TEST_CASE("container round trip and kind check") {
  Container c("thing");
  c.set_meta("answer", "42");
  Eigen::MatrixXd a(2, 3);
  a << 1, 2, 3, 4, 5, std::nextafter(6.0, 7.0);
  c.add_array("a", a);
  const std::string path = temp_path("c.fpbnn");
  c.write(path);
  const Container r = Container::read(path, "thing");
  CHECK(r.meta("answer") == "42");
  CHECK(r.array("a") == a);
  CHECK_FALSE(r.has_array("b"));
  CHECK_THROWS_AS(Container::read(path, "other"), FormatError);
  CHECK_THROWS_AS(Container::read(temp_path("missing.fpbnn")), Error);
}

TEST_CASE("seed derivation is deterministic and stream separated") {
  CHECK(derive_seed(1, Stream::Resample, 3) == derive_seed(1, Stream::Resample, 3));
  CHECK(derive_seed(1, Stream::Resample, 3) != derive_seed(1, Stream::Resample, 4));
  CHECK(derive_seed(1, Stream::Resample, 3) != derive_seed(1, Stream::MemberInit, 3));
  CHECK(derive_seed(1, Stream::Resample, 3) != derive_seed(2, Stream::Resample, 3));
  Rng rng = make_rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = open_uniform(rng);
    CHECK((u > 0.0 && u < 1.0));
  }
}

TEST_CASE("adam minimizes a quadratic and the rate decays geometrically") {
  AdamConfig cfg;
  cfg.epochs = 3000;
  cfg.learning_rate = 0.05;
  cfg.final_lr_fraction = 0.1;
  CHECK(cfg.rate_at(0) == doctest::Approx(0.05));
  CHECK(cfg.rate_at(cfg.epochs) == doctest::Approx(0.005));
  CHECK(cfg.rate_at(cfg.epochs / 2) == doctest::Approx(0.05 * std::sqrt(0.1)));
  Adam opt(cfg, 2);
  Eigen::VectorXd x(2);
  x << 3.0, -2.0;
  const Eigen::Vector2d target(0.5, 1.5);
  for (int e = 0; e < cfg.epochs; ++e) opt.step(x, 2.0 * (x - target), cfg.rate_at(e));
  CHECK((x - target).norm() < 1e-3);

  AdamConfig bad;
  bad.learning_rate = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("parallel_for covers every index and reports the lowest failure") {
  std::vector<int> hit(50, 0);
  parallel_for(50, 4, [&](int i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);

  try {
    parallel_for(20, 3, [](int i) {
      if (i == 7 || i == 13) throw std::runtime_error("task " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "task 7");
  }
}
