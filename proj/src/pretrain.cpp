#include "fpbnn/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fpbnn/errors.hpp"
#include "fpbnn/parallel.hpp"
#include "fpbnn/rng.hpp"

namespace fpbnn {

void PretrainConfig::validate() const {
  optimizer.validate();
  if (init_perturbation < 0.0) throw ConfigError("init_perturbation must be >= 0");
  if (measurement_points < 1) throw ConfigError("measurement_points must be >= 1");
}

PretrainedMember pretrain_member(const ParamVector& shared_init, const PriorRealization& target,
                                 const PretrainConfig& config, std::uint64_t seed,
                                 int member_index) {
  config.validate();
  const NetworkSpec& spec = shared_init.spec();
  const Eigen::MatrixXd& X = target.points;
  const Eigen::MatrixXd& Y = target.values;
  if (X.cols() != spec.input_dim || Y.cols() != spec.output_dim || X.rows() != Y.rows())
    throw InputShapeError("prior realization does not match network dimensions");

  const SquaredErrorLoss loss{Eigen::VectorXd::Ones(spec.output_dim)};
  ParamVector w = perturb(shared_init, config.init_perturbation,
                          derive_seed(seed, Stream::Perturb));
  Rng batch_rng = make_rng(derive_seed(seed, Stream::Minibatch));

  const auto& opt = config.optimizer;
  const int M = static_cast<int>(X.rows());
  const int batch = (opt.batch_size <= 0 || opt.batch_size >= M) ? M : opt.batch_size;
  std::vector<int> order(M);
  std::iota(order.begin(), order.end(), 0);

  Adam adam(opt, w.size());
  double best_loss = backward(w, X, Y, loss).value;
  Eigen::VectorXd best = w.values();
  Eigen::MatrixXd Xb, Yb;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (batch < M)
      for (int i = M - 1; i > 0; --i)
        std::swap(order[i], order[std::min(i, static_cast<int>(open_uniform(batch_rng) * (i + 1)))]);
    const double lr = opt.rate_at(epoch);
    for (int start = 0; start < M; start += batch) {
      const int n = std::min(batch, M - start);
      LossAndGradient lg;
      try {
        if (batch == M) {
          lg = backward(w, X, Y, loss);
        } else {
          const std::vector<int> idx(order.begin() + start, order.begin() + start + n);
          Xb = X(idx, Eigen::all);
          Yb = Y(idx, Eigen::all);
          lg = backward(w, Xb, Yb, loss);
        }
      } catch (const NumericOverflowError& e) {
        throw TrainingFailure(member_index, epoch, std::string("pre-training diverged: ") + e.what());
      }
      adam.step(w.values(), lg.gradient, lr);
    }
    const double full = (forward_batch(w, X) - Y).squaredNorm();
    if (!std::isfinite(full))
      throw TrainingFailure(member_index, epoch, "pre-training diverged: non-finite loss");
    if (full < best_loss) {
      best_loss = full;
      best = w.values();
    }
  }
  PretrainedMember out{ParamVector(spec, best), 0.0, fingerprint(shared_init.values())};
  out.fit_rmse = std::sqrt(best_loss / double(std::max<Eigen::Index>(1, Y.size())));
  return out;
}

std::vector<ParamVector> PretrainedEnsemble::weights() const {
  std::vector<ParamVector> w;
  w.reserve(members.size());
  for (const auto& m : members) w.push_back(m.weights);
  return w;
}

PretrainedEnsemble pretrain_ensemble(const NetworkSpec& spec, const MultiOutputPrior& prior, int K,
                                     const PretrainConfig& config, std::uint64_t master_seed,
                                     int workers) {
  spec.validate();
  config.validate();
  if (K < 1) throw ConfigError("ensemble size must be >= 1");
  if (static_cast<int>(prior.size()) != spec.output_dim)
    throw ConfigError("need one functional prior per network output");
  for (const auto& p : prior) p.validate(spec.input_dim);

  PretrainedEnsemble ens{he_init(spec, derive_seed(master_seed, Stream::SharedInit)), {}};
  ens.members.assign(static_cast<std::size_t>(K),
                     PretrainedMember{ParamVector(spec), 0.0, 0});
  parallel_for(K, workers, [&](int k) {
    const std::uint64_t point_seed =
        derive_seed(master_seed, Stream::PriorPoints, config.shared_points ? 0 : k);
    const Eigen::MatrixXd points =
        lhs_standard_normal(config.measurement_points, spec.input_dim, point_seed);
    const PriorRealization target =
        sample_realization(prior, points, derive_seed(master_seed, Stream::Realization, k));
    ens.members[k] = pretrain_member(ens.shared_init, target, config,
                                     derive_seed(master_seed, Stream::Perturb, k), k);
  });
  return ens;
}

}  // namespace fpbnn
