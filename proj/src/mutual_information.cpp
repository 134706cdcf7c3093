#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "fpbnn/benchmarks.hpp"
#include "fpbnn/errors.hpp"
#include "fpbnn/rng.hpp"

namespace fpbnn {

namespace {

// Standardizes and adds a tiny deterministic jitter so exact ties do not
// collapse neighbour distances to zero.
Eigen::VectorXd prepare(const Eigen::VectorXd& v, std::uint64_t seed) {
  const double mu = v.mean();
  const double sd = std::sqrt((v.array() - mu).square().sum() / double(v.size()));
  Rng rng = make_rng(seed);
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = (v[i] - mu) / sd + 1e-10 * standard_normal(rng);
  return out;
}

// Number of entries of the sorted vector strictly within eps of c, excluding c itself.
int count_within(const std::vector<double>& sorted, double c, double eps) {
  const auto lo = std::upper_bound(sorted.begin(), sorted.end(), c - eps);
  const auto hi = std::lower_bound(sorted.begin(), sorted.end(), c + eps);
  return std::max(static_cast<int>(hi - lo) - 1, 0);
}

}  // namespace

MutualInformation mutual_information(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int k) {
  if (x.size() != y.size()) throw InputShapeError("mutual information needs paired samples");
  if (k < 1) throw ConfigError("k must be >= 1");
  const Eigen::Index N = x.size();
  if (N <= k) throw InputShapeError("mutual information needs more than k samples");
  if (x.maxCoeff() == x.minCoeff() || y.maxCoeff() == y.minCoeff()) return {0.0, true};

  const Eigen::VectorXd xs = prepare(x, 0x6d69ULL), ys = prepare(y, 0x6d6aULL);
  std::vector<double> sx(xs.data(), xs.data() + N), sy(ys.data(), ys.data() + N);
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());

  std::vector<double> dist(static_cast<std::size_t>(N - 1));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    std::size_t m = 0;
    for (Eigen::Index j = 0; j < N; ++j)
      if (j != i) dist[m++] = std::max(std::abs(xs[i] - xs[j]), std::abs(ys[i] - ys[j]));
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    const double eps = dist[static_cast<std::size_t>(k - 1)];
    const int nx = count_within(sx, xs[i], eps);
    const int ny = count_within(sy, ys[i], eps);
    acc += boost::math::digamma(double(nx + 1)) + boost::math::digamma(double(ny + 1));
  }
  const double mi = boost::math::digamma(double(k)) + boost::math::digamma(double(N)) - acc / double(N);
  return {std::max(mi, 0.0), false};
}

}  // namespace fpbnn
