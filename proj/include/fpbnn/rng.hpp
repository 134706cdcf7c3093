#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace fpbnn {

using Rng = std::mt19937_64;

/// Named random streams. Every random draw in the library is keyed by
/// (master seed, stream, index) so results do not depend on call order.
enum class Stream : std::uint64_t {
  SharedInit = 1,
  PriorPoints = 2,
  Realization = 3,
  Perturb = 4,
  Resample = 5,
  MemberInit = 6,
  Minibatch = 7,
  Anchor = 8,
  Dataset = 9,
  Sampling = 10,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0);

Rng make_rng(std::uint64_t seed);

double standard_normal(Rng& rng);

/// Uniform draw on the open interval (0, 1).
double open_uniform(Rng& rng);

Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng& rng);

}  // namespace fpbnn
