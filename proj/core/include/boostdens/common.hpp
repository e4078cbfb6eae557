#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace boostdens {

using Vec = Eigen::VectorXd;
/// Point sets are stored one point per row.
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Log-densities below this value are treated as zero mass in quadrature and
/// returned in place of -inf by compactly supported estimators.
inline constexpr double kLogDensityFloor = -700.0;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BOOSTDENS_DEFINE_ERROR(Name)  \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  }

BOOSTDENS_DEFINE_ERROR(DomainError);
BOOSTDENS_DEFINE_ERROR(DimensionError);
BOOSTDENS_DEFINE_ERROR(AlphaRangeError);
BOOSTDENS_DEFINE_ERROR(EstimatorUnavailable);
BOOSTDENS_DEFINE_ERROR(EmptySampleError);
BOOSTDENS_DEFINE_ERROR(DegenerateClassifier);
BOOSTDENS_DEFINE_ERROR(RangeError);
BOOSTDENS_DEFINE_ERROR(NonFiniteLogDensity);
BOOSTDENS_DEFINE_ERROR(DegenerateSample);
BOOSTDENS_DEFINE_ERROR(PreconditionUnmet);
BOOSTDENS_DEFINE_ERROR(DegenerateRange);
BOOSTDENS_DEFINE_ERROR(ConfigError);
BOOSTDENS_DEFINE_ERROR(ParseError);

#undef BOOSTDENS_DEFINE_ERROR

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of master seed `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

/// n x dim matrix of independent standard normal draws.
inline Matrix standard_normal(Eigen::Index n, Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) out(i, j) = normal(rng);
  return out;
}

/// log(sum(exp(v))) without overflow; -inf for an empty or all -inf input.
double log_sum_exp(const Eigen::Ref<const Vec>& v);

/// Numerically stable log(1 + exp(x)).
double softplus(double x);

/// Logistic sigmoid 1 / (1 + exp(-x)), saturating to exactly 0 or 1.
double sigmoid(double x);

}  // namespace boostdens
