#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "boostdens/common.hpp"

namespace boostdens {

/// Random-walk Metropolis-Hastings settings.  Chains start from `fixed_start`
/// when set, otherwise from draws of the reference sampler handed to
/// `rw_metropolis` (for boosted densities: Q0).
struct MhConfig {
  std::size_t n_samples = 1000;
  std::size_t burn_in = 1000;
  double proposal_std = 1.0;
  std::size_t n_chains = 8;
  std::optional<Vec> fixed_start;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MhResult {
  Matrix samples;  ///< n_samples rows, chains interleaved round-robin
  double acceptance_rate = 0.0;
};

/// Unnormalized log density; additive constants do not affect the chain.
using LogDensityFn = std::function<double(const Eigen::Ref<const Vec>&)>;
/// Draws n starting points.
using StartSampler = std::function<Matrix(std::size_t, Rng&)>;

/// Isotropic Gaussian proposals x' = x + proposal_std * xi, accepted with
/// probability min(1, exp(l(x') - l(x))).  Chain k uses its own stream derived
/// from (seed, k); output row i is step i / n_chains of chain i % n_chains.
/// Chains start at config.fixed_start, else at draws from `starts`, else at
/// standard normal draws.  Throws NonFiniteLogDensity if a chain starts where
/// l is not finite.
MhResult rw_metropolis(const LogDensityFn& log_density, int dim, const MhConfig& config,
                       const StartSampler& starts = {});

}  // namespace boostdens
