#include "boostdens/mcmc.hpp"

#include <cmath>
#include <vector>

namespace boostdens {

void MhConfig::validate() const {
  if (!(proposal_std > 0.0) || !std::isfinite(proposal_std))
    throw ConfigError("mh: proposal_std must be positive");
  if (n_chains < 1) throw ConfigError("mh: n_chains must be >= 1");
}

MhResult rw_metropolis(const LogDensityFn& log_density, int dim, const MhConfig& config,
                       const StartSampler& starts) {
  config.validate();
  if (dim < 1) throw DimensionError("mh: dimension must be positive");
  const std::size_t chains = config.n_chains;

  Matrix start_points(static_cast<Eigen::Index>(chains), dim);
  if (config.fixed_start) {
    if (config.fixed_start->size() != dim) throw DimensionError("mh: fixed start has wrong dimension");
    for (std::size_t k = 0; k < chains; ++k) start_points.row(static_cast<Eigen::Index>(k)) = config.fixed_start->transpose();
  } else {
    Rng init_rng = make_rng(config.seed, 0x1417);
    start_points = starts ? starts(chains, init_rng)
                          : standard_normal(static_cast<Eigen::Index>(chains), dim, init_rng);
    if (start_points.rows() != static_cast<Eigen::Index>(chains) || start_points.cols() != dim)
      throw DimensionError("mh: start sampler returned wrong shape");
  }

  MhResult result;
  result.samples.resize(static_cast<Eigen::Index>(config.n_samples), dim);
  const std::size_t per_chain = (config.n_samples + chains - 1) / chains;
  std::size_t accepted = 0, proposed = 0;

  for (std::size_t k = 0; k < chains; ++k) {
    Rng rng = make_rng(config.seed, 0x10000 + k);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Vec x = start_points.row(static_cast<Eigen::Index>(k)).transpose();
    double lx = log_density(x);
    if (!std::isfinite(lx)) throw NonFiniteLogDensity("mh: log density is not finite at a chain start");
    Vec proposal(dim);
    // Row k + chains * s receives the s-th kept state of chain k.
    const std::size_t kept = k < config.n_samples ? (config.n_samples - k + chains - 1) / chains : 0;
    for (std::size_t step = 0; step < config.burn_in + std::min(kept, per_chain); ++step) {
      for (int j = 0; j < dim; ++j) proposal[j] = x[j] + config.proposal_std * normal(rng);
      const double lp = log_density(proposal);
      const double u = uniform(rng);
      const bool accept = std::isfinite(lp) && std::log(u) < lp - lx;
      if (accept) {
        x = proposal;
        lx = lp;
      }
      if (step >= config.burn_in) {
        ++proposed;
        if (accept) ++accepted;
        const std::size_t row = k + chains * (step - config.burn_in);
        result.samples.row(static_cast<Eigen::Index>(row)) = x.transpose();
      }
    }
  }
  result.acceptance_rate = proposed == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  return result;
}

}  // namespace boostdens
