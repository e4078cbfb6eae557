#pragma once

#include <cstdint>

#include "boostdens/dist.hpp"
#include "boostdens/grid.hpp"
#include "boostdens/learner.hpp"

namespace boostdens {

/// Midpoint-rule quadrature of p log(p / q) over `grid`.  Log-densities are
/// floored at kLogDensityFloor so underflowing cells contribute finitely.
/// Throws DimensionError above two dimensions.
double kl_grid(const Density& p, const Density& q, const GridSpec& grid);

/// Same quadrature over precomputed log-densities at grid.points().
double kl_grid_values(const Vec& log_p, const Vec& log_q, double cell_volume);

/// E_P log q / E_P log p over `p_samples`.  1 is ideal.  Throws
/// NonFiniteLogDensity if q is -inf at a sample and DegenerateRange when
/// |E_P log p| < 1e-3, where the ratio is meaningless.
double nll_normalized_on(const Matrix& p_samples, const Density& p, const Density& q);

/// nll_normalized_on over n fresh draws from p.
double nll_normalized(const Density& p, const Density& q, std::size_t n, std::uint64_t seed);

/// Standard error of the Monte Carlo NLL ratio (delta method on the two means).
double nll_normalized_std_error(const Matrix& p_samples, const Density& p, const Density& q);

/// (share of P samples with c > 0 + share of Q samples with c <= 0) / 2.
double accuracy(const MlpClassifier& c, const Matrix& p_samples, const Matrix& q_samples);

/// Linear-interpolated empirical quantile of `values` at level `prob` in [0, 1].
double quantile(Vec values, double prob);

/// Coverage from precomputed density values: beta is the (1 - kappa) quantile
/// of `q_on_q`; returns the share of `q_on_p` strictly above beta.  Any strictly
/// increasing transform applied to both inputs gives the same answer.
double coverage_from_values(const Vec& q_on_q, const Vec& q_on_p, double kappa);

/// P-mass of the super-level set of q holding Q-mass kappa, estimated from
/// n_q draws of q and n_p draws of p.  Log-densities are compared, which is
/// equivalent by monotonicity.
double coverage(const Density& p, const Density& q, double kappa, std::size_t n_q, std::size_t n_p,
                std::uint64_t seed);

}  // namespace boostdens
