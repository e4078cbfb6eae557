#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boostdens/common.hpp"
#include "boostdens/grid.hpp"
#include "boostdens/learner.hpp"
#include "boostdens/mcmc.hpp"

namespace boostdens {

/// A normalized density on R^d.
class Density {
 public:
  virtual ~Density() = default;

  virtual int dim() const = 0;
  /// Throws DimensionError when x.size() != dim().
  virtual double log_density(const Eigen::Ref<const Vec>& x) const = 0;
  /// Log-density of every row of `points`.
  virtual Vec log_density_rows(const Matrix& points) const;

  virtual bool can_sample() const { return false; }
  /// n draws, one per row.  The base implementation throws ConfigError.
  virtual Matrix sample(std::size_t n, Rng& rng) const;

 protected:
  void check_dim(Eigen::Index n) const;
};

struct MixtureComponent {
  Vec mean;
  double sigma = 1.0;
  double weight = 1.0;
};

/// Mixture of isotropic Gaussians N(mean_k, sigma_k^2 I).
class GaussianMixture final : public Density {
 public:
  /// Throws RangeError unless sigma > 0, weight > 0 and the weights sum to 1
  /// within 1e-12; DimensionError if the means disagree in size.
  explicit GaussianMixture(std::vector<MixtureComponent> components);

  int dim() const override { return dim_; }
  double log_density(const Eigen::Ref<const Vec>& x) const override;
  Vec log_density_rows(const Matrix& points) const override;
  bool can_sample() const override { return true; }
  Matrix sample(std::size_t n, Rng& rng) const override;

  const std::vector<MixtureComponent>& components() const { return components_; }
  /// Component means, one per row.
  Matrix means() const;
  double max_sigma() const;
  /// Bounding box of the means expanded by 4 max_sigma.
  GridSpec default_grid(int points_per_axis = 400) const;

 private:
  std::vector<MixtureComponent> components_;
  std::vector<double> log_weights_;
  int dim_ = 0;
};

/// Equally weighted modes on a circle in the plane, the k-th at angle 2 pi k / modes.
/// Placement is deterministic, so `seed` has no effect; it is accepted for
/// symmetry with `mixture_random`.
GaussianMixture mixture_ring(int modes, double radius = 5.0, double sigma = 1.0, std::uint64_t seed = 0);

/// Equally weighted modes with means uniform in [-box_halfwidth, box_halfwidth]^dim.
GaussianMixture mixture_random(int dim, int modes, double box_halfwidth = 10.0, double sigma = 1.0,
                               std::uint64_t seed = 0);

/// Gaussian with diagonal covariance diag(std^2).
class DiagonalGaussian final : public Density {
 public:
  DiagonalGaussian(Vec mean, Vec std);

  static DiagonalGaussian isotropic(int dim, double sigma = 1.0);
  /// Sample mean and per-axis sample standard deviation (n - 1 denominator).
  /// Throws DegenerateSample for fewer than two rows or a zero-variance axis.
  static DiagonalGaussian fit(const Matrix& samples);

  int dim() const override { return static_cast<int>(mean_.size()); }
  double log_density(const Eigen::Ref<const Vec>& x) const override;
  Vec log_density_rows(const Matrix& points) const override;
  bool can_sample() const override { return true; }
  Matrix sample(std::size_t n, Rng& rng) const override;

  const Vec& mean() const { return mean_; }
  const Vec& std() const { return std_; }

 private:
  Vec mean_;
  Vec std_;
  double log_norm_ = 0.0;
};

struct BoostRound {
  MlpClassifier classifier;
  double alpha = 0.0;
  double log_z_cum = 0.0;
};

/// (alpha, c(x), cumulant) with log q(x) = <alpha, c(x)> - cumulant + log q0(x).
struct NaturalParameters {
  Vec alpha;
  Vec c;
  double cumulant = 0.0;
};

enum class ZEstimatorKind { Grid, ImportanceQ0, McPrev };

std::string_view to_string(ZEstimatorKind k);
ZEstimatorKind z_estimator_from_string(std::string_view name);

/// How push_round normalizes the new round.
struct ZEstimator {
  ZEstimatorKind kind = ZEstimatorKind::Grid;
  /// Grid estimator box; defaults to q0.mean +- 8 max(q0.std) with 400 points.
  std::optional<GridSpec> grid;
  /// Draw count for the Monte Carlo estimators.
  std::size_t n_draws = 100000;
  /// For McPrev: samples of the previous density; drawn by MH when absent.
  std::optional<Matrix> prev_samples;
  std::uint64_t seed = 0;
};

/// Estimate of a log-normalizer with a delta-method standard error (0 for grid).
struct LogZEstimate {
  double log_z = 0.0;
  double std_error = 0.0;
};

/// q_t(x) = q0(x) exp(sum_i alpha_i c_i(x)) / Z_t.  Values are immutable;
/// push_round returns a new density.  Sampling uses random-walk MH started
/// from q0 draws, except with zero rounds where q0 is sampled directly.
class BoostedDensity final : public Density {
 public:
  explicit BoostedDensity(DiagonalGaussian q0, MhConfig sampler = {});

  int dim() const override { return q0_.dim(); }
  double log_density(const Eigen::Ref<const Vec>& x) const override;
  Vec log_density_rows(const Matrix& points) const override;
  bool can_sample() const override { return true; }
  Matrix sample(std::size_t n, Rng& rng) const override;
  /// Sample with an explicit MH configuration; returns the acceptance rate too.
  MhResult sample_mh(const MhConfig& config) const;

  /// log q0(x) + sum_i alpha_i c_i(x), without the normalizer.
  double log_unnormalized(const Eigen::Ref<const Vec>& x) const;
  Vec log_unnormalized_rows(const Matrix& points) const;
  /// sum_i alpha_i c_i over rows.
  Vec tilt_rows(const Matrix& points) const;

  const DiagonalGaussian& q0() const { return q0_; }
  const std::vector<BoostRound>& rounds() const { return rounds_; }
  std::size_t size() const { return rounds_.size(); }
  double log_z() const { return rounds_.empty() ? 0.0 : rounds_.back().log_z_cum; }
  const MhConfig& sampler_config() const { return sampler_; }
  BoostedDensity with_sampler_config(MhConfig config) const;

  NaturalParameters natural_parameters(const Eigen::Ref<const Vec>& x) const;

  /// Appends a round with a known cumulative log-normalizer; no estimation.
  BoostedDensity with_round(MlpClassifier c, double alpha, double log_z_cum) const;

 private:
  DiagonalGaussian q0_;
  std::vector<BoostRound> rounds_;
  MhConfig sampler_;
};

/// log Z of `bd` with `c` appended at step `alpha`, and its standard error.
/// Throws AlphaRangeError for alpha outside [0, 1] and EstimatorUnavailable
/// for the grid estimator above two dimensions.
LogZEstimate estimate_log_z(const BoostedDensity& bd, const MlpClassifier& c, double alpha,
                            const ZEstimator& z);

BoostedDensity push_round(const BoostedDensity& bd, const MlpClassifier& c, double alpha, const ZEstimator& z);

NaturalParameters natural_parameter_view(const BoostedDensity& bd, const Eigen::Ref<const Vec>& x);

nlohmann::json to_json(const BoostedDensity& bd);
/// Throws ParseError on malformed input.
BoostedDensity density_from_json(const nlohmann::json& j);

/// Writes points as CSV, one row per point, with header x0,x1,...
void write_points_csv(const Matrix& points, const std::string& path);

}  // namespace boostdens
