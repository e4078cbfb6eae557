#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "boostdens/dist.hpp"
#include "boostdens/grid.hpp"
#include "boostdens/learner.hpp"
#include "boostdens/mcmc.hpp"

namespace boostdens {

enum class StepKind { Wla, Fixed, LinesearchNll };

/// How each round's step size alpha is chosen.
struct StepPolicy {
  StepKind kind = StepKind::Fixed;
  double value = 0.5;    ///< Fixed only
  int grid_points = 10;  ///< LinesearchNll: candidates linspace(0, 1, grid_points)

  static StepPolicy wla() { return {StepKind::Wla, 0.0, 10}; }
  static StepPolicy fixed(double alpha) { return {StepKind::Fixed, alpha, 10}; }
  static StepPolicy linesearch_nll(int points = 10) { return {StepKind::LinesearchNll, 0.0, points}; }

  /// Throws ConfigError for a fixed value outside [0, 1] or fewer than 2 candidates.
  void validate() const;
};

/// "wla", "linesearch_nll" or "fixed:<alpha>".
std::string to_string(const StepPolicy& p);
StepPolicy step_policy_from_string(const std::string& s);

enum class Regime { Regular, Clamped };
std::string_view to_string(Regime r);

/// tanh(c_sup): the edge at which the step size formula reaches 1.
double mu_c_sup(double c_sup);

struct WlaStep {
  double alpha = 0.0;
  Regime regime = Regime::Regular;
  bool wla_satisfied = true;
};

/// alpha = min(1, log((1 + mu) / (1 - mu)) / (2 c_sup)) with mu clipped to
/// +-(1 - 1e-9).  A non-positive edge gives alpha = 0 and wla_satisfied = false.
/// Throws RangeError unless c_sup > 0.
WlaStep step_size_wla(double mu_q_hat, double c_sup);

struct SampleSizes {
  std::size_t m_p = 0;
  std::size_t m_q = 0;
};

/// Per-round sample sizes m >= log(4T / delta) / (kappa gamma)^2 with
/// kappa = mu*(1 - mu*) / 2 and mu* = tanh(c_sup).  Throws RangeError for
/// gammas outside (0, 1], c_sup <= 0, T < 1 or delta outside (0, 1].
SampleSizes ewla_sample_sizes(double gamma_p, double gamma_q, double c_sup, int rounds, double delta);

enum class DeltaForm { Estimate, Exact };

/// Guaranteed per-round KL decrease.  With m = mu_q, mu* = tanh(c_sup) and
/// d = m / mu* - 1:
///   estimate, regular:  (mu_p / 16) log((1 + m) / (1 - m))
///   estimate, clamped:  mu_p c_sup / 2 + mu*^2 (1/4 + d / (1 - mu*^2))
///   exact,    regular:  (mu_p / 4) log((1 + m) / (1 - m))
///   exact,    clamped:  mu_p c_sup + mu*^2 (1/2 + d / (1 - mu*^2))
double predicted_decrease(const EdgeEstimates& edges, Regime regime, DeltaForm form = DeltaForm::Estimate);

/// Number of rounds 2 (kl0 - rho) / (gamma_p gamma_q) after which the weak
/// learning guarantee brings KL below rho.
double rate_wla_rounds(double kl0, double rho, double gamma_p, double gamma_q);

/// Per-round geometric contraction 1 - min(2, gamma_q / c_sup) gamma_p / (2 (1 + gamma_eps)).
double geom_boost_factor(double gamma_p, double gamma_q, double c_sup, double gamma_eps);

struct TraceRow {
  int t = 0;
  double alpha = 0.0;
  Regime regime = Regime::Regular;
  std::optional<EdgeEstimates> edges;
  std::optional<double> predicted_delta;
  std::optional<double> kl;
  std::optional<double> nll;
  std::optional<double> accuracy;  ///< final test accuracy of the round's classifier
  std::optional<double> coverage;
  bool wla_satisfied = true;
  double mh_acceptance = 1.0;
};

struct BoostTrace {
  std::vector<TraceRow> rows;  ///< rows[0] describes Q0 (t = 0)

  static const std::vector<std::string>& csv_columns();
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

struct MetricsConfig {
  /// KL quadrature grid; KL is skipped when empty or above two dimensions.
  std::optional<GridSpec> kl_grid;
  /// NLL draws from the target; 0 evaluates on the round's P training sample.
  std::size_t nll_samples = 0;
  /// Coverage level; skipped when empty.
  std::optional<double> coverage_kappa;
  std::size_t coverage_samples = 1000;
};

struct BoostConfig {
  int rounds = 6;
  StepPolicy policy = StepPolicy::fixed(0.5);
  std::vector<int> hidden{5, 5};
  Activation activation = Activation::ReLU;
  TrainConfig train;
  std::size_t n_p = 1000;
  std::size_t n_q = 1000;
  /// Settings for drawing Q_{t-1} samples; n_samples is replaced by n_q.
  MhConfig sampler;
  /// Normalizer estimator; Grid falls back to ImportanceQ0 above two dimensions.
  ZEstimatorKind z_kind = ZEstimatorKind::Grid;
  std::optional<GridSpec> z_grid;
  std::size_t z_draws = 100000;
  MetricsConfig metrics;
  /// Fresh P samples each round; otherwise one P sample is reused.
  bool resample_p = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BoostResult {
  BoostedDensity density;
  BoostTrace trace;
  Matrix p_train;  ///< P sample of the first round
};

/// The P training sample run_adabode draws for `config` (first round).
Matrix draw_training_sample(const Density& target, const BoostConfig& config);

/// Alpha maximizing the mean log-density of `p_samples` over the policy's
/// candidate grid; ties go to the smaller alpha.
double linesearch_alpha(const BoostedDensity& bd, const MlpClassifier& c, const Matrix& p_samples,
                        const ZEstimator& z, int grid_points);

/// Runs `config.rounds` boosting rounds from `q0` toward `target`.  Each round
/// draws Q_{t-1} samples, trains a classifier, picks alpha per the policy
/// (properly scaling the classifier under the WLA policy), pushes the round and
/// records metrics.  Deterministic in config.seed.
BoostResult run_adabode(const Density& target, const DiagonalGaussian& q0, const BoostConfig& config);

}  // namespace boostdens
