#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "boostdens/boost.hpp"
#include "boostdens/dist.hpp"
#include "boostdens/kde.hpp"
#include "boostdens/theory.hpp"

namespace boostdens {

enum class ExperimentKind { Ring, RandomMixture, Activations, Topology, Dimensions, KdeCompare, Theory };

std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_from_string(std::string_view name);

/// Target mixture: "ring" (2-D, modes on a circle) or "random" (modes in a box).
struct TargetSpec {
  std::string kind = "ring";
  int dim = 2;
  int modes = 8;
  double radius = 5.0;
  double box_halfwidth = 10.0;
  double sigma = 1.0;
  /// Mixture placement seed for "random"; when empty each run derives its own.
  std::optional<std::uint64_t> seed;

  void validate() const;
  GaussianMixture make(std::uint64_t run_seed) const;
};

nlohmann::json to_json(const TargetSpec& t);
TargetSpec target_from_json(const nlohmann::json& j);

/// Everything one experiment needs.  JSON keys mirror the field names; see
/// README for the schema.  Unset fields take the experiment's defaults.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Ring;
  TargetSpec target;
  /// "isotropic" (N(0, q0_sigma^2 I)) or "empirical" (diagonal fit to the P sample).
  std::string q0 = "isotropic";
  double q0_sigma = 1.0;
  std::vector<int> hidden{5, 5};
  Activation activation = Activation::ReLU;
  int epochs = 600;
  int batch_size = 50;
  std::optional<double> early_stop_gap;
  double test_fraction = 0.25;
  StepPolicy policy = StepPolicy::fixed(0.5);
  int rounds = 6;
  int n_runs = 20;
  std::uint64_t seed = 1;
  std::size_t n_p = 1000;
  std::size_t n_q = 1000;
  int grid_points = 200;
  ZEstimatorKind z_estimator = ZEstimatorKind::Grid;
  std::size_t z_draws = 100000;
  double proposal_std = 1.0;
  std::size_t burn_in = 1000;
  std::size_t n_chains = 8;
  std::optional<double> coverage_kappa;
  std::size_t coverage_samples = 1000;
  /// NLL draws from the target per evaluation; 0 uses the P training sample.
  std::size_t nll_samples = 0;
  /// Activations experiment.
  std::vector<Activation> activations{std::begin(kAllActivations), std::end(kAllActivations)};
  /// Topology experiment.
  std::vector<std::vector<int>> topologies{{5}, {5, 5}, {10, 10}, {5, 5, 5}};
  /// Dimensions experiment.
  std::vector<int> dims{2, 4, 6};
  /// KDE comparison.
  std::vector<Kernel> kernels{kAllKernels.begin(), kAllKernels.end()};
  std::size_t theory_trials = 1000;
  std::string output_dir;
  /// Concurrent runs.
  int jobs = 1;

  /// Field-level ConfigError on invalid values.
  void validate() const;
  /// Defaults for `kind` at desk scale; `full` restores 3000 epochs and 400 grid points.
  static ExperimentConfig defaults(ExperimentKind kind, bool full = false);
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Starts from defaults(experiment, full) and overrides the keys present.
/// Throws ConfigError naming the offending field.
ExperimentConfig experiment_from_json(const nlohmann::json& j, bool full = false);

struct RunRecord {
  std::string condition;
  int run = 0;
  std::uint64_t seed = 0;
  BoostTrace trace;
  /// Final boosted density; empty for baseline conditions.
  std::optional<BoostedDensity> density;
};

struct AggregateRow {
  std::string experiment;
  std::string condition;
  int t = 0;
  std::optional<double> kl_mean, kl_ci95, nll_mean, nll_ci95, acc_mean, acc_ci95, coverage_mean, coverage_ci95;
};

struct ExperimentResult {
  int exit_code = 0;
  std::vector<RunRecord> runs;
  std::vector<AggregateRow> aggregate;
  std::optional<theory::SuiteReport> theory;
  /// Git blob SHA-1 of the aggregate CSV (or theory JSON).
  std::string content_hash;
};

/// Mean and normal-approximation 95% half-width 1.96 s / sqrt(n) over the
/// present values; empty when none are present.
std::pair<std::optional<double>, std::optional<double>> mean_ci95(const std::vector<std::optional<double>>& v);

std::vector<AggregateRow> aggregate_runs(std::string_view experiment, const std::vector<RunRecord>& runs);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

/// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_hash(const std::string& content);

/// Executes the experiment.  When output_dir is set, writes one trace CSV and
/// one density snapshot per run, aggregate.csv, the experiment's extra tables and manifest.json.
/// Exit code 1 when the theory suite reports a violation, 0 otherwise.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace boostdens
