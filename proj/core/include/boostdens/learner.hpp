#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boostdens/common.hpp"

namespace boostdens {

enum class Activation { ReLU, SELU, Softplus, Sigmoid, Tanh };

inline constexpr Activation kAllActivations[] = {Activation::ReLU, Activation::SELU,
                                                 Activation::Softplus, Activation::Sigmoid,
                                                 Activation::Tanh};

std::string_view to_string(Activation a);
/// Case-insensitive; throws ConfigError on unknown names.
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Matrix weights;  ///< out x in
  Vec bias;        ///< out
};

/// Feed-forward scorer c: R^n -> R.  Hidden layers apply the activation; the
/// output layer is linear (raw logit) and multiplied by `scale`.
class MlpClassifier {
 public:
  MlpClassifier() = default;

  /// `topology` is the full width list (input, hidden..., 1).  Weights are
  /// drawn uniform in +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
  static MlpClassifier random(std::vector<int> topology, Activation activation, Rng& rng);
  /// All weights and biases zero.
  static MlpClassifier zeros(std::vector<int> topology, Activation activation);
  /// Single linear layer c(x) = <w, x> + b.
  static MlpClassifier linear(const Vec& w, double b = 0.0);

  const std::vector<int>& topology() const { return topology_; }
  Activation activation() const { return activation_; }
  double scale() const { return scale_; }
  int input_dim() const { return topology_.front(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  /// Copy with output multiplier `scale` (> 0).
  MlpClassifier with_scale(double scale) const;

  std::size_t parameter_count() const;
  /// Parameters flattened layer by layer (weights row-major, then bias).
  Vec parameters() const;
  void set_parameters(const Vec& flat);

  double operator()(const Eigen::Ref<const Vec>& x) const;
  /// c evaluated on every row of `points`.
  Vec evaluate(const Matrix& points) const;

 private:
  void check_topology() const;

  std::vector<int> topology_;
  Activation activation_ = Activation::ReLU;
  std::vector<DenseLayer> layers_;
  double scale_ = 1.0;
};

nlohmann::json to_json(const MlpClassifier& c);
MlpClassifier classifier_from_json(const nlohmann::json& j);

/// Mean logistic cross-entropy of sigma(c(x)) against labels (1 = P, 0 = Q).
double cross_entropy(const MlpClassifier& c, const Matrix& points, const Vec& labels);

/// Backprop gradient of `cross_entropy` with respect to `parameters()` (scale fixed).
Vec cross_entropy_gradient(const MlpClassifier& c, const Matrix& points, const Vec& labels);

struct LabelledBatch {
  Matrix points;
  Vec labels;
};

/// Largest relative discrepancy between the backprop gradient and central
/// finite differences (h = 1e-5) over all parameters.  Relative error is
/// |g - g_fd| / max(|g|, |g_fd|, 1e-7).
double gradient_check(const MlpClassifier& c, const LabelledBatch& batch);

struct AdamConfig {
  double eta = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  int epochs = 600;
  int batch_size = 50;
  AdamConfig adam;
  /// Stop once test loss exceeds train loss by this fraction of train loss.
  std::optional<double> early_stop_gap;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  double train_loss;
  double test_loss;
  double train_accuracy;
  double test_accuracy;
};

struct TrainRecord {
  std::vector<EpochRecord> epochs;
  bool early_stopped = false;

  double final_test_accuracy() const { return epochs.back().test_accuracy; }
};

struct TrainResult {
  MlpClassifier classifier;
  TrainRecord record;
};

/// Trains c by Adam on mean logistic cross-entropy with P-samples labelled 1
/// and Q-samples labelled 0.  Each class is split train/test separately.
/// Deterministic in `config.seed`.
TrainResult train_classifier(const Matrix& p_samples, const Matrix& q_samples,
                             const std::vector<int>& hidden, Activation activation,
                             const TrainConfig& config);

/// Empirical edges of a classifier:
///   mu_p = mean_P(c) / c_sup,  mu_q = mean_Q(-c) / c_sup,
/// with c_sup the max |c| over the pooled samples.
struct EdgeEstimates {
  double mu_p_hat = 0.0;
  double mu_q_hat = 0.0;
  double c_sup_hat = 0.0;
  std::size_t m_p = 0;
  std::size_t m_q = 0;
};

EdgeEstimates estimate_edges(const MlpClassifier& c, const Matrix& p_samples,
                             const Matrix& q_samples);
/// Same, from precomputed classifier values.
EdgeEstimates estimate_edges(const Vec& c_on_p, const Vec& c_on_q);

/// log(2) / 2: confidence bound that makes a classifier Properly Scaled.
inline constexpr double kProperScaleBound = 0.34657359027997264;

/// Rescales so the confidence bound is at most log(2)/2; edges are unchanged.
MlpClassifier properly_scale(const MlpClassifier& c, const EdgeEstimates& edges);

/// Fraction correct under the rule c > 0 means P, averaged over the two classes.
double accuracy(const Vec& c_on_p, const Vec& c_on_q);

}  // namespace boostdens
