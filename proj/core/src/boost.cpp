#include "boostdens/boost.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "boostdens/metrics.hpp"

namespace boostdens {
namespace {

constexpr double kEdgeClip = 1.0 - 1e-9;

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

template <typename T>
std::string format_optional(const std::optional<T>& v) {
  return v ? format_number(*v) : std::string();
}

}  // namespace

void StepPolicy::validate() const {
  if (kind == StepKind::Fixed && !(value >= 0.0 && value <= 1.0))
    throw ConfigError("policy: fixed step size must lie in [0, 1]");
  if (kind == StepKind::LinesearchNll && grid_points < 2)
    throw ConfigError("policy: line search needs at least 2 candidates");
}

std::string to_string(const StepPolicy& p) {
  switch (p.kind) {
    case StepKind::Wla: return "wla";
    case StepKind::LinesearchNll: return "linesearch_nll";
    case StepKind::Fixed: return "fixed:" + format_number(p.value);
  }
  return "?";
}

StepPolicy step_policy_from_string(const std::string& s) {
  if (s == "wla") return StepPolicy::wla();
  if (s == "linesearch_nll") return StepPolicy::linesearch_nll();
  if (s.rfind("fixed:", 0) == 0) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s.substr(6), &used);
    } catch (const std::exception&) {
      throw ConfigError("policy: cannot parse step size in '" + s + "'");
    }
    if (used != s.size() - 6) throw ConfigError("policy: cannot parse step size in '" + s + "'");
    StepPolicy p = StepPolicy::fixed(v);
    p.validate();
    return p;
  }
  throw ConfigError("policy: expected wla, linesearch_nll or fixed:<alpha>, got '" + s + "'");
}

std::string_view to_string(Regime r) { return r == Regime::Clamped ? "clamped" : "regular"; }

double mu_c_sup(double c_sup) {
  if (!(c_sup > 0.0)) throw RangeError("c_sup must be positive");
  return std::tanh(c_sup);
}

WlaStep step_size_wla(double mu_q_hat, double c_sup) {
  if (!(c_sup > 0.0) || !std::isfinite(c_sup)) throw RangeError("c_sup must be positive");
  const double mu = std::clamp(mu_q_hat, -kEdgeClip, kEdgeClip);
  WlaStep s;
  if (!(mu > 0.0)) {
    s.alpha = 0.0;
    s.regime = Regime::Regular;
    s.wla_satisfied = false;
    return s;
  }
  const double raw = std::log((1.0 + mu) / (1.0 - mu)) / (2.0 * c_sup);
  s.regime = raw >= 1.0 ? Regime::Clamped : Regime::Regular;
  s.alpha = std::min(1.0, raw);
  return s;
}

SampleSizes ewla_sample_sizes(double gamma_p, double gamma_q, double c_sup, int rounds, double delta) {
  if (!(gamma_p > 0.0 && gamma_p <= 1.0) || !(gamma_q > 0.0 && gamma_q <= 1.0))
    throw RangeError("edge margins must lie in (0, 1]");
  if (!(c_sup > 0.0)) throw RangeError("c_sup must be positive");
  if (rounds < 1) throw RangeError("number of rounds must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw RangeError("confidence delta must lie in (0, 1]");
  const double mu = mu_c_sup(c_sup);
  const double kappa = mu * (1.0 - mu) / 2.0;
  const double log_term = std::log(4.0 * rounds / delta);
  auto size = [&](double gamma) {
    const double m = log_term / ((kappa * gamma) * (kappa * gamma));
    return static_cast<std::size_t>(std::ceil(m));
  };
  return {size(gamma_p), size(gamma_q)};
}

double predicted_decrease(const EdgeEstimates& edges, Regime regime, DeltaForm form) {
  const double mu_p = edges.mu_p_hat;
  if (regime == Regime::Regular) {
    const double mu_q = std::clamp(edges.mu_q_hat, -kEdgeClip, kEdgeClip);
    const double lg = std::log((1.0 + mu_q) / (1.0 - mu_q));
    return (form == DeltaForm::Estimate ? mu_p / 16.0 : mu_p / 4.0) * lg;
  }
  const double c_sup = edges.c_sup_hat;
  const double ms = mu_c_sup(c_sup);
  const double d = edges.mu_q_hat / ms - 1.0;
  const double tail = d / (1.0 - ms * ms);
  if (form == DeltaForm::Estimate) return mu_p * c_sup / 2.0 + ms * ms * (0.25 + tail);
  return mu_p * c_sup + ms * ms * (0.5 + tail);
}

double rate_wla_rounds(double kl0, double rho, double gamma_p, double gamma_q) {
  if (!(gamma_p > 0.0) || !(gamma_q > 0.0)) throw RangeError("edge margins must be positive");
  return 2.0 * (kl0 - rho) / (gamma_p * gamma_q);
}

double geom_boost_factor(double gamma_p, double gamma_q, double c_sup, double gamma_eps) {
  if (!(c_sup > 0.0)) throw RangeError("c_sup must be positive");
  if (!(gamma_eps > -1.0)) throw RangeError("gamma_eps must exceed -1");
  return 1.0 - std::min(2.0, gamma_q / c_sup) * gamma_p / (2.0 * (1.0 + gamma_eps));
}

const std::vector<std::string>& BoostTrace::csv_columns() {
  static const std::vector<std::string> cols{"t",         "alpha",           "regime", "mu_p_hat",
                                             "mu_q_hat",  "c_sup_hat",       "predicted_delta",
                                             "kl",        "nll",             "accuracy", "wla_satisfied"};
  return cols;
}

std::string BoostTrace::to_csv() const {
  std::ostringstream os;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : rows) {
    os << r.t << ',' << format_number(r.alpha) << ',' << to_string(r.regime) << ',';
    if (r.edges)
      os << format_number(r.edges->mu_p_hat) << ',' << format_number(r.edges->mu_q_hat) << ','
         << format_number(r.edges->c_sup_hat) << ',';
    else
      os << ",,,";
    os << format_optional(r.predicted_delta) << ',' << format_optional(r.kl) << ',' << format_optional(r.nll) << ','
       << format_optional(r.accuracy) << ',' << (r.wla_satisfied ? "true" : "false") << '\n';
  }
  return os.str();
}

void BoostTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << to_csv();
}

void BoostConfig::validate() const {
  if (rounds < 1) throw ConfigError("boost: rounds must be >= 1");
  policy.validate();
  train.validate();
  sampler.validate();
  if (n_p < 2 || n_q < 2) throw ConfigError("boost: n_p and n_q must be >= 2");
  if (hidden.empty()) throw ConfigError("boost: at least one hidden layer is required");
  for (int w : hidden)
    if (w < 1) throw ConfigError("boost: hidden widths must be positive");
  if (metrics.coverage_kappa && !(*metrics.coverage_kappa > 0.0 && *metrics.coverage_kappa < 1.0))
    throw ConfigError("boost: coverage kappa must lie in (0, 1)");
}

double linesearch_alpha(const BoostedDensity& bd, const MlpClassifier& c, const Matrix& p_samples,
                        const ZEstimator& z, int grid_points) {
  if (grid_points < 2) throw ConfigError("line search needs at least 2 candidates");
  if (p_samples.rows() == 0) throw EmptySampleError("line search needs P samples");
  // Normalizer for step a is log_sum_exp(base + a * cz) + offset.
  Vec base, cz;
  double offset = 0.0;
  if (bd.dim() <= 2) {
    const GridSpec grid = z.grid ? *z.grid
                                 : GridSpec{bd.q0().mean().array() - 8.0 * bd.q0().std().maxCoeff(),
                                            bd.q0().mean().array() + 8.0 * bd.q0().std().maxCoeff(), 400};
    const Matrix pts = grid.points();
    base = bd.log_unnormalized_rows(pts);
    cz = c.evaluate(pts);
    offset = std::log(grid.cell_volume());
  } else {
    Rng rng = make_rng(z.seed, 0x6c73);
    const Matrix x = bd.q0().sample(z.n_draws, rng);
    base = bd.tilt_rows(x);
    cz = c.evaluate(x);
    offset = -std::log(static_cast<double>(z.n_draws));
  }
  const double mean_base_p = bd.log_unnormalized_rows(p_samples).mean();
  const double mean_c_p = c.evaluate(p_samples).mean();

  double best_alpha = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_points; ++k) {
    const double a = static_cast<double>(k) / (grid_points - 1);
    const double log_z = log_sum_exp(base + a * cz) + offset;
    const double ll = mean_base_p + a * mean_c_p - log_z;
    if (ll > best) {
      best = ll;
      best_alpha = a;
    }
  }
  return best_alpha;
}

Matrix draw_training_sample(const Density& target, const BoostConfig& config) {
  Rng p_rng = make_rng(config.seed, 0x70);
  return target.sample(config.n_p, p_rng);
}

BoostResult run_adabode(const Density& target, const DiagonalGaussian& q0, const BoostConfig& config) {
  config.validate();
  if (!target.can_sample()) throw ConfigError("boost: target must be sampleable");
  if (target.dim() != q0.dim()) throw DimensionError("boost: target and q0 dimensions differ");
  const int dim = q0.dim();

  BoostedDensity bd(q0, config.sampler);
  Rng p_rng = make_rng(config.seed, 0x70);
  Matrix p = target.sample(config.n_p, p_rng);
  BoostResult result{bd, {}, p};

  ZEstimator z;
  z.kind = (config.z_kind == ZEstimatorKind::Grid && dim > 2) ? ZEstimatorKind::ImportanceQ0 : config.z_kind;
  z.grid = config.z_grid;
  z.n_draws = config.z_draws;
  const bool kl_on = config.metrics.kl_grid && dim <= 2;

  auto fill_metrics = [&](TraceRow& row, int t) {
    if (kl_on) row.kl = kl_grid(target, bd, *config.metrics.kl_grid);
    if (config.metrics.nll_samples == 0) {
      row.nll = nll_normalized_on(p, target, bd);
    } else {
      row.nll = nll_normalized(target, bd, config.metrics.nll_samples, derive_seed(config.seed, 0x400 + t));
    }
    if (config.metrics.coverage_kappa)
      row.coverage = coverage(target, bd, *config.metrics.coverage_kappa, config.metrics.coverage_samples,
                              config.metrics.coverage_samples, derive_seed(config.seed, 0x500 + t));
  };

  TraceRow row0;
  row0.t = 0;
  fill_metrics(row0, 0);
  result.trace.rows.push_back(row0);

  for (int t = 1; t <= config.rounds; ++t) {
    if (config.resample_p && t > 1) p = target.sample(config.n_p, p_rng);

    TraceRow row;
    row.t = t;
    Matrix q;
    if (bd.size() == 0) {
      Rng q_rng = make_rng(config.seed, 0x100 + t);
      q = bd.q0().sample(config.n_q, q_rng);
    } else {
      MhConfig mh = config.sampler;
      mh.n_samples = config.n_q;
      mh.seed = derive_seed(config.seed, 0x100 + t);
      MhResult drawn = bd.sample_mh(mh);
      q = std::move(drawn.samples);
      row.mh_acceptance = drawn.acceptance_rate;
    }

    TrainConfig tc = config.train;
    tc.seed = derive_seed(config.seed, 0x200 + t);
    TrainResult trained = train_classifier(p, q, config.hidden, config.activation, tc);
    MlpClassifier c = std::move(trained.classifier);
    row.accuracy = trained.record.final_test_accuracy();

    EdgeEstimates edges = estimate_edges(c, p, q);
    if (config.policy.kind == StepKind::Wla) {
      c = properly_scale(c, edges);
      edges = estimate_edges(c, p, q);
    }
    const WlaStep w = step_size_wla(edges.mu_q_hat, edges.c_sup_hat);
    row.edges = edges;
    row.regime = w.regime;
    row.wla_satisfied = edges.mu_p_hat > 0.0 && edges.mu_q_hat > 0.0;
    row.predicted_delta = predicted_decrease(edges, w.regime);

    z.seed = derive_seed(config.seed, 0x300 + t);
    switch (config.policy.kind) {
      case StepKind::Wla: row.alpha = w.alpha; break;
      case StepKind::Fixed: row.alpha = config.policy.value; break;
      case StepKind::LinesearchNll: row.alpha = linesearch_alpha(bd, c, p, z, config.policy.grid_points); break;
    }

    if (z.kind == ZEstimatorKind::McPrev) z.prev_samples = q;
    bd = push_round(bd, c, row.alpha, z);
    z.prev_samples.reset();

    fill_metrics(row, t);
    result.trace.rows.push_back(row);
  }
  result.density = std::move(bd);
  return result;
}

}  // namespace boostdens
