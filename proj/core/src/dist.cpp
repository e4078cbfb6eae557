#include "boostdens/dist.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

namespace boostdens {
namespace {

constexpr const char* kDensityFormat = "boostdens/density-v1";
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// log mean exp(v) with a delta-method standard error.
LogZEstimate log_mean_exp(const Vec& v) {
  if (v.size() == 0) throw EmptySampleError("normalizer estimate needs draws");
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) throw NonFiniteLogDensity("normalizer estimate: non-finite tilt");
  const Vec w = (v.array() - m).exp().matrix();
  const double n = static_cast<double>(w.size());
  const double mean = w.mean();
  double se = 0.0;
  if (w.size() > 1) {
    const double var = (w.array() - mean).square().sum() / (n - 1.0);
    se = std::sqrt(var / n) / mean;
  }
  return {m + std::log(mean), se};
}

GridSpec default_z_grid(const DiagonalGaussian& q0) {
  const double half = 8.0 * q0.std().maxCoeff();
  GridSpec g{q0.mean().array() - half, q0.mean().array() + half, 400};
  return g;
}

}  // namespace

void Density::check_dim(Eigen::Index n) const {
  if (n != dim())
    throw DimensionError("expected a point of dimension " + std::to_string(dim()) + ", got " + std::to_string(n));
}

Vec Density::log_density_rows(const Matrix& points) const {
  check_dim(points.cols());
  Vec out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out[i] = log_density(points.row(i).transpose());
  return out;
}

Matrix Density::sample(std::size_t, Rng&) const { throw ConfigError("density has no sampler"); }

// ---------------------------------------------------------------- mixtures

GaussianMixture::GaussianMixture(std::vector<MixtureComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw RangeError("mixture needs at least one component");
  dim_ = static_cast<int>(components_.front().mean.size());
  if (dim_ < 1) throw DimensionError("mixture dimension must be positive");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dim_) throw DimensionError("mixture means differ in dimension");
    if (!(c.sigma > 0.0)) throw RangeError("mixture sigma must be positive");
    if (!(c.weight > 0.0)) throw RangeError("mixture weights must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw RangeError("mixture weights must sum to 1");
  for (const auto& c : components_) log_weights_.push_back(std::log(c.weight));
}

double GaussianMixture::log_density(const Eigen::Ref<const Vec>& x) const {
  check_dim(x.size());
  Vec terms(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const double r2 = (x - c.mean).squaredNorm();
    terms[static_cast<Eigen::Index>(k)] =
        log_weights_[k] - dim_ * (kHalfLog2Pi + std::log(c.sigma)) - 0.5 * r2 / (c.sigma * c.sigma);
  }
  return log_sum_exp(terms);
}

Vec GaussianMixture::log_density_rows(const Matrix& points) const {
  check_dim(points.cols());
  const auto n = points.rows();
  const auto k = static_cast<Eigen::Index>(components_.size());
  Matrix terms(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& c = components_[static_cast<std::size_t>(j)];
    const double base = log_weights_[static_cast<std::size_t>(j)] - dim_ * (kHalfLog2Pi + std::log(c.sigma));
    const double inv = 0.5 / (c.sigma * c.sigma);
    terms.col(j) = ((points.rowwise() - c.mean.transpose()).rowwise().squaredNorm().array() * -inv + base).matrix();
  }
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = log_sum_exp(terms.row(i).transpose());
  return out;
}

Matrix GaussianMixture::sample(std::size_t n, Rng& rng) const {
  std::vector<double> w;
  for (const auto& c : components_) w.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(static_cast<Eigen::Index>(n), dim_);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto& c = components_[pick(rng)];
    for (int j = 0; j < dim_; ++j) out(i, j) = c.mean[j] + c.sigma * normal(rng);
  }
  return out;
}

Matrix GaussianMixture::means() const {
  Matrix m(static_cast<Eigen::Index>(components_.size()), dim_);
  for (std::size_t k = 0; k < components_.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = components_[k].mean.transpose();
  return m;
}

double GaussianMixture::max_sigma() const {
  double s = 0.0;
  for (const auto& c : components_) s = std::max(s, c.sigma);
  return s;
}

GridSpec GaussianMixture::default_grid(int points_per_axis) const {
  return GridSpec::around(means(), 4.0 * max_sigma(), points_per_axis);
}

GaussianMixture mixture_ring(int modes, double radius, double sigma, std::uint64_t) {
  if (modes < 1) throw RangeError("ring needs at least one mode");
  std::vector<MixtureComponent> comps;
  for (int k = 0; k < modes; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / modes;
    Vec mean(2);
    mean << radius * std::cos(angle), radius * std::sin(angle);
    comps.push_back({mean, sigma, 1.0 / modes});
  }
  return GaussianMixture(std::move(comps));
}

GaussianMixture mixture_random(int dim, int modes, double box_halfwidth, double sigma, std::uint64_t seed) {
  if (modes < 1) throw RangeError("mixture needs at least one mode");
  if (!(box_halfwidth > 0.0)) throw RangeError("box half-width must be positive");
  if (dim < 1) throw DimensionError("mixture dimension must be positive");
  Rng rng = make_rng(seed, 0x6d6978);
  std::uniform_real_distribution<double> u(-box_halfwidth, box_halfwidth);
  std::vector<MixtureComponent> comps;
  for (int k = 0; k < modes; ++k) {
    Vec mean(dim);
    for (int j = 0; j < dim; ++j) mean[j] = u(rng);
    comps.push_back({mean, sigma, 1.0 / modes});
  }
  return GaussianMixture(std::move(comps));
}

// ---------------------------------------------------------------- gaussian

DiagonalGaussian::DiagonalGaussian(Vec mean, Vec std) : mean_(std::move(mean)), std_(std::move(std)) {
  if (mean_.size() < 1 || mean_.size() != std_.size()) throw DimensionError("gaussian: mean and std differ in size");
  if (!(std_.array() > 0.0).all()) throw RangeError("gaussian: std must be positive");
  log_norm_ = -static_cast<double>(mean_.size()) * kHalfLog2Pi - std_.array().log().sum();
}

DiagonalGaussian DiagonalGaussian::isotropic(int dim, double sigma) {
  if (dim < 1) throw DimensionError("gaussian dimension must be positive");
  return DiagonalGaussian(Vec::Zero(dim), Vec::Constant(dim, sigma));
}

DiagonalGaussian DiagonalGaussian::fit(const Matrix& samples) {
  if (samples.rows() < 2) throw DegenerateSample("fitting a gaussian needs at least two samples");
  const Vec mean = samples.colwise().mean().transpose();
  const Vec var = (samples.rowwise() - mean.transpose()).array().square().colwise().sum().transpose() /
                  static_cast<double>(samples.rows() - 1);
  if (!(var.array() > 0.0).all()) throw DegenerateSample("zero-variance axis in sample");
  return DiagonalGaussian(mean, var.cwiseSqrt());
}

double DiagonalGaussian::log_density(const Eigen::Ref<const Vec>& x) const {
  check_dim(x.size());
  return log_norm_ - 0.5 * ((x - mean_).array() / std_.array()).square().sum();
}

Vec DiagonalGaussian::log_density_rows(const Matrix& points) const {
  check_dim(points.cols());
  const Matrix z = (points.rowwise() - mean_.transpose()).array().rowwise() / std_.transpose().array();
  return (log_norm_ - 0.5 * z.rowwise().squaredNorm().array()).matrix();
}

Matrix DiagonalGaussian::sample(std::size_t n, Rng& rng) const {
  Matrix z = standard_normal(static_cast<Eigen::Index>(n), dim(), rng);
  return (z.array().rowwise() * std_.transpose().array()).rowwise() + mean_.transpose().array();
}

// ---------------------------------------------------------------- boosted

std::string_view to_string(ZEstimatorKind k) {
  switch (k) {
    case ZEstimatorKind::Grid: return "grid";
    case ZEstimatorKind::ImportanceQ0: return "importance_q0";
    case ZEstimatorKind::McPrev: return "mc_prev";
  }
  return "?";
}

ZEstimatorKind z_estimator_from_string(std::string_view name) {
  for (auto k : {ZEstimatorKind::Grid, ZEstimatorKind::ImportanceQ0, ZEstimatorKind::McPrev})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown normalizer estimator '" + std::string(name) + "'");
}

BoostedDensity::BoostedDensity(DiagonalGaussian q0, MhConfig sampler) : q0_(std::move(q0)), sampler_(std::move(sampler)) {
  sampler_.validate();
}

BoostedDensity BoostedDensity::with_sampler_config(MhConfig config) const {
  BoostedDensity b = *this;
  config.validate();
  b.sampler_ = std::move(config);
  return b;
}

double BoostedDensity::log_unnormalized(const Eigen::Ref<const Vec>& x) const {
  double v = q0_.log_density(x);
  for (const auto& r : rounds_)
    if (r.alpha != 0.0) v += r.alpha * r.classifier(x);
  return v;
}

Vec BoostedDensity::tilt_rows(const Matrix& points) const {
  check_dim(points.cols());
  Vec t = Vec::Zero(points.rows());
  for (const auto& r : rounds_)
    if (r.alpha != 0.0) t += r.alpha * r.classifier.evaluate(points);
  return t;
}

Vec BoostedDensity::log_unnormalized_rows(const Matrix& points) const {
  return q0_.log_density_rows(points) + tilt_rows(points);
}

double BoostedDensity::log_density(const Eigen::Ref<const Vec>& x) const { return log_unnormalized(x) - log_z(); }

Vec BoostedDensity::log_density_rows(const Matrix& points) const {
  return (log_unnormalized_rows(points).array() - log_z()).matrix();
}

MhResult BoostedDensity::sample_mh(const MhConfig& config) const {
  return rw_metropolis([this](const Eigen::Ref<const Vec>& x) { return log_unnormalized(x); }, dim(), config,
                       [this](std::size_t n, Rng& rng) { return q0_.sample(n, rng); });
}

Matrix BoostedDensity::sample(std::size_t n, Rng& rng) const {
  if (rounds_.empty()) return q0_.sample(n, rng);
  MhConfig cfg = sampler_;
  cfg.n_samples = n;
  cfg.seed = rng();
  return sample_mh(cfg).samples;
}

NaturalParameters BoostedDensity::natural_parameters(const Eigen::Ref<const Vec>& x) const {
  check_dim(x.size());
  NaturalParameters np;
  np.alpha.resize(static_cast<Eigen::Index>(rounds_.size()));
  np.c.resize(static_cast<Eigen::Index>(rounds_.size()));
  for (std::size_t i = 0; i < rounds_.size(); ++i) {
    np.alpha[static_cast<Eigen::Index>(i)] = rounds_[i].alpha;
    np.c[static_cast<Eigen::Index>(i)] = rounds_[i].classifier(x);
  }
  np.cumulant = log_z();
  return np;
}

BoostedDensity BoostedDensity::with_round(MlpClassifier c, double alpha, double log_z_cum) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw AlphaRangeError("step size must lie in [0, 1]");
  if (c.input_dim() != dim()) throw DimensionError("classifier input dimension does not match density");
  if (!std::isfinite(log_z_cum)) throw NonFiniteLogDensity("log normalizer is not finite");
  BoostedDensity b = *this;
  b.rounds_.push_back({std::move(c), alpha, log_z_cum});
  return b;
}

LogZEstimate estimate_log_z(const BoostedDensity& bd, const MlpClassifier& c, double alpha, const ZEstimator& z) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw AlphaRangeError("step size must lie in [0, 1]");
  if (c.input_dim() != bd.dim()) throw DimensionError("classifier input dimension does not match density");
  if (alpha == 0.0) return {bd.log_z(), 0.0};

  switch (z.kind) {
    case ZEstimatorKind::Grid: {
      if (bd.dim() > 2) throw EstimatorUnavailable("grid normalizer is limited to d <= 2");
      const GridSpec grid = z.grid ? *z.grid : default_z_grid(bd.q0());
      if (grid.dim() != bd.dim()) throw DimensionError("grid dimension does not match density");
      const Matrix pts = grid.points();
      const Vec lv = bd.log_unnormalized_rows(pts) + alpha * c.evaluate(pts);
      return {log_sum_exp(lv) + std::log(grid.cell_volume()), 0.0};
    }
    case ZEstimatorKind::ImportanceQ0: {
      Rng rng = make_rng(z.seed, 0x6971);
      const Matrix x = bd.q0().sample(z.n_draws, rng);
      return log_mean_exp(bd.tilt_rows(x) + alpha * c.evaluate(x));
    }
    case ZEstimatorKind::McPrev: {
      Matrix drawn;
      const Matrix* x = nullptr;
      if (z.prev_samples) {
        x = &*z.prev_samples;
      } else {
        Rng rng = make_rng(z.seed, 0x6d63);
        drawn = bd.sample(z.n_draws, rng);
        x = &drawn;
      }
      if (x->cols() != bd.dim()) throw DimensionError("previous samples have wrong dimension");
      LogZEstimate inc = log_mean_exp(alpha * c.evaluate(*x));
      inc.log_z += bd.log_z();
      return inc;
    }
  }
  throw ConfigError("unknown normalizer estimator");
}

BoostedDensity push_round(const BoostedDensity& bd, const MlpClassifier& c, double alpha, const ZEstimator& z) {
  const LogZEstimate est = estimate_log_z(bd, c, alpha, z);
  return bd.with_round(c, alpha, est.log_z);
}

NaturalParameters natural_parameter_view(const BoostedDensity& bd, const Eigen::Ref<const Vec>& x) {
  return bd.natural_parameters(x);
}

nlohmann::json to_json(const BoostedDensity& bd) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : bd.rounds())
    rounds.push_back({{"alpha", r.alpha}, {"log_z_cum", r.log_z_cum}, {"classifier", to_json(r.classifier)}});
  return {{"format", kDensityFormat},
          {"dim", bd.dim()},
          {"q0", {{"type", "diagonal_gaussian"}, {"mean", to_std(bd.q0().mean())}, {"std", to_std(bd.q0().std())}}},
          {"rounds", rounds}};
}

BoostedDensity density_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kDensityFormat) throw ParseError("density: unsupported format");
    const auto& q0 = j.at("q0");
    if (q0.at("type").get<std::string>() != "diagonal_gaussian") throw ParseError("density: unsupported q0 type");
    DiagonalGaussian g(from_std(q0.at("mean").get<std::vector<double>>()),
                       from_std(q0.at("std").get<std::vector<double>>()));
    if (g.dim() != j.at("dim").get<int>()) throw ParseError("density: dim does not match q0");
    BoostedDensity bd(std::move(g));
    for (const auto& r : j.at("rounds"))
      bd = bd.with_round(classifier_from_json(r.at("classifier")), r.at("alpha").get<double>(),
                         r.at("log_z_cum").get<double>());
    return bd;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("density: ") + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("density: ") + e.what());
  }
}

void write_points_csv(const Matrix& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  for (Eigen::Index j = 0; j < points.cols(); ++j) out << (j ? "," : "") << 'x' << j;
  out << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) out << (j ? "," : "") << points(i, j);
    out << '\n';
  }
}

}  // namespace boostdens
