#include "boostdens/kde.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

namespace boostdens {
namespace {

constexpr double kPi = std::numbers::pi;

// Kernel profile at u = r / h for compact kernels (u <= 1).
double compact_profile(Kernel k, double u) {
  switch (k) {
    case Kernel::Epanechnikov: return 1.0 - u * u;
    case Kernel::Tophat: return 1.0;
    case Kernel::Triangular: return 1.0 - u;
    case Kernel::Cosine: return std::cos(0.5 * kPi * u);
    default: return 0.0;
  }
}

// int_0^1 r^(d-1) cos(pi r / 2) dr via the paired cos/sin moment recurrences.
double cosine_radial_moment(int d) {
  const double a = 0.5 * kPi;
  double c = std::sin(a) / a;          // n = 0
  double s = (1.0 - std::cos(a)) / a;  // n = 0
  for (int n = 1; n < d; ++n) {
    const double c_next = std::sin(a) / a - n / a * s;
    const double s_next = -std::cos(a) / a + n / a * c;
    c = c_next;
    s = s_next;
  }
  return c;
}

Vec uniform_direction(int d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(d);
  do {
    for (int j = 0; j < d; ++j) v[j] = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace

std::string_view to_string(Kernel k) {
  switch (k) {
    case Kernel::Gaussian: return "gaussian";
    case Kernel::Epanechnikov: return "epanechnikov";
    case Kernel::Tophat: return "tophat";
    case Kernel::Exponential: return "exponential";
    case Kernel::Triangular: return "triangular";
    case Kernel::Cosine: return "cosine";
  }
  return "?";
}

Kernel kernel_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (Kernel k : kAllKernels)
    if (to_string(k) == lower) return k;
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

double unit_ball_volume(int d) {
  if (d < 1) throw DimensionError("ball dimension must be positive");
  return std::exp(0.5 * d * std::log(kPi) - std::lgamma(0.5 * d + 1.0));
}

double kernel_log_normalizer(Kernel k, int d, double h) {
  if (!(h > 0.0)) throw RangeError("bandwidth must be positive");
  const double log_vd = std::log(unit_ball_volume(d));
  const double log_hd = d * std::log(h);
  double log_mass = 0.0;  // log of the profile integral at h = 1
  switch (k) {
    case Kernel::Gaussian: log_mass = 0.5 * d * std::log(2.0 * kPi); break;
    case Kernel::Epanechnikov: log_mass = std::log(2.0) + log_vd - std::log(d + 2.0); break;
    case Kernel::Tophat: log_mass = log_vd; break;
    case Kernel::Exponential: log_mass = std::lgamma(static_cast<double>(d)) + std::log(static_cast<double>(d)) + log_vd; break;
    case Kernel::Triangular: log_mass = log_vd - std::log(d + 1.0); break;
    case Kernel::Cosine: log_mass = std::log(static_cast<double>(d)) + log_vd + std::log(cosine_radial_moment(d)); break;
  }
  return -log_mass - log_hd;
}

double scott_silverman_bandwidth(const Matrix& samples) {
  const auto n = samples.rows();
  if (n < 2) throw DegenerateSample("bandwidth rule needs at least two samples");
  const Vec mean = samples.colwise().mean().transpose();
  const Vec var = (samples.rowwise() - mean.transpose()).array().square().colwise().sum().transpose() /
                  static_cast<double>(n - 1);
  const double sigma = var.cwiseSqrt().mean();
  if (!(sigma > 0.0)) throw DegenerateSample("sample has zero spread");
  return sigma * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(samples.cols()) + 4.0));
}

KdeModel::KdeModel(Matrix samples, Kernel kernel, double bandwidth)
    : samples_(std::move(samples)),
      kernel_(kernel),
      bandwidth_(bandwidth),
      log_norm_(kernel_log_normalizer(kernel, static_cast<int>(samples_.cols()), bandwidth)) {}

KdeModel KdeModel::fit(const Matrix& samples, Kernel kernel, BandwidthRule rule) {
  if (samples.rows() < 1 || samples.cols() < 1) throw EmptySampleError("kde needs samples");
  double h = 0.0;
  if (rule.manual) {
    h = *rule.manual;
    if (!(h > 0.0) || !std::isfinite(h)) throw RangeError("bandwidth must be positive");
  } else {
    h = scott_silverman_bandwidth(samples);
  }
  return KdeModel(samples, kernel, h);
}

double KdeModel::log_density(const Eigen::Ref<const Vec>& x) const {
  check_dim(x.size());
  const auto n = samples_.rows();
  const Vec u = (samples_.rowwise() - x.transpose()).rowwise().norm() / bandwidth_;
  double log_sum = 0.0;
  if (kernel_ == Kernel::Gaussian) {
    log_sum = log_sum_exp((-0.5 * u.array().square()).matrix());
  } else if (kernel_ == Kernel::Exponential) {
    log_sum = log_sum_exp(-u);
  } else {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (u[i] <= 1.0) s += compact_profile(kernel_, u[i]);
    if (!(s > 0.0)) return kLogDensityFloor;
    log_sum = std::log(s);
  }
  return std::max(kLogDensityFloor, log_norm_ + log_sum - std::log(static_cast<double>(n)));
}

Vec KdeModel::log_density_rows(const Matrix& points) const {
  check_dim(points.cols());
  Vec out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out[i] = log_density(points.row(i).transpose());
  return out;
}

Matrix KdeModel::sample(std::size_t n, Rng& rng) const {
  const int d = dim();
  std::uniform_int_distribution<Eigen::Index> pick(0, samples_.rows() - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(static_cast<double>(d), 1.0);
  Matrix out(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const Vec center = samples_.row(pick(rng)).transpose();
    Vec offset(d);
    if (kernel_ == Kernel::Gaussian) {
      for (int j = 0; j < d; ++j) offset[j] = normal(rng);
    } else if (kernel_ == Kernel::Exponential) {
      offset = gamma(rng) * uniform_direction(d, rng);
    } else {
      // Uniform point in the unit ball, accepted with probability profile(u).
      double u = 0.0;
      do {
        u = std::pow(unif(rng), 1.0 / d);
      } while (unif(rng) > compact_profile(kernel_, u));
      offset = u * uniform_direction(d, rng);
    }
    out.row(i) = (center + bandwidth_ * offset).transpose();
  }
  return out;
}

}  // namespace boostdens
