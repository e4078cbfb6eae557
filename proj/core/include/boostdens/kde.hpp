#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "boostdens/dist.hpp"

namespace boostdens {

enum class Kernel { Gaussian, Epanechnikov, Tophat, Exponential, Triangular, Cosine };

inline constexpr std::array<Kernel, 6> kAllKernels{Kernel::Gaussian,    Kernel::Epanechnikov, Kernel::Tophat,
                                                   Kernel::Exponential, Kernel::Triangular,   Kernel::Cosine};

std::string_view to_string(Kernel k);
/// Case-insensitive; throws ConfigError for unknown names.
Kernel kernel_from_string(std::string_view name);

/// Volume of the unit ball in d dimensions.
double unit_ball_volume(int d);

/// Log of the constant that makes the radial kernel with bandwidth h integrate
/// to 1 over R^d.  The profiles, with u = |x| / h, are exp(-u^2/2), 1 - u^2,
/// 1, exp(-u), 1 - u and cos(pi u / 2); all but the Gaussian and exponential
/// vanish for u > 1.
double kernel_log_normalizer(Kernel k, int d, double h);

struct BandwidthRule {
  /// Fixed bandwidth; when empty, h = mean per-axis std * n^(-1/(d+4)).
  std::optional<double> manual;

  static BandwidthRule scott_silverman() { return {}; }
  static BandwidthRule fixed(double h) { return {h}; }
};

/// Scott/Silverman bandwidth.  Throws DegenerateSample for n < 2 or zero spread.
double scott_silverman_bandwidth(const Matrix& samples);

/// Radial kernel density estimate (1/n) sum_i K_h(x - x_i).
class KdeModel final : public Density {
 public:
  static KdeModel fit(const Matrix& samples, Kernel kernel, BandwidthRule rule = BandwidthRule::scott_silverman());

  int dim() const override { return static_cast<int>(samples_.cols()); }
  /// Floored at kLogDensityFloor outside the support of compact kernels.
  double log_density(const Eigen::Ref<const Vec>& x) const override;
  Vec log_density_rows(const Matrix& points) const override;
  bool can_sample() const override { return true; }
  Matrix sample(std::size_t n, Rng& rng) const override;

  Kernel kernel() const { return kernel_; }
  double bandwidth() const { return bandwidth_; }
  const Matrix& samples() const { return samples_; }
  /// Parameter count as reported for comparisons: n * d sample coordinates.
  std::size_t parameter_count() const { return static_cast<std::size_t>(samples_.size()); }

 private:
  KdeModel(Matrix samples, Kernel kernel, double bandwidth);

  Matrix samples_;
  Kernel kernel_;
  double bandwidth_;
  double log_norm_;
};

}  // namespace boostdens
