#include "boostdens/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace boostdens {

double kl_grid_values(const Vec& log_p, const Vec& log_q, double cell_volume) {
  if (log_p.size() != log_q.size()) throw DimensionError("kl: value vectors differ in size");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < log_p.size(); ++i) {
    const double lp = std::max(log_p[i], kLogDensityFloor);
    const double lq = std::max(log_q[i], kLogDensityFloor);
    sum += std::exp(lp) * (lp - lq);
  }
  return sum * cell_volume;
}

double kl_grid(const Density& p, const Density& q, const GridSpec& grid) {
  if (p.dim() > 2 || q.dim() > 2) throw DimensionError("grid KL is limited to d <= 2");
  if (p.dim() != q.dim() || grid.dim() != p.dim()) throw DimensionError("kl: dimensions disagree");
  const Matrix pts = grid.points();
  return kl_grid_values(p.log_density_rows(pts), q.log_density_rows(pts), grid.cell_volume());
}

namespace {

struct NllMeans {
  Vec lq;
  Vec lp;
};

NllMeans nll_terms(const Matrix& p_samples, const Density& p, const Density& q) {
  if (p_samples.rows() == 0) throw EmptySampleError("nll needs at least one sample");
  NllMeans m{q.log_density_rows(p_samples), p.log_density_rows(p_samples)};
  if (!m.lq.allFinite()) throw NonFiniteLogDensity("nll: model log-density is not finite at a sample");
  if (!m.lp.allFinite()) throw NonFiniteLogDensity("nll: target log-density is not finite at a sample");
  if (std::abs(m.lp.mean()) < 1e-3) throw DegenerateRange("nll: E_P log p is too close to 0 to normalize by");
  return m;
}

}  // namespace

double nll_normalized_on(const Matrix& p_samples, const Density& p, const Density& q) {
  const NllMeans m = nll_terms(p_samples, p, q);
  return m.lq.mean() / m.lp.mean();
}

double nll_normalized(const Density& p, const Density& q, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw EmptySampleError("nll needs n >= 1");
  Rng rng = make_rng(seed, 0x6e6c6c);
  return nll_normalized_on(p.sample(n, rng), p, q);
}

double nll_normalized_std_error(const Matrix& p_samples, const Density& p, const Density& q) {
  const NllMeans m = nll_terms(p_samples, p, q);
  const double n = static_cast<double>(m.lq.size());
  if (n < 2) return 0.0;
  const double a = m.lq.mean(), b = m.lp.mean();
  // Var(A/B) ~ (Var A - 2 r Cov + r^2 Var B) / B^2, with r = A/B.
  const Vec da = m.lq.array() - a, db = m.lp.array() - b;
  const double va = da.squaredNorm() / (n - 1), vb = db.squaredNorm() / (n - 1), cov = da.dot(db) / (n - 1);
  const double r = a / b;
  return std::sqrt(std::max(0.0, va - 2 * r * cov + r * r * vb) / n) / std::abs(b);
}

double accuracy(const MlpClassifier& c, const Matrix& p_samples, const Matrix& q_samples) {
  if (p_samples.rows() == 0 || q_samples.rows() == 0) throw EmptySampleError("accuracy needs nonempty samples");
  return accuracy(c.evaluate(p_samples), c.evaluate(q_samples));
}

double quantile(Vec values, double prob) {
  if (values.size() == 0) throw EmptySampleError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw RangeError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const auto hi = std::min<Eigen::Index>(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double coverage_from_values(const Vec& q_on_q, const Vec& q_on_p, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw RangeError("coverage level must lie in (0, 1)");
  if (q_on_p.size() == 0) throw EmptySampleError("coverage needs P draws");
  const double beta = quantile(q_on_q, 1.0 - kappa);
  return (q_on_p.array() > beta).cast<double>().mean();
}

double coverage(const Density& p, const Density& q, double kappa, std::size_t n_q, std::size_t n_p,
                std::uint64_t seed) {
  Rng rng_q = make_rng(seed, 0x636f71);
  Rng rng_p = make_rng(seed, 0x636f70);
  const Matrix xq = q.sample(n_q, rng_q);
  const Matrix xp = p.sample(n_p, rng_p);
  return coverage_from_values(q.log_density_rows(xq), q.log_density_rows(xp), kappa);
}

}  // namespace boostdens
