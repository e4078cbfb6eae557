#include <gtest/gtest.h>

#include <cmath>

#include "boostdens/dist.hpp"
#include "boostdens/metrics.hpp"

using namespace boostdens;

namespace {

GaussianMixture normal(Vec mean, double sigma) { return GaussianMixture({{std::move(mean), sigma, 1.0}}); }

// Zero density everywhere.
struct Vacuum final : Density {
  int dim() const override { return 1; }
  double log_density(const Eigen::Ref<const Vec>&) const override { return -INFINITY; }
};

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// KL(N(m1, s1^2 I), N(m2, s2^2 I)) in d dimensions.
double gaussian_kl(const Vec& m1, double s1, const Vec& m2, double s2) {
  const double d = m1.size();
  return d * (std::log(s2 / s1) + s1 * s1 / (2 * s2 * s2) - 0.5) + (m1 - m2).squaredNorm() / (2 * s2 * s2);
}

}  // namespace

TEST(Metrics, KlGridSelfIsZero) {
  const auto ring = mixture_ring(8, 5.0, 1.0);
  const double kl = kl_grid(ring, ring, ring.default_grid(200));
  EXPECT_NEAR(kl, 0.0, 1e-6);
  EXPECT_GE(kl, -1e-6);
}

TEST(Metrics, KlGridGaussianOracle) {
  struct Case {
    Vec m1;
    double s1;
    Vec m2;
    double s2;
  };
  const std::vector<Case> cases{{v2(0, 0), 1, v2(1, 0), 1},
                                {v2(0, 0), 1, v2(0, 0), 2},
                                {v2(0, 0), 2, v2(0, 0), 1},
                                {v2(1, -1), 1, v2(-0.5, 0.5), 1.5},
                                {v2(0, 0), 0.5, v2(2, 1), 1}};
  const GridSpec grid = GridSpec::centered(2, 14.0, 400);
  for (const auto& c : cases) {
    const double truth = gaussian_kl(c.m1, c.s1, c.m2, c.s2);
    EXPECT_NEAR(kl_grid(normal(c.m1, c.s1), normal(c.m2, c.s2), grid), truth, 1e-3);
  }
  EXPECT_NEAR(gaussian_kl(v2(0, 0), 1, v2(1, 0), 1), 0.5, 1e-15);
  EXPECT_NEAR(gaussian_kl(v2(0, 0), 1, v2(0, 0), 2), 2 * (std::log(2.0) - 3.0 / 8.0), 1e-15);
}

TEST(Metrics, KlGridRejectsHighDimensions) {
  const auto a = normal(Vec::Zero(3), 1.0);
  GridSpec g;
  g.lo = Vec::Constant(3, -1);
  g.hi = Vec::Constant(3, 1);
  EXPECT_THROW(kl_grid(a, a, g), DimensionError);
}

TEST(Metrics, KlFloorKeepsValuesFinite) {
  const Vec lp = Vec::Constant(4, -1.0);
  Vec lq = Vec::Constant(4, -1.0);
  lq(0) = -std::numeric_limits<double>::infinity();
  EXPECT_TRUE(std::isfinite(kl_grid_values(lp, lq, 0.25)));
}

TEST(Metrics, NllSelfIsOne) {
  const auto ring = mixture_ring(8, 5.0, 1.0);
  const double v = nll_normalized(ring, ring, 100000, 1);
  EXPECT_NEAR(v, 1.0, 1e-12);  // same sample in numerator and denominator
  Rng rng(2);
  const Matrix x = ring.sample(2000, rng);
  EXPECT_NEAR(nll_normalized_on(x, ring, ring), 1.0, 2 * nll_normalized_std_error(x, ring, ring) + 1e-12);
}

TEST(Metrics, NllBroaderQAboveOne) {
  const auto p = normal(Vec::Zero(2), 1.0), q = normal(Vec::Zero(2), 2.0);
  EXPECT_GT(nll_normalized(p, q, 20000, 3), 1.0);
}

TEST(Metrics, NllErrors) {
  // Zero-entropy Gaussian: log p(+-sigma) = 1/2 - 1/2 = 0, so E_P log p = 0.
  const double sigma = 1.0 / std::sqrt(2 * M_PI * std::exp(1.0));
  const auto p = normal(Vec::Zero(1), sigma);
  const Matrix x = (Matrix(2, 1) << sigma, -sigma).finished();
  EXPECT_THROW(nll_normalized_on(x, p, p), DegenerateRange);
  EXPECT_THROW(nll_normalized(p, p, 0, 1), EmptySampleError);
  EXPECT_THROW(nll_normalized_on(Matrix::Zero(1, 1), normal(Vec::Zero(1), 1.0), Vacuum()), NonFiniteLogDensity);
}

TEST(Metrics, AccuracyConventions) {
  Vec w(1);
  w << 1.0;
  const auto c = MlpClassifier::linear(w);
  const Matrix p = Matrix::Constant(5, 1, 2.0), q = Matrix::Constant(5, 1, -2.0);
  EXPECT_DOUBLE_EQ(accuracy(c, p, q), 1.0);
  const auto zero = MlpClassifier::linear(Vec::Zero(1));
  EXPECT_DOUBLE_EQ(accuracy(zero, p, q), 0.5);
}

TEST(Metrics, Quantile) {
  Vec v(5);
  v << 5, 1, 4, 2, 3;
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.125), 1.5);
  EXPECT_THROW(quantile(Vec(), 0.5), EmptySampleError);
}

TEST(Metrics, CoverageSelf) {
  const auto ring = mixture_ring(8, 5.0, 1.0);
  EXPECT_NEAR(coverage(ring, ring, 0.95, 20000, 20000, 5), 0.95, 0.02);
}

TEST(Metrics, CoverageBroadQ) {
  const auto ring = mixture_ring(8, 5.0, 1.0);
  EXPECT_GT(coverage(ring, normal(Vec::Zero(2), 10.0), 0.95, 20000, 20000, 6), 0.97);
}

TEST(Metrics, CoverageSingleMode) {
  const auto ring = mixture_ring(8, 5.0, 1.0);
  const auto one = normal(ring.means().row(0).transpose(), 1.0);
  EXPECT_NEAR(coverage(ring, one, 0.95, 20000, 20000, 7), 0.95 / 8, 0.02);
}

TEST(Metrics, CoverageMonotoneInvariance) {
  Rng rng(8);
  const Vec qq = standard_normal(500, 1, rng).col(0), qp = standard_normal(300, 1, rng).col(0);
  const double a = coverage_from_values(qq, qp, 0.8);
  // log(2 dQ) = log 2 + log dQ.
  const double b = coverage_from_values(qq.array() + std::log(2.0), qp.array() + std::log(2.0), 0.8);
  EXPECT_DOUBLE_EQ(a, b);
  EXPECT_THROW(coverage_from_values(qq, qp, 1.0), RangeError);
}
