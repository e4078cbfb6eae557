#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <nlohmann/json.hpp>

#include "boostdens/dist.hpp"
#include "boostdens/grid.hpp"

using namespace boostdens;

namespace {

double grid_mass(const Density& d, const GridSpec& g) {
  const Vec lp = d.log_density_rows(g.points());
  return lp.array().exp().sum() * g.cell_volume();
}

// log N(x; mean, I) in closed form.
double std_normal_log_pdf(const Vec& x, const Vec& mean) {
  return -0.5 * x.size() * std::log(2 * std::numbers::pi) - 0.5 * (x - mean).squaredNorm();
}

ZEstimator grid_z(int dim, double half = 10.0, int points = 400) {
  ZEstimator z;
  z.kind = ZEstimatorKind::Grid;
  z.grid = GridSpec::centered(dim, half, points);
  return z;
}

}  // namespace

TEST(Grid, Validation) {
  EXPECT_THROW(GridSpec::centered(3, 1.0, 50).validate(), DimensionError);
  EXPECT_THROW(GridSpec::centered(2, 1.0, 10).validate(), RangeError);
  GridSpec g = GridSpec::centered(1, 1.0, 20);
  g.hi(0) = g.lo(0);
  EXPECT_THROW(g.validate(), RangeError);
}

TEST(Grid, MidpointsAndVolume) {
  const GridSpec g = GridSpec::centered(2, 1.0, 20);
  const Matrix pts = g.points();
  EXPECT_EQ(pts.rows(), 400);
  EXPECT_NEAR(g.cell_volume(), 0.01, 1e-15);
  EXPECT_NEAR(pts(0, 0), -0.95, 1e-12);
  EXPECT_NEAR(pts(1, 1), -0.85, 1e-12);  // last axis fastest
}

TEST(Dist, StandardNormalAtOrigin) {
  const auto g = DiagonalGaussian::isotropic(2, 1.0);
  EXPECT_NEAR(g.log_density(Vec::Zero(2)), -std::log(2 * std::numbers::pi), 1e-14);
  EXPECT_NEAR(g.log_density(Vec::Zero(2)), -1.837877, 1e-6);
  EXPECT_THROW(g.log_density(Vec::Zero(3)), DimensionError);
}

TEST(Dist, RingPlacement) {
  const auto one = mixture_ring(1, 0.0, 1.0);
  EXPECT_NEAR(one.log_density(Vec::Zero(2)), -std::log(2 * std::numbers::pi), 1e-14);
  const auto ring = mixture_ring(8, 5.0, 1.0);
  const auto& means = ring.means();
  ASSERT_EQ(means.rows(), 8);
  for (int k = 0; k < 8; ++k) {
    EXPECT_NEAR(means.row(k).norm(), 5.0, 1e-12);
    EXPECT_NEAR(std::atan2(means(k, 1), means(k, 0)), std::remainder(2 * std::numbers::pi * k / 8, 2 * std::numbers::pi),
                1e-12);
  }
  const auto four = mixture_ring(4, 3.0, 1.0);
  EXPECT_LT((four.means().row(0) + four.means().row(2)).norm(), 1e-12);
  EXPECT_LT((four.means().row(1) + four.means().row(3)).norm(), 1e-12);
}

TEST(Dist, RandomMixture) {
  const auto a = mixture_random(2, 8, 10.0, 1.0, 7), b = mixture_random(2, 8, 10.0, 1.0, 7);
  ASSERT_EQ(a.means().rows(), 8);
  EXPECT_TRUE(a.means() == b.means());
  EXPECT_LE(a.means().cwiseAbs().maxCoeff(), 10.0);
  EXPECT_FALSE(mixture_random(2, 8, 10.0, 1.0, 8).means() == a.means());
  const auto sep = mixture_random(2, 2, 10.0, 0.5, 3);
  for (Eigen::Index k = 0; k < sep.means().rows(); ++k) {
    const Vec m = sep.means().row(k).transpose();
    Vec off = m;
    off(0) += 1.5;
    EXPECT_GE(sep.log_density(m), sep.log_density(off));
  }
}

TEST(Dist, MixtureValidation) {
  EXPECT_THROW(GaussianMixture({{Vec::Zero(2), 1.0, 0.5}}), RangeError);
  EXPECT_THROW(GaussianMixture({{Vec::Zero(2), -1.0, 1.0}}), RangeError);
  EXPECT_THROW(GaussianMixture({{Vec::Zero(2), 1.0, 0.5}, {Vec::Zero(3), 1.0, 0.5}}), DimensionError);
}

TEST(Dist, MixtureNormalizesOnGrid) {
  const auto ring = mixture_ring(8, 5.0, 1.0);
  EXPECT_NEAR(grid_mass(ring, ring.default_grid(200)), 1.0, 1e-3);
}

TEST(Dist, MixtureSampleMoments) {
  const auto ring = mixture_ring(8, 5.0, 1.0);
  Rng rng(2);
  const Matrix x = ring.sample(40000, rng);
  EXPECT_NEAR(x.col(0).mean(), 0.0, 0.06);
  EXPECT_NEAR(x.col(1).mean(), 0.0, 0.06);
  // E|x|^2 = r^2 + d sigma^2 for every mode.
  EXPECT_NEAR(x.rowwise().squaredNorm().mean(), 27.0, 0.3);
}

TEST(Dist, DiagonalGaussianFit) {
  Rng rng(3);
  Matrix x = standard_normal(20000, 2, rng);
  x.col(0) = x.col(0).array() * 2.0 + 1.0;
  const auto g = DiagonalGaussian::fit(x);
  EXPECT_NEAR(g.mean()(0), 1.0, 0.05);
  EXPECT_NEAR(g.std()(0), 2.0, 0.05);
  EXPECT_NEAR(g.std()(1), 1.0, 0.03);
  EXPECT_THROW(DiagonalGaussian::fit(Matrix(1, 2)), DegenerateSample);
  EXPECT_THROW(DiagonalGaussian::fit(Matrix::Ones(5, 2)), DegenerateSample);
}

TEST(Dist, ZeroRoundsIsQ0) {
  const auto q0 = DiagonalGaussian::isotropic(2, 1.5);
  const BoostedDensity bd(q0);
  Vec x(2);
  x << 0.3, -1.2;
  EXPECT_DOUBLE_EQ(bd.log_density(x), q0.log_density(x));
  const auto np = natural_parameter_view(bd, x);
  EXPECT_EQ(np.alpha.size(), 0);
  EXPECT_EQ(np.c.size(), 0);
  EXPECT_EQ(np.cumulant, 0.0);
}

TEST(Dist, LinearTiltClosedForm) {
  Vec w(2);
  w << 1.0, -0.5;
  const double alpha = 0.7;
  const BoostedDensity bd0(DiagonalGaussian::isotropic(2, 1.0));
  const auto c = MlpClassifier::linear(w);
  const auto bd = push_round(bd0, c, alpha, grid_z(2));
  EXPECT_NEAR(bd.log_z(), alpha * alpha * w.squaredNorm() / 2, 1e-6);
  const Vec shift = alpha * w;
  Rng rng(4);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec x = standard_normal(1, 2, rng).row(0).transpose() * 2.0;
    worst = std::max(worst, std::abs(bd.log_density(x) - std_normal_log_pdf(x, shift)));
  }
  EXPECT_LT(worst, 1e-6);

  // Exact log Z gives agreement to rounding.
  const auto exact = bd0.with_round(c, alpha, alpha * alpha * w.squaredNorm() / 2);
  const Vec x = Vec::Ones(2);
  EXPECT_NEAR(exact.log_density(x), std_normal_log_pdf(x, shift), 1e-9);
}

TEST(Dist, LinearTiltMonteCarloEstimators) {
  Vec w(3);
  w << 0.5, 0.2, -0.4;
  const double alpha = 0.5, truth = alpha * alpha * w.squaredNorm() / 2;
  const BoostedDensity bd0(DiagonalGaussian::isotropic(3, 1.0));
  ZEstimator z;
  z.kind = ZEstimatorKind::ImportanceQ0;
  z.seed = 1;
  const auto imp = estimate_log_z(bd0, MlpClassifier::linear(w), alpha, z);
  EXPECT_NEAR(imp.log_z, truth, 4 * imp.std_error + 1e-12);
  z.kind = ZEstimatorKind::McPrev;
  const auto mc = estimate_log_z(bd0, MlpClassifier::linear(w), alpha, z);
  EXPECT_NEAR(mc.log_z, truth, 4 * mc.std_error + 1e-12);
  z.kind = ZEstimatorKind::Grid;
  EXPECT_THROW(estimate_log_z(bd0, MlpClassifier::linear(w), alpha, z), EstimatorUnavailable);
}

TEST(Dist, TrivialRoundsKeepZ) {
  Rng rng(5);
  const BoostedDensity bd0(DiagonalGaussian::isotropic(2, 1.0));
  const auto bd1 = push_round(bd0, MlpClassifier::linear(Vec::Ones(2)), 0.4, grid_z(2));
  const auto zero_c = MlpClassifier::zeros({2, 3, 1}, Activation::Tanh);
  const auto bd2 = push_round(bd1, zero_c, 0.9, grid_z(2));
  EXPECT_NEAR(bd2.log_z(), bd1.log_z(), 1e-12);
  const auto c = MlpClassifier::random({2, 4, 1}, Activation::Tanh, rng);
  const auto bd3 = push_round(bd1, c, 0.0, grid_z(2));
  EXPECT_EQ(bd3.log_z(), bd1.log_z());
  Vec x(2);
  x << 0.1, 0.2;
  EXPECT_NEAR(bd3.log_density(x), bd1.log_density(x), 1e-14);
}

TEST(Dist, AlphaRangeAndDimension) {
  const BoostedDensity bd0(DiagonalGaussian::isotropic(2, 1.0));
  EXPECT_THROW(push_round(bd0, MlpClassifier::linear(Vec::Ones(2)), 1.5, grid_z(2)), AlphaRangeError);
  EXPECT_THROW(push_round(bd0, MlpClassifier::linear(Vec::Ones(2)), -0.1, grid_z(2)), AlphaRangeError);
  EXPECT_THROW(push_round(bd0, MlpClassifier::linear(Vec::Ones(3)), 0.5, grid_z(2)), DimensionError);
}

TEST(Dist, NormalizationAfterEveryRound) {
  Rng rng(6);
  BoostedDensity bd(DiagonalGaussian::isotropic(2, 2.0));
  const GridSpec check = GridSpec::centered(2, 12.0, 300);
  for (int t = 0; t < 4; ++t) {
    const auto c = MlpClassifier::random({2, 5, 5, 1}, Activation::SELU, rng);
    bd = push_round(bd, c, 0.6, grid_z(2, 16.0, 400));
    const double mass = grid_mass(bd, check);
    EXPECT_GE(mass, 0.99);
    EXPECT_LE(mass, 1.01);
  }
}

TEST(Dist, McPrevAgreesWithGrid) {
  Rng rng(7);
  for (int inst = 0; inst < 20; ++inst) {
    BoostedDensity bd(DiagonalGaussian::isotropic(2, 1.0));
    bd = push_round(bd, MlpClassifier::random({2, 4, 1}, Activation::Tanh, rng), 0.5, grid_z(2));
    const auto c = MlpClassifier::random({2, 4, 1}, Activation::Tanh, rng);
    const auto g = estimate_log_z(bd, c, 0.5, grid_z(2));
    ZEstimator z;
    z.kind = ZEstimatorKind::McPrev;
    z.seed = 100 + inst;
    // Independent draws from Q_{t-1} so the standard error is honest.
    MhConfig mh;
    mh.n_samples = 4000;
    mh.n_chains = 4000;
    mh.seed = 200 + inst;
    z.prev_samples = bd.sample_mh(mh).samples;
    const auto m = estimate_log_z(bd, c, 0.5, z);
    EXPECT_NEAR(m.log_z, g.log_z, 3 * m.std_error + 1e-9) << "instance " << inst;
  }
}

TEST(Dist, NaturalParameters) {
  Rng rng(8);
  BoostedDensity bd(DiagonalGaussian::isotropic(2, 1.0));
  for (int t = 0; t < 3; ++t)
    bd = push_round(bd, MlpClassifier::random({2, 3, 1}, Activation::Softplus, rng), 0.3 + 0.2 * t, grid_z(2));
  Vec x(2);
  x << -0.4, 0.9;
  const auto np = natural_parameter_view(bd, x);
  ASSERT_EQ(np.alpha.size(), 3);
  const double rebuilt = np.alpha.dot(np.c) - np.cumulant + bd.q0().log_density(x);
  EXPECT_NEAR(rebuilt, bd.log_density(x), 1e-12);
  EXPECT_NEAR((2 * np.alpha).dot(np.c), 2 * np.alpha.dot(np.c), 1e-15);
}

TEST(Dist, JsonSnapshotRoundTrip) {
  Rng rng(9);
  BoostedDensity bd(DiagonalGaussian::isotropic(2, 1.0));
  bd = push_round(bd, MlpClassifier::random({2, 5, 1}, Activation::ReLU, rng), 0.5, grid_z(2));
  const auto back = density_from_json(nlohmann::json::parse(to_json(bd).dump()));
  Vec x(2);
  x << 0.5, 0.5;
  EXPECT_EQ(back.log_density(x), bd.log_density(x));
  EXPECT_EQ(back.size(), 1u);
  EXPECT_THROW(density_from_json(nlohmann::json{{"format", "nope"}}), ParseError);
  EXPECT_THROW(density_from_json(nlohmann::json::array()), ParseError);
}

TEST(Dist, BoostedSamplingDeterministic) {
  Rng rng(10);
  BoostedDensity bd(DiagonalGaussian::isotropic(2, 1.0));
  bd = push_round(bd, MlpClassifier::random({2, 3, 1}, Activation::Tanh, rng), 0.5, grid_z(2));
  Rng a(1), b(1);
  EXPECT_EQ(bd.sample(50, a), bd.sample(50, b));
}
