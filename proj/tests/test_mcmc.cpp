#include <gtest/gtest.h>

#include <cmath>

#include "boostdens/dist.hpp"
#include "boostdens/mcmc.hpp"

using namespace boostdens;

namespace {

double std_normal(const Eigen::Ref<const Vec>& x) { return -0.5 * x.squaredNorm(); }

}  // namespace

TEST(Mcmc, StandardNormalMoments) {
  MhConfig cfg;
  cfg.n_samples = 100000;
  cfg.seed = 3;
  const auto res = rw_metropolis(std_normal, 2, cfg);
  ASSERT_EQ(res.samples.rows(), 100000);
  const Vec mean = res.samples.colwise().mean();
  const Matrix centered = res.samples.rowwise() - mean.transpose();
  const Vec var = centered.colwise().squaredNorm() / (res.samples.rows() - 1.0);
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(mean(k), 0.0, 0.05);
    EXPECT_NEAR(var(k), 1.0, 0.1);
  }
  EXPECT_GT(res.acceptance_rate, 0.0);
  EXPECT_LT(res.acceptance_rate, 1.0);
}

TEST(Mcmc, SmallProposalsAcceptAlmostAlways) {
  MhConfig cfg;
  cfg.n_samples = 2000;
  cfg.proposal_std = 1e-6;
  cfg.seed = 1;
  EXPECT_GT(rw_metropolis(std_normal, 2, cfg).acceptance_rate, 0.999);
}

TEST(Mcmc, ConstantLogDensityAcceptsEverything) {
  MhConfig cfg;
  cfg.n_samples = 500;
  cfg.burn_in = 10;
  cfg.seed = 2;
  const auto res = rw_metropolis([](const Eigen::Ref<const Vec>&) { return 0.0; }, 3, cfg);
  EXPECT_EQ(res.acceptance_rate, 1.0);
}

TEST(Mcmc, AdditiveConstantInvariance) {
  MhConfig cfg;
  cfg.n_samples = 1000;
  cfg.burn_in = 100;
  cfg.seed = 9;
  const auto a = rw_metropolis(std_normal, 2, cfg);
  const auto b = rw_metropolis([](const Eigen::Ref<const Vec>& x) { return std_normal(x) + 7.0; }, 2, cfg);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.acceptance_rate, b.acceptance_rate);
}

TEST(Mcmc, DeterministicAndSeedSensitive) {
  MhConfig cfg;
  cfg.n_samples = 64;
  cfg.seed = 4;
  const auto a = rw_metropolis(std_normal, 2, cfg), b = rw_metropolis(std_normal, 2, cfg);
  EXPECT_EQ(a.samples, b.samples);
  cfg.seed = 5;
  EXPECT_NE(rw_metropolis(std_normal, 2, cfg).samples, a.samples);
}

TEST(Mcmc, FixedStartAndErrors) {
  MhConfig cfg;
  cfg.n_samples = 8;
  cfg.burn_in = 0;
  cfg.proposal_std = 1e-12;
  cfg.fixed_start = Vec::Constant(2, 3.0);
  const auto res = rw_metropolis(std_normal, 2, cfg);
  EXPECT_NEAR(res.samples(0, 0), 3.0, 1e-9);

  cfg.fixed_start = Vec::Constant(3, 3.0);
  EXPECT_THROW(rw_metropolis(std_normal, 2, cfg), DimensionError);
  cfg.fixed_start.reset();
  cfg.proposal_std = 0.0;
  EXPECT_THROW(rw_metropolis(std_normal, 2, cfg), ConfigError);
  cfg.proposal_std = 1.0;
  EXPECT_THROW(rw_metropolis([](const Eigen::Ref<const Vec>&) { return NAN; }, 2, cfg), NonFiniteLogDensity);
}

TEST(Mcmc, ZeroSamples) {
  MhConfig cfg;
  cfg.n_samples = 0;
  const auto res = rw_metropolis(std_normal, 2, cfg);
  EXPECT_EQ(res.samples.rows(), 0);
  EXPECT_EQ(res.samples.cols(), 2);
}

TEST(Mcmc, MixtureFirstMomentOverSeeds) {
  // Two-mode mixture with mean (1, 0); chains start from N(0, 9 I).
  const GaussianMixture mix({{(Vec(2) << -1.0, 0.0).finished(), 1.0, 0.25},
                             {(Vec(2) << 1.667, 0.0).finished(), 1.0, 0.75}});
  const double truth = 0.25 * -1.0 + 0.75 * 1.667;
  int inside = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    MhConfig cfg;
    cfg.n_samples = 4000;
    cfg.n_chains = 200;
    cfg.seed = s;
    const auto res = rw_metropolis([&](const Eigen::Ref<const Vec>& x) { return mix.log_density(x); }, 2, cfg,
                                   [](std::size_t n, Rng& rng) { return Matrix(standard_normal(n, 2, rng) * 3.0); });
    const Vec x0 = res.samples.col(0);
    const double mean = x0.mean();
    const double sd = std::sqrt((x0.array() - mean).square().sum() / (x0.size() - 1.0));
    // Standard error inflated for chain autocorrelation over 20 kept states.
    const double se = sd / std::sqrt(static_cast<double>(cfg.n_chains));
    inside += std::abs(mean - truth) <= 3 * se;
  }
  EXPECT_GE(inside, 19);
}
