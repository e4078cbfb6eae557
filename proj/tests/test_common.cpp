#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "boostdens/common.hpp"

using namespace boostdens;

TEST(Common, DerivedSeedsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s)
    for (std::uint64_t k = 0; k < 50; ++k) seen.insert(derive_seed(s, k));
  EXPECT_EQ(seen.size(), 2500u);
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  Rng a = make_rng(1, 2), b = make_rng(1, 2);
  EXPECT_EQ(a(), b());
}

TEST(Common, LogSumExp) {
  Vec v(3);
  v << 1000.0, 1000.0, -1e300;
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
  Vec w(2);
  w << std::log(0.25), std::log(0.75);
  EXPECT_NEAR(log_sum_exp(w), 0.0, 1e-15);
  EXPECT_TRUE(std::isinf(log_sum_exp(Vec())));
  Vec ninf = Vec::Constant(2, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(log_sum_exp(ninf), -std::numeric_limits<double>::infinity());
}

TEST(Common, SoftplusAndSigmoid) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
  EXPECT_NEAR(softplus(3.0), std::log1p(std::exp(3.0)), 1e-14);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_NEAR(sigmoid(2.0) + sigmoid(-2.0), 1.0, 1e-15);
}

TEST(Common, StandardNormalShape) {
  Rng rng(5);
  const Matrix m = standard_normal(20000, 3, rng);
  EXPECT_EQ(m.rows(), 20000);
  EXPECT_EQ(m.cols(), 3);
  EXPECT_NEAR(m.mean(), 0.0, 0.02);
}
