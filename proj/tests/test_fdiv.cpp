#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "boostdens/common.hpp"
#include "boostdens/fdiv.hpp"

using namespace boostdens;
using namespace boostdens::fdiv;

namespace {

std::vector<double> dirichlet(Rng& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) s += (x = e(rng) + 1e-3);
  for (auto& x : v) x /= s;
  return v;
}

// Hand-written generators, independent of the library's table.
double oracle_f(Divergence d, double t) {
  switch (d) {
    case Divergence::KL: return t * std::log(t);
    case Divergence::ReverseKL: return -std::log(t);
    case Divergence::Hellinger: return (std::sqrt(t) - 1) * (std::sqrt(t) - 1);
    case Divergence::Pearson: return (t - 1) * (t - 1);
    case Divergence::GAN: return t * std::log(t) - (t + 1) * std::log(t + 1);
  }
  return NAN;
}

double oracle_divergence(Divergence d, const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += q[i] * oracle_f(d, p[i] / q[i]);
  return s;
}

}  // namespace

TEST(Fdiv, TableExamples) {
  const auto kl = DivergenceSpec::make(Divergence::KL);
  EXPECT_DOUBLE_EQ(eval_table(kl, Column::f, 1.0), 0.0);
  EXPECT_NEAR(eval_table(kl, Column::conj_of_prime, 3.0), 3.0, 1e-12);
  EXPECT_NEAR(eval_table(kl, Column::f, 2.0), 1.386294, 1e-6);
}

TEST(Fdiv, OutOfDomainThrows) {
  const auto kl = DivergenceSpec::make(Divergence::KL);
  EXPECT_THROW(eval_table(kl, Column::f, 0.0), DomainError);
  EXPECT_THROW(eval_table(kl, Column::f, -1.0), DomainError);
  EXPECT_THROW(eval_table(DivergenceSpec::make(Divergence::ReverseKL), Column::conj, 0.5), DomainError);
  EXPECT_THROW(eval_table(DivergenceSpec::make(Divergence::GAN), Column::conj, 0.1), DomainError);
  EXPECT_NO_THROW(eval_table(kl, Column::conj, -50.0));
}

TEST(Fdiv, DiscreteExamples) {
  const DiscreteDistPair same({0.3, 0.7}, {0.3, 0.7});
  EXPECT_NEAR(f_divergence_discrete(DivergenceSpec::make(Divergence::KL), same), 0.0, 1e-15);
  const DiscreteDistPair pair({0.5, 0.5}, {0.25, 0.75});
  const double kl_expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  EXPECT_NEAR(f_divergence_discrete(DivergenceSpec::make(Divergence::KL), pair), kl_expected, 1e-12);
  EXPECT_NEAR(kl_expected, 0.143841, 1e-6);
  EXPECT_NEAR(f_divergence_discrete(DivergenceSpec::make(Divergence::Pearson), pair), 1.0 / 3.0, 1e-12);
}

TEST(Fdiv, ZeroMassInPDoesNotLeaveDomainForReverseKl) {
  const DiscreteDistPair pair({0.0, 1.0}, {0.5, 0.5});
  EXPECT_THROW(f_divergence_discrete(DivergenceSpec::make(Divergence::ReverseKL), pair), DomainError);
}

TEST(Fdiv, PairValidation) {
  EXPECT_THROW(DiscreteDistPair({0.5, 0.5}, {1.0, 0.0}), DomainError);
  EXPECT_THROW(DiscreteDistPair({0.5, 0.6}, {0.5, 0.5}), DomainError);
  EXPECT_THROW(DiscreteDistPair({1.0}, {0.5, 0.5}), DomainError);
  EXPECT_THROW(DiscreteDistPair({}, {}), DomainError);
}

TEST(Fdiv, VariationalExamples) {
  const auto kl = DivergenceSpec::make(Divergence::KL);
  const DiscreteDistPair pair({0.5, 0.5}, {0.25, 0.75});
  const std::vector<double> ones{1.0, 1.0};
  const DiscreteDistPair same({0.5, 0.5}, {0.5, 0.5});
  EXPECT_NEAR(variational_objective_exact(kl, same, ones), 0.0, 1e-15);
  const auto ratio = pair.ratio();
  EXPECT_NEAR(variational_objective_exact(kl, pair, ratio), 0.143841, 1e-6);
  std::vector<double> shrunk{0.9 * ratio[0], 0.9 * ratio[1]};
  EXPECT_LT(variational_objective_exact(kl, pair, shrunk), 0.143841);
}

TEST(Fdiv, SampleMeanObjectiveMatchesExactOnEnumeratedSamples) {
  // P-sample {0,1} and Q-sample {0,1,1,1} represent the pair exactly.
  const auto kl = DivergenceSpec::make(Divergence::KL);
  const DiscreteDistPair pair({0.5, 0.5}, {0.25, 0.75});
  const auto r = pair.ratio();
  const std::vector<double> on_p{r[0], r[1]};
  const std::vector<double> on_q{r[0], r[1], r[1], r[1]};
  EXPECT_NEAR(variational_objective(kl, on_p, on_q), variational_objective_exact(kl, pair, r), 1e-14);
  const std::vector<double> bad{-1.0};
  EXPECT_THROW(variational_objective(kl, bad, on_q), DomainError);
  EXPECT_THROW(variational_objective(kl, {}, on_q), EmptySampleError);
}

TEST(Fdiv, VariationalBoundProperty) {
  Rng rng(11);
  std::uniform_int_distribution<std::size_t> size(2, 10);
  std::uniform_real_distribution<double> jitter(0.2, 3.0);
  for (Divergence d : kAllDivergences) {
    const auto spec = DivergenceSpec::make(d);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = size(rng);
      const auto p = dirichlet(rng, n), q = dirichlet(rng, n);
      const DiscreteDistPair pair(p, q);
      const double brute = oracle_divergence(d, p, q);
      ASSERT_NEAR(f_divergence_discrete(spec, pair), brute, 1e-10 * std::max(1.0, std::abs(brute)));
      const auto u = pair.ratio();
      ASSERT_NEAR(variational_objective_exact(spec, pair, u), brute, 1e-10 * std::max(1.0, std::abs(brute)))
          << to_string(d);
      std::vector<double> v = u;
      for (auto& x : v) x *= jitter(rng);
      ASSERT_LE(variational_objective_exact(spec, pair, v), brute + 1e-12) << to_string(d);
    }
  }
}

TEST(Fdiv, FenchelYoungAndConvexity) {
  for (Divergence d : kAllDivergences) {
    const auto spec = DivergenceSpec::make(d);
    for (double t = 0.05; t < 20.0; t *= 1.13) {
      const double fp = eval_table(spec, Column::prime, t);
      const double lhs = eval_table(spec, Column::f, t) + eval_table(spec, Column::conj, fp);
      EXPECT_NEAR(lhs, t * fp, 1e-10 * std::max(1.0, std::abs(t * fp))) << to_string(d) << " t=" << t;
      EXPECT_NEAR(eval_table(spec, Column::conj_of_prime, t), eval_table(spec, Column::conj, fp),
                  1e-12 * std::max(1.0, std::abs(fp)));
      const double h = 0.01 * t;
      const double mid = eval_table(spec, Column::f, t);
      EXPECT_LE(2 * mid, eval_table(spec, Column::f, t - h) + eval_table(spec, Column::f, t + h) + 1e-12);
    }
  }
}

TEST(Fdiv, GanRecovery) {
  const auto gan = DivergenceSpec::make(Divergence::GAN);
  Rng rng(3);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int i = 0; i < 1000; ++i) {
    const double c = u(rng);
    const double s = 1.0 / (1.0 + std::exp(-c));
    const double d = isomorphisms(c).d;
    EXPECT_NEAR(eval_table(gan, Column::prime, d), std::log(s), 1e-10);
    EXPECT_NEAR(eval_table(gan, Column::conj_of_prime, d), -std::log(1.0 - s), 1e-10);
  }
}

TEST(Fdiv, Isomorphisms) {
  auto a = isomorphisms(0.0);
  EXPECT_DOUBLE_EQ(a.D, 0.5);
  EXPECT_DOUBLE_EQ(a.d, 1.0);
  a = isomorphisms(std::log(2.0));
  EXPECT_NEAR(a.D, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(a.d, 2.0, 1e-14);
  a = isomorphisms(-std::log(2.0));
  EXPECT_NEAR(a.D, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(a.d, 0.5, 1e-15);
  EXPECT_NEAR(phi(0.75), 3.0, 1e-15);
  const auto big = isomorphisms(800.0);
  EXPECT_EQ(big.D, 1.0);
  EXPECT_TRUE(std::isinf(big.d));
}
