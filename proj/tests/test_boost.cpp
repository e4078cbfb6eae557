#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "boostdens/boost.hpp"
#include "boostdens/dist.hpp"
#include "boostdens/metrics.hpp"
#include "boostdens/theory.hpp"

using namespace boostdens;

namespace {

BoostConfig small_config(std::uint64_t seed) {
  BoostConfig cfg;
  cfg.rounds = 3;
  cfg.n_p = 300;
  cfg.n_q = 300;
  cfg.train.epochs = 40;
  cfg.sampler.burn_in = 200;
  cfg.metrics.kl_grid = GridSpec::centered(2, 10.0, 80);
  cfg.z_grid = GridSpec::centered(2, 12.0, 120);
  cfg.seed = seed;
  return cfg;
}

// Cell masses of a density on a grid, renormalized to sum to one.
std::vector<double> cell_masses(const Vec& log_density) {
  const double m = log_density.maxCoeff();
  Vec w = (log_density.array() - m).exp();
  w /= w.sum();
  return {w.data(), w.data() + w.size()};
}

}  // namespace

TEST(Boost, WlaStepExamples) {
  auto s = step_size_wla(0.0, 1.0);
  EXPECT_EQ(s.alpha, 0.0);
  EXPECT_FALSE(s.wla_satisfied);
  s = step_size_wla(0.5, 1.0);
  EXPECT_NEAR(s.alpha, 0.549306, 1e-6);
  EXPECT_EQ(s.regime, Regime::Regular);
  s = step_size_wla(0.9, 1.0);
  EXPECT_EQ(s.alpha, 1.0);
  EXPECT_EQ(s.regime, Regime::Clamped);
  s = step_size_wla(1.0, 1.0);
  EXPECT_EQ(s.alpha, 1.0);
  EXPECT_TRUE(std::isfinite(step_size_wla(-1.0, 1.0).alpha));
  EXPECT_THROW(step_size_wla(0.5, 0.0), RangeError);
}

TEST(Boost, RegimeBoundaryIsTanh) {
  for (double c = 0.05; c < 3.0; c += 0.05) {
    const double edge = mu_c_sup(c);
    EXPECT_EQ(step_size_wla(edge + 1e-6, c).regime, Regime::Clamped) << c;
    EXPECT_EQ(step_size_wla(edge - 1e-6, c).regime, Regime::Regular) << c;
    EXPECT_NEAR(step_size_wla(edge, c).alpha, 1.0, 1e-9);
    // alpha is monotone in the edge
    EXPECT_LE(step_size_wla(0.3 * edge, c).alpha, step_size_wla(0.6 * edge, c).alpha);
  }
}

TEST(Boost, MuCSup) {
  EXPECT_NEAR(mu_c_sup(std::log(2.0) / 2), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(mu_c_sup(1.0), 0.761594, 1e-6);
  EXPECT_NEAR(mu_c_sup(1e-12), 0.0, 1e-11);
}

TEST(Boost, EwlaSampleSizes) {
  // kappa = (1/3)(2/3)/2 = 1/9, so m >= 8100 ln(800) = 54145.5...
  const auto m = ewla_sample_sizes(0.1, 0.1, std::log(2.0) / 2, 10, 0.05);
  EXPECT_EQ(m.m_p, 54146u);
  EXPECT_EQ(m.m_q, 54146u);
  const auto half = ewla_sample_sizes(0.2, 0.05, std::log(2.0) / 2, 10, 0.05);
  EXPECT_EQ(half.m_p, static_cast<std::size_t>(std::ceil(8100.0 * std::log(800.0) / 4)));
  EXPECT_EQ(half.m_q, static_cast<std::size_t>(std::ceil(8100.0 * std::log(800.0) * 4)));
  EXPECT_THROW(ewla_sample_sizes(0.1, 0.1, 0.3, 10, 1.5), RangeError);
  EXPECT_THROW(ewla_sample_sizes(0.0, 0.1, 0.3, 10, 0.05), RangeError);
  EXPECT_THROW(ewla_sample_sizes(0.1, 1.1, 0.3, 10, 0.05), RangeError);
  EXPECT_THROW(ewla_sample_sizes(0.1, 0.1, 0.0, 10, 0.05), RangeError);
  EXPECT_THROW(ewla_sample_sizes(0.1, 0.1, 0.3, 0, 0.05), RangeError);
}

TEST(Boost, PredictedDecrease) {
  EdgeEstimates e;
  e.mu_p_hat = 0.0;
  e.mu_q_hat = 0.7;
  e.c_sup_hat = 1.0;
  EXPECT_EQ(predicted_decrease(e, Regime::Regular), 0.0);
  e.mu_p_hat = 0.2;
  e.mu_q_hat = 0.5;
  EXPECT_NEAR(predicted_decrease(e, Regime::Regular, DeltaForm::Exact), 0.05 * std::log(3.0), 1e-12);
  EXPECT_NEAR(predicted_decrease(e, Regime::Regular, DeltaForm::Exact), 0.054931, 1e-6);
  EXPECT_NEAR(predicted_decrease(e, Regime::Regular), 0.0125 * std::log(3.0), 1e-12);

  // At mu_q = mu*, delta = 0: 0.3 (log 2 / 2) / 2 + (1/9) / 4.
  e.c_sup_hat = std::log(2.0) / 2;
  e.mu_p_hat = 0.3;
  e.mu_q_hat = 1.0 / 3.0;
  EXPECT_NEAR(predicted_decrease(e, Regime::Clamped), 0.0797638, 1e-6);
  EXPECT_NEAR(predicted_decrease(e, Regime::Clamped, DeltaForm::Exact),
              0.3 * std::log(2.0) / 2 + 1.0 / 18.0, 1e-12);
}

TEST(Boost, RateAndGeometricHelpers) {
  EXPECT_NEAR(rate_wla_rounds(2.0, 0.1, 0.1, 0.1), 380.0, 1e-9);
  // 1 - min(2, 0.5) 0.1 / 4
  EXPECT_NEAR(geom_boost_factor(0.1, 0.1, 0.2, 1.0), 0.9875, 1e-12);
  EXPECT_NEAR(geom_boost_factor(0.5, 0.9, 0.1, 0.0), 0.5, 1e-12);
}

TEST(Boost, PolicyStrings) {
  EXPECT_EQ(step_policy_from_string("wla").kind, StepKind::Wla);
  EXPECT_EQ(step_policy_from_string("linesearch_nll").kind, StepKind::LinesearchNll);
  const auto f = step_policy_from_string("fixed:0.25");
  EXPECT_EQ(f.kind, StepKind::Fixed);
  EXPECT_DOUBLE_EQ(f.value, 0.25);
  EXPECT_EQ(step_policy_from_string(to_string(f)).value, 0.25);
  EXPECT_THROW(step_policy_from_string("fixed:1.5"), ConfigError);
  EXPECT_THROW(step_policy_from_string("fixed:x"), ConfigError);
  EXPECT_THROW(step_policy_from_string("newton"), ConfigError);
}

TEST(Boost, ZeroStepLeavesDensityUnchanged) {
  const auto target = mixture_ring(8);
  auto cfg = small_config(4);
  cfg.policy = StepPolicy::fixed(0.0);
  const auto res = run_adabode(target, DiagonalGaussian::isotropic(2), cfg);
  ASSERT_EQ(res.trace.rows.size(), 4u);
  for (const auto& r : res.trace.rows) EXPECT_NEAR(*r.kl, *res.trace.rows[0].kl, 1e-9);
}

TEST(Boost, TraceIsDeterministicAndWellFormed) {
  const auto target = mixture_ring(8);
  const auto cfg = small_config(9);
  const auto a = run_adabode(target, DiagonalGaussian::isotropic(2), cfg);
  const auto b = run_adabode(target, DiagonalGaussian::isotropic(2), cfg);
  EXPECT_EQ(a.trace.to_csv(), b.trace.to_csv());

  std::istringstream is(a.trace.to_csv());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "t,alpha,regime,mu_p_hat,mu_q_hat,c_sup_hat,predicted_delta,kl,nll,accuracy,wla_satisfied");
  ASSERT_EQ(a.trace.rows.size(), 4u);
  EXPECT_EQ(a.trace.rows[0].t, 0);
  EXPECT_FALSE(a.trace.rows[0].edges);
  for (int t = 1; t <= 3; ++t) {
    const auto& r = a.trace.rows[t];
    EXPECT_EQ(r.t, t);
    EXPECT_DOUBLE_EQ(r.alpha, 0.5);
    ASSERT_TRUE(r.edges);
    EXPECT_TRUE(r.accuracy);
    EXPECT_GE(r.mh_acceptance, 0.0);
  }
  EXPECT_EQ(a.density.size(), 3u);
  // Fixed-step rounds on the ring bring KL down from the standard normal.
  EXPECT_LT(*a.trace.rows[3].kl, *a.trace.rows[0].kl);
}

TEST(Boost, WlaPolicyScalesProperly) {
  const auto target = mixture_ring(8);
  auto cfg = small_config(2);
  cfg.rounds = 2;
  cfg.policy = StepPolicy::wla();
  const auto res = run_adabode(target, DiagonalGaussian::isotropic(2), cfg);
  for (std::size_t t = 1; t < res.trace.rows.size(); ++t) {
    const auto& r = res.trace.rows[t];
    ASSERT_TRUE(r.edges);
    EXPECT_LE(r.edges->c_sup_hat, kProperScaleBound + 1e-9);
    if (r.wla_satisfied) {
      const auto s = step_size_wla(r.edges->mu_q_hat, r.edges->c_sup_hat);
      EXPECT_NEAR(r.alpha, s.alpha, 1e-12);
      EXPECT_EQ(r.regime, s.regime);
      EXPECT_TRUE(r.predicted_delta);
    } else {
      EXPECT_EQ(r.alpha, 0.0);
    }
  }
}

TEST(Boost, LinesearchPicksGridArgmax) {
  const auto target = mixture_ring(8);
  auto cfg = small_config(6);
  cfg.rounds = 1;
  const auto res = run_adabode(target, DiagonalGaussian::isotropic(2), cfg);
  const auto& c = res.density.rounds()[0].classifier;
  const BoostedDensity q0(DiagonalGaussian::isotropic(2));
  ZEstimator z;
  z.grid = cfg.z_grid;
  const double best = linesearch_alpha(q0, c, res.p_train, z, 10);
  double best_ll = -INFINITY, arg = -1.0;
  for (int i = 0; i < 10; ++i) {
    const double a = i / 9.0;
    const auto q = push_round(q0, c, a, z);
    const double ll = q.log_density_rows(res.p_train).mean();
    if (ll > best_ll) best_ll = ll, arg = a;
  }
  EXPECT_DOUBLE_EQ(best, arg);

  // A zero classifier makes every candidate equal; the tie goes to alpha = 0.
  const auto zero = MlpClassifier::zeros({2, 3, 1}, Activation::ReLU);
  EXPECT_EQ(linesearch_alpha(q0, zero, res.p_train, z, 10), 0.0);
}

TEST(Boost, KlBoundHoldsPerRoundOnTheGrid) {
  const auto target = mixture_ring(8);
  auto cfg = small_config(13);
  cfg.rounds = 4;
  const auto res = run_adabode(target, DiagonalGaussian::isotropic(2), cfg);
  const GridSpec grid = target.default_grid(120);
  const Matrix pts = grid.points();
  const auto p = cell_masses(target.log_density_rows(pts));

  BoostedDensity prev(res.density.q0());
  for (const auto& round : res.density.rounds()) {
    const auto q = cell_masses(prev.log_density_rows(pts));
    const Vec d = round.classifier.evaluate(pts).array().exp();
    const theory::DiscreteBoostInstance inst(fdiv::DiscreteDistPair(p, q), d, round.alpha);
    const auto ineq = theory::check_kl_bound(inst);
    EXPECT_TRUE(ineq.holds()) << "lhs " << ineq.lhs << " rhs " << ineq.rhs;
    prev = prev.with_round(round.classifier, round.alpha, round.log_z_cum);
  }
}

TEST(Boost, ConfigValidation) {
  BoostConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rounds = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = BoostConfig{};
  cfg.policy = StepPolicy::fixed(-0.1);
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = BoostConfig{};
  cfg.n_q = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
