#include <benchmark/benchmark.h>

#include "boostdens/boost.hpp"
#include "boostdens/dist.hpp"
#include "boostdens/kde.hpp"
#include "boostdens/learner.hpp"
#include "boostdens/mcmc.hpp"
#include "boostdens/metrics.hpp"

using namespace boostdens;

namespace {

void BM_MlpEvaluate(benchmark::State& state) {
  Rng rng(1);
  const auto c = MlpClassifier::random({2, 5, 5, 1}, Activation::SELU, rng);
  const Matrix pts = standard_normal(state.range(0), 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(c.evaluate(pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpEvaluate)->Arg(1000)->Arg(100000);

void BM_CrossEntropyGradient(benchmark::State& state) {
  Rng rng(2);
  const auto c = MlpClassifier::random({2, 10, 10, 1}, Activation::ReLU, rng);
  const Matrix pts = standard_normal(50, 2, rng);
  Vec labels(50);
  for (int i = 0; i < 50; ++i) labels(i) = i % 2;
  for (auto _ : state) benchmark::DoNotOptimize(cross_entropy_gradient(c, pts, labels));
}
BENCHMARK(BM_CrossEntropyGradient);

void BM_TrainClassifier(benchmark::State& state) {
  Rng rng(3);
  const auto ring = mixture_ring(8);
  const Matrix p = ring.sample(1000, rng);
  const Matrix q = standard_normal(1000, 2, rng);
  TrainConfig cfg;
  cfg.epochs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_classifier(p, q, {5, 5}, Activation::SELU, cfg));
}
BENCHMARK(BM_TrainClassifier)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_MetropolisStandardNormal(benchmark::State& state) {
  MhConfig mh;
  mh.n_samples = state.range(0);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        rw_metropolis([](const Eigen::Ref<const Vec>& x) { return -0.5 * x.squaredNorm(); }, 2, mh));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MetropolisStandardNormal)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_BoostedDensitySample(benchmark::State& state) {
  Rng rng(4);
  BoostedDensity bd(DiagonalGaussian::isotropic(2));
  ZEstimator z;
  for (int t = 0; t < state.range(0); ++t)
    bd = push_round(bd, MlpClassifier::random({2, 5, 5, 1}, Activation::SELU, rng), 0.5, z);
  MhConfig mh;
  mh.n_samples = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(bd.sample_mh(mh));
}
BENCHMARK(BM_BoostedDensitySample)->Arg(1)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_GridLogZ(benchmark::State& state) {
  Rng rng(5);
  const BoostedDensity bd(DiagonalGaussian::isotropic(2));
  const auto c = MlpClassifier::random({2, 5, 5, 1}, Activation::SELU, rng);
  ZEstimator z;
  z.grid = GridSpec::centered(2, 8.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_log_z(bd, c, 0.5, z));
}
BENCHMARK(BM_GridLogZ)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_KlGrid(benchmark::State& state) {
  const auto ring = mixture_ring(8);
  const auto q0 = DiagonalGaussian::isotropic(2);
  const GridSpec grid = ring.default_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kl_grid(ring, q0, grid));
}
BENCHMARK(BM_KlGrid)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_KdeLogDensity(benchmark::State& state) {
  Rng rng(6);
  const Matrix train = standard_normal(1000, 2, rng);
  const Matrix query = standard_normal(1000, 2, rng);
  const auto kde = KdeModel::fit(train, static_cast<Kernel>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kde.log_density_rows(query));
}
BENCHMARK(BM_KdeLogDensity)
    ->Arg(static_cast<int>(Kernel::Gaussian))
    ->Arg(static_cast<int>(Kernel::Epanechnikov))
    ->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
