#include "proxicause/linear_models.hpp"
#include "proxicause/random.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace proxicause;

namespace {

DesignMatrix random_design(Eigen::Index n, int degree) {
  Rng rng(1);
  std::normal_distribution<double> N;
  Eigen::MatrixXd data(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) data(i, j) = N(rng);
    y(i) = data(i, 0) - 2.0 * data(i, 1) * data(i, 2) + N(rng);
  }
  return expand_features(FeatureMap::polynomial(3, degree), data, y);
}

void BM_ExpandFeatures(benchmark::State& state) {
  const auto design = random_design(state.range(0), 1);
  Eigen::MatrixXd data = design.rows.rightCols(3);
  const auto map = FeatureMap::polynomial(3, 2);
  for (auto _ : state) benchmark::DoNotOptimize(expand_features(map, data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExpandFeatures)->Arg(1000)->Arg(10000);

void BM_FitOls(benchmark::State& state) {
  const auto design = random_design(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(fit_ols(design));
}
BENCHMARK(BM_FitOls)->Arg(500)->Arg(5000);

void BM_FitRidgeCv(benchmark::State& state) {
  const auto design = random_design(state.range(0), 2);
  const auto grid = default_lambda_grid();
  for (auto _ : state) benchmark::DoNotOptimize(fit_ridge_cv(design, grid));
}
BENCHMARK(BM_FitRidgeCv)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
