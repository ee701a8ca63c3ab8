#include "proxicause/estimators.hpp"
#include "proxicause/scm.hpp"

#include <benchmark/benchmark.h>

using namespace proxicause;

namespace {

void BM_MakePaired(benchmark::State& state) {
  const auto ex = builtin_example("motivating");
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_paired(ex.scm, ex.selection, state.range(0), PairingMode::Disjoint, seed++));
  }
}
BENCHMARK(BM_MakePaired)->Arg(500)->Arg(5000);

void BM_FitTsr(benchmark::State& state) {
  const auto ex = builtin_example("motivating");
  const auto p = make_paired(ex.scm, ex.selection, state.range(0), PairingMode::Disjoint, 1);
  StageConfig cfg;
  cfg.stage_one_map = ex.stage_one_map;
  cfg.stage_two_map = ex.stage_two_map;
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(101, -4.0, 4.0);
  for (auto _ : state) {
    auto curve = fit_tsr(p.selected, p.external, TsrCase::FullIntegral, cfg);
    benchmark::DoNotOptimize(curve(grid));
  }
}
BENCHMARK(BM_FitTsr)->Arg(500)->Arg(5000);

void BM_Oracle(benchmark::State& state) {
  const auto ex = builtin_example("ex6");
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(9, -2.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(oracle_do_curve(ex.scm, grid, 100000, 3));
}
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);

}  // namespace
