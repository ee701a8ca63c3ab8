#include "proxicause/causal_graph.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace proxicause;

namespace {

// Layered random DAG over v0..v{n-1}, arcs only from lower to higher index.
CausalDag random_dag(int n, double p) {
  std::mt19937_64 rng(7);
  std::bernoulli_distribution coin(p);
  std::vector<DagNode> nodes;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) nodes.push_back({"v" + std::to_string(i), false, false});
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back("v" + std::to_string(i), "v" + std::to_string(j));
    }
  }
  return CausalDag(nodes, edges);
}

void BM_DSeparated(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto dag = random_dag(n, 3.0 / n);
  const NodeSet a{"v0"}, b{"v" + std::to_string(n - 1)}, c{"v" + std::to_string(n / 2)};
  for (auto _ : state) benchmark::DoNotOptimize(d_separated(dag, a, b, c));
}
BENCHMARK(BM_DSeparated)->Arg(8)->Arg(64)->Arg(256);

void BM_CheckAssumption(benchmark::State& state) {
  std::vector<DagNode> nodes{{"X", false, false},     {"Y", false, false},      {"S", false, true},
                             {"Zplus", false, false}, {"Zminus", false, false}, {"U", true, false}};
  std::vector<Edge> edges{{"X", "Y"},     {"X", "S"},      {"X", "Zminus"}, {"Zminus", "Y"}, {"Zminus", "S"},
                          {"Zplus", "X"}, {"U", "Y"},      {"U", "Zminus"}, {"U", "Zplus"}};
  CausalDag dag(nodes, edges, DagRoles{{"X"}, "Y", {"Zplus", "Zminus"}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_assumption_new(dag));
    benchmark::DoNotOptimize(check_gact3(dag));
  }
}
BENCHMARK(BM_CheckAssumption);

}  // namespace
