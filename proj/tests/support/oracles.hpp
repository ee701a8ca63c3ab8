#pragma once

// Reference implementations used only by the tests. They are written
// independently of the library code they check.

#include "proxicause/causal_graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline std::string fixture(const std::string& name) {
  return std::string(PROXICAUSE_FIXTURE_DIR) + "/" + name;
}

// Adjacency-matrix DAG over nodes 0..n-1.
struct SmallDag {
  int n = 0;
  std::vector<std::vector<bool>> arc;  // arc[u][v]: u -> v

  explicit SmallDag(int size) : n(size), arc(size, std::vector<bool>(size, false)) {}

  std::set<int> descendants_or_self(int v) const {
    std::set<int> out{v};
    std::vector<int> stack{v};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int w = 0; w < n; ++w) {
        if (arc[u][w] && out.insert(w).second) stack.push_back(w);
      }
    }
    return out;
  }

  proxicause::CausalDag to_causal_dag() const {
    std::vector<proxicause::DagNode> nodes;
    std::vector<proxicause::Edge> edges;
    for (int v = 0; v < n; ++v) nodes.push_back({name(v), false, false});
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        if (arc[u][v]) edges.emplace_back(name(u), name(v));
      }
    }
    return proxicause::CausalDag(nodes, edges);
  }

  static std::string name(int v) { return "v" + std::to_string(v); }
};

// Random DAG: a random permutation fixes the order, each forward pair gets
// an arc with probability p.
inline SmallDag random_dag(int n, double p, std::mt19937_64& rng) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(p);
  SmallDag g(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng)) g.arc[order[static_cast<std::size_t>(i)]][order[static_cast<std::size_t>(j)]] = true;
    }
  }
  return g;
}

// True when some simple path between a and b is open given c: every
// collider on it has itself or a descendant in c, every other interior node
// is outside c.
inline bool brute_force_connected(const SmallDag& g, const std::set<int>& a, const std::set<int>& b,
                                  const std::set<int>& c) {
  std::vector<int> path;
  std::vector<bool> used(static_cast<std::size_t>(g.n), false);
  auto adjacent = [&](int u, int v) { return g.arc[u][v] || g.arc[v][u]; };
  auto path_open = [&]() {
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
      const int prev = path[i - 1], mid = path[i], next = path[i + 1];
      const bool collider = g.arc[prev][mid] && g.arc[next][mid];
      if (collider) {
        bool hit = false;
        for (int d : g.descendants_or_self(mid)) hit = hit || c.count(d) > 0;
        if (!hit) return false;
      } else if (c.count(mid)) {
        return false;
      }
    }
    return true;
  };
  std::function<bool(int)> walk = [&](int u) {
    if (path.size() > 1 && b.count(u)) return path_open();
    for (int v = 0; v < g.n; ++v) {
      if (used[static_cast<std::size_t>(v)] || !adjacent(u, v)) continue;
      used[static_cast<std::size_t>(v)] = true;
      path.push_back(v);
      const bool found = walk(v);
      path.pop_back();
      used[static_cast<std::size_t>(v)] = false;
      if (found) return true;
    }
    return false;
  };
  for (int s : a) {
    path = {s};
    used.assign(static_cast<std::size_t>(g.n), false);
    used[static_cast<std::size_t>(s)] = true;
    if (walk(s)) return true;
  }
  return false;
}

inline proxicause::NodeSet names(const std::set<int>& s) {
  proxicause::NodeSet out;
  for (int v : s) out.insert(SmallDag::name(v));
  return out;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace oracle
