#include "proxicause/causal_graph.hpp"

#include "proxicause/error.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <sstream>

namespace proxicause {
namespace {

std::string join(const NodeSet& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& v : s) {
    if (!first) out += ", ";
    first = false;
    out += v;
  }
  return out + "}";
}

NodeSet set_union(const NodeSet& a, const NodeSet& b) {
  NodeSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

NodeSet set_minus(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

bool intersects(const NodeSet& a, const NodeSet& b) {
  return std::any_of(a.begin(), a.end(), [&](const auto& v) { return b.count(v) > 0; });
}

void require_nodes(const CausalDag& dag, const NodeSet& s) {
  for (const auto& v : s) {
    if (!dag.has_node(v)) throw GraphError("unknown node '" + v + "'");
  }
}

const std::string& require_target(const CausalDag& dag) {
  if (!dag.roles().y) throw GraphError("graph has no target role");
  return *dag.roles().y;
}

std::string require_selection(const CausalDag& dag) {
  auto s = dag.selection_node();
  if (!s) throw GraphError("graph has no selection node");
  return *s;
}

// One step along a path: the neighbour and whether the edge points at it.
struct Step {
  std::string node;
  bool forward;
};

std::vector<Step> neighbours(const CausalDag& dag, const std::string& v) {
  std::vector<Step> out;
  for (const auto& c : dag.children(v)) out.push_back({c, true});
  for (const auto& p : dag.parents(v)) out.push_back({p, false});
  return out;
}

// Depth-first enumeration of simple paths from `a` to `b` that are open
// given `c`. Interior nodes avoid both end sets. The visitor receives the
// nodes and edge directions and returns false to stop.
using PathVisitor =
    std::function<bool(const std::vector<std::string>&, const std::vector<bool>&)>;

void enumerate_open_paths(const CausalDag& dag, const NodeSet& a, const NodeSet& b,
                          const NodeSet& c, const PathVisitor& visit) {
  const NodeSet opens_collider = ancestors(dag, c);
  std::vector<std::string> nodes;
  std::vector<bool> forward;
  NodeSet on_path;
  bool stop = false;

  std::function<void()> extend = [&]() {
    const std::string v = nodes.back();
    for (const auto& step : neighbours(dag, v)) {
      if (stop) return;
      if (on_path.count(step.node)) continue;
      if (nodes.size() >= 2) {
        const bool collider = forward.back() && !step.forward;
        const bool open = collider ? opens_collider.count(v) > 0 : c.count(v) == 0;
        if (!open) continue;
      }
      if (b.count(step.node)) {
        nodes.push_back(step.node);
        forward.push_back(step.forward);
        if (!visit(nodes, forward)) stop = true;
        nodes.pop_back();
        forward.pop_back();
        continue;
      }
      if (a.count(step.node)) continue;
      nodes.push_back(step.node);
      forward.push_back(step.forward);
      on_path.insert(step.node);
      extend();
      on_path.erase(step.node);
      nodes.pop_back();
      forward.pop_back();
    }
  };

  for (const auto& start : a) {
    if (stop) return;
    nodes = {start};
    forward.clear();
    on_path = {start};
    extend();
  }
}

std::string format_path(const std::vector<std::string>& nodes, const std::vector<bool>& forward) {
  std::string out = nodes.front();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    out += forward[i - 1] ? " -> " : " <- ";
    out += nodes[i];
  }
  return out;
}

std::optional<std::string> shortest_open_path(const CausalDag& dag, const NodeSet& a,
                                              const NodeSet& b, const NodeSet& c,
                                              const std::function<bool(const std::vector<bool>&)>&
                                                  accept = nullptr) {
  std::optional<std::pair<std::size_t, std::string>> best;
  enumerate_open_paths(dag, a, b, c, [&](const auto& nodes, const auto& forward) {
    if (accept && !accept(forward)) return true;
    if (!best || nodes.size() < best->first) best.emplace(nodes.size(), format_path(nodes, forward));
    return true;
  });
  if (!best) return std::nullopt;
  return best->second;
}

std::optional<std::string> scope_gap(const NodeSet& needed, const NodeSet& scope,
                                     const std::string& scope_name) {
  const NodeSet missing = set_minus(needed, scope);
  if (missing.empty()) return std::nullopt;
  return join(missing) + " not in " + scope_name;
}

// Nodes other than X on some proper causal path from X to Y.
NodeSet proper_causal_nodes(const CausalDag& dag, const NodeSet& x, const std::string& y) {
  NodeSet forward;
  std::deque<std::string> queue(x.begin(), x.end());
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (const auto& ch : dag.children(v)) {
      if (x.count(ch) || forward.count(ch)) continue;
      forward.insert(ch);
      queue.push_back(ch);
    }
  }
  NodeSet backward{y};
  queue = {y};
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (const auto& p : dag.parents(v)) {
      if (x.count(p) || backward.count(p)) continue;
      backward.insert(p);
      queue.push_back(p);
    }
  }
  NodeSet out;
  for (const auto& v : forward) {
    if (backward.count(v)) out.insert(v);
  }
  return out;
}

}  // namespace

CausalDag::CausalDag(std::vector<DagNode> nodes, std::vector<Edge> edges, DagRoles roles,
                     std::optional<DagScopes> scopes)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), roles_(std::move(roles)) {
  NodeSet names;
  int selection_count = 0;
  for (const auto& n : nodes_) {
    if (n.name.empty()) throw GraphError("node with empty name");
    if (!names.insert(n.name).second) throw GraphError("duplicate node '" + n.name + "'");
    if (n.selection) ++selection_count;
    if (n.selection && n.latent) throw GraphError("selection node '" + n.name + "' is latent");
  }
  if (selection_count > 1) throw GraphError("more than one selection node");

  std::set<Edge> seen;
  for (const auto& [from, to] : edges_) {
    if (!names.count(from) || !names.count(to)) {
      throw GraphError("edge " + from + " -> " + to + " references an unknown node");
    }
    if (from == to) throw GraphError("self loop on '" + from + "'");
    if (!seen.insert({from, to}).second) throw GraphError("duplicate edge " + from + " -> " + to);
    if (node(from).selection) {
      throw GraphError("selection node '" + from + "' has an outgoing edge");
    }
  }

  // Kahn's algorithm; anything left over lies on a cycle.
  std::map<std::string, int> indegree;
  for (const auto& n : nodes_) indegree[n.name] = 0;
  for (const auto& e : edges_) ++indegree[e.second];
  std::deque<std::string> queue;
  for (const auto& [v, d] : indegree) {
    if (d == 0) queue.push_back(v);
  }
  std::size_t visited = 0;
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    ++visited;
    for (const auto& e : edges_) {
      if (e.first == v && --indegree[e.second] == 0) queue.push_back(e.second);
    }
  }
  if (visited != nodes_.size()) throw GraphError("graph has a directed cycle");

  NodeSet role_nodes;
  auto claim = [&](const std::string& v, const char* role) {
    if (!names.count(v)) throw GraphError(std::string(role) + " role names unknown node '" + v + "'");
    if (!role_nodes.insert(v).second) throw GraphError("node '" + v + "' has more than one role");
    if (node(v).selection) throw GraphError("selection node cannot carry a role");
  };
  for (const auto& v : roles_.x) claim(v, "x");
  if (roles_.y) claim(*roles_.y, "y");
  for (const auto& v : roles_.z) {
    claim(v, "z");
    if (node(v).latent) throw GraphError("proxy '" + v + "' is latent; proxies must be observed");
  }

  if (scopes) {
    scopes_ = std::move(*scopes);
    scopes_given_ = true;
    for (const auto* scope : {&scopes_.m, &scopes_.t}) {
      for (const auto& v : *scope) {
        if (!names.count(v)) throw GraphError("scope names unknown node '" + v + "'");
        if (node(v).latent) throw GraphError("latent node '" + v + "' cannot be in a scope");
      }
    }
  } else {
    for (const auto& n : nodes_) {
      if (n.latent || n.selection) continue;
      scopes_.m.insert(n.name);
      if (n.name != roles_.y) scopes_.t.insert(n.name);
    }
  }
}

bool CausalDag::has_node(const std::string& name) const {
  return std::any_of(nodes_.begin(), nodes_.end(), [&](const auto& n) { return n.name == name; });
}

const DagNode& CausalDag::node(const std::string& name) const {
  for (const auto& n : nodes_) {
    if (n.name == name) return n;
  }
  throw GraphError("unknown node '" + name + "'");
}

std::optional<std::string> CausalDag::selection_node() const {
  for (const auto& n : nodes_) {
    if (n.selection) return n.name;
  }
  return std::nullopt;
}

NodeSet CausalDag::parents(const std::string& v) const {
  NodeSet out;
  for (const auto& [from, to] : edges_) {
    if (to == v) out.insert(from);
  }
  return out;
}

NodeSet CausalDag::children(const std::string& v) const {
  NodeSet out;
  for (const auto& [from, to] : edges_) {
    if (from == v) out.insert(to);
  }
  return out;
}

bool CausalDag::has_edge(const std::string& from, const std::string& to) const {
  return std::find(edges_.begin(), edges_.end(), Edge{from, to}) != edges_.end();
}

CausalDag CausalDag::with_roles(DagRoles roles) const {
  return CausalDag(nodes_, edges_, std::move(roles),
                   scopes_given_ ? std::optional<DagScopes>(scopes_) : std::nullopt);
}

CausalDag CausalDag::with_scopes(DagScopes scopes) const {
  return CausalDag(nodes_, edges_, roles_, std::move(scopes));
}

NodeSet descendants(const CausalDag& dag, const NodeSet& seed) {
  require_nodes(dag, seed);
  NodeSet out;
  std::deque<std::string> queue(seed.begin(), seed.end());
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (const auto& c : dag.children(v)) {
      if (out.insert(c).second) queue.push_back(c);
    }
  }
  for (const auto& s : seed) {
    // A seed node reached from another seed node is still excluded.
    out.erase(s);
  }
  return out;
}

NodeSet ancestors(const CausalDag& dag, const NodeSet& seed) {
  require_nodes(dag, seed);
  NodeSet out = seed;
  std::deque<std::string> queue(seed.begin(), seed.end());
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (const auto& p : dag.parents(v)) {
      if (out.insert(p).second) queue.push_back(p);
    }
  }
  return out;
}

CausalDag mutilate(const CausalDag& dag, const NodeSet& remove_into, const NodeSet& remove_out_of) {
  require_nodes(dag, remove_into);
  require_nodes(dag, remove_out_of);
  std::vector<Edge> kept;
  for (const auto& e : dag.edges()) {
    if (remove_into.count(e.second) || remove_out_of.count(e.first)) continue;
    kept.push_back(e);
  }
  return CausalDag(dag.nodes(), std::move(kept), dag.roles(),
                   dag.scopes_given() ? std::optional<DagScopes>(dag.scopes()) : std::nullopt);
}

bool d_separated(const CausalDag& dag, const NodeSet& a, const NodeSet& b, const NodeSet& c) {
  require_nodes(dag, a);
  require_nodes(dag, b);
  require_nodes(dag, c);
  if (intersects(a, b) || intersects(a, c) || intersects(b, c)) {
    throw InvalidArgument("d-separation sets must be pairwise disjoint");
  }
  // Reachability over (node, arrived-along-edge-direction) states.
  const NodeSet opens_collider = ancestors(dag, c);
  std::set<std::pair<std::string, bool>> seen;  // bool: arrived from a parent
  std::deque<std::pair<std::string, bool>> queue;
  for (const auto& v : a) queue.emplace_back(v, false);
  while (!queue.empty()) {
    auto state = queue.front();
    queue.pop_front();
    if (!seen.insert(state).second) continue;
    const auto& [v, from_parent] = state;
    const bool observed = c.count(v) > 0;
    if (!observed && b.count(v)) return false;
    if (!from_parent) {
      if (observed) continue;
      for (const auto& p : dag.parents(v)) queue.emplace_back(p, false);
      for (const auto& ch : dag.children(v)) queue.emplace_back(ch, true);
    } else {
      if (!observed) {
        for (const auto& ch : dag.children(v)) queue.emplace_back(ch, true);
      }
      if (opens_collider.count(v)) {
        for (const auto& p : dag.parents(v)) queue.emplace_back(p, false);
      }
    }
  }
  return true;
}

std::optional<std::string> open_path(const CausalDag& dag, const NodeSet& a, const NodeSet& b,
                                     const NodeSet& c) {
  if (d_separated(dag, a, b, c)) return std::nullopt;
  return shortest_open_path(dag, a, b, c);
}

ProxySplit decompose_proxies(const CausalDag& dag) {
  if (dag.roles().x.empty() && !dag.roles().z.empty()) {
    throw GraphError("proxy decomposition needs the treatment role");
  }
  const NodeSet z = dag.z_set();
  const NodeSet below_x = descendants(dag, dag.x_set());
  ProxySplit out;
  for (const auto& v : z) (below_x.count(v) ? out.zminus : out.zplus).insert(v);
  return out;
}

CriterionReport check_pmar(const CausalDag& dag) {
  const auto s = require_selection(dag);
  const auto& y = require_target(dag);
  CriterionReport report{"PMAR", {}};
  if (auto path = open_path(dag, {s}, {y}, set_union(dag.x_set(), dag.z_set()))) {
    report.failures.push_back({"S and Y not separated by X and Z", *path});
  }
  return report;
}

CriterionReport check_assumption_new(const CausalDag& dag) {
  const auto& y = require_target(dag);
  const NodeSet x = dag.x_set();
  const NodeSet z = dag.z_set();
  const auto split = decompose_proxies(dag);
  CriterionReport report{"Assumption-2", {}};

  for (auto& f : check_pmar(dag).failures) {
    report.failures.push_back({"1: " + f.condition, f.witness});
  }
  const CausalDag cut = mutilate(dag, {}, x);
  if (auto path = open_path(cut, {y}, x, split.zplus)) {
    report.failures.push_back({"2: backdoor path not blocked by Z+", *path});
  }
  NodeSet in_m = set_union(z, x);
  in_m.insert(y);
  if (auto gap = scope_gap(in_m, dag.scopes().m, "M")) {
    report.failures.push_back({"3: selected-sample scope", *gap});
  }
  if (auto gap = scope_gap(z, dag.scopes().t, "T")) {
    report.failures.push_back({"3: external scope", *gap});
  }
  if (!split.zminus.empty()) {
    if (auto gap = scope_gap(x, dag.scopes().t, "T")) {
      report.failures.push_back({"3: X must be external when Z- is non-empty", *gap});
    }
  }
  return report;
}

CriterionReport check_selection_backdoor(const CausalDag& dag) {
  const auto& y = require_target(dag);
  const NodeSet x = dag.x_set();
  const NodeSet z = dag.z_set();
  const auto split = decompose_proxies(dag);
  CriterionReport report{"Selection-Backdoor", {}};

  for (auto& f : check_pmar(dag).failures) {
    report.failures.push_back({"1: " + f.condition, f.witness});
  }
  if (auto path = open_path(mutilate(dag, {}, x), {y}, x, split.zplus)) {
    report.failures.push_back({"2: backdoor path not blocked by Z+", *path});
  }
  if (!split.zminus.empty()) {
    if (auto path = open_path(dag, split.zminus, {y}, set_union(x, split.zplus))) {
      report.failures.push_back({"3: Z- and Y not separated by X and Z+", *path});
    }
  }
  NodeSet in_m = set_union(z, x);
  in_m.insert(y);
  if (auto gap = scope_gap(in_m, dag.scopes().m, "M")) {
    report.failures.push_back({"4: selected-sample scope", *gap});
  }
  if (auto gap = scope_gap(z, dag.scopes().t, "T")) {
    report.failures.push_back({"4: external scope", *gap});
  }
  return report;
}

CriterionReport check_gact3(const CausalDag& dag, std::optional<NodeSet> zt) {
  const auto& y = require_target(dag);
  const NodeSet x = dag.x_set();
  const NodeSet z = dag.z_set();
  if (!zt) {
    zt.emplace();
    for (const auto& v : z) {
      if (dag.scopes().t.count(v)) zt->insert(v);
    }
  }
  if (!set_minus(*zt, z).empty()) throw InvalidArgument("ZT must be a subset of Z");
  CriterionReport report{"GACT3", {}};

  const NodeSet pcp = proper_causal_nodes(dag, x, y);
  const NodeSet below_pcp = descendants(mutilate(dag, x, {}), pcp);
  for (const auto& v : z) {
    if (below_pcp.count(v)) {
      report.failures.push_back({"1: proxy descends from a proper causal path", v});
    }
  }

  NodeSet blockers = z;
  const auto s = dag.selection_node();
  if (s) blockers.insert(*s);
  const auto non_causal = [](const std::vector<bool>& forward) {
    return !std::all_of(forward.begin(), forward.end(), [](bool f) { return f; });
  };
  if (auto path = shortest_open_path(dag, x, {y}, blockers, non_causal)) {
    report.failures.push_back({"2: non-causal path not blocked by Z and S", *path});
  }

  if (s) {
    std::vector<Edge> kept;
    for (const auto& e : dag.edges()) {
      if (x.count(e.first) && pcp.count(e.second)) continue;
      kept.push_back(e);
    }
    const CausalDag pbd(dag.nodes(), std::move(kept), dag.roles(),
                        dag.scopes_given() ? std::optional<DagScopes>(dag.scopes()) : std::nullopt);
    if (auto path = open_path(pbd, {y}, {*s}, *zt)) {
      report.failures.push_back({"3: ZT does not separate Y from S in the proper backdoor graph",
                                 *path});
    }
  }
  return report;
}

bool check_do_calculus_rule(const CausalDag& dag, int rule, const NodeSet& x, const NodeSet& y,
                            const NodeSet& z, const NodeSet& w) {
  const NodeSet given = set_union(x, w);
  for (const auto* pair : {&y, &z, &w}) {
    if (intersects(x, *pair)) throw InvalidArgument("do-calculus sets must be pairwise disjoint");
  }
  if (intersects(y, z) || intersects(y, w) || intersects(z, w)) {
    throw InvalidArgument("do-calculus sets must be pairwise disjoint");
  }
  switch (rule) {
    case 1:
      return d_separated(mutilate(dag, x, {}), y, z, given);
    case 2:
      return d_separated(mutilate(dag, x, z), y, z, given);
    case 3: {
      const NodeSet above_w = ancestors(mutilate(dag, x, {}), w);
      const NodeSet z_w = set_minus(z, above_w);
      return d_separated(mutilate(dag, set_union(x, z_w), {}), y, z, given);
    }
    default:
      throw InvalidArgument("do-calculus rule must be 1, 2 or 3");
  }
}

std::string to_string(TsrCase c) {
  switch (c) {
    case TsrCase::NoProxies:
      return "NoProxies";
    case TsrCase::ZminusOnlyUnconfounded:
      return "ZminusOnly-Unconfounded";
    case TsrCase::ZplusOnly:
      return "ZplusOnly";
    case TsrCase::FullLinearShortcut:
      return "Full-LinearShortcut";
    case TsrCase::FullIntegral:
      return "Full-Integral";
  }
  return "unknown";
}

TsrCase parse_tsr_case(const std::string& name) {
  for (auto c : {TsrCase::NoProxies, TsrCase::ZminusOnlyUnconfounded, TsrCase::ZplusOnly,
                 TsrCase::FullLinearShortcut, TsrCase::FullIntegral}) {
    if (to_string(c) == name) return c;
  }
  throw InvalidArgument("unknown TSR case '" + name + "'");
}

TsrCase tsr_case(const CausalDag& dag, bool linear_stage_two, bool require_assumption) {
  const auto report = require_assumption ? check_assumption_new(dag) : CriterionReport{};
  if (!report.holds()) {
    const auto& f = report.failures.front();
    throw GraphError("assumption check fails: " + f.condition + " (" + f.witness + ")");
  }
  const auto split = decompose_proxies(dag);
  if (split.zplus.empty() && split.zminus.empty()) return TsrCase::NoProxies;
  if (split.zminus.empty()) return TsrCase::ZplusOnly;
  if (split.zplus.empty() && d_separated(mutilate(dag, {}, dag.x_set()), dag.x_set(), split.zminus, {})) {
    return TsrCase::ZminusOnlyUnconfounded;
  }
  return linear_stage_two ? TsrCase::FullLinearShortcut : TsrCase::FullIntegral;
}

}  // namespace proxicause
