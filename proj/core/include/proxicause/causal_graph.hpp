#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace proxicause {

using NodeSet = std::set<std::string>;
using Edge = std::pair<std::string, std::string>;

struct DagNode {
  std::string name;
  bool latent = false;
  bool selection = false;
};

struct DagRoles {
  std::vector<std::string> x;
  std::optional<std::string> y;
  std::vector<std::string> z;
};

// M: variables observed in the selected sample. T: variables observed in
// the external sample.
struct DagScopes {
  NodeSet m;
  NodeSet t;
};

// Directed acyclic graph with an optional selection node, latent flags,
// variable roles and dataset scopes. Validated on construction; immutable.
class CausalDag {
 public:
  // Throws GraphError on a cycle, unknown or duplicate names, a selection
  // node with children, overlapping roles, latent proxies or latent nodes in
  // a scope. Scopes default to every observed non-selection node (T also
  // leaves out the target).
  CausalDag(std::vector<DagNode> nodes, std::vector<Edge> edges, DagRoles roles = {},
            std::optional<DagScopes> scopes = std::nullopt);

  const std::vector<DagNode>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const DagRoles& roles() const { return roles_; }
  const DagScopes& scopes() const { return scopes_; }
  bool scopes_given() const { return scopes_given_; }

  bool has_node(const std::string& name) const;
  const DagNode& node(const std::string& name) const;
  std::optional<std::string> selection_node() const;

  NodeSet parents(const std::string& v) const;
  NodeSet children(const std::string& v) const;
  bool has_edge(const std::string& from, const std::string& to) const;

  NodeSet x_set() const { return {roles_.x.begin(), roles_.x.end()}; }
  NodeSet z_set() const { return {roles_.z.begin(), roles_.z.end()}; }

  // Same graph and annotations with different roles or scopes.
  CausalDag with_roles(DagRoles roles) const;
  CausalDag with_scopes(DagScopes scopes) const;

 private:
  std::vector<DagNode> nodes_;
  std::vector<Edge> edges_;
  DagRoles roles_;
  DagScopes scopes_;
  bool scopes_given_ = false;
};

// Nodes reachable from `seed` by a directed path, not counting seed itself.
NodeSet descendants(const CausalDag& dag, const NodeSet& seed);
// Nodes with a directed path into `seed`, counting seed itself.
NodeSet ancestors(const CausalDag& dag, const NodeSet& seed);

// Copy without edges into `remove_into` and out of `remove_out_of`.
CausalDag mutilate(const CausalDag& dag, const NodeSet& remove_into, const NodeSet& remove_out_of);

bool d_separated(const CausalDag& dag, const NodeSet& a, const NodeSet& b, const NodeSet& c);

// Some path between a and b left open by c, written "X <- U -> Y", or
// nullopt when the sets are d-separated.
std::optional<std::string> open_path(const CausalDag& dag, const NodeSet& a, const NodeSet& b,
                                     const NodeSet& c);

struct ProxySplit {
  NodeSet zplus;
  NodeSet zminus;
};

// Z minus = proxies that descend from X.
ProxySplit decompose_proxies(const CausalDag& dag);

struct CriterionFailure {
  std::string condition;
  std::string witness;
};

struct CriterionReport {
  std::string criterion;
  std::vector<CriterionFailure> failures;

  bool holds() const { return failures.empty(); }
};

CriterionReport check_pmar(const CausalDag& dag);
CriterionReport check_assumption_new(const CausalDag& dag);
CriterionReport check_selection_backdoor(const CausalDag& dag);
// `zt` defaults to the proxies observed externally.
CriterionReport check_gact3(const CausalDag& dag, std::optional<NodeSet> zt = std::nullopt);

// Side condition of do-calculus rule 1, 2 or 3 for
// P(y | do(x), [do](z), w): x is the intervened set, z the set being
// inserted, deleted or exchanged.
bool check_do_calculus_rule(const CausalDag& dag, int rule, const NodeSet& x, const NodeSet& y,
                            const NodeSet& z, const NodeSet& w);

enum class TsrCase { NoProxies, ZminusOnlyUnconfounded, ZplusOnly, FullLinearShortcut, FullIntegral };

std::string to_string(TsrCase c);
// Accepts the names printed by to_string; throws InvalidArgument otherwise.
TsrCase parse_tsr_case(const std::string& name);

// Throws GraphError when check_assumption_new fails, unless
// `require_assumption` is false.
TsrCase tsr_case(const CausalDag& dag, bool linear_stage_two = true, bool require_assumption = true);

}  // namespace proxicause
