#pragma once

#include "proxicause/causal_graph.hpp"
#include "proxicause/dataset.hpp"
#include "proxicause/linear_models.hpp"
#include "proxicause/table.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace proxicause {

// coefficient * prod(variable^power)
struct PolyTerm {
  double coefficient = 0.0;
  std::map<std::string, int> powers;
};
using Polynomial = std::vector<PolyTerm>;

enum class VariableRole { Treatment, Target, ZPlus, ZMinus, Latent, Other };

std::string to_string(VariableRole role);
VariableRole parse_variable_role(const std::string& name);

// mean + sd * N(0, 1)
struct Exogenous {
  double mean = 0.0;
  double sd = 1.0;
};

// expression + noise_coefficient * N(0, noise_sd^2)
struct Structural {
  Polynomial expression;
  double noise_coefficient = 1.0;
  double noise_sd = 1.0;
};

struct ScmVariable {
  std::string name;
  VariableRole role = VariableRole::Other;
  std::variant<Exogenous, Structural> assignment;
};

// Ordered structural assignments. Each expression may only reference
// earlier variables; exactly one treatment and one target.
class ScmSpec {
 public:
  explicit ScmSpec(std::vector<ScmVariable> variables);

  const std::vector<ScmVariable>& variables() const { return variables_; }
  const std::string& treatment() const { return variables_[treatment_].name; }
  const std::string& target() const { return variables_[target_].name; }
  std::size_t treatment_index() const { return treatment_; }
  std::size_t target_index() const { return target_; }
  std::size_t index_of(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<std::string> names() const;
  std::vector<std::string> names_with(VariableRole role) const;

 private:
  std::vector<ScmVariable> variables_;
  std::size_t treatment_ = 0;
  std::size_t target_ = 0;
};

enum class Comparator { Less, LessEqual, Greater, GreaterEqual };

std::string to_string(Comparator c);
Comparator parse_comparator(const std::string& text);

struct ThresholdClause {
  Polynomial expression;
  Comparator comparator = Comparator::Less;
  double constant = 0.0;
};

// Deterministic: selected iff every clause holds.
struct ThresholdSelection {
  std::vector<ThresholdClause> clauses;
};

// Factor 1 / (1 + exp(sign * variable)).
struct LogisticFactor {
  double sign = 1.0;
  std::string variable;
};

// Bernoulli with probability equal to the product of the factors.
struct LogisticProductSelection {
  std::vector<LogisticFactor> factors;
};

using SelectionSpec = std::variant<ThresholdSelection, LogisticProductSelection>;

// Throws MissingColumnError when a referenced variable is not in the spec.
void validate_selection(const ScmSpec& spec, const SelectionSpec& selection);

double evaluate(const Polynomial& p, const std::function<double(const std::string&)>& value);

// n rows, one column per variable (latent ones included), in spec order.
NumericTable sample(const ScmSpec& spec, Eigen::Index n, std::uint64_t seed);

// One uniform draw per row is consumed whatever the selection kind.
std::vector<bool> apply_selection(const NumericTable& table, const SelectionSpec& selection,
                                  std::uint64_t seed);

// Selection probability per row (0 or 1 for threshold selection).
Eigen::VectorXd selection_probability(const NumericTable& table, const SelectionSpec& selection);

enum class PairingMode { SubsetOfD, Disjoint };

std::string to_string(PairingMode mode);

struct PairedSample {
  LabeledDataset selected;
  LabeledDataset external;
  PairingMode mode;
};

// Selected data keeps X, Z+, Z- and Y; external data keeps X, Z+ and Z-.
// Latent variables never leave the simulator. An empty selection is redrawn
// with the next derived seed, up to 10 attempts, before
// DegenerateSampleError.
PairedSample make_paired(const ScmSpec& spec, const SelectionSpec& selection, Eigen::Index n,
                         PairingMode mode, std::uint64_t seed);

struct OracleCurve {
  Eigen::VectorXd mean;
  Eigen::VectorXd standard_error;
};

// Monte Carlo E[Y | do(treatment = x)] for each grid value. The same noise
// draws are reused across grid values.
OracleCurve oracle_do_curve(const ScmSpec& spec, const Eigen::VectorXd& x_grid, Eigen::Index n_mc,
                            std::uint64_t seed);

struct TruthFunctions {
  std::function<double(double)> cond_expectation;  // E[Y | X = x], empty if unknown
  std::function<double(double)> causal_effect;     // E[Y | do(X = x)], empty if unknown
};

// Graph implied by the spec: an edge from every variable an expression
// references, a selection node "S" fed by the selection's variables, roles
// and latent flags from the variable roles.
CausalDag dag_from_scm(const ScmSpec& spec, const SelectionSpec& selection);

struct BuiltinExample {
  std::string name;
  ScmSpec scm;
  SelectionSpec selection;
  TruthFunctions truth;
  int x_degree = 2;
  FeatureMap stage_one_map;  // columns [X, Z+..., Z-...]
  FeatureMap stage_two_map;  // columns [X, Z+...]
  TsrCase tsr_case = TsrCase::ZplusOnly;
  bool stage_two_ridge = false;  // tsr-ridge also penalizes stage two
};

const std::vector<std::string>& builtin_names();
// Throws InvalidArgument for unknown names.
BuiltinExample builtin_example(const std::string& name);

}  // namespace proxicause
