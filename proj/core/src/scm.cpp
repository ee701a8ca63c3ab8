#include "proxicause/scm.hpp"

#include "proxicause/error.hpp"
#include "proxicause/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace proxicause {
namespace {

// Polynomial with variable names resolved to spec indices.
struct CompiledTerm {
  double coefficient;
  std::vector<std::pair<std::size_t, int>> powers;
};
using CompiledPolynomial = std::vector<CompiledTerm>;

CompiledPolynomial compile(const Polynomial& p, const std::function<std::size_t(const std::string&)>& index) {
  CompiledPolynomial out;
  for (const auto& term : p) {
    CompiledTerm c{term.coefficient, {}};
    for (const auto& [name, power] : term.powers) {
      if (power < 0) throw InvalidArgument("negative power of '" + name + "'");
      if (power > 0) c.powers.emplace_back(index(name), power);
    }
    out.push_back(std::move(c));
  }
  return out;
}

double evaluate(const CompiledPolynomial& p, const double* values) {
  double total = 0.0;
  for (const auto& term : p) {
    double v = term.coefficient;
    for (const auto& [idx, power] : term.powers) {
      for (int e = 0; e < power; ++e) v *= values[idx];
    }
    total += v;
  }
  return total;
}

// Per-variable sampling recipe: value = offset(values) + scale * N(0, 1).
struct CompiledVariable {
  CompiledPolynomial expression;  // empty for exogenous
  double offset = 0.0;            // exogenous mean
  double scale = 1.0;
};

std::vector<CompiledVariable> compile(const ScmSpec& spec) {
  std::vector<CompiledVariable> out;
  for (const auto& var : spec.variables()) {
    CompiledVariable c;
    if (const auto* exo = std::get_if<Exogenous>(&var.assignment)) {
      c.offset = exo->mean;
      c.scale = exo->sd;
    } else {
      const auto& st = std::get<Structural>(var.assignment);
      c.expression = compile(st.expression, [&](const std::string& n) { return spec.index_of(n); });
      c.scale = st.noise_coefficient * st.noise_sd;
    }
    out.push_back(std::move(c));
  }
  return out;
}

bool compare(double lhs, Comparator c, double rhs) {
  switch (c) {
    case Comparator::Less:
      return lhs < rhs;
    case Comparator::LessEqual:
      return lhs <= rhs;
    case Comparator::Greater:
      return lhs > rhs;
    case Comparator::GreaterEqual:
      return lhs >= rhs;
  }
  return false;
}

std::vector<std::string> referenced(const Polynomial& p) {
  std::vector<std::string> out;
  for (const auto& term : p) {
    for (const auto& [name, power] : term.powers) {
      if (power > 0) out.push_back(name);
    }
  }
  return out;
}

std::vector<std::string> referenced(const SelectionSpec& selection) {
  std::vector<std::string> out;
  if (const auto* t = std::get_if<ThresholdSelection>(&selection)) {
    for (const auto& clause : t->clauses) {
      auto r = referenced(clause.expression);
      out.insert(out.end(), r.begin(), r.end());
    }
  } else {
    for (const auto& f : std::get<LogisticProductSelection>(selection).factors) {
      out.push_back(f.variable);
    }
  }
  return out;
}

NumericTable keep_columns(const NumericTable& table, const std::vector<std::string>& names) {
  return table.select(names);
}

Polynomial poly(std::initializer_list<PolyTerm> terms) { return Polynomial(terms); }
PolyTerm term(double c, std::map<std::string, int> powers = {}) { return {c, std::move(powers)}; }

ScmVariable exo(std::string name, VariableRole role, double mean, double sd) {
  return {std::move(name), role, Exogenous{mean, sd}};
}

ScmVariable structural(std::string name, VariableRole role, Polynomial p, double noise = 1.0) {
  return {std::move(name), role, Structural{std::move(p), noise, 1.0}};
}

ThresholdClause clause(Polynomial p, Comparator c, double constant) {
  return {std::move(p), c, constant};
}

}  // namespace

std::string to_string(VariableRole role) {
  switch (role) {
    case VariableRole::Treatment:
      return "treatment";
    case VariableRole::Target:
      return "target";
    case VariableRole::ZPlus:
      return "zplus";
    case VariableRole::ZMinus:
      return "zminus";
    case VariableRole::Latent:
      return "latent";
    case VariableRole::Other:
      return "other";
  }
  return "other";
}

VariableRole parse_variable_role(const std::string& name) {
  for (auto r : {VariableRole::Treatment, VariableRole::Target, VariableRole::ZPlus,
                 VariableRole::ZMinus, VariableRole::Latent, VariableRole::Other}) {
    if (to_string(r) == name) return r;
  }
  throw InvalidArgument("unknown variable role '" + name + "'");
}

std::string to_string(Comparator c) {
  switch (c) {
    case Comparator::Less:
      return "<";
    case Comparator::LessEqual:
      return "<=";
    case Comparator::Greater:
      return ">";
    case Comparator::GreaterEqual:
      return ">=";
  }
  return "<";
}

Comparator parse_comparator(const std::string& text) {
  for (auto c : {Comparator::Less, Comparator::LessEqual, Comparator::Greater,
                 Comparator::GreaterEqual}) {
    if (to_string(c) == text) return c;
  }
  throw InvalidArgument("unknown comparator '" + text + "'");
}

std::string to_string(PairingMode mode) {
  return mode == PairingMode::SubsetOfD ? "subset" : "disjoint";
}

ScmSpec::ScmSpec(std::vector<ScmVariable> variables) : variables_(std::move(variables)) {
  std::optional<std::size_t> treatment, target;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const auto& var = variables_[i];
    if (var.name.empty()) throw InvalidArgument("variable with empty name");
    for (std::size_t j = 0; j < i; ++j) {
      if (variables_[j].name == var.name) throw InvalidArgument("duplicate variable '" + var.name + "'");
    }
    if (const auto* st = std::get_if<Structural>(&var.assignment)) {
      for (const auto& name : referenced(st->expression)) {
        const bool earlier = std::any_of(variables_.begin(), variables_.begin() + static_cast<long>(i),
                                         [&](const auto& v) { return v.name == name; });
        if (!earlier) {
          throw InvalidArgument("'" + var.name + "' references '" + name +
                                "', which is not defined before it");
        }
      }
      if (!(st->noise_sd >= 0.0)) throw InvalidArgument("negative noise sd for '" + var.name + "'");
    } else if (!(std::get<Exogenous>(var.assignment).sd >= 0.0)) {
      throw InvalidArgument("negative sd for '" + var.name + "'");
    }
    auto claim = [&](std::optional<std::size_t>& slot, const char* what) {
      if (slot) throw InvalidArgument(std::string("more than one ") + what);
      slot = i;
    };
    if (var.role == VariableRole::Treatment) claim(treatment, "treatment");
    if (var.role == VariableRole::Target) claim(target, "target");
  }
  if (!treatment || !target) throw InvalidArgument("spec needs one treatment and one target");
  treatment_ = *treatment;
  target_ = *target;
}

std::size_t ScmSpec::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  throw MissingColumnError("unknown variable '" + name + "'");
}

bool ScmSpec::has(const std::string& name) const {
  return std::any_of(variables_.begin(), variables_.end(),
                     [&](const auto& v) { return v.name == name; });
}

std::vector<std::string> ScmSpec::names() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) out.push_back(v.name);
  return out;
}

std::vector<std::string> ScmSpec::names_with(VariableRole role) const {
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    if (v.role == role) out.push_back(v.name);
  }
  return out;
}

void validate_selection(const ScmSpec& spec, const SelectionSpec& selection) {
  for (const auto& name : referenced(selection)) {
    if (!spec.has(name)) throw MissingColumnError("selection references unknown variable '" + name + "'");
  }
}

double evaluate(const Polynomial& p, const std::function<double(const std::string&)>& value) {
  double total = 0.0;
  for (const auto& t : p) {
    double v = t.coefficient;
    for (const auto& [name, power] : t.powers) v *= std::pow(value(name), power);
    total += v;
  }
  return total;
}

NumericTable sample(const ScmSpec& spec, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample size must be at least 1");
  const auto vars = compile(spec);
  const auto p = static_cast<Eigen::Index>(vars.size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(n, p);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < n; ++i) {
    double* row = out.row(i).data();
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& v = vars[static_cast<std::size_t>(j)];
      const double noise = normal(rng);
      row[j] = (v.expression.empty() ? v.offset : evaluate(v.expression, row)) + v.scale * noise;
    }
  }
  if (!out.allFinite()) throw NonFiniteError("sampling produced a non-finite value");
  return NumericTable(spec.names(), Eigen::MatrixXd(out));
}

Eigen::VectorXd selection_probability(const NumericTable& table, const SelectionSpec& selection) {
  Eigen::VectorXd prob(table.rows());
  const auto& values = table.values();
  if (const auto* t = std::get_if<ThresholdSelection>(&selection)) {
    std::vector<CompiledPolynomial> exprs;
    for (const auto& c : t->clauses) {
      exprs.push_back(compile(c.expression, [&](const std::string& n) {
        return static_cast<std::size_t>(table.index_of(n));
      }));
    }
    std::vector<double> row(static_cast<std::size_t>(table.cols()));
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
      for (Eigen::Index j = 0; j < table.cols(); ++j) row[static_cast<std::size_t>(j)] = values(i, j);
      bool pass = true;
      for (std::size_t k = 0; k < exprs.size() && pass; ++k) {
        pass = compare(evaluate(exprs[k], row.data()), t->clauses[k].comparator, t->clauses[k].constant);
      }
      prob(i) = pass ? 1.0 : 0.0;
    }
  } else {
    prob.setOnes();
    for (const auto& f : std::get<LogisticProductSelection>(selection).factors) {
      const auto col = values.col(table.index_of(f.variable));
      prob.array() /= (1.0 + (f.sign * col.array()).exp());
    }
  }
  return prob;
}

std::vector<bool> apply_selection(const NumericTable& table, const SelectionSpec& selection,
                                  std::uint64_t seed) {
  const Eigen::VectorXd prob = selection_probability(table, selection);
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<bool> mask(static_cast<std::size_t>(table.rows()));
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    const double u = uniform(rng);
    mask[static_cast<std::size_t>(i)] = u < prob(i);
  }
  return mask;
}

PairedSample make_paired(const ScmSpec& spec, const SelectionSpec& selection, Eigen::Index n,
                         PairingMode mode, std::uint64_t seed) {
  validate_selection(spec, selection);
  std::vector<std::string> observed;
  std::map<std::string, ColumnRole> roles;
  auto add = [&](VariableRole vr, ColumnRole cr) {
    for (const auto& name : spec.names_with(vr)) {
      observed.push_back(name);
      roles[name] = cr;
    }
  };
  add(VariableRole::Treatment, ColumnRole::X);
  add(VariableRole::ZPlus, ColumnRole::ZPlus);
  add(VariableRole::ZMinus, ColumnRole::ZMinus);
  std::vector<std::string> with_target = observed;
  with_target.push_back(spec.target());
  auto selected_roles = roles;
  selected_roles[spec.target()] = ColumnRole::Y;

  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const auto a = static_cast<std::uint64_t>(attempt);
    const NumericTable external_pool = sample(spec, n, derive_seed(seed, a, stream_tag("external")));
    const NumericTable selection_pool =
        mode == PairingMode::SubsetOfD ? external_pool
                                       : sample(spec, n, derive_seed(seed, a, stream_tag("selection-pool")));
    const auto mask = apply_selection(selection_pool, selection, derive_seed(seed, a, stream_tag("select")));
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.empty()) continue;
    LabeledDataset selected(keep_columns(selection_pool.select_rows(rows), with_target),
                            selected_roles, Provenance::Selected);
    LabeledDataset external(keep_columns(external_pool, observed), roles, Provenance::External);
    return PairedSample{std::move(selected), std::move(external), mode};
  }
  throw DegenerateSampleError("selection kept no rows in " + std::to_string(kAttempts) + " attempts");
}

OracleCurve oracle_do_curve(const ScmSpec& spec, const Eigen::VectorXd& x_grid, Eigen::Index n_mc,
                            std::uint64_t seed) {
  if (n_mc < 1) throw InvalidArgument("oracle needs at least one Monte Carlo draw");
  const auto vars = compile(spec);
  const std::size_t p = vars.size();
  const std::size_t tx = spec.treatment_index();
  const std::size_t ty = spec.target_index();
  const auto m = static_cast<std::size_t>(x_grid.size());

  std::vector<long double> sum(m, 0.0L), sum_sq(m, 0.0L);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  constexpr Eigen::Index kChunk = 65536;
  std::vector<double> noise;
  std::vector<double> row(p);
  for (Eigen::Index start = 0; start < n_mc; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, n_mc - start);
    noise.resize(static_cast<std::size_t>(len) * p);
    // Every variable's noise is drawn, the treatment's included, so the
    // stream does not depend on which variable is intervened on.
    for (auto& e : noise) e = normal(rng);
    for (std::size_t g = 0; g < m; ++g) {
      long double s = 0.0L, s2 = 0.0L;
      for (Eigen::Index i = 0; i < len; ++i) {
        const double* eps = noise.data() + static_cast<std::size_t>(i) * p;
        for (std::size_t j = 0; j < p; ++j) {
          if (j == tx) {
            row[j] = x_grid(static_cast<Eigen::Index>(g));
            continue;
          }
          const auto& v = vars[j];
          row[j] = (v.expression.empty() ? v.offset : evaluate(v.expression, row.data())) + v.scale * eps[j];
        }
        const double y = row[ty];
        if (!std::isfinite(y)) throw NonFiniteError("oracle produced a non-finite target");
        s += y;
        s2 += static_cast<long double>(y) * y;
      }
      sum[g] += s;
      sum_sq[g] += s2;
    }
  }
  OracleCurve out{Eigen::VectorXd(static_cast<Eigen::Index>(m)), Eigen::VectorXd(static_cast<Eigen::Index>(m))};
  const auto n = static_cast<long double>(n_mc);
  for (std::size_t g = 0; g < m; ++g) {
    const long double mean = sum[g] / n;
    long double var = n_mc > 1 ? (sum_sq[g] - n * mean * mean) / (n - 1) : 0.0L;
    if (var < 0) var = 0;
    out.mean(static_cast<Eigen::Index>(g)) = static_cast<double>(mean);
    out.standard_error(static_cast<Eigen::Index>(g)) = static_cast<double>(std::sqrt(var / n));
  }
  return out;
}

CausalDag dag_from_scm(const ScmSpec& spec, const SelectionSpec& selection) {
  std::vector<DagNode> nodes;
  std::vector<Edge> edges;
  DagRoles roles;
  for (const auto& var : spec.variables()) {
    nodes.push_back({var.name, var.role == VariableRole::Latent, false});
    if (const auto* st = std::get_if<Structural>(&var.assignment)) {
      for (const auto& parent : referenced(st->expression)) {
        if (std::find(edges.begin(), edges.end(), Edge{parent, var.name}) == edges.end()) {
          edges.emplace_back(parent, var.name);
        }
      }
    }
    switch (var.role) {
      case VariableRole::Treatment:
        roles.x.push_back(var.name);
        break;
      case VariableRole::Target:
        roles.y = var.name;
        break;
      case VariableRole::ZPlus:
      case VariableRole::ZMinus:
        roles.z.push_back(var.name);
        break;
      default:
        break;
    }
  }
  std::string s = "S";
  while (spec.has(s)) s += "_";
  nodes.push_back({s, false, true});
  for (const auto& parent : referenced(selection)) {
    if (std::find(edges.begin(), edges.end(), Edge{parent, s}) == edges.end()) {
      edges.emplace_back(parent, s);
    }
  }
  return CausalDag(std::move(nodes), std::move(edges), std::move(roles));
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"var-linear", "var-quadratic", "ex1", "ex2", "ex3",
                                              "ex4",        "ex5",           "ex6", "motivating"};
  return names;
}

BuiltinExample builtin_example(const std::string& name) {
  using VR = VariableRole;
  using C = Comparator;
  std::vector<ScmVariable> vars;
  SelectionSpec sel;
  TruthFunctions truth;
  int degree = 2;
  bool stage_two_ridge = false;

  if (name == "var-linear" || name == "var-quadratic") {
    const bool linear = name == "var-linear";
    degree = linear ? 1 : 2;
    vars = {exo("X", VR::Treatment, 0.0, 1.0), exo("Z", VR::ZPlus, -2.0, 1.0),
            structural("Y", VR::Target, poly({term(3.0, {{"X", degree}}), term(5.0, {{"Z", 1}})}))};
    sel = ThresholdSelection{{clause(poly({term(1.0, {{"X", 1}}), term(1.0, {{"Z", 1}})}), C::Less, -2.0)}};
    if (linear) {
      truth.causal_effect = [](double x) { return 3.0 * x - 10.0; };
    } else {
      truth.causal_effect = [](double x) { return 3.0 * x * x - 10.0; };
    }
    truth.cond_expectation = truth.causal_effect;
  } else if (name == "ex1") {
    vars = {exo("Z", VR::ZPlus, -2.0, 1.0),
            structural("X", VR::Treatment, poly({term(2.0, {{"Z", 1}})})),
            structural("Y", VR::Target, poly({term(0.2, {{"X", 2}}), term(5.0, {{"Z", 1}})}))};
    sel = ThresholdSelection{{clause(poly({term(1.0, {{"X", 1}}), term(1.0, {{"Z", 1}})}), C::Less, -6.0)}};
    truth.cond_expectation = [](double x) { return 0.2 * x * x - 2.0 + 2.0 * x; };
    truth.causal_effect = [](double x) { return 0.2 * x * x - 10.0; };
  } else if (name == "ex2") {
    vars = {exo("Z", VR::ZPlus, -1.0, 2.0),
            structural("X", VR::Treatment, poly({term(1.0, {{"Z", 1}})})),
            structural("Y", VR::Target, poly({term(1.0, {{"X", 1}}), term(5.0, {{"Z", 1}})}))};
    sel = LogisticProductSelection{{{-1.0, "X"}, {1.0, "Z"}}};
    truth.cond_expectation = [](double x) { return 5.0 * x - 1.0; };
    truth.causal_effect = [](double x) { return x - 5.0; };
  } else if (name == "ex3" || name == "ex4") {
    const bool three = name == "ex3";
    vars = {exo("W", VR::ZPlus, 2.0, 0.3),
            structural("X", VR::Treatment, poly({term(1.0, {{"W", 1}})})),
            exo("Z", VR::ZPlus, three ? -0.3 : 0.0, 1.0),
            structural("Y", VR::Target,
                       three ? poly({term(0.2, {{"X", 2}}), term(1.0, {{"Z", 1}}), term(3.0, {{"W", 1}})})
                             : poly({term(0.5, {{"X", 1}}), term(1.0, {{"Z", 1}}), term(3.0, {{"W", 1}})}))};
    const double shrink = 0.09 / 1.09;
    if (three) {
      sel = ThresholdSelection{{clause(poly({term(1.0, {{"Z", 1}})}), C::Greater, 0.0),
                                clause(poly({term(1.0, {{"X", 1}})}), C::Less, 9.0)}};
      truth.cond_expectation = [shrink](double x) { return 0.2 * x * x + 5.7 + 3.0 * shrink * (x - 2.0); };
      truth.causal_effect = [](double x) { return 0.2 * x * x - 0.3 + 6.0; };
    } else {
      sel = LogisticProductSelection{{{1.0, "X"}, {1.0, "Z"}}};
      truth.cond_expectation = [shrink](double x) { return 0.5 * x + 6.0 + 3.0 * shrink * (x - 2.0); };
      truth.causal_effect = [](double x) { return 0.5 * x + 6.0; };
    }
  } else if (name == "ex5") {
    vars = {exo("W", VR::ZPlus, -1.0, 1.0),
            structural("X", VR::Treatment, poly({term(1.0, {{"W", 1}})})),
            structural("Z", VR::ZMinus, poly({term(-2.0, {{"X", 1}})})),
            structural("Y", VR::Target,
                       poly({term(1.0, {{"X", 2}}), term(1.0, {{"Z", 1}}), term(2.0, {{"W", 1}})}))};
    sel = LogisticProductSelection{{{1.0, "X"}, {1.0, "Z"}}};
    truth.cond_expectation = [](double x) { return x * x - x - 1.0; };
    truth.causal_effect = [](double x) { return x * x - 2.0 * x - 2.0; };
  } else if (name == "ex6") {
    vars = {exo("W", VR::ZPlus, 2.0, 1.0),
            structural("X", VR::Treatment, poly({term(1.0, {{"W", 1}})})),
            structural("Z", VR::ZMinus, poly({term(1.0, {{"X", 1}})})),
            structural("Y", VR::Target,
                       poly({term(0.1, {{"X", 1}}), term(0.5, {{"Z", 1}}), term(0.3, {{"W", 1}})}), 0.1)};
    sel = ThresholdSelection{{clause(poly({term(1.0, {{"Z", 1}, {"X", 1}})}), C::Less, 1.0),
                              clause(poly({term(1.0, {{"Z", 2}, {"X", 2}}), term(1.0, {{"Z", 1}})}),
                                     C::Greater, 1.0)}};
    truth.cond_expectation = [](double x) { return 0.3 + 0.75 * x; };
    truth.causal_effect = [](double x) { return 0.6 * (x + 1.0); };
  } else if (name == "motivating") {
    vars = {exo("U", VR::Latent, 0.0, 1.0),
            structural("Zplus", VR::ZPlus, poly({term(2.0, {{"U", 1}})})),
            structural("X", VR::Treatment, poly({term(1.0, {{"Zplus", 1}})})),
            structural("Zminus", VR::ZMinus, poly({term(1.0, {{"X", 1}}), term(2.0, {{"U", 1}})}), 2.0),
            structural("Y", VR::Target,
                       poly({term(0.5, {{"X", 2}}), term(2.0, {{"Zminus", 1}}), term(2.0, {{"U", 1}})}),
                       3.0)};
    sel = ThresholdSelection{
        {clause(poly({term(1.0, {{"X", 1}}), term(1.0, {{"Zminus", 1}})}), C::Greater, 5.0)}};
    stage_two_ridge = true;
  } else {
    throw InvalidArgument("unknown example '" + name + "'");
  }

  ScmSpec scm(std::move(vars));
  const auto zplus = scm.names_with(VR::ZPlus);
  const auto zminus = scm.names_with(VR::ZMinus);
  std::vector<int> one_degrees{degree}, two_degrees{degree};
  one_degrees.insert(one_degrees.end(), zplus.size() + zminus.size(), 1);
  two_degrees.insert(two_degrees.end(), zplus.size(), 1);
  FeatureMap stage_two = FeatureMap::separable(two_degrees);
  const auto zplus_column = [](int c) { return c >= 1; };
  const TsrCase c = tsr_case(dag_from_scm(scm, sel), stage_two.is_affine_in(zplus_column));
  return BuiltinExample{name,
                        std::move(scm),
                        std::move(sel),
                        std::move(truth),
                        degree,
                        FeatureMap::separable(one_degrees),
                        std::move(stage_two),
                        c,
                        stage_two_ridge};
}

}  // namespace proxicause
