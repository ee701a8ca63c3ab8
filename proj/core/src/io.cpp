#include "proxicause/io.hpp"

#include "proxicause/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace proxicause {
namespace {

using nlohmann::json;

// Throws ParseError for `where` inside `source`.
[[noreturn]] void fail(const std::string& source, const std::string& where, const std::string& what) {
  throw ParseError(source + ": at " + (where.empty() ? "/" : where) + ": " + what);
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                     ": malformed JSON");
  }
}

struct Reader {
  const std::string& source;

  const json& field(const json& obj, const std::string& where, const std::string& key) const {
    if (!obj.is_object()) fail(source, where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(source, where, "missing field \"" + key + "\"");
    return *it;
  }

  std::string string(const json& v, const std::string& where) const {
    if (!v.is_string()) fail(source, where, "expected a string");
    return v.get<std::string>();
  }

  double number(const json& v, const std::string& where) const {
    if (!v.is_number()) fail(source, where, "expected a number");
    return v.get<double>();
  }

  bool boolean(const json& v, const std::string& where) const {
    if (!v.is_boolean()) fail(source, where, "expected true or false");
    return v.get<bool>();
  }

  const json& array(const json& v, const std::string& where) const {
    if (!v.is_array()) fail(source, where, "expected an array");
    return v;
  }

  std::vector<std::string> strings(const json& v, const std::string& where) const {
    std::vector<std::string> out;
    const auto& arr = array(v, where);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(string(arr[i], where + "/" + std::to_string(i)));
    }
    return out;
  }

  double number_or(const json& obj, const std::string& where, const std::string& key,
                   double fallback) const {
    return obj.contains(key) ? number(obj[key], where + "/" + key) : fallback;
  }

  Polynomial polynomial(const json& v, const std::string& where) const {
    Polynomial out;
    const auto& arr = array(v, where);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string at = where + "/" + std::to_string(i);
      PolyTerm term{number(field(arr[i], at, "coef"), at + "/coef"), {}};
      if (arr[i].contains("powers")) {
        const auto& powers = arr[i]["powers"];
        if (!powers.is_object()) fail(source, at + "/powers", "expected an object");
        for (const auto& [name, p] : powers.items()) {
          if (!p.is_number_integer() || p.get<int>() < 0) {
            fail(source, at + "/powers/" + name, "expected a non-negative integer");
          }
          term.powers[name] = p.get<int>();
        }
      }
      out.push_back(std::move(term));
    }
    return out;
  }
};

json polynomial_json(const Polynomial& p) {
  json arr = json::array();
  for (const auto& t : p) {
    json powers = json::object();
    for (const auto& [name, e] : t.powers) powers[name] = e;
    arr.push_back({{"coef", t.coefficient}, {"powers", powers}});
  }
  return arr;
}

template <typename F>
auto rethrow_as_parse_error(const std::string& source, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

}  // namespace

CausalDag parse_dag(const std::string& text, const std::string& source) {
  const json doc = parse_json(text, source);
  const Reader r{source};
  std::vector<DagNode> nodes;
  const auto& jnodes = r.array(r.field(doc, "", "nodes"), "/nodes");
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const std::string at = "/nodes/" + std::to_string(i);
    DagNode n;
    n.name = r.string(r.field(jnodes[i], at, "name"), at + "/name");
    if (jnodes[i].contains("latent")) n.latent = r.boolean(jnodes[i]["latent"], at + "/latent");
    if (jnodes[i].contains("selection")) {
      n.selection = r.boolean(jnodes[i]["selection"], at + "/selection");
    }
    nodes.push_back(std::move(n));
  }
  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const auto& jedges = r.array(doc["edges"], "/edges");
    for (std::size_t i = 0; i < jedges.size(); ++i) {
      const std::string at = "/edges/" + std::to_string(i);
      const auto pair = r.strings(jedges[i], at);
      if (pair.size() != 2) fail(source, at, "an edge is a [from, to] pair");
      edges.emplace_back(pair[0], pair[1]);
    }
  }
  DagRoles roles;
  if (doc.contains("roles")) {
    const auto& jr = doc["roles"];
    if (!jr.is_object()) fail(source, "/roles", "expected an object");
    if (jr.contains("x")) {
      roles.x = jr["x"].is_string() ? std::vector<std::string>{jr["x"].get<std::string>()}
                                    : r.strings(jr["x"], "/roles/x");
    }
    if (jr.contains("y") && !jr["y"].is_null()) roles.y = r.string(jr["y"], "/roles/y");
    if (jr.contains("z")) roles.z = r.strings(jr["z"], "/roles/z");
  }
  std::optional<DagScopes> scopes;
  if (doc.contains("scopes")) {
    const auto& js = doc["scopes"];
    DagScopes sc;
    for (const auto& v : r.strings(r.field(js, "/scopes", "m"), "/scopes/m")) sc.m.insert(v);
    for (const auto& v : r.strings(r.field(js, "/scopes", "t"), "/scopes/t")) sc.t.insert(v);
    scopes = std::move(sc);
  }
  return rethrow_as_parse_error(source, [&] {
    return CausalDag(std::move(nodes), std::move(edges), std::move(roles), std::move(scopes));
  });
}

CausalDag read_dag(const std::filesystem::path& path) {
  return parse_dag(read_text_file(path), path.string());
}

std::string dag_to_json(const CausalDag& dag) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& n : dag.nodes()) {
    doc["nodes"].push_back({{"name", n.name}, {"latent", n.latent}, {"selection", n.selection}});
  }
  doc["edges"] = json::array();
  for (const auto& [from, to] : dag.edges()) doc["edges"].push_back({from, to});
  doc["roles"] = {{"x", dag.roles().x}, {"z", dag.roles().z}};
  doc["roles"]["y"] = dag.roles().y ? json(*dag.roles().y) : json(nullptr);
  doc["scopes"] = {{"m", std::vector<std::string>(dag.scopes().m.begin(), dag.scopes().m.end())},
                   {"t", std::vector<std::string>(dag.scopes().t.begin(), dag.scopes().t.end())}};
  return doc.dump(2);
}

ScmFile parse_scm(const std::string& text, const std::string& source) {
  const json doc = parse_json(text, source);
  const Reader r{source};
  std::vector<ScmVariable> vars;
  const auto& jvars = r.array(r.field(doc, "", "variables"), "/variables");
  for (std::size_t i = 0; i < jvars.size(); ++i) {
    const std::string at = "/variables/" + std::to_string(i);
    const auto& jv = jvars[i];
    ScmVariable v;
    v.name = r.string(r.field(jv, at, "name"), at + "/name");
    if (jv.contains("role")) {
      v.role = rethrow_as_parse_error(source, [&] {
        return parse_variable_role(r.string(jv["role"], at + "/role"));
      });
    }
    const auto kind = r.string(r.field(jv, at, "kind"), at + "/kind");
    if (kind == "exogenous") {
      v.assignment = Exogenous{r.number_or(jv, at, "mean", 0.0), r.number_or(jv, at, "sd", 1.0)};
    } else if (kind == "structural") {
      v.assignment = Structural{r.polynomial(r.field(jv, at, "terms"), at + "/terms"),
                                r.number_or(jv, at, "noise_coefficient", 1.0),
                                r.number_or(jv, at, "noise_sd", 1.0)};
    } else {
      fail(source, at + "/kind", "expected \"exogenous\" or \"structural\"");
    }
    vars.push_back(std::move(v));
  }

  SelectionSpec selection = ThresholdSelection{};
  if (doc.contains("selection")) {
    const auto& js = doc["selection"];
    const auto kind = r.string(r.field(js, "/selection", "kind"), "/selection/kind");
    if (kind == "threshold") {
      ThresholdSelection t;
      const auto& clauses = r.array(r.field(js, "/selection", "clauses"), "/selection/clauses");
      for (std::size_t i = 0; i < clauses.size(); ++i) {
        const std::string at = "/selection/clauses/" + std::to_string(i);
        ThresholdClause c;
        c.expression = r.polynomial(r.field(clauses[i], at, "terms"), at + "/terms");
        c.comparator = rethrow_as_parse_error(source, [&] {
          return parse_comparator(r.string(r.field(clauses[i], at, "comparator"), at + "/comparator"));
        });
        c.constant = r.number(r.field(clauses[i], at, "constant"), at + "/constant");
        t.clauses.push_back(std::move(c));
      }
      selection = std::move(t);
    } else if (kind == "logistic_product") {
      LogisticProductSelection l;
      const auto& factors = r.array(r.field(js, "/selection", "factors"), "/selection/factors");
      for (std::size_t i = 0; i < factors.size(); ++i) {
        const std::string at = "/selection/factors/" + std::to_string(i);
        l.factors.push_back({r.number(r.field(factors[i], at, "sign"), at + "/sign"),
                             r.string(r.field(factors[i], at, "variable"), at + "/variable")});
      }
      selection = std::move(l);
    } else {
      fail(source, "/selection/kind", "expected \"threshold\" or \"logistic_product\"");
    }
  }
  return rethrow_as_parse_error(source, [&] {
    ScmSpec scm(std::move(vars));
    validate_selection(scm, selection);
    return ScmFile{std::move(scm), std::move(selection)};
  });
}

ScmFile read_scm(const std::filesystem::path& path) {
  return parse_scm(read_text_file(path), path.string());
}

std::string scm_to_json(const ScmSpec& scm, const SelectionSpec& selection) {
  json doc;
  doc["variables"] = json::array();
  for (const auto& v : scm.variables()) {
    json jv = {{"name", v.name}, {"role", to_string(v.role)}};
    if (const auto* e = std::get_if<Exogenous>(&v.assignment)) {
      jv["kind"] = "exogenous";
      jv["mean"] = e->mean;
      jv["sd"] = e->sd;
    } else {
      const auto& s = std::get<Structural>(v.assignment);
      jv["kind"] = "structural";
      jv["terms"] = polynomial_json(s.expression);
      jv["noise_coefficient"] = s.noise_coefficient;
      jv["noise_sd"] = s.noise_sd;
    }
    doc["variables"].push_back(std::move(jv));
  }
  if (const auto* t = std::get_if<ThresholdSelection>(&selection)) {
    json clauses = json::array();
    for (const auto& c : t->clauses) {
      clauses.push_back({{"terms", polynomial_json(c.expression)},
                         {"comparator", to_string(c.comparator)},
                         {"constant", c.constant}});
    }
    doc["selection"] = {{"kind", "threshold"}, {"clauses", clauses}};
  } else {
    json factors = json::array();
    for (const auto& f : std::get<LogisticProductSelection>(selection).factors) {
      factors.push_back({{"sign", f.sign}, {"variable", f.variable}});
    }
    doc["selection"] = {{"kind", "logistic_product"}, {"factors", factors}};
  }
  return doc.dump(2);
}

NumericTable read_csv(std::istream& in, const std::string& source) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos) {
    throw ParseError(source + ": missing header row");
  }
  const auto names = split(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != names.size()) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(names.size()) + " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[j], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[j].size()) {
        throw ParseError(source + ":" + std::to_string(line_no) + ": column \"" + names[j] +
                         "\": not a number: \"" + cells[j] + "\"");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return rethrow_as_parse_error(source, [&] { return NumericTable(names, std::move(values)); });
}

NumericTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  return read_csv(in, path.string());
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace proxicause
