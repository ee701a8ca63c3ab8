#pragma once

#include "proxicause/causal_graph.hpp"
#include "proxicause/scm.hpp"
#include "proxicause/table.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace proxicause {

// DAG files:
//   {"nodes": [{"name": "X", "latent": false, "selection": false}, ...],
//    "edges": [["X", "Y"], ...],
//    "roles": {"x": ["X"], "y": "Y", "z": ["Z"]},
//    "scopes": {"m": [...], "t": [...]}}
// "roles", "scopes" and the node flags are optional. Failures throw
// ParseError naming the source and the offending location.
CausalDag parse_dag(const std::string& text, const std::string& source = "<string>");
CausalDag read_dag(const std::filesystem::path& path);
std::string dag_to_json(const CausalDag& dag);

// SCM files:
//   {"variables": [
//      {"name": "Z", "role": "zplus", "kind": "exogenous", "mean": -2, "sd": 1},
//      {"name": "X", "role": "treatment", "kind": "structural",
//       "terms": [{"coef": 2, "powers": {"Z": 1}}], "noise_coefficient": 1, "noise_sd": 1},
//      ...],
//    "selection": {"kind": "threshold",
//                  "clauses": [{"terms": [...], "comparator": "<", "constant": -6}]}
//              or {"kind": "logistic_product", "factors": [{"sign": -1, "variable": "X"}]}}
struct ScmFile {
  ScmSpec scm;
  SelectionSpec selection;
};

ScmFile parse_scm(const std::string& text, const std::string& source = "<string>");
ScmFile read_scm(const std::filesystem::path& path);
std::string scm_to_json(const ScmSpec& scm, const SelectionSpec& selection);

// Comma-separated, header row of names, numeric cells only.
NumericTable read_csv(std::istream& in, const std::string& source = "<stream>");
NumericTable read_csv(const std::filesystem::path& path);

// printf "%.6g".
std::string format_number(double v);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace proxicause
