#include "proxicause/dataset.hpp"

#include "proxicause/error.hpp"

namespace proxicause {

std::string to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::X:
      return "X";
    case ColumnRole::ZPlus:
      return "Z+";
    case ColumnRole::ZMinus:
      return "Z-";
    case ColumnRole::Y:
      return "Y";
    case ColumnRole::S:
      return "S";
  }
  return "?";
}

std::string to_string(Provenance provenance) {
  return provenance == Provenance::Selected ? "selected" : "external";
}

LabeledDataset::LabeledDataset(NumericTable table, std::map<std::string, ColumnRole> roles,
                               Provenance provenance)
    : table_(std::move(table)), roles_(std::move(roles)), provenance_(provenance) {
  if (table_.rows() < 1) throw DegenerateSampleError(to_string(provenance_) + " dataset is empty");
  for (const auto& name : table_.names()) {
    if (!roles_.count(name)) throw InvalidArgument("column '" + name + "' has no role");
  }
  for (const auto& [name, role] : roles_) {
    if (!table_.has(name)) throw MissingColumnError("role given for absent column '" + name + "'");
  }
  if (!table_.values().allFinite()) {
    throw NonFiniteError(to_string(provenance_) + " dataset has non-finite values");
  }
  const auto ys = columns(ColumnRole::Y);
  const auto ss = columns(ColumnRole::S);
  if (provenance_ == Provenance::Selected) {
    if (ys.size() != 1) throw InvalidArgument("selected dataset needs exactly one Y column");
    for (const auto& s : ss) {
      if ((table_.column(s).array() != 1.0).any()) {
        throw InvalidArgument("selected dataset has rows with S != 1");
      }
    }
  } else if (!ys.empty() || !ss.empty()) {
    throw InvalidArgument("external dataset must not contain Y or S columns");
  }
}

std::vector<std::string> LabeledDataset::columns(ColumnRole role) const {
  std::vector<std::string> out;
  for (const auto& name : table_.names()) {
    if (roles_.at(name) == role) out.push_back(name);
  }
  return out;
}

}  // namespace proxicause
