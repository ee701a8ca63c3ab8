#pragma once

#include "proxicause/table.hpp"

#include <map>
#include <string>
#include <vector>

namespace proxicause {

enum class ColumnRole { X, ZPlus, ZMinus, Y, S };
enum class Provenance { Selected, External };

std::string to_string(ColumnRole role);
std::string to_string(Provenance provenance);

// Numeric table whose columns carry roles.
//
// Selected data has a Y column and, if an S column is present, S == 1 on
// every row. External data has no Y or S column. Values must be finite.
class LabeledDataset {
 public:
  LabeledDataset(NumericTable table, std::map<std::string, ColumnRole> roles,
                 Provenance provenance);

  const NumericTable& table() const { return table_; }
  Provenance provenance() const { return provenance_; }
  Eigen::Index rows() const { return table_.rows(); }
  ColumnRole role(const std::string& column) const { return roles_.at(column); }

  // Column names with the given role, in table order.
  std::vector<std::string> columns(ColumnRole role) const;

 private:
  NumericTable table_;
  std::map<std::string, ColumnRole> roles_;
  Provenance provenance_;
};

}  // namespace proxicause
