#include "proxicause/table.hpp"

#include "proxicause/error.hpp"

#include <algorithm>

namespace proxicause {

NumericTable::NumericTable(std::vector<std::string> names, Eigen::MatrixXd values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    throw InvalidArgument("table: " + std::to_string(names_.size()) + " names for " +
                          std::to_string(values_.cols()) + " columns");
  }
  auto sorted = names_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("table: duplicate column names");
  }
}

std::optional<Eigen::Index> NumericTable::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - names_.begin());
}

Eigen::Index NumericTable::index_of(std::string_view name) const {
  auto idx = find(name);
  if (!idx) throw MissingColumnError("missing column '" + std::string(name) + "'");
  return *idx;
}

Eigen::VectorXd NumericTable::column(std::string_view name) const {
  return values_.col(index_of(name));
}

NumericTable NumericTable::select(std::span<const std::string> names) const {
  return NumericTable(std::vector<std::string>(names.begin(), names.end()), matrix(names));
}

NumericTable NumericTable::select_rows(std::span<const Eigen::Index> rows) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values_.row(rows[i]);
  return NumericTable(names_, std::move(out));
}

Eigen::MatrixXd NumericTable::matrix(std::span<const std::string> names) const {
  Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = values_.col(index_of(names[j]));
  }
  return out;
}

}  // namespace proxicause
