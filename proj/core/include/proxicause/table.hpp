#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace proxicause {

// Rectangular numeric data with named columns. Rows are observations.
class NumericTable {
 public:
  NumericTable() = default;
  NumericTable(std::vector<std::string> names, Eigen::MatrixXd values);

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

  const std::vector<std::string>& names() const { return names_; }
  const Eigen::MatrixXd& values() const { return values_; }

  std::optional<Eigen::Index> find(std::string_view name) const;
  // Throws MissingColumnError when absent.
  Eigen::Index index_of(std::string_view name) const;
  bool has(std::string_view name) const { return find(name).has_value(); }

  Eigen::VectorXd column(std::string_view name) const;

  // Columns in the requested order.
  NumericTable select(std::span<const std::string> names) const;
  NumericTable select_rows(std::span<const Eigen::Index> rows) const;
  // Matrix of the requested columns, in order.
  Eigen::MatrixXd matrix(std::span<const std::string> names) const;

 private:
  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
};

}  // namespace proxicause
