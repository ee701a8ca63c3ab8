#pragma once

#include "proxicause/table.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace proxicause {

// Column index -> exponent. The empty monomial is the intercept.
using Monomial = std::map<int, int>;

int total_degree(const Monomial& m);

// Ordered list of monomials over the columns of an input matrix. The
// intercept comes first and appears once; monomials are unique and their
// total degree never exceeds max_degree.
class FeatureMap {
 public:
  // Validates the invariants above; throws InvalidArgument otherwise.
  FeatureMap(std::vector<Monomial> terms, int max_degree);

  // Every monomial over `inputs` columns with total degree <= degree, in
  // graded order (1, x0, x1, ..., x0^2, x0 x1, ...).
  static FeatureMap polynomial(int inputs, int degree);
  // Intercept plus x_j, x_j^2, ..., x_j^{degrees[j]} for each column; no
  // cross terms. degrees[j] == 0 leaves column j out.
  static FeatureMap separable(const std::vector<int>& degrees);
  static FeatureMap intercept_only();

  const std::vector<Monomial>& terms() const { return terms_; }
  int max_degree() const { return max_degree_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(terms_.size()); }
  // Largest column index referenced, or -1 for the intercept-only map.
  int max_column() const;

  // Terms whose columns all satisfy `keep`; the intercept is always kept.
  FeatureMap restricted(const std::function<bool(int)>& keep) const;
  // True when the map is at most linear in the columns selected by `in`
  // and those columns never multiply any other column.
  bool is_affine_in(const std::function<bool(int)>& in) const;

  std::string describe(const std::vector<std::string>& names) const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::vector<Monomial> terms_;
  int max_degree_ = 1;
};

double evaluate_monomial(const Monomial& m, const double* row, Eigen::Index stride = 1);

// n x p matrix produced by a feature map, with an optional response.
struct DesignMatrix {
  FeatureMap map;
  Eigen::MatrixXd rows;
  std::optional<Eigen::VectorXd> response;
};

// Row i, column j is the product over (col, exp) of term j of data(i, col)^exp.
DesignMatrix expand_features(const FeatureMap& map, const Eigen::MatrixXd& data);
DesignMatrix expand_features(const FeatureMap& map, const Eigen::MatrixXd& data,
                             const Eigen::VectorXd& response);

struct Standardization {
  double mean = 0.0;
  double scale = 1.0;
};

struct FittedLinearModel {
  FeatureMap feature_map;
  Eigen::VectorXd coefficients;         // original feature scale
  std::optional<double> ridge_lambda;   // absent for OLS
  std::vector<Standardization> standardization;  // identity for OLS

  double intercept() const { return coefficients(0); }
};

FittedLinearModel fit_ols(const DesignMatrix& design);

// Minimizes RSS + lambda * ||beta_std||^2 over the non-intercept
// coefficients, where beta_std are the coefficients of the features after
// centering and scaling to unit (population) variance. Coefficients are
// reported on the original scale.
FittedLinearModel fit_ridge(const DesignMatrix& design, double lambda);

Eigen::VectorXd predict(const FittedLinearModel& model, const Eigen::MatrixXd& data);
double predict_one(const FittedLinearModel& model, const double* row);

// 10^-2, 10^-1.9, ..., 10^2 (41 points).
std::vector<double> default_lambda_grid();

struct CrossValidationOptions {
  int folds = 5;
  std::uint64_t seed = 0;
};

// Grid value with the smallest pooled held-out squared error over a seeded
// fold assignment; ties go to the smaller lambda. A lambda of 0 that meets a
// rank-deficient training fold scores +infinity.
double cross_validate_lambda(const DesignMatrix& design, const std::vector<double>& grid,
                             const CrossValidationOptions& options = {});

// Ridge fit with the lambda chosen by cross_validate_lambda.
FittedLinearModel fit_ridge_cv(const DesignMatrix& design, const std::vector<double>& grid,
                               const CrossValidationOptions& options = {});

}  // namespace proxicause
