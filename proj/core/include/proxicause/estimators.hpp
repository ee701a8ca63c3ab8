#pragma once

#include "proxicause/causal_graph.hpp"
#include "proxicause/dataset.hpp"
#include "proxicause/linear_models.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace proxicause {

// Stage one regresses Y on stage_one_map over the selected columns laid out
// as [X..., Z+..., Z-...]. Stage two regresses on stage_two_map over the
// external columns [X..., Z+...].
struct StageConfig {
  FeatureMap stage_one_map = FeatureMap::intercept_only();
  FeatureMap stage_two_map = FeatureMap::intercept_only();
  bool ridge_stage_one = false;
  bool ridge_stage_two = false;
  std::vector<double> cv_grid = default_lambda_grid();
  int cv_folds = 5;
  std::uint64_t cv_seed = 0;
};

enum class EstimatorKind { Naive, RepeatedRegression, TwoStepRegression };

std::string to_string(EstimatorKind kind);

// Fitted estimate of x -> E[Y | do(X = x)] (or E[Y | X = x] for the
// baselines). Immutable once built.
class CausalCurve {
 public:
  using Evaluator = std::function<double(const double*)>;

  CausalCurve(EstimatorKind kind, std::optional<TsrCase> tsr_case,
              std::vector<std::string> x_columns, std::vector<FittedLinearModel> stages,
              Evaluator evaluator);

  EstimatorKind kind() const { return kind_; }
  std::optional<TsrCase> tsr_case() const { return tsr_case_; }
  const std::vector<std::string>& x_columns() const { return x_columns_; }
  // Stage one first, then the stage-two models in fitting order.
  const std::vector<FittedLinearModel>& stages() const { return stages_; }

  // `x` holds one value per X column.
  double evaluate(const double* x) const { return evaluator_(x); }
  // Single-treatment shorthand; throws InvalidArgument otherwise.
  double operator()(double x) const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& xs) const;

 private:
  EstimatorKind kind_;
  std::optional<TsrCase> tsr_case_;
  std::vector<std::string> x_columns_;
  std::vector<FittedLinearModel> stages_;
  Evaluator evaluator_;
};

// OLS of Y on map(X) over the selected data. `map` may only use X columns.
CausalCurve fit_naive(const LabeledDataset& selected, const FeatureMap& map);

// Stage one as configured; stage two regresses the stage-one predictions on
// the X-only part of the stage-one map over the external data.
CausalCurve fit_rr(const LabeledDataset& selected, const LabeledDataset& external,
                   const StageConfig& config);

// beta0 + beta1 x + beta2 (alpha0 + alpha1 x) for stage one {1, x, z} and
// the regression of z on {1, x}.
double rr_closed_form(const FittedLinearModel& stage_one, const FittedLinearModel& stage_two,
                      double x);

CausalCurve fit_tsr(const LabeledDataset& selected, const LabeledDataset& external, TsrCase tsr_case,
                    const StageConfig& config);

// Mean of (curve(x) - truth(x))^2 over the points.
double evaluate_mse(const CausalCurve& curve, const Eigen::VectorXd& x_points,
                    const std::function<double(double)>& truth);

}  // namespace proxicause
