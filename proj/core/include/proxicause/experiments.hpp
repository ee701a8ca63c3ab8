#pragma once

#include "proxicause/scm.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace proxicause {

enum class EstimatorId { Naive, Rr, RrRidge, Tsr, TsrRidge };

std::string to_string(EstimatorId id);
EstimatorId parse_estimator(const std::string& name);
const std::vector<EstimatorId>& all_estimators();

PairingMode parse_pairing_mode(const std::string& name);

struct ExperimentConfig {
  std::string example;
  std::vector<Eigen::Index> n_values{500, 1000, 5000};
  int runs = 100;
  std::vector<PairingMode> modes{PairingMode::Disjoint, PairingMode::SubsetOfD};
  std::vector<EstimatorId> estimators = all_estimators();
  std::uint64_t master_seed = 0;
  int grid_points = 101;
  // Both or neither; defaults to the central 99% of X in the population.
  std::optional<double> grid_min, grid_max;
  int workers = 1;
  Eigen::Index oracle_mc = 1'000'000;
};

// Reads a JSON object whose keys mirror ExperimentConfig ("example", "n",
// "runs", "modes", "estimators", "seed", "grid_points", "grid_min",
// "grid_max", "workers", "oracle_mc"). Missing keys keep their defaults.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& source = "<string>");

struct BandReport {
  Eigen::VectorXd x_grid;
  Eigen::VectorXd lower;  // 2.5% quantile
  Eigen::VectorXd mean;
  Eigen::VectorXd upper;  // 97.5% quantile
  Eigen::VectorXd truth;
};

// One row of curves per run, one column per grid point. Quantiles
// interpolate linearly between order statistics.
BandReport compute_band(const Eigen::MatrixXd& curves, const Eigen::VectorXd& x_grid,
                        const Eigen::VectorXd& truth);

// Linear interpolation between order statistics at probability p.
double quantile(std::vector<double> values, double p);

struct CellReport {
  EstimatorId estimator;
  Eigen::Index n;
  PairingMode mode;
  int runs = 0;      // attempted
  int failures = 0;  // excluded from the aggregates
  double mse_s_mean = 0.0, mse_s_sd = 0.0;
  double mse_d_mean = 0.0, mse_d_sd = 0.0;
  std::vector<double> mse_s, mse_d;  // per run, NaN where the run failed
  BandReport band;
  std::vector<std::string> errors;  // distinct failure messages
};

struct ExperimentReport {
  std::string example;
  std::vector<CellReport> cells;  // ordered by n, mode, estimator
  bool degraded = false;          // some cell lost more than 10% of its runs
};

// Truth used for scoring: the analytic causal effect when known, otherwise
// a Monte Carlo oracle on a 201-point grid, linearly interpolated.
std::function<double(double)> truth_curve(const BuiltinExample& example, Eigen::Index oracle_mc,
                                          std::uint64_t seed);

// Evenly spaced points over the central 99% of the example's X.
Eigen::VectorXd default_x_grid(const BuiltinExample& example, int points);

ExperimentReport run_experiment(const ExperimentConfig& config);

// Writes summary.csv, runs.csv and one band CSV per cell into `directory`.
void emit_report(const ExperimentReport& report, const std::filesystem::path& directory);

std::string summary_csv(const ExperimentReport& report);
std::string band_csv(const BandReport& band);
std::string band_file_name(const CellReport& cell);

}  // namespace proxicause
