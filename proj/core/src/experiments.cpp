#include "proxicause/experiments.hpp"

#include "proxicause/error.hpp"
#include "proxicause/estimators.hpp"
#include "proxicause/io.hpp"
#include "proxicause/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace proxicause {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunResult {
  double mse_s = kNaN;
  double mse_d = kNaN;
  Eigen::VectorXd curve;
  std::string error;
};

struct Group {
  Eigen::Index n;
  PairingMode mode;
};

std::string group_tag(const char* what, const Group& g) {
  return std::string(what) + ":" + std::to_string(g.n) + ":" + to_string(g.mode);
}

CausalCurve fit_estimator(EstimatorId id, const BuiltinExample& ex, const PairedSample& train,
                          std::uint64_t cv_seed) {
  StageConfig config;
  config.stage_one_map = ex.stage_one_map;
  config.stage_two_map = ex.stage_two_map;
  config.cv_seed = cv_seed;
  switch (id) {
    case EstimatorId::Naive:
      return fit_naive(train.selected, ex.stage_one_map.restricted([](int c) { return c < 1; }));
    case EstimatorId::Rr:
      return fit_rr(train.selected, train.external, config);
    case EstimatorId::RrRidge:
      config.ridge_stage_one = true;
      return fit_rr(train.selected, train.external, config);
    case EstimatorId::Tsr:
      return fit_tsr(train.selected, train.external, ex.tsr_case, config);
    case EstimatorId::TsrRidge:
      config.ridge_stage_one = true;
      config.ridge_stage_two = ex.stage_two_ridge;
      return fit_tsr(train.selected, train.external, ex.tsr_case, config);
  }
  throw InvalidArgument("unknown estimator");
}

Eigen::VectorXd treatment_column(const LabeledDataset& data) {
  return data.table().column(data.columns(ColumnRole::X).front());
}

void mean_sd(const std::vector<double>& values, double& mean, double& sd) {
  std::vector<double> ok;
  for (double v : values) {
    if (!std::isnan(v)) ok.push_back(v);
  }
  mean = kNaN;
  sd = kNaN;
  if (ok.empty()) return;
  double total = 0.0;
  for (double v : ok) total += v;
  mean = total / static_cast<double>(ok.size());
  if (ok.size() < 2) {
    sd = 0.0;
    return;
  }
  double ss = 0.0;
  for (double v : ok) ss += (v - mean) * (v - mean);
  sd = std::sqrt(ss / static_cast<double>(ok.size() - 1));
}

// Population draw of X used to place grids; fixed seed so that grids do not
// depend on the experiment's master seed.
Eigen::VectorXd population_x(const BuiltinExample& ex) {
  const auto table = sample(ex.scm, 200000, derive_seed(0, 0, stream_tag("x-grid")));
  return table.column(ex.scm.treatment());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::Naive:
      return "naive";
    case EstimatorId::Rr:
      return "rr";
    case EstimatorId::RrRidge:
      return "rr-ridge";
    case EstimatorId::Tsr:
      return "tsr";
    case EstimatorId::TsrRidge:
      return "tsr-ridge";
  }
  return "?";
}

const std::vector<EstimatorId>& all_estimators() {
  static const std::vector<EstimatorId> ids{EstimatorId::Naive, EstimatorId::Rr, EstimatorId::RrRidge,
                                            EstimatorId::Tsr, EstimatorId::TsrRidge};
  return ids;
}

EstimatorId parse_estimator(const std::string& name) {
  for (auto id : all_estimators()) {
    if (to_string(id) == name) return id;
  }
  throw InvalidArgument("unknown estimator '" + name + "'");
}

PairingMode parse_pairing_mode(const std::string& name) {
  if (name == "disjoint") return PairingMode::Disjoint;
  if (name == "subset") return PairingMode::SubsetOfD;
  throw InvalidArgument("unknown mode '" + name + "' (expected disjoint or subset)");
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": byte " + std::to_string(e.byte) + ": malformed JSON");
  }
  if (!doc.is_object()) throw ParseError(source + ": expected an object");
  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "example") {
        cfg.example = value.get<std::string>();
      } else if (key == "n") {
        cfg.n_values = value.is_array() ? value.get<std::vector<Eigen::Index>>()
                                        : std::vector<Eigen::Index>{value.get<Eigen::Index>()};
      } else if (key == "runs") {
        cfg.runs = value.get<int>();
      } else if (key == "modes" || key == "mode") {
        cfg.modes.clear();
        for (const auto& m : value.is_array() ? value : json::array({value})) {
          const auto name = m.get<std::string>();
          if (name == "both") {
            cfg.modes = {PairingMode::Disjoint, PairingMode::SubsetOfD};
          } else {
            cfg.modes.push_back(parse_pairing_mode(name));
          }
        }
      } else if (key == "estimators") {
        cfg.estimators.clear();
        for (const auto& e : value) cfg.estimators.push_back(parse_estimator(e.get<std::string>()));
      } else if (key == "seed") {
        cfg.master_seed = value.get<std::uint64_t>();
      } else if (key == "grid_points") {
        cfg.grid_points = value.get<int>();
      } else if (key == "grid_min") {
        cfg.grid_min = value.get<double>();
      } else if (key == "grid_max") {
        cfg.grid_max = value.get<double>();
      } else if (key == "workers") {
        cfg.workers = value.get<int>();
      } else if (key == "oracle_mc") {
        cfg.oracle_mc = value.get<Eigen::Index>();
      } else {
        throw ParseError(source + ": at /" + key + ": unknown key");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(source + ": " + e.what());
  }
  return cfg;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

BandReport compute_band(const Eigen::MatrixXd& curves, const Eigen::VectorXd& x_grid,
                        const Eigen::VectorXd& truth) {
  if (curves.cols() != x_grid.size() || truth.size() != x_grid.size()) {
    throw InvalidArgument("band inputs disagree on grid size");
  }
  BandReport band{x_grid, Eigen::VectorXd(x_grid.size()), Eigen::VectorXd(x_grid.size()),
                  Eigen::VectorXd(x_grid.size()), truth};
  for (Eigen::Index g = 0; g < x_grid.size(); ++g) {
    std::vector<double> col(curves.col(g).data(), curves.col(g).data() + curves.rows());
    band.lower(g) = quantile(col, 0.025);
    band.upper(g) = quantile(col, 0.975);
    band.mean(g) = curves.rows() > 0 ? curves.col(g).mean() : kNaN;
  }
  return band;
}

Eigen::VectorXd default_x_grid(const BuiltinExample& example, int points) {
  if (points < 2) throw InvalidArgument("grid needs at least two points");
  const Eigen::VectorXd x = population_x(example);
  std::vector<double> v(x.data(), x.data() + x.size());
  return Eigen::VectorXd::LinSpaced(points, quantile(v, 0.005), quantile(v, 0.995));
}

std::function<double(double)> truth_curve(const BuiltinExample& example, Eigen::Index oracle_mc,
                                          std::uint64_t seed) {
  if (example.truth.causal_effect) return example.truth.causal_effect;
  const Eigen::VectorXd x = population_x(example);
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size() - 1));
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(201, mean - 6.0 * sd, mean + 6.0 * sd);
  const Eigen::VectorXd values = oracle_do_curve(example.scm, grid, oracle_mc, seed).mean;
  return [grid, values](double q) {
    const Eigen::Index last = grid.size() - 1;
    const double step = (grid(last) - grid(0)) / static_cast<double>(last);
    auto k = static_cast<Eigen::Index>(std::floor((q - grid(0)) / step));
    k = std::clamp<Eigen::Index>(k, 0, last - 1);
    const double t = (q - grid(k)) / (grid(k + 1) - grid(k));
    return values(k) + t * (values(k + 1) - values(k));
  };
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.runs < 1) throw InvalidArgument("runs must be at least 1");
  if (config.n_values.empty()) throw InvalidArgument("no sample sizes given");
  for (auto n : config.n_values) {
    if (n < 10) throw InvalidArgument("sample sizes must be at least 10");
  }
  if (config.modes.empty()) throw InvalidArgument("no pairing modes given");
  if (config.grid_min.has_value() != config.grid_max.has_value()) {
    throw InvalidArgument("grid_min and grid_max go together");
  }
  const BuiltinExample ex = builtin_example(config.example);
  const Eigen::VectorXd grid =
      config.grid_min ? Eigen::VectorXd::LinSpaced(config.grid_points, *config.grid_min, *config.grid_max)
                      : default_x_grid(ex, config.grid_points);
  const auto truth =
      truth_curve(ex, config.oracle_mc, derive_seed(config.master_seed, 0, stream_tag("oracle")));
  Eigen::VectorXd truth_on_grid(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) truth_on_grid(g) = truth(grid(g));

  std::vector<Group> groups;
  for (auto n : config.n_values) {
    for (auto mode : config.modes) groups.push_back({n, mode});
  }
  const std::size_t n_est = config.estimators.size();
  const auto runs = static_cast<std::size_t>(config.runs);
  // results[group][run][estimator]
  std::vector<std::vector<std::vector<RunResult>>> results(
      groups.size(), std::vector<std::vector<RunResult>>(runs, std::vector<RunResult>(n_est)));

  auto task = [&](std::size_t index) {
    const std::size_t gi = index / runs;
    const std::size_t run = index % runs;
    const Group& g = groups[gi];
    auto& out = results[gi][run];
    std::optional<PairedSample> train, test;
    try {
      train.emplace(make_paired(ex.scm, ex.selection, g.n, g.mode,
                                derive_seed(config.master_seed, run, stream_tag(group_tag("train", g)))));
      test.emplace(make_paired(ex.scm, ex.selection, g.n, g.mode,
                               derive_seed(config.master_seed, run, stream_tag(group_tag("test", g)))));
    } catch (const Error& e) {
      for (auto& r : out) r.error = e.what();
      return;
    }
    const Eigen::VectorXd xs = treatment_column(test->selected);
    const Eigen::VectorXd xd = treatment_column(test->external);
    const std::uint64_t cv_seed = derive_seed(config.master_seed, run, stream_tag(group_tag("cv", g)));
    for (std::size_t e = 0; e < n_est; ++e) {
      try {
        const auto curve = fit_estimator(config.estimators[e], ex, *train, cv_seed);
        out[e].mse_s = evaluate_mse(curve, xs, truth);
        out[e].mse_d = evaluate_mse(curve, xd, truth);
        out[e].curve = curve(grid);
      } catch (const Error& err) {
        out[e] = RunResult{};
        out[e].error = err.what();
      }
    }
  };

  const std::size_t total = groups.size() * runs;
  const auto workers = static_cast<std::size_t>(std::max(1, config.workers));
  if (workers == 1) {
    for (std::size_t i = 0; i < total; ++i) task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, total); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < total; i = next++) task(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  ExperimentReport report{config.example, {}, false};
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (std::size_t e = 0; e < n_est; ++e) {
      CellReport cell;
      cell.estimator = config.estimators[e];
      cell.n = groups[gi].n;
      cell.mode = groups[gi].mode;
      cell.runs = config.runs;
      std::vector<Eigen::VectorXd> curves;
      std::set<std::string> errors;
      for (std::size_t run = 0; run < runs; ++run) {
        const auto& r = results[gi][run][e];
        cell.mse_s.push_back(r.mse_s);
        cell.mse_d.push_back(r.mse_d);
        if (!r.error.empty()) {
          ++cell.failures;
          errors.insert(r.error);
        } else {
          curves.push_back(r.curve);
        }
      }
      cell.errors.assign(errors.begin(), errors.end());
      mean_sd(cell.mse_s, cell.mse_s_mean, cell.mse_s_sd);
      mean_sd(cell.mse_d, cell.mse_d_mean, cell.mse_d_sd);
      Eigen::MatrixXd m(static_cast<Eigen::Index>(curves.size()), grid.size());
      for (std::size_t i = 0; i < curves.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = curves[i];
      cell.band = compute_band(m, grid, truth_on_grid);
      if (10 * cell.failures > cell.runs) report.degraded = true;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::string summary_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "example,estimator,n,mode,split,mse_mean,mse_sd,runs,failures\n";
  for (const auto& c : report.cells) {
    for (const bool s_split : {true, false}) {
      out << report.example << ',' << to_string(c.estimator) << ',' << c.n << ',' << to_string(c.mode)
          << ',' << (s_split ? "S" : "D") << ',' << format_number(s_split ? c.mse_s_mean : c.mse_d_mean)
          << ',' << format_number(s_split ? c.mse_s_sd : c.mse_d_sd) << ',' << c.runs << ','
          << c.failures << '\n';
    }
  }
  return out.str();
}

std::string band_csv(const BandReport& band) {
  std::ostringstream out;
  out << "x,lower,mean,upper,truth\n";
  for (Eigen::Index g = 0; g < band.x_grid.size(); ++g) {
    out << format_number(band.x_grid(g)) << ',' << format_number(band.lower(g)) << ','
        << format_number(band.mean(g)) << ',' << format_number(band.upper(g)) << ','
        << format_number(band.truth(g)) << '\n';
  }
  return out.str();
}

std::string band_file_name(const CellReport& cell) {
  return "band_" + to_string(cell.estimator) + "_n" + std::to_string(cell.n) + "_" +
         to_string(cell.mode) + ".csv";
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw Error("cannot create " + directory.string() + ": " + ec.message());
  write_file(directory / "summary.csv", summary_csv(report));
  std::ostringstream runs;
  runs << "example,estimator,n,mode,run,mse_S,mse_D\n";
  for (const auto& c : report.cells) {
    for (std::size_t r = 0; r < c.mse_s.size(); ++r) {
      runs << report.example << ',' << to_string(c.estimator) << ',' << c.n << ','
           << to_string(c.mode) << ',' << r << ',' << format_number(c.mse_s[r]) << ','
           << format_number(c.mse_d[r]) << '\n';
    }
  }
  write_file(directory / "runs.csv", runs.str());
  for (const auto& c : report.cells) write_file(directory / band_file_name(c), band_csv(c.band));
}

}  // namespace proxicause
