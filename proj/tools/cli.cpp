#include "cli.hpp"

#include "proxicause/causal_graph.hpp"
#include "proxicause/error.hpp"
#include "proxicause/estimators.hpp"
#include "proxicause/experiments.hpp"
#include "proxicause/io.hpp"
#include "proxicause/scm.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace proxicause::cli {
namespace {

constexpr int kUsage = 2;
constexpr int kDegraded = 3;

std::uint64_t default_seed() {
  const char* env = std::getenv("PROXICAUSE_SEED");
  if (!env || !*env) return 0;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(env, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || env[used] != '\0') throw InvalidArgument("PROXICAUSE_SEED is not an integer");
  return v;
}

// "min:max:count"
Eigen::VectorXd parse_grid(const std::string& spec) {
  std::istringstream in(spec);
  double lo = 0.0, hi = 0.0;
  int count = 0;
  char c1 = 0, c2 = 0;
  if (!(in >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1 || !in.eof()) {
    throw InvalidArgument("--grid expects min:max:count");
  }
  if (count == 1) return Eigen::VectorXd::Constant(1, lo);
  return Eigen::VectorXd::LinSpaced(count, lo, hi);
}

Eigen::VectorXd points_from(const std::vector<double>& xs, const std::string& grid) {
  if (!xs.empty() && !grid.empty()) throw InvalidArgument("give either --x or --grid, not both");
  if (!grid.empty()) return parse_grid(grid);
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

void print_report(const CriterionReport& report, std::ostream& out) {
  out << report.criterion << ": " << (report.holds() ? "HOLDS" : "FAILS") << '\n';
  for (const auto& f : report.failures) out << "  " << f.condition << ": " << f.witness << '\n';
}

int check_graph(const std::string& path, const std::vector<std::string>& zt, bool zt_given,
                std::ostream& out) {
  const CausalDag dag = read_dag(path);
  const auto assumption = check_assumption_new(dag);
  print_report(check_pmar(dag), out);
  print_report(assumption, out);
  print_report(check_selection_backdoor(dag), out);
  print_report(check_gact3(dag, zt_given ? std::optional<NodeSet>(NodeSet(zt.begin(), zt.end()))
                                         : std::nullopt),
               out);
  if (assumption.holds()) out << "TSR case: " << to_string(tsr_case(dag)) << '\n';
  return assumption.holds() ? 0 : kUsage;
}

struct OracleArgs {
  std::string example;
  std::string scm_path;
  std::vector<double> xs;
  std::string grid;
  long long nmc = 1'000'000;
  std::uint64_t seed = 0;
};

int oracle(const OracleArgs& a, std::ostream& out) {
  if (a.nmc < 1) throw InvalidArgument("--nmc must be at least 1");
  if (a.example.empty() == a.scm_path.empty()) {
    throw InvalidArgument("give either an example name or --scm");
  }
  const Eigen::VectorXd x = points_from(a.xs, a.grid);
  if (x.size() == 0) throw InvalidArgument("no evaluation points; use --x or --grid");
  std::optional<ScmSpec> scm;
  std::function<double(double)> analytic;
  if (!a.example.empty()) {
    auto ex = builtin_example(a.example);
    scm.emplace(ex.scm);
    analytic = ex.truth.causal_effect;
  } else {
    scm.emplace(read_scm(a.scm_path).scm);
  }
  const auto curve = oracle_do_curve(*scm, x, a.nmc, a.seed);
  out << "x,do_mean,mc_se" << (analytic ? ",analytic" : "") << '\n';
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out << format_number(x(i)) << ',' << format_number(curve.mean(i)) << ','
        << format_number(curve.standard_error(i));
    if (analytic) out << ',' << format_number(analytic(x(i)));
    out << '\n';
  }
  return 0;
}

struct FitArgs {
  std::string dag_path, selected_path, external_path;
  std::string estimator = "tsr";
  std::string case_name;
  int degree = 2;
  bool ridge = false;
  bool force = false;
  std::vector<double> xs;
  std::string grid;
  std::uint64_t seed = 0;
};

int fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  const CausalDag dag = read_dag(a.dag_path);
  if (dag.roles().x.size() != 1 || !dag.roles().y) {
    throw InvalidArgument("the graph must name exactly one treatment and a target");
  }
  if (a.degree < 1) throw InvalidArgument("--degree must be at least 1");
  const auto assumption = check_assumption_new(dag);
  if (!assumption.holds() && !a.force) {
    print_report(assumption, err);
    err << "refusing to fit; pass --force to override\n";
    return kUsage;
  }
  const auto split = decompose_proxies(dag);
  const std::string& x = dag.roles().x.front();
  const std::string& y = *dag.roles().y;

  std::vector<std::string> s_cols{x}, d_cols;
  std::map<std::string, ColumnRole> s_roles{{x, ColumnRole::X}, {y, ColumnRole::Y}}, d_roles;
  for (const auto& z : dag.roles().z) {
    s_cols.push_back(z);
    const auto role = split.zminus.count(z) ? ColumnRole::ZMinus : ColumnRole::ZPlus;
    s_roles[z] = role;
    d_roles[z] = role;
  }
  // Role order within the selected data follows [X, Z+, Z-].
  std::stable_sort(s_cols.begin() + 1, s_cols.end(), [&](const auto& l, const auto& r) {
    return s_roles[l] == ColumnRole::ZPlus && s_roles[r] == ColumnRole::ZMinus;
  });
  s_cols.push_back(y);
  const NumericTable s_raw = read_csv(a.selected_path);
  const NumericTable d_raw = read_csv(a.external_path);
  if (d_raw.has(x)) {
    d_cols.push_back(x);
    d_roles[x] = ColumnRole::X;
  }
  for (const auto& c : s_cols) {
    if (c != x && c != y) d_cols.push_back(c);
  }
  for (const auto& c : d_cols) {
    if (!d_raw.has(c)) throw MissingColumnError(a.external_path + ": missing column '" + c + "'");
  }
  LabeledDataset selected(s_raw.select(s_cols), s_roles, Provenance::Selected);
  LabeledDataset external(d_raw.select(d_cols), d_roles, Provenance::External);

  const int np = static_cast<int>(split.zplus.size());
  const int nm = static_cast<int>(split.zminus.size());
  std::vector<int> one{a.degree}, two{a.degree};
  one.insert(one.end(), static_cast<std::size_t>(np + nm), 1);
  two.insert(two.end(), static_cast<std::size_t>(np), 1);
  StageConfig config;
  config.stage_one_map = FeatureMap::separable(one);
  config.stage_two_map = FeatureMap::separable(two);
  config.ridge_stage_one = a.ridge;
  config.cv_seed = a.seed;

  std::optional<CausalCurve> curve;
  if (a.estimator == "naive") {
    curve.emplace(fit_naive(selected, config.stage_one_map.restricted([](int c) { return c < 1; })));
  } else if (a.estimator == "rr") {
    curve.emplace(fit_rr(selected, external, config));
  } else if (a.estimator == "tsr") {
    const TsrCase c = a.case_name.empty() ? tsr_case(dag, true, !a.force) : parse_tsr_case(a.case_name);
    curve.emplace(fit_tsr(selected, external, c, config));
  } else {
    throw InvalidArgument("unknown estimator '" + a.estimator + "' (naive, rr or tsr)");
  }

  Eigen::VectorXd points = points_from(a.xs, a.grid);
  if (points.size() == 0) {
    if (!d_raw.has(x)) throw InvalidArgument("external data has no X column; use --x or --grid");
    const auto col = d_raw.column(x);
    points = Eigen::VectorXd::LinSpaced(101, col.minCoeff(), col.maxCoeff());
  }
  out << "x,estimate\n";
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    out << format_number(points(i)) << ',' << format_number((*curve)(points(i))) << '\n';
  }
  return 0;
}

struct RunArgs {
  std::string config_path;
  std::string example;
  std::vector<long long> n;
  int runs = 0;
  std::string mode;
  std::vector<std::string> estimators;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 0;
  long long oracle_mc = 0;
  std::string out_dir = "proxicause-results";
};

int run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  if (!a.config_path.empty()) cfg = parse_experiment_config(read_text_file(a.config_path), a.config_path);
  if (!a.config_path.empty() && !a.seed_given && cfg.master_seed == 0) cfg.master_seed = a.seed;
  if (a.config_path.empty() || a.seed_given) cfg.master_seed = a.seed;
  if (!a.example.empty()) cfg.example = a.example;
  if (cfg.example.empty()) throw InvalidArgument("no example given; use --example or --config");
  if (!a.n.empty()) cfg.n_values.assign(a.n.begin(), a.n.end());
  if (a.runs > 0) cfg.runs = a.runs;
  if (!a.mode.empty()) {
    cfg.modes = a.mode == "both" ? std::vector<PairingMode>{PairingMode::Disjoint, PairingMode::SubsetOfD}
                                 : std::vector<PairingMode>{parse_pairing_mode(a.mode)};
  }
  if (!a.estimators.empty()) {
    cfg.estimators.clear();
    for (const auto& e : a.estimators) cfg.estimators.push_back(parse_estimator(e));
  }
  if (a.workers > 0) cfg.workers = a.workers;
  if (a.oracle_mc > 0) cfg.oracle_mc = a.oracle_mc;

  const auto report = run_experiment(cfg);
  emit_report(report, a.out_dir);

  out << std::left << std::setw(10) << "estimator" << std::setw(7) << "n" << std::setw(10) << "mode"
      << std::setw(24) << "mse_S" << std::setw(24) << "mse_D" << "failures\n";
  for (const auto& c : report.cells) {
    std::ostringstream s, d;
    s << format_number(c.mse_s_mean) << " (" << format_number(c.mse_s_sd) << ")";
    d << format_number(c.mse_d_mean) << " (" << format_number(c.mse_d_sd) << ")";
    out << std::setw(10) << to_string(c.estimator) << std::setw(7) << c.n << std::setw(10)
        << to_string(c.mode) << std::setw(24) << s.str() << std::setw(24) << d.str() << c.failures
        << '/' << c.runs << '\n';
  }
  out << "wrote " << a.out_dir << "/summary.csv\n";
  if (report.degraded) {
    err << "more than 10% of runs failed in at least one cell:\n";
    for (const auto& c : report.cells) {
      for (const auto& e : c.errors) err << "  " << to_string(c.estimator) << ": " << e << '\n';
    }
    return kDegraded;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal effect estimation under selection bias with proxies and external data",
               "proxicause"};
  app.require_subcommand(1);

  std::string dag_path;
  std::vector<std::string> zt;
  auto* check = app.add_subcommand("check-graph", "Evaluate the graphical criteria on a DAG file");
  check->add_option("dag", dag_path, "DAG description (JSON)")->required();
  auto* zt_opt = check->add_option("--zt", zt, "Externally observed proxies for GACT3")->delimiter(',');

  OracleArgs oa;
  auto* orc = app.add_subcommand("oracle", "Monte Carlo E[Y|do(X=x)] for an example or SCM file");
  orc->add_option("example", oa.example, "Builtin example name");
  orc->add_option("--scm", oa.scm_path, "SCM description (JSON)");
  orc->add_option("--x", oa.xs, "Comma-separated x values")->delimiter(',')->allow_extra_args(false);
  orc->add_option("--grid", oa.grid, "min:max:count");
  orc->add_option("--nmc", oa.nmc, "Monte Carlo draws per point");
  auto* oseed = orc->add_option("--seed", oa.seed, "Seed");

  FitArgs fa;
  auto* fitc = app.add_subcommand("fit", "Fit an estimator on user CSV data");
  fitc->add_option("--dag", fa.dag_path, "DAG description binding column roles")->required();
  fitc->add_option("--selected", fa.selected_path, "Selected sample CSV (X, Z, Y)")->required();
  fitc->add_option("--external", fa.external_path, "External sample CSV (X, Z)")->required();
  fitc->add_option("--estimator", fa.estimator, "naive, rr or tsr");
  fitc->add_option("--case", fa.case_name, "Override the TSR case");
  fitc->add_option("--degree", fa.degree, "Polynomial degree in X");
  fitc->add_flag("--ridge", fa.ridge, "Ridge penalty in the first stage");
  fitc->add_flag("--force", fa.force, "Fit even when the assumptions fail");
  fitc->add_option("--x", fa.xs, "Comma-separated x values")->delimiter(',')->allow_extra_args(false);
  fitc->add_option("--grid", fa.grid, "min:max:count");
  auto* fseed = fitc->add_option("--seed", fa.seed, "Cross-validation seed");

  RunArgs ra;
  auto* runc = app.add_subcommand("run", "Run a simulation experiment");
  runc->add_option("--config", ra.config_path, "Experiment configuration (JSON)");
  runc->add_option("--example", ra.example, "Builtin example name");
  runc->add_option("--n", ra.n, "Sample sizes")->delimiter(',');
  runc->add_option("--runs", ra.runs, "Repetitions per cell");
  runc->add_option("--mode", ra.mode, "disjoint, subset or both");
  runc->add_option("--estimators", ra.estimators, "Estimators to run")->delimiter(',');
  auto* rseed = runc->add_option("--seed", ra.seed, "Master seed");
  runc->add_option("--workers", ra.workers, "Worker threads");
  runc->add_option("--oracle-mc", ra.oracle_mc, "Monte Carlo draws for oracle truths");
  runc->add_option("--out", ra.out_dir, "Output directory");

  auto* list = app.add_subcommand("list-examples", "List builtin examples");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsage;
  }

  try {
    const std::uint64_t env_seed = default_seed();
    if (check->parsed()) return check_graph(dag_path, zt, zt_opt->count() > 0, out);
    if (orc->parsed()) {
      if (oseed->count() == 0) oa.seed = env_seed;
      return oracle(oa, out);
    }
    if (fitc->parsed()) {
      if (fseed->count() == 0) fa.seed = env_seed;
      return fit(fa, out, err);
    }
    if (runc->parsed()) {
      ra.seed_given = rseed->count() > 0;
      if (!ra.seed_given) ra.seed = env_seed;
      return run(ra, out, err);
    }
    if (list->parsed()) {
      for (const auto& name : builtin_names()) {
        const auto ex = builtin_example(name);
        out << name << '\t' << to_string(ex.tsr_case) << '\n';
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace proxicause::cli
