#include "proxicause/estimators.hpp"

#include "proxicause/error.hpp"
#include "proxicause/random.hpp"

#include <map>

namespace proxicause {
namespace {

struct Layout {
  std::vector<std::string> x, zplus, zminus;

  int nx() const { return static_cast<int>(x.size()); }
  int np() const { return static_cast<int>(zplus.size()); }
  int nm() const { return static_cast<int>(zminus.size()); }

  std::vector<std::string> stage_one_columns() const {
    auto out = x;
    out.insert(out.end(), zplus.begin(), zplus.end());
    out.insert(out.end(), zminus.begin(), zminus.end());
    return out;
  }
};

Layout layout_of(const LabeledDataset& selected) {
  if (selected.provenance() != Provenance::Selected) {
    throw InvalidArgument("first dataset must be the selected sample");
  }
  return {selected.columns(ColumnRole::X), selected.columns(ColumnRole::ZPlus),
          selected.columns(ColumnRole::ZMinus)};
}

void require_external(const LabeledDataset& external, const std::vector<std::string>& columns) {
  if (external.provenance() != Provenance::External) {
    throw InvalidArgument("second dataset must be the external sample");
  }
  for (const auto& c : columns) {
    if (!external.table().has(c)) {
      throw MissingColumnError("external data lacks column '" + c + "' present in the selected data");
    }
  }
}

FittedLinearModel fit_stage(const FeatureMap& map, const Eigen::MatrixXd& data,
                            const Eigen::VectorXd& response, bool ridge, const StageConfig& config,
                            std::uint64_t cv_seed, const char* what) {
  if (data.rows() < map.size()) {
    throw DegenerateSampleError(std::string(what) + " has " + std::to_string(data.rows()) +
                                " rows for " + std::to_string(map.size()) + " features");
  }
  const auto design = expand_features(map, data, response);
  if (!ridge) return fit_ols(design);
  if (config.cv_grid.empty()) throw InvalidArgument("ridge requested with an empty lambda grid");
  return fit_ridge_cv(design, config.cv_grid, {config.cv_folds, cv_seed});
}

// Split of a monomial over stage-one columns into X, Z+ and Z- parts, each
// re-indexed to start at 0 within its block.
struct SplitMonomial {
  Monomial x, zplus, zminus;
};

SplitMonomial split(const Monomial& m, int nx, int np) {
  SplitMonomial out;
  for (const auto& [col, exp] : m) {
    if (col < nx) {
      out.x[col] = exp;
    } else if (col < nx + np) {
      out.zplus[col - nx] = exp;
    } else {
      out.zminus[col - nx - np] = exp;
    }
  }
  return out;
}

Eigen::VectorXd monomial_column(const Monomial& m, const Eigen::MatrixXd& data) {
  Eigen::VectorXd out = Eigen::VectorXd::Ones(data.rows());
  for (const auto& [col, exp] : m) {
    for (int e = 0; e < exp; ++e) out.array() *= data.col(col).array();
  }
  return out;
}

// sum over terms of coefficient * x-monomial(x), a polynomial in the
// treatment values only.
struct XPolynomial {
  std::vector<std::pair<double, Monomial>> terms;

  double operator()(const double* x) const {
    double v = 0.0;
    for (const auto& [w, m] : terms) v += w * evaluate_monomial(m, x);
    return v;
  }
};

Monomial product(const Monomial& a, const Monomial& b) {
  Monomial out = a;
  for (const auto& [c, e] : b) out[c] += e;
  return out;
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Naive:
      return "naive";
    case EstimatorKind::RepeatedRegression:
      return "rr";
    case EstimatorKind::TwoStepRegression:
      return "tsr";
  }
  return "?";
}

CausalCurve::CausalCurve(EstimatorKind kind, std::optional<TsrCase> tsr_case,
                         std::vector<std::string> x_columns, std::vector<FittedLinearModel> stages,
                         Evaluator evaluator)
    : kind_(kind),
      tsr_case_(tsr_case),
      x_columns_(std::move(x_columns)),
      stages_(std::move(stages)),
      evaluator_(std::move(evaluator)) {}

double CausalCurve::operator()(double x) const {
  if (x_columns_.size() != 1) throw InvalidArgument("curve has more than one treatment column");
  return evaluator_(&x);
}

Eigen::VectorXd CausalCurve::operator()(const Eigen::VectorXd& xs) const {
  Eigen::VectorXd out(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) out(i) = (*this)(xs(i));
  return out;
}

CausalCurve fit_naive(const LabeledDataset& selected, const FeatureMap& map) {
  const Layout lay = layout_of(selected);
  if (map.max_column() >= lay.nx()) throw InvalidArgument("naive feature map may only use X columns");
  const auto& table = selected.table();
  const auto y = table.column(selected.columns(ColumnRole::Y).front());
  auto model = fit_stage(map, table.matrix(lay.x), y, false, {}, 0, "selected sample");
  auto shared = std::make_shared<const FittedLinearModel>(model);
  return CausalCurve(EstimatorKind::Naive, std::nullopt, lay.x, {model},
                     [shared](const double* x) { return predict_one(*shared, x); });
}

CausalCurve fit_rr(const LabeledDataset& selected, const LabeledDataset& external,
                   const StageConfig& config) {
  const Layout lay = layout_of(selected);
  const auto columns = lay.stage_one_columns();
  require_external(external, columns);
  const auto& s = selected.table();
  const auto y = s.column(selected.columns(ColumnRole::Y).front());
  auto one = fit_stage(config.stage_one_map, s.matrix(columns), y, config.ridge_stage_one, config,
                       config.cv_seed, "selected sample");

  const Eigen::MatrixXd d = external.table().matrix(columns);
  const Eigen::VectorXd imputed = predict(one, d);
  const int nx = lay.nx();
  const FeatureMap x_map = config.stage_one_map.restricted([nx](int c) { return c < nx; });
  auto two = fit_stage(x_map, external.table().matrix(lay.x), imputed, config.ridge_stage_two,
                       config, derive_seed(config.cv_seed, 1, stream_tag("rr-stage-two")),
                       "external sample");
  auto shared = std::make_shared<const FittedLinearModel>(two);
  return CausalCurve(EstimatorKind::RepeatedRegression, std::nullopt, lay.x, {one, two},
                     [shared](const double* x) { return predict_one(*shared, x); });
}

double rr_closed_form(const FittedLinearModel& stage_one, const FittedLinearModel& stage_two,
                      double x) {
  const FeatureMap one_expected({{}, {{0, 1}}, {{1, 1}}}, 1);
  const FeatureMap two_expected({{}, {{0, 1}}}, 1);
  if (!(stage_one.feature_map == one_expected) || !(stage_two.feature_map == two_expected)) {
    throw InvalidArgument("closed form needs stage one {1, x, z} and stage two {1, x}");
  }
  const auto& b = stage_one.coefficients;
  const auto& a = stage_two.coefficients;
  return b(0) + b(1) * x + b(2) * (a(0) + a(1) * x);
}

CausalCurve fit_tsr(const LabeledDataset& selected, const LabeledDataset& external, TsrCase tsr_case,
                    const StageConfig& config) {
  const Layout lay = layout_of(selected);
  const int nx = lay.nx(), np = lay.np(), nm = lay.nm();
  auto mismatch = [&](const std::string& why) {
    return InvalidArgument("case " + to_string(tsr_case) + " does not fit the data: " + why);
  };
  switch (tsr_case) {
    case TsrCase::NoProxies:
      if (np + nm > 0) throw mismatch("proxy columns are present");
      break;
    case TsrCase::ZplusOnly:
      if (nm > 0) throw mismatch("Z- columns are present");
      break;
    case TsrCase::ZminusOnlyUnconfounded:
      if (np > 0) throw mismatch("Z+ columns are present");
      if (nm == 0) throw mismatch("no Z- columns");
      break;
    case TsrCase::FullLinearShortcut:
    case TsrCase::FullIntegral:
      if (nm == 0) throw mismatch("no Z- columns");
      break;
  }
  if (config.stage_one_map.max_column() >= nx + np + nm) {
    throw MissingColumnError("stage-one map references more columns than the selected data has");
  }

  const auto& s = selected.table();
  const auto y = s.column(selected.columns(ColumnRole::Y).front());
  std::vector<FittedLinearModel> stages{fit_stage(config.stage_one_map, s.matrix(lay.stage_one_columns()),
                                                  y, config.ridge_stage_one, config, config.cv_seed,
                                                  "selected sample")};
  const Eigen::VectorXd beta = stages.front().coefficients;

  Eigen::MatrixXd dx, dp, dm;
  if (tsr_case != TsrCase::NoProxies) {
    require_external(external, lay.zplus);
    dp = external.table().matrix(lay.zplus);
    if (nm > 0) {
      require_external(external, lay.x);
      require_external(external, lay.zminus);
      dx = external.table().matrix(lay.x);
      dm = external.table().matrix(lay.zminus);
    }
  }

  // Stage-two map: the configured one, or its X-only part when there is no
  // Z+ to condition on.
  const bool uses_zplus = tsr_case == TsrCase::FullLinearShortcut || tsr_case == TsrCase::FullIntegral;
  const FeatureMap two_map =
      uses_zplus ? config.stage_two_map : config.stage_two_map.restricted([nx](int c) { return c < nx; });
  if (uses_zplus && two_map.max_column() >= nx + np) {
    throw MissingColumnError("stage-two map references more columns than X and Z+");
  }
  Eigen::MatrixXd two_data;
  if (nm > 0) {
    two_data.resize(dx.rows(), uses_zplus ? nx + np : nx);
    two_data.leftCols(nx) = dx;
    if (uses_zplus) two_data.rightCols(np) = dp;
  }
  Eigen::RowVectorXd zplus_mean = np > 0 ? Eigen::RowVectorXd(dp.colwise().mean()) : Eigen::RowVectorXd();

  // Stage-two regressions, one per distinct Z- monomial.
  std::map<Monomial, std::size_t> fitted;
  auto stage_two_for = [&](const Monomial& zminus) -> const FittedLinearModel& {
    auto it = fitted.find(zminus);
    if (it == fitted.end()) {
      const std::uint64_t seed =
          derive_seed(config.cv_seed, fitted.size() + 1, stream_tag("tsr-stage-two"));
      stages.push_back(fit_stage(two_map, two_data, monomial_column(zminus, dm),
                                 config.ridge_stage_two, config, seed, "external sample"));
      it = fitted.emplace(zminus, stages.size() - 1).first;
    }
    return stages[it->second];
  };

  std::vector<std::pair<Monomial, XPolynomial>> contributions;
  const auto& terms = config.stage_one_map.terms();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const double b = beta(static_cast<Eigen::Index>(t));
    const auto parts = split(terms[t], nx, np);
    const Eigen::VectorXd zplus_part =
        parts.zplus.empty() ? Eigen::VectorXd() : monomial_column(parts.zplus, dp);
    XPolynomial factor;
    if (parts.zminus.empty()) {
      const double mean = parts.zplus.empty() ? 1.0 : zplus_part.mean();
      factor.terms.push_back({b * mean, {}});
    } else {
      const auto& g = stage_two_for(parts.zminus);
      const double zplus_scale = parts.zplus.empty() ? 1.0 : zplus_part.mean();
      const auto& gterms = g.feature_map.terms();
      for (std::size_t k = 0; k < gterms.size(); ++k) {
        const double gamma = g.coefficients(static_cast<Eigen::Index>(k));
        Monomial gx, gp;
        for (const auto& [c, e] : gterms[k]) (c < nx ? gx[c] : gp[c - nx]) = e;
        double weight = 0.0;
        if (gp.empty()) {
          weight = zplus_scale;
        } else if (tsr_case == TsrCase::FullIntegral) {
          // Plug-in average of the Z+ factors over the external rows.
          const Eigen::VectorXd phi = monomial_column(gp, dp);
          weight = parts.zplus.empty() ? phi.mean() : phi.cwiseProduct(zplus_part).mean();
        } else {
          weight = zplus_scale * evaluate_monomial(gp, zplus_mean.data());
        }
        factor.terms.push_back({b * gamma * weight, gx});
      }
    }
    contributions.emplace_back(parts.x, std::move(factor));
  }

  // Collapse into a single polynomial in x.
  std::map<Monomial, double> collected;
  for (const auto& [xpart, factor] : contributions) {
    for (const auto& [w, m] : factor.terms) collected[product(xpart, m)] += w;
  }
  auto poly = std::make_shared<XPolynomial>();
  for (const auto& [m, w] : collected) poly->terms.push_back({w, m});
  std::shared_ptr<const XPolynomial> frozen = poly;
  return CausalCurve(EstimatorKind::TwoStepRegression, tsr_case, lay.x, std::move(stages),
                     [frozen](const double* x) { return (*frozen)(x); });
}

double evaluate_mse(const CausalCurve& curve, const Eigen::VectorXd& x_points,
                    const std::function<double(double)>& truth) {
  if (x_points.size() == 0) throw InvalidArgument("no evaluation points");
  double total = 0.0;
  for (Eigen::Index i = 0; i < x_points.size(); ++i) {
    const double r = curve(x_points(i)) - truth(x_points(i));
    total += r * r;
  }
  return total / static_cast<double>(x_points.size());
}

}  // namespace proxicause
