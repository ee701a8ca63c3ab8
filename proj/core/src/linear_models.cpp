#include "proxicause/linear_models.hpp"

#include "proxicause/error.hpp"
#include "proxicause/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace proxicause {
namespace {

constexpr double kRankTolerance = 1e-10;

struct StandardizedProblem {
  Eigen::MatrixXd features;  // centered and scaled, intercept column dropped
  Eigen::VectorXd centered_response;
  std::vector<Standardization> standardization;  // entry 0 is the intercept
  double response_mean = 0.0;
  std::vector<bool> degenerate;                  // zero variance, per feature
};

// Zero-variance features are flagged and left centered (all zeros) with
// unit scale.
StandardizedProblem standardize(const Eigen::MatrixXd& rows, const Eigen::VectorXd& y) {
  StandardizedProblem out;
  const Eigen::Index p = rows.cols() - 1;
  const auto n = static_cast<double>(rows.rows());
  out.response_mean = y.mean();
  out.centered_response = y.array() - out.response_mean;
  out.features.resize(rows.rows(), p);
  out.standardization.assign(static_cast<std::size_t>(p + 1), Standardization{});
  out.degenerate.assign(static_cast<std::size_t>(p), false);
  for (Eigen::Index j = 0; j < p; ++j) {
    auto col = rows.col(j + 1);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / n;
    double scale = std::sqrt(var);
    if (!(scale > 1e-12 * std::max(1.0, std::abs(mean)))) {
      out.degenerate[static_cast<std::size_t>(j)] = true;
      scale = 1.0;
    }
    out.standardization[static_cast<std::size_t>(j + 1)] = {mean, scale};
    out.features.col(j) = (col.array() - mean) / scale;
  }
  return out;
}

void require_intercept(const DesignMatrix& design) {
  if (design.map.terms().empty() || !design.map.terms().front().empty()) {
    throw InvalidArgument("ridge regression needs the intercept as the first feature");
  }
}

const Eigen::VectorXd& require_response(const DesignMatrix& design) {
  if (!design.response) throw InvalidArgument("design matrix has no response");
  if (design.response->size() != design.rows.rows()) {
    throw InvalidArgument("response length does not match design rows");
  }
  return *design.response;
}

// Standardized ridge coefficients from a thin SVD of the standardized
// features. Returns nullopt when lambda == 0 and the problem is rank
// deficient.
std::optional<Eigen::VectorXd> ridge_from_svd(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd,
                                              const Eigen::VectorXd& uty, Eigen::Index p,
                                              double lambda) {
  const auto& s = svd.singularValues();
  if (lambda == 0.0) {
    if (s.size() < p) return std::nullopt;
    if (s.size() > 0 && s(s.size() - 1) < kRankTolerance * s(0)) return std::nullopt;
  }
  Eigen::VectorXd shrink(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    const double denom = s(k) * s(k) + lambda;
    shrink(k) = denom > 0.0 ? s(k) / denom : 0.0;
  }
  return svd.matrixV() * shrink.cwiseProduct(uty);
}

Eigen::VectorXd to_original_scale(const Eigen::VectorXd& beta_std,
                                  const std::vector<Standardization>& st, double y_mean) {
  Eigen::VectorXd beta(beta_std.size() + 1);
  double intercept = y_mean;
  for (Eigen::Index j = 0; j < beta_std.size(); ++j) {
    const auto& s = st[static_cast<std::size_t>(j + 1)];
    beta(j + 1) = beta_std(j) / s.scale;
    intercept -= beta(j + 1) * s.mean;
  }
  beta(0) = intercept;
  return beta;
}

}  // namespace

int total_degree(const Monomial& m) {
  int d = 0;
  for (const auto& [col, exp] : m) d += exp;
  return d;
}

FeatureMap::FeatureMap(std::vector<Monomial> terms, int max_degree)
    : terms_(std::move(terms)), max_degree_(max_degree) {
  if (max_degree_ < 1) throw InvalidArgument("feature map: max_degree must be >= 1");
  if (terms_.empty() || !terms_.front().empty()) {
    throw InvalidArgument("feature map: the intercept must be the first term");
  }
  std::set<Monomial> seen;
  for (auto& term : terms_) {
    for (auto it = term.begin(); it != term.end();) {
      if (it->first < 0 || it->second < 0) {
        throw InvalidArgument("feature map: negative column index or exponent");
      }
      it = it->second == 0 ? term.erase(it) : std::next(it);
    }
    if (total_degree(term) > max_degree_) {
      throw InvalidArgument("feature map: term exceeds max_degree");
    }
    if (!seen.insert(term).second) throw InvalidArgument("feature map: duplicate term");
  }
}

FeatureMap FeatureMap::polynomial(int inputs, int degree) {
  if (inputs < 0) throw InvalidArgument("feature map: negative input count");
  std::vector<Monomial> terms{Monomial{}};
  // Nondecreasing index sequences of length d enumerate degree-d monomials.
  for (int d = 1; d <= degree; ++d) {
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    if (inputs == 0) break;
    while (true) {
      Monomial m;
      for (int c : idx) ++m[c];
      terms.push_back(std::move(m));
      int k = d - 1;
      while (k >= 0 && idx[static_cast<std::size_t>(k)] == inputs - 1) --k;
      if (k < 0) break;
      const int next = idx[static_cast<std::size_t>(k)] + 1;
      for (int i = k; i < d; ++i) idx[static_cast<std::size_t>(i)] = next;
    }
  }
  return FeatureMap(std::move(terms), std::max(degree, 1));
}

FeatureMap FeatureMap::separable(const std::vector<int>& degrees) {
  std::vector<Monomial> terms{Monomial{}};
  int max_degree = 1;
  for (std::size_t j = 0; j < degrees.size(); ++j) {
    if (degrees[j] < 0) throw InvalidArgument("feature map: negative degree");
    for (int p = 1; p <= degrees[j]; ++p) terms.push_back(Monomial{{static_cast<int>(j), p}});
    max_degree = std::max(max_degree, degrees[j]);
  }
  return FeatureMap(std::move(terms), max_degree);
}

FeatureMap FeatureMap::intercept_only() { return FeatureMap({Monomial{}}, 1); }

int FeatureMap::max_column() const {
  int out = -1;
  for (const auto& term : terms_) {
    for (const auto& [col, exp] : term) out = std::max(out, col);
  }
  return out;
}

FeatureMap FeatureMap::restricted(const std::function<bool(int)>& keep) const {
  std::vector<Monomial> kept;
  for (const auto& term : terms_) {
    if (std::all_of(term.begin(), term.end(), [&](const auto& kv) { return keep(kv.first); })) {
      kept.push_back(term);
    }
  }
  return FeatureMap(std::move(kept), max_degree_);
}

bool FeatureMap::is_affine_in(const std::function<bool(int)>& in) const {
  for (const auto& term : terms_) {
    int inside = 0;
    bool outside = false;
    for (const auto& [col, exp] : term) {
      if (in(col)) {
        inside += exp;
      } else {
        outside = true;
      }
    }
    if (inside > 1 || (inside == 1 && outside)) return false;
  }
  return true;
}

std::string FeatureMap::describe(const std::vector<std::string>& names) const {
  std::ostringstream out;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    if (t > 0) out << " + ";
    if (terms_[t].empty()) {
      out << "1";
      continue;
    }
    bool first = true;
    for (const auto& [col, exp] : terms_[t]) {
      if (!first) out << "*";
      first = false;
      const auto idx = static_cast<std::size_t>(col);
      out << (idx < names.size() ? names[idx] : "c" + std::to_string(col));
      if (exp > 1) out << "^" << exp;
    }
  }
  return out.str();
}

double evaluate_monomial(const Monomial& m, const double* row, Eigen::Index stride) {
  double v = 1.0;
  for (const auto& [col, exp] : m) {
    const double base = row[static_cast<Eigen::Index>(col) * stride];
    for (int e = 0; e < exp; ++e) v *= base;
  }
  return v;
}

DesignMatrix expand_features(const FeatureMap& map, const Eigen::MatrixXd& data) {
  if (map.max_column() >= data.cols()) {
    throw MissingColumnError("feature map references column " + std::to_string(map.max_column()) +
                             " but data has " + std::to_string(data.cols()) + " columns");
  }
  std::set<int> used;
  for (const auto& term : map.terms()) {
    for (const auto& [col, exp] : term) used.insert(col);
  }
  for (int col : used) {
    if (!data.col(col).allFinite()) {
      throw NonFiniteError("non-finite value in input column " + std::to_string(col));
    }
  }
  DesignMatrix out{map, Eigen::MatrixXd(data.rows(), map.size()), std::nullopt};
  for (Eigen::Index j = 0; j < map.size(); ++j) {
    const auto& term = map.terms()[static_cast<std::size_t>(j)];
    auto col = out.rows.col(j);
    col.setOnes();
    for (const auto& [c, exp] : term) {
      for (int e = 0; e < exp; ++e) col.array() *= data.col(c).array();
    }
  }
  return out;
}

DesignMatrix expand_features(const FeatureMap& map, const Eigen::MatrixXd& data,
                             const Eigen::VectorXd& response) {
  if (response.size() != data.rows()) {
    throw InvalidArgument("response length does not match data rows");
  }
  if (!response.allFinite()) throw NonFiniteError("non-finite response value");
  auto out = expand_features(map, data);
  out.response = response;
  return out;
}

FittedLinearModel fit_ols(const DesignMatrix& design) {
  const auto& y = require_response(design);
  const auto& x = design.rows;
  if (x.rows() < 1) throw SingularDesignError("empty design");
  if (x.rows() < x.cols()) {
    throw SingularDesignError("design has " + std::to_string(x.rows()) + " rows for " +
                              std::to_string(x.cols()) + " features");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  const auto& r = qr.matrixQR();
  const double lead = std::abs(r(0, 0));
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    if (!(std::abs(r(k, k)) >= kRankTolerance * lead) || lead == 0.0) {
      throw SingularDesignError("rank-deficient design (pivot " + std::to_string(k) + ")");
    }
  }
  FittedLinearModel model{design.map, qr.solve(y), std::nullopt, {}};
  model.standardization.assign(static_cast<std::size_t>(x.cols()), Standardization{});
  return model;
}

FittedLinearModel fit_ridge(const DesignMatrix& design, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("ridge lambda must be finite and non-negative");
  }
  require_intercept(design);
  const auto& y = require_response(design);
  if (design.rows.rows() < 1) throw SingularDesignError("empty design");
  auto prob = standardize(design.rows, y);
  const Eigen::Index p = prob.features.cols();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!prob.degenerate[static_cast<std::size_t>(j)]) continue;
    if (lambda > 0.0) {
      throw DegenerateFeatureError("feature " + std::to_string(j + 1) +
                                   " has zero variance and cannot be penalized");
    }
    throw SingularDesignError("feature " + std::to_string(j + 1) +
                              " is collinear with the intercept");
  }
  Eigen::VectorXd beta_std = Eigen::VectorXd::Zero(p);
  if (p > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(prob.features, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd uty = svd.matrixU().transpose() * prob.centered_response;
    auto solved = ridge_from_svd(svd, uty, p, lambda);
    if (!solved) throw SingularDesignError("rank-deficient design at lambda = 0");
    beta_std = *solved;
  }
  return FittedLinearModel{design.map,
                           to_original_scale(beta_std, prob.standardization, prob.response_mean),
                           lambda, prob.standardization};
}

Eigen::VectorXd predict(const FittedLinearModel& model, const Eigen::MatrixXd& data) {
  return expand_features(model.feature_map, data).rows * model.coefficients;
}

double predict_one(const FittedLinearModel& model, const double* row) {
  double v = 0.0;
  const auto& terms = model.feature_map.terms();
  for (std::size_t j = 0; j < terms.size(); ++j) {
    v += model.coefficients(static_cast<Eigen::Index>(j)) * evaluate_monomial(terms[j], row);
  }
  return v;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int k = -20; k <= 20; ++k) grid.push_back(std::pow(10.0, k / 10.0));
  return grid;
}

double cross_validate_lambda(const DesignMatrix& design, const std::vector<double>& grid,
                             const CrossValidationOptions& options) {
  if (grid.empty()) throw InvalidArgument("cross-validation grid is empty");
  if (options.folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  require_intercept(design);
  const auto& y = require_response(design);
  const Eigen::Index n = design.rows.rows();
  if (n < options.folds) throw InvalidArgument("fewer rows than folds");
  for (double l : grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("negative lambda in grid");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> sse(grid.size(), 0.0);
  const Eigen::Index p = design.rows.cols() - 1;
  for (int f = 0; f < options.folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t k = 0; k < order.size(); ++k) {
      (static_cast<int>(k % static_cast<std::size_t>(options.folds)) == f ? test : train)
          .push_back(order[k]);
    }
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(train.size()), design.rows.cols());
    Eigen::VectorXd yt(static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      xt.row(static_cast<Eigen::Index>(i)) = design.rows.row(train[i]);
      yt(static_cast<Eigen::Index>(i)) = y(train[i]);
    }
    auto prob = standardize(xt, yt);
    const bool any_degenerate =
        std::any_of(prob.degenerate.begin(), prob.degenerate.end(), [](bool b) { return b; });

    std::optional<Eigen::JacobiSVD<Eigen::MatrixXd>> svd;
    Eigen::VectorXd uty;
    if (p > 0) {
      svd.emplace(prob.features, Eigen::ComputeThinU | Eigen::ComputeThinV);
      uty = svd->matrixU().transpose() * prob.centered_response;
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!std::isfinite(sse[g])) continue;
      Eigen::VectorXd beta_std = Eigen::VectorXd::Zero(p);
      if (p > 0) {
        auto solved = ridge_from_svd(*svd, uty, p, grid[g]);
        if (!solved || (grid[g] == 0.0 && any_degenerate)) {
          sse[g] = std::numeric_limits<double>::infinity();
          continue;
        }
        beta_std = *solved;
      }
      const Eigen::VectorXd beta =
          to_original_scale(beta_std, prob.standardization, prob.response_mean);
      for (Eigen::Index i : test) {
        const double r = y(i) - design.rows.row(i).dot(beta);
        sse[g] += r * r;
      }
    }
  }

  std::vector<std::size_t> by_lambda(grid.size());
  std::iota(by_lambda.begin(), by_lambda.end(), std::size_t{0});
  std::stable_sort(by_lambda.begin(), by_lambda.end(),
                   [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });
  std::size_t best = by_lambda.front();
  for (std::size_t g : by_lambda) {
    if (sse[g] < sse[best]) best = g;
  }
  return grid[best];
}

FittedLinearModel fit_ridge_cv(const DesignMatrix& design, const std::vector<double>& grid,
                               const CrossValidationOptions& options) {
  return fit_ridge(design, cross_validate_lambda(design, grid, options));
}

}  // namespace proxicause
