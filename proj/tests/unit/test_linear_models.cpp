#include "proxicause/error.hpp"
#include "proxicause/linear_models.hpp"
#include "proxicause/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace proxicause;

namespace {

Eigen::MatrixXd column(std::initializer_list<double> values) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

FittedLinearModel line_model(double intercept, double slope) {
  FittedLinearModel m{FeatureMap::polynomial(1, 1), vec({intercept, slope}), std::nullopt, {}};
  return m;
}

double slope_norm(const FittedLinearModel& m) {
  double s = 0.0;
  for (Eigen::Index j = 1; j < m.coefficients.size(); ++j) {
    const double scaled = m.coefficients(j) * m.standardization[static_cast<std::size_t>(j)].scale;
    s += scaled * scaled;
  }
  return std::sqrt(s);
}

}  // namespace

TEST(FeatureMap, DegreeOneRow) {
  auto d = expand_features(FeatureMap::polynomial(1, 1), column({3.0}));
  EXPECT_EQ(d.rows.cols(), 2);
  EXPECT_DOUBLE_EQ(d.rows(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(d.rows(0, 1), 3.0);
}

TEST(FeatureMap, QuadraticRow) {
  auto d = expand_features(FeatureMap::polynomial(1, 2), column({2.0}));
  ASSERT_EQ(d.rows.cols(), 3);
  EXPECT_DOUBLE_EQ(d.rows(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(d.rows(0, 2), 4.0);
}

TEST(FeatureMap, QuadraticInXLinearInProxy) {
  Eigen::MatrixXd row(1, 2);
  row << 1.0, -2.0;
  auto d = expand_features(FeatureMap::separable({2, 1}), row);
  ASSERT_EQ(d.rows.cols(), 4);
  EXPECT_DOUBLE_EQ(d.rows(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(d.rows(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(d.rows(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(d.rows(0, 3), -2.0);
}

TEST(FeatureMap, PolynomialOrderAndCrossTerms) {
  auto m = FeatureMap::polynomial(2, 2);
  ASSERT_EQ(m.size(), 6);
  Eigen::MatrixXd row(1, 2);
  row << 2.0, 3.0;
  auto d = expand_features(m, row);
  EXPECT_DOUBLE_EQ(d.rows(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(d.rows(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(d.rows(0, 2), 3.0);
  // the three degree-2 terms multiply to 4 * 6 * 9 whatever their order
  EXPECT_DOUBLE_EQ(d.rows(0, 3) * d.rows(0, 4) * d.rows(0, 5), 216.0);
}

TEST(FeatureMap, RejectsDuplicatesAndMissingIntercept) {
  EXPECT_THROW(FeatureMap({{}, {{0, 1}}, {{0, 1}}}, 1), InvalidArgument);
  EXPECT_THROW(FeatureMap({{{0, 1}}}, 1), InvalidArgument);
  EXPECT_THROW(FeatureMap({{}, {{0, 3}}}, 2), InvalidArgument);
}

TEST(FeatureMap, MissingColumnAndNonFinite) {
  EXPECT_THROW(expand_features(FeatureMap::polynomial(2, 1), column({1.0})), MissingColumnError);
  EXPECT_THROW(expand_features(FeatureMap::polynomial(1, 1), column({NAN})), NonFiniteError);
}

TEST(FeatureMap, AffineDetection) {
  auto sep = FeatureMap::separable({2, 1});
  EXPECT_TRUE(sep.is_affine_in([](int c) { return c == 1; }));
  EXPECT_FALSE(sep.is_affine_in([](int c) { return c == 0; }));
  EXPECT_FALSE(FeatureMap::polynomial(2, 2).is_affine_in([](int c) { return c == 1; }));
}

TEST(FeatureMap, ExpansionIsBitStable) {
  Rng rng(5);
  std::normal_distribution<double> N;
  Eigen::MatrixXd data(50, 3);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = N(rng);
  auto a = expand_features(FeatureMap::polynomial(3, 2), data);
  auto b = expand_features(FeatureMap::polynomial(3, 2), data);
  EXPECT_TRUE((a.rows.array() == b.rows.array()).all());
}

TEST(Ols, ExactLine) {
  auto x = column({-1.0, 0.0, 2.0, 5.0});
  Eigen::VectorXd y = 2.0 * x.col(0).array() + 1.0;
  auto fit = fit_ols(expand_features(FeatureMap::polynomial(1, 1), x, y));
  EXPECT_NEAR(fit.coefficients(0), 1.0, 1e-10);
  EXPECT_NEAR(fit.coefficients(1), 2.0, 1e-10);
}

TEST(Ols, InterceptOnlyIsMean) {
  auto fit = fit_ols(expand_features(FeatureMap::intercept_only(), column({1, 2, 3}), vec({4, 4, 4})));
  EXPECT_NEAR(fit.intercept(), 4.0, 1e-12);
}

TEST(Ols, RecoversLinearVarianceModel) {
  Rng rng(11);
  std::normal_distribution<double> N;
  const Eigen::Index n = 5000;
  Eigen::MatrixXd data(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data(i, 0) = N(rng);
    data(i, 1) = -2.0 + N(rng);
    y(i) = 3.0 * data(i, 0) + 5.0 * data(i, 1) + N(rng);
  }
  auto design = expand_features(FeatureMap::polynomial(2, 1), data, y);
  auto fit = fit_ols(design);
  // standard errors from sigma^2 (X'X)^-1 with sigma = 1
  Eigen::MatrixXd cov = (design.rows.transpose() * design.rows).inverse();
  EXPECT_NEAR(fit.coefficients(1), 3.0, 3.0 * std::sqrt(cov(1, 1)));
  EXPECT_NEAR(fit.coefficients(2), 5.0, 3.0 * std::sqrt(cov(2, 2)));
}

TEST(Ols, SingularDesign) {
  Eigen::MatrixXd data(4, 2);
  data << 1, 2, 2, 4, 3, 6, 4, 8;
  EXPECT_THROW(fit_ols(expand_features(FeatureMap::polynomial(2, 1), data, vec({1, 2, 3, 4}))),
               SingularDesignError);
}

TEST(Ols, ResidualOrthogonalityOverSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::normal_distribution<double> N;
    const Eigen::Index n = 200;
    Eigen::MatrixXd data(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      data(i, 0) = N(rng);
      data(i, 1) = N(rng);
      y(i) = 1.0 + data(i, 0) - 0.5 * data(i, 1) * data(i, 1) + N(rng);
    }
    auto design = expand_features(FeatureMap::polynomial(2, 2), data, y);
    auto fit = fit_ols(design);
    Eigen::VectorXd resid = y - design.rows * fit.coefficients;
    for (Eigen::Index j = 0; j < design.rows.cols(); ++j) {
      const double scale = design.rows.col(j).norm() * resid.norm();
      EXPECT_LE(std::abs(design.rows.col(j).dot(resid)), 1e-8 * scale) << "seed " << seed;
    }
    EXPECT_NEAR(resid.mean(), 0.0, 1e-10);
  }
}

TEST(Ridge, ZeroPenaltyMatchesOls) {
  Rng rng(3);
  std::normal_distribution<double> N;
  Eigen::MatrixXd data(300, 2);
  Eigen::VectorXd y(300);
  for (Eigen::Index i = 0; i < 300; ++i) {
    data(i, 0) = N(rng);
    data(i, 1) = 2.0 + N(rng);
    y(i) = data(i, 0) * data(i, 1) + N(rng);
  }
  auto design = expand_features(FeatureMap::polynomial(2, 2), data, y);
  auto ols = fit_ols(design);
  auto ridge = fit_ridge(design, 0.0);
  EXPECT_LT((ols.coefficients - ridge.coefficients).cwiseAbs().maxCoeff(), 1e-8);

  auto line = expand_features(FeatureMap::polynomial(1, 1), column({0, 1, 2, 3}), vec({1, 3, 5, 7}));
  EXPECT_NEAR(fit_ridge(line, 0.0).coefficients(1), 2.0, 1e-8);
}

TEST(Ridge, HugePenaltyShrinksToMean) {
  auto x = column({0, 1, 2, 3, 4});
  auto y = vec({1, 3, 5, 7, 9});
  auto fit = fit_ridge(expand_features(FeatureMap::polynomial(1, 1), x, y), 1e6);
  EXPECT_NEAR(fit.coefficients(1), 0.0, 1e-3);
  // the slope is tiny but nonzero; the intercept absorbs it around mean(x)
  EXPECT_NEAR(fit.coefficients(0) + fit.coefficients(1) * 2.0, 5.0, 1e-6);
}

TEST(Ridge, ZeroVarianceFeatureWithPenalty) {
  Eigen::MatrixXd data(4, 2);
  data << 1, 5, 2, 5, 3, 5, 4, 5;
  auto design = expand_features(FeatureMap::polynomial(2, 1), data, vec({1, 2, 3, 4}));
  EXPECT_THROW(fit_ridge(design, 1.0), DegenerateFeatureError);
}

TEST(Ridge, NormMonotoneInLambda) {
  Rng rng(8);
  std::normal_distribution<double> N;
  Eigen::MatrixXd data(400, 2);
  Eigen::VectorXd y(400);
  for (Eigen::Index i = 0; i < 400; ++i) {
    data(i, 0) = N(rng);
    data(i, 1) = 0.8 * data(i, 0) + 0.6 * N(rng);
    y(i) = 2.0 * data(i, 0) - data(i, 1) + 0.3 * data(i, 0) * data(i, 0) + N(rng);
  }
  auto design = expand_features(FeatureMap::polynomial(2, 2), data, y);
  double previous = slope_norm(fit_ridge(design, 0.0));
  for (double lambda : default_lambda_grid()) {
    const double current = slope_norm(fit_ridge(design, lambda));
    EXPECT_LE(current, previous + 1e-12) << "lambda " << lambda;
    previous = current;
  }
}

TEST(Predict, Examples) {
  auto m = line_model(1.0, 2.0);
  EXPECT_DOUBLE_EQ(predict(m, column({0.0}))(0), 1.0);
  auto p = predict(m, column({1.0, 2.0}));
  EXPECT_DOUBLE_EQ(p(0), 3.0);
  EXPECT_DOUBLE_EQ(p(1), 5.0);
  const double row = 2.0;
  EXPECT_DOUBLE_EQ(predict_one(m, &row), 5.0);
}

TEST(CrossValidation, DefaultGrid) {
  auto grid = default_lambda_grid();
  ASSERT_EQ(grid.size(), 41u);
  EXPECT_NEAR(grid.front(), 1e-2, 1e-15);
  EXPECT_NEAR(grid[10], 1e-1, 1e-14);
  EXPECT_NEAR(grid.back(), 1e2, 1e-10);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_NEAR(std::log10(grid[i]) - std::log10(grid[i - 1]), 0.1, 1e-12);
  }
}

TEST(CrossValidation, ExactFitPrefersSmallPenalty) {
  Rng rng(1);
  std::normal_distribution<double> N;
  Eigen::MatrixXd x(100, 1);
  Eigen::VectorXd y(100);
  for (Eigen::Index i = 0; i < 100; ++i) {
    x(i, 0) = N(rng);
    y(i) = 4.0 - 3.0 * x(i, 0);
  }
  auto design = expand_features(FeatureMap::polynomial(1, 1), x, y);
  EXPECT_EQ(cross_validate_lambda(design, {0.01, 100.0}), 0.01);
}

TEST(CrossValidation, PureNoisePrefersLargePenalty) {
  int large = 0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_seed(99, static_cast<std::uint64_t>(r), stream_tag("noise")));
    std::normal_distribution<double> N;
    Eigen::MatrixXd x(60, 3);
    Eigen::VectorXd y(60);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = N(rng);
    for (Eigen::Index i = 0; i < 60; ++i) y(i) = N(rng);
    auto design = expand_features(FeatureMap::polynomial(3, 2), x, y);
    CrossValidationOptions opts;
    opts.seed = static_cast<std::uint64_t>(r);
    if (cross_validate_lambda(design, {0.01, 100.0}, opts) == 100.0) ++large;
  }
  EXPECT_GT(large, reps / 2);
}

TEST(CrossValidation, IsDeterministic) {
  Rng rng(4);
  std::normal_distribution<double> N;
  Eigen::MatrixXd x(80, 1);
  Eigen::VectorXd y(80);
  for (Eigen::Index i = 0; i < 80; ++i) {
    x(i, 0) = N(rng);
    y(i) = x(i, 0) + N(rng);
  }
  auto design = expand_features(FeatureMap::polynomial(1, 2), x, y);
  CrossValidationOptions opts;
  opts.seed = 17;
  EXPECT_EQ(cross_validate_lambda(design, default_lambda_grid(), opts),
            cross_validate_lambda(design, default_lambda_grid(), opts));
}
