#include "oracles.hpp"

#include "proxicause/error.hpp"
#include "proxicause/scm.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

using namespace proxicause;

namespace {

ScmSpec identity_spec() {
  return ScmSpec({
      {"X", VariableRole::Treatment, Exogenous{0.0, 1.0}},
      {"Y", VariableRole::Target, Structural{{{1.0, {{"X", 1}}}}, 0.0, 1.0}},
  });
}

double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

double variance_of(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(Sample, StandardNormalMean) {
  ScmSpec spec({{"X", VariableRole::Treatment, Exogenous{0.0, 1.0}},
                {"Y", VariableRole::Target, Structural{{}, 1.0, 1.0}}});
  auto t = sample(spec, 1'000'000, 1);
  EXPECT_NEAR(mean_of(t.column("X")), 0.0, 0.01);
}

TEST(Sample, VarianceStudyIndependence) {
  auto ex = builtin_example("var-linear");
  auto t = sample(ex.scm, 1'000'000, 2);
  Eigen::VectorXd x = t.column("X"), z = t.column("Z");
  const double cov = ((x.array() - x.mean()) * (z.array() - z.mean())).sum() / static_cast<double>(x.size() - 1);
  EXPECT_NEAR(cov / std::sqrt(variance_of(x) * variance_of(z)), 0.0, 0.02);
}

TEST(Sample, Example2ProxyVariance) {
  auto ex = builtin_example("ex2");
  auto t = sample(ex.scm, 1'000'000, 3);
  EXPECT_NEAR(variance_of(t.column("Z")) / 4.0, 1.0, 0.02);
}

TEST(Sample, Reproducible) {
  auto ex = builtin_example("motivating");
  auto a = sample(ex.scm, 1000, 42);
  auto b = sample(ex.scm, 1000, 42);
  EXPECT_TRUE((a.values().array() == b.values().array()).all());
  auto c = sample(ex.scm, 1000, 43);
  EXPECT_FALSE((a.values().array() == c.values().array()).all());
}

TEST(Sample, RejectsBadSize) {
  EXPECT_THROW(sample(identity_spec(), 0, 1), InvalidArgument);
}

TEST(Spec, Validation) {
  EXPECT_THROW(ScmSpec({{"Y", VariableRole::Target, Structural{{{1.0, {{"X", 1}}}}, 1.0, 1.0}},
                        {"X", VariableRole::Treatment, Exogenous{}}}),
               InvalidArgument);
  EXPECT_THROW(ScmSpec({{"X", VariableRole::Treatment, Exogenous{}}}), InvalidArgument);
}

TEST(Selection, UnboundedThresholdKeepsAll) {
  auto t = sample(identity_spec(), 500, 4);
  ThresholdSelection sel{{{{{1.0, {{"X", 1}}}}, Comparator::Less, std::numeric_limits<double>::infinity()}}};
  auto mask = apply_selection(t, sel, 5);
  EXPECT_EQ(std::count(mask.begin(), mask.end(), true), 500);
}

TEST(Selection, VarianceStudyFractionIsHalf) {
  // X + Z ~ N(-2, 2), so P(X + Z < -2) = Phi(0)
  auto ex = builtin_example("var-quadratic");
  auto t = sample(ex.scm, 1'000'000, 6);
  auto mask = apply_selection(t, ex.selection, 7);
  const double frac = static_cast<double>(std::count(mask.begin(), mask.end(), true)) / 1e6;
  EXPECT_NEAR(frac, oracle::normal_cdf(0.0), 0.01);
}

TEST(Selection, Example2MatchesSigmoidMean) {
  auto ex = builtin_example("ex2");
  auto t = sample(ex.scm, 1'000'000, 8);
  auto mask = apply_selection(t, ex.selection, 9);
  const double frac = static_cast<double>(std::count(mask.begin(), mask.end(), true)) / 1e6;
  Eigen::VectorXd x = t.column("X"), z = t.column("Z");
  double expected = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    expected += 1.0 / ((1.0 + std::exp(-x(i))) * (1.0 + std::exp(z(i))));
  }
  expected /= static_cast<double>(x.size());
  EXPECT_NEAR(frac, expected, 0.01);
}

TEST(Selection, UnknownVariable) {
  ThresholdSelection sel{{{{{1.0, {{"Q", 1}}}}, Comparator::Less, 0.0}}};
  EXPECT_THROW(validate_selection(identity_spec(), sel), MissingColumnError);
}

TEST(Paired, SubsetAllTrueEqualsExternalPlusY) {
  ThresholdSelection all{{{{{1.0, {{"X", 1}}}}, Comparator::Less, std::numeric_limits<double>::infinity()}}};
  auto ex = builtin_example("var-linear");
  auto p = make_paired(ex.scm, all, 300, PairingMode::SubsetOfD, 10);
  ASSERT_EQ(p.selected.rows(), 300);
  ASSERT_EQ(p.external.rows(), 300);
  for (const auto& name : p.external.table().names()) {
    EXPECT_TRUE((p.selected.table().column(name).array() == p.external.table().column(name).array()).all());
  }
  EXPECT_EQ(p.selected.columns(ColumnRole::Y).size(), 1u);
  EXPECT_TRUE(p.external.columns(ColumnRole::Y).empty());
}

TEST(Paired, SubsetRowsAppearInExternal) {
  auto ex = builtin_example("var-linear");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = make_paired(ex.scm, ex.selection, 1000, PairingMode::SubsetOfD, seed);
    std::set<std::pair<double, double>> pool;
    auto ext_x = p.external.table().column("X");
    auto ext_z = p.external.table().column("Z");
    for (Eigen::Index i = 0; i < ext_x.size(); ++i) pool.emplace(ext_x(i), ext_z(i));
    auto sx = p.selected.table().column("X");
    auto sz = p.selected.table().column("Z");
    EXPECT_LT(sx.size(), ext_x.size());
    for (Eigen::Index i = 0; i < sx.size(); ++i) EXPECT_TRUE(pool.count({sx(i), sz(i)}));
  }
}

TEST(Paired, DisjointSelectedCountIsBinomial) {
  auto ex = builtin_example("var-linear");
  double sum = 0.0, sum_sq = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    auto p = make_paired(ex.scm, ex.selection, 1000, PairingMode::Disjoint, static_cast<std::uint64_t>(r));
    EXPECT_EQ(p.external.rows(), 1000);
    const double k = static_cast<double>(p.selected.rows());
    sum += k;
    sum_sq += k * k;
  }
  const double mean = sum / reps;
  const double var = (sum_sq - reps * mean * mean) / (reps - 1);
  // Binomial(1000, 0.5): mean 500, variance 250
  EXPECT_NEAR(mean, 500.0, 4.0 * std::sqrt(250.0 / reps));
  EXPECT_GT(var, 250.0 * 0.7);
  EXPECT_LT(var, 250.0 * 1.3);
}

TEST(Paired, LatentNeverExported) {
  auto ex = builtin_example("motivating");
  auto p = make_paired(ex.scm, ex.selection, 2000, PairingMode::Disjoint, 11);
  EXPECT_FALSE(p.selected.table().has("U"));
  EXPECT_FALSE(p.external.table().has("U"));
  EXPECT_EQ(p.selected.columns(ColumnRole::ZMinus), std::vector<std::string>{"Zminus"});
}

TEST(Paired, EmptySelectionIsAnError) {
  ThresholdSelection never{{{{{1.0, {{"X", 1}}}}, Comparator::Greater, 100.0}}};
  EXPECT_THROW(make_paired(identity_spec(), never, 50, PairingMode::Disjoint, 1), DegenerateSampleError);
}

TEST(Oracle, Example2AtZero) {
  auto ex = builtin_example("ex2");
  auto o = oracle_do_curve(ex.scm, Eigen::VectorXd::Constant(1, 0.0), 1'000'000, 12);
  EXPECT_NEAR(o.mean(0), -5.0, 0.02);
}

TEST(Oracle, Example6AtOne) {
  auto ex = builtin_example("ex6");
  auto o = oracle_do_curve(ex.scm, Eigen::VectorXd::Constant(1, 1.0), 1'000'000, 13);
  EXPECT_NEAR(o.mean(0), 1.2, 0.01);
}

TEST(Oracle, IdentityMechanism) {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(5, -2.0, 2.0);
  auto o = oracle_do_curve(identity_spec(), grid, 1000, 14);
  EXPECT_LT((o.mean - grid).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(oracle_do_curve(identity_spec(), grid, 0, 1), InvalidArgument);
}

TEST(Builtins, NamesAndTruths) {
  EXPECT_EQ(builtin_names(), (std::vector<std::string>{"var-linear", "var-quadratic", "ex1", "ex2", "ex3", "ex4",
                                                       "ex5", "ex6", "motivating"}));
  auto ex1 = builtin_example("ex1");
  EXPECT_DOUBLE_EQ(ex1.truth.causal_effect(0.0), -10.0);
  EXPECT_DOUBLE_EQ(ex1.truth.cond_expectation(0.0), -2.0);
  EXPECT_NEAR(builtin_example("ex3").truth.causal_effect(2.0), 6.5, 1e-12);
  EXPECT_FALSE(static_cast<bool>(builtin_example("motivating").truth.causal_effect));
  EXPECT_THROW(builtin_example("ex9"), InvalidArgument);
  EXPECT_EQ(builtin_example("var-linear").x_degree, 1);
  EXPECT_EQ(builtin_example("var-quadratic").x_degree, 2);
}

TEST(Builtins, UnconfoundedTruthsCoincide) {
  for (const char* name : {"var-linear", "var-quadratic"}) {
    auto ex = builtin_example(name);
    for (double x = -3.0; x <= 3.0; x += 0.5) {
      EXPECT_DOUBLE_EQ(ex.truth.cond_expectation(x), ex.truth.causal_effect(x)) << name;
    }
  }
}

TEST(Builtins, Example1ObservationalRegression) {
  auto ex = builtin_example("ex1");
  auto t = sample(ex.scm, 1'000'000, 15);
  Eigen::VectorXd x = t.column("X"), y = t.column("Y");
  Eigen::MatrixXd design(x.size(), 3);
  design.col(0).setOnes();
  design.col(1) = x;
  design.col(2) = x.array().square();
  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::VectorXd beta = gram.ldlt().solve(design.transpose() * y);
  const Eigen::VectorXd resid = y - design * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(x.size() - 3);
  const Eigen::MatrixXd cov = sigma2 * gram.inverse();
  const double expected[] = {-2.0, 2.0, 0.2};
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(beta(j), expected[j], 3.0 * std::sqrt(cov(j, j))) << "coefficient " << j;
  }
}

TEST(Builtins, DagFromScm) {
  auto ex = builtin_example("motivating");
  auto dag = dag_from_scm(ex.scm, ex.selection);
  EXPECT_TRUE(dag.node("U").latent);
  ASSERT_TRUE(dag.selection_node().has_value());
  EXPECT_TRUE(dag.has_edge("X", "S"));
  EXPECT_TRUE(dag.has_edge("Zminus", "S"));
  EXPECT_EQ(decompose_proxies(dag).zminus, NodeSet{"Zminus"});
  EXPECT_EQ(ex.tsr_case, TsrCase::FullLinearShortcut);
  EXPECT_EQ(builtin_example("var-linear").tsr_case, TsrCase::ZplusOnly);
}
