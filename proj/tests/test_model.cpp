#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace chemostat;
using testsupport::table1_case1;
using testsupport::table1_case2;

namespace {

// Scalar-by-scalar oracle for the case 1 right-hand side: plain loops over
// the Monod formula and the literal Theta entries, no Eigen, no shared code
// with the vectorized path.
void rhs_case1_oracle(const double* x, double s, double u, double eps, double* out) {
    const double a[5] = {0.84, 0.46, 0.34, 0.48, 0.76};
    const double b[5] = {0.28, 0.90, 0.11, 0.09, 0.36};
    const double yield[5] = {1.0, 1.5, 2.0, 2.5, 3.0};
    const double theta[5][5] = {{-1, 1, 0, 0, 0},
                                {1, -2, 1, 0, 0},
                                {0, 1, -2, 1, 0},
                                {0, 0, 1, -2, 1},
                                {0, 0, 0, 1, -1}};
    double mu[5];
    for (int i = 0; i < 5; ++i) mu[i] = a[i] * s / (b[i] + s);
    double consumption = 0.0;
    for (int i = 0; i < 5; ++i) {
        double exchange = 0.0;
        for (int j = 0; j < 5; ++j) exchange += theta[i][j] * x[j];
        out[i] = (mu[i] - u) * x[i] + eps * exchange;
        consumption += mu[i] * x[i] / yield[i];
    }
    out[5] = -consumption + u * (1.0 - s);
}

} // namespace

TEST(Model, WashoutIsEquilibriumForEveryEpsilon) {
    for (auto model : {table1_case1(), table1_case2()}) {
        const State wo = washout_state(model);
        for (double eps : {0.0, 0.1, 1.0, 10.0})
            EXPECT_LE(eval_rhs(model, wo, eps).lpNorm<Eigen::Infinity>(), 1e-14);
    }
}

TEST(Model, ZeroBiomassLeavesOnlySubstrateInflow) {
    const auto model = table1_case1();
    State st{Eigen::VectorXd::Zero(5), model.s_in / 2.0};
    const Eigen::VectorXd rhs = eval_rhs(model, st, 0.0);
    EXPECT_LE(rhs.head(5).lpNorm<Eigen::Infinity>(), 1e-15);
    EXPECT_NEAR(rhs(5), model.u * model.s_in / 2.0, 1e-15);
}

TEST(Model, RhsMatchesScalarOracle) {
    const auto model = table1_case1();
    State st{Eigen::VectorXd::Constant(5, 0.15), 0.25};
    const Eigen::VectorXd got = eval_rhs(model, st, 0.1);
    double expected[6];
    const double x[5] = {0.15, 0.15, 0.15, 0.15, 0.15};
    rhs_case1_oracle(x, 0.25, 0.4, 0.1, expected);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(got(i), expected[i], 1e-15) << "component " << i;

    // a second, non-symmetric state
    Eigen::VectorXd x2(5);
    x2 << 0.3, 0.0, 1.2, 0.05, 2.0;
    const Eigen::VectorXd got2 = eval_rhs(model, State{x2, 0.6}, 0.7);
    rhs_case1_oracle(x2.data(), 0.6, 0.4, 0.7, expected);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(got2(i), expected[i], 1e-14) << "component " << i;
}

TEST(Model, EpsilonOverrideReplacesModelValue) {
    const auto model = table1_case2();
    State st{Eigen::VectorXd::Constant(5, 0.2), 0.5};
    auto zero_eps = eval_rhs(model, st, 0.0);
    ChemostatModel plain = model;
    plain.epsilon = 0.0;
    EXPECT_TRUE(zero_eps.isApprox(eval_rhs(plain, st), 1e-15));
}

TEST(Model, PerturbationVanishesAtZeroEpsilon) {
    const auto model = table1_case2();
    Eigen::VectorXd x(5);
    x << 1, 2, 3, 4, 5;
    EXPECT_EQ(eval_perturbation(model, x, 0.7, 0.0).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Model, PerturbationConservesMass) {
    SplitMix64 rng(7);
    for (auto model : {table1_case1(), table1_case2()}) {
        for (int k = 0; k < 300; ++k) {
            Eigen::VectorXd x(5);
            for (int i = 0; i < 5; ++i) x(i) = rng.uniform(0.0, 10.0);
            const double s = rng.uniform(0.0, 1.0);
            const double eps = rng.uniform(0.0, 10.0);
            const double sum = eval_perturbation(model, x, s, eps).sum();
            EXPECT_LE(std::abs(sum), 1e-12 * x.norm() * eps + 1e-18);
        }
    }
}

TEST(Model, ExchangeCannotDrainAbsentSpecies) {
    SplitMix64 rng(8);
    for (auto model : {table1_case1(), table1_case2()}) {
        for (int k = 0; k < 200; ++k) {
            Eigen::VectorXd x(5);
            for (int i = 0; i < 5; ++i) x(i) = rng.uniform(0.0, 10.0);
            const int i = static_cast<int>(rng.next() % 5);
            x(i) = 0.0;
            const double h_i = eval_perturbation(model, x, rng.uniform(0.0, 1.0), 2.0)(i);
            EXPECT_GE(h_i, -1e-12);
        }
    }
}

TEST(Model, MutationMatrixVanishesAtZeroSubstrate) {
    const auto model = table1_case2();
    // mu_i(0) = 0 forces every entry of the stencil to zero
    EXPECT_EQ(model.perturbation_matrix(0.0).cwiseAbs().maxCoeff(), 0.0);
    Eigen::VectorXd x(5);
    x << 1, 2, 3, 4, 5;
    EXPECT_EQ(eval_perturbation(model, x, 0.0, 3.0).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Model, MutationMatrixEntriesMatchStencil) {
    const auto model = table1_case2();
    const double s = 0.63;
    const Eigen::MatrixXd t = model.perturbation_matrix(s);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const double mu_j = 0.0 + model.kinetics[static_cast<std::size_t>(j)].a * s /
                                          (model.kinetics[static_cast<std::size_t>(j)].b + s);
            double expected = 0.0;
            if (i == j) expected = -mu_j;
            if (i == (j + 1) % 5 || i == (j + 4) % 5) expected = 0.5 * mu_j;
            EXPECT_NEAR(t(i, j), expected, 1e-15) << "entry " << i << "," << j;
        }
    }
}

TEST(Model, ThetaIsSymmetricWithZeroSums) {
    const auto model = table1_case1();
    const Eigen::MatrixXd theta = model.perturbation_matrix(0.42);
    EXPECT_TRUE(theta == theta.transpose());
    EXPECT_LE(theta.rowwise().sum().cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(max_abs_column_sum(theta), 1e-14);
    // T(s_in) column sums vanish for the mutation stencil as well
    EXPECT_LE(max_abs_column_sum(table1_case2().perturbation_matrix(1.0)), 1e-14);
}

TEST(Model, HypothesesPassForCase1WithUnboundedEpsilonBar) {
    const HypothesisReport report = check_hypotheses(table1_case1(), 64);
    for (const auto& c : report.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
    EXPECT_TRUE(std::isinf(report.epsilon_bar));
    EXPECT_GT(report.linear_growth_constant, 0.0);
}

TEST(Model, HypothesesPassForCase2) {
    const HypothesisReport report = check_hypotheses(table1_case2(), 64);
    for (const auto& c : report.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
    // With the per-neighbor eps/2 mutation stencil the shifted growth rate is
    // (1 - eps) mu_i, so the threshold sits at 1.
    EXPECT_NEAR(report.epsilon_bar, 1.0, 1e-6);
}

TEST(Model, HypothesesFlagInvalidKinetics) {
    ChemostatModel bad = table1_case1();
    bad.kinetics[2].a = -0.34;
    const HypothesisReport report = check_hypotheses(bad, 32);
    bool a1_failed = false;
    for (const auto& c : report.checks)
        if (c.name.rfind("A1", 0) == 0 && !c.pass) a1_failed = true;
    EXPECT_TRUE(a1_failed);
}

TEST(Model, ConstantMatrixValidatedAtConstruction) {
    EXPECT_NO_THROW(PerturbationTerm::constant(ChemostatModel::neumann_laplacian_matrix(5)));

    Eigen::MatrixXd negative = ChemostatModel::neumann_laplacian_matrix(3);
    negative(0, 1) = -0.5;
    EXPECT_THROW(PerturbationTerm::constant(negative), ConfigError);

    Eigen::MatrixXd unbalanced = ChemostatModel::neumann_laplacian_matrix(3);
    unbalanced(0, 0) = -2.0; // breaks the column sum
    EXPECT_THROW(PerturbationTerm::constant(unbalanced), ConfigError);

    Eigen::MatrixXd reducible = Eigen::MatrixXd::Zero(4, 4);
    reducible.topLeftCorner(2, 2) = ChemostatModel::neumann_laplacian_matrix(2);
    reducible.bottomRightCorner(2, 2) = ChemostatModel::neumann_laplacian_matrix(2);
    EXPECT_THROW(PerturbationTerm::constant(reducible), ConfigError);
}

TEST(Model, ModelAndStateValidation) {
    ChemostatModel model = table1_case1();
    model.yields.pop_back();
    EXPECT_THROW(validate(model), ConfigError);

    const auto ok = table1_case1();
    EXPECT_THROW(make_initial_state(ok, Eigen::VectorXd::Constant(5, -0.1), 0.5), ConfigError);
    EXPECT_THROW(make_initial_state(ok, Eigen::VectorXd::Constant(5, 0.1), 1.5), ConfigError);
    EXPECT_THROW(make_initial_state(ok, Eigen::VectorXd::Constant(4, 0.1), 0.5), ConfigError);
    EXPECT_THROW(eval_rhs(ok, State{Eigen::VectorXd::Zero(3), 0.5}), ConfigError);
}

TEST(Model, MassCoordinateAndDelta) {
    const auto model = table1_case1();
    State inside{Eigen::VectorXd::Constant(5, 0.15), 0.25};
    EXPECT_NEAR(mass_coordinate(model, inside), 0.25 + 0.75 / 3.0, 1e-15);
    EXPECT_TRUE(in_delta(model, inside));
    State outside{Eigen::VectorXd::Constant(5, 2.0), 0.5};
    EXPECT_FALSE(in_delta(model, outside));
}
