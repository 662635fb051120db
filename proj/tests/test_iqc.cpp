#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "petc/error.hpp"
#include "petc/iqc.hpp"

using namespace petc;
using namespace petc::iqc;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

} // namespace

TEST(LipschitzMultiplier, Shapes) {
    auto m = lipschitz_multiplier(1.0, 1, 1).matrix().matrix();
    EXPECT_EQ(m, (Matrix(2, 2) << 1, 0, 0, -1).finished());
    m = lipschitz_multiplier(2.0, 1, 1).matrix().matrix();
    EXPECT_EQ(m, (Matrix(2, 2) << 4, 0, 0, -1).finished());
    m = lipschitz_multiplier(1.0, 2, 2).matrix().matrix();
    EXPECT_EQ(m, Matrix(vec({1, 1, -1, -1}).asDiagonal()));
}

TEST(SectorMultiplier, Shapes) {
    const auto one = Matrix::Constant(1, 1, 1.0);
    const auto zero = Matrix::Zero(1, 1);
    EXPECT_EQ(sector_multiplier(zero, one, one).matrix().matrix(),
              (Matrix(2, 2) << 0, 1, 1, -2).finished());
    const auto m = sector_multiplier(Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Identity(2, 2));
    Matrix expect = Matrix::Zero(4, 4);
    expect.bottomRightCorner(2, 2) = -2.0 * Matrix::Identity(2, 2);
    EXPECT_EQ(m.matrix().matrix(), expect);
    EXPECT_TRUE(m.matrix().matrix() == m.matrix().matrix().transpose());
    EXPECT_THROW((void)sector_multiplier(Matrix::Zero(2, 2), Matrix::Zero(1, 1), one),
                 ConfigurationError);
    EXPECT_THROW((void)sector_multiplier(Matrix::Zero(2, 2), Matrix::Zero(2, 2),
                                         (Matrix(2, 2) << 1, 2, 0, 1).finished()),
                 ConfigurationError);
}

TEST(SectorMultiplier, IdentityOnBoundaryGivesZeroForm) {
    const auto one = Matrix::Constant(1, 1, 1.0);
    const auto m = sector_multiplier(one, one, one);
    for (double dq : {-3.0, -0.1, 0.0, 0.7, 12.0}) {
        EXPECT_NEAR(iqc_form(m, vec({dq}), vec({dq})), 0.0, 1e-12);
    }
}

TEST(IqcForm, Values) {
    const auto m = lipschitz_multiplier(1.0, 1, 1);
    EXPECT_EQ(iqc_form(m, vec({0}), vec({0})), 0.0);
    EXPECT_EQ(iqc_form(m, vec({1}), vec({2})), -3.0);
    EXPECT_GE(iqc_form(m, vec({1}), vec({std::sin(1.3) - std::sin(0.3)})), 0.0);
}

TEST(CheckMultiplier, SineIsCertified) {
    const auto m = lipschitz_multiplier(1.0, 1, 1);
    const auto r = check_multiplier(m, Nonlinearity::sine(1), 10000, 10.0, 42);
    EXPECT_TRUE(r.valid);
    EXPECT_GE(r.min_value, -1e-9);
    EXPECT_EQ(r.samples, 10000);
    EXPECT_TRUE(check_multiplier(m.scaled(3.0), Nonlinearity::sine(1), 10000, 10.0, 42).valid);
}

TEST(CheckMultiplier, SteepLinearMapFailsWithWitness) {
    const auto m = lipschitz_multiplier(1.0, 1, 1);
    const auto r = check_multiplier(m, Nonlinearity::linear(1, 2.0), 10000, 10.0, 42);
    EXPECT_FALSE(r.valid);
    EXPECT_LT(r.min_value, 0.0);
    // Independent arithmetic at the witness: δq² - (2δq)² = -3δq².
    const double dq = r.q2(0) - r.q1(0);
    EXPECT_NEAR(r.min_value, -3.0 * dq * dq, 1e-9 * std::max(1.0, dq * dq));
}

TEST(CheckMultiplier, ScalingClosureOnSameSamples) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    const auto m = lipschitz_multiplier(1.0, 2, 2);
    for (int i = 0; i < 10; ++i) {
        const double k = scale(rng);
        const auto a = check_multiplier(m, Nonlinearity::sine(2), 2000, 10.0, 7);
        const auto b = check_multiplier(m.scaled(k), Nonlinearity::sine(2), 2000, 10.0, 7);
        EXPECT_EQ(a.valid, b.valid);
        EXPECT_NEAR(b.min_value, k * a.min_value, 1e-9 * std::max(1.0, std::abs(k * a.min_value)));
    }
}

TEST(CheckMultiplier, FormAgainstOriginIsNonnegative) {
    const auto m = lipschitz_multiplier(1.0, 1, 1);
    const auto p = Nonlinearity::sine(1);
    for (double q = -10.0; q <= 10.0; q += 0.37) {
        EXPECT_GE(iqc_form(m, vec({q}), p(vec({q}))), -1e-9);
    }
}

TEST(Nonlinearity, ZeroAtZeroChecked) {
    EXPECT_THROW(Nonlinearity(1, 1, [](const Vector& q) -> Vector { return q.array() + 1.0; }),
                 ConfigurationError);
    EXPECT_NO_THROW(
        Nonlinearity(1, 1, [](const Vector& q) -> Vector { return q.array() + 1.0; }, false));
    EXPECT_THROW(MultiplierMatrix(SymMatrix::identity(3), 1, 1), ConfigurationError);
}
