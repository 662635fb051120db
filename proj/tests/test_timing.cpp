#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "petc/error.hpp"
#include "petc/timing.hpp"

using namespace petc;
using namespace petc::timing;

namespace {

// T̃ as the integral of dφ / (2μφ + γ(φ²+1)) from λ to 1/λ, composite Simpson.
// The integrand is invariant under φ -> 1/φ with dφ/φ², so twice the integral
// over [λ, 1] is used.
double transit_time_oracle(double mu, double gamma, double lambda, int n = 20000) {
    const double a = lambda;
    const double b = 1.0;
    const auto g = [&](double p) { return 1.0 / (2.0 * mu * p + gamma * (p * p + 1.0)); };
    const double h = (b - a) / n;
    double sum = g(a) + g(b);
    for (int i = 1; i < n; ++i) {
        sum += g(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return 2.0 * sum * h / 3.0;
}

} // namespace

TEST(PhiRate, Values) {
    EXPECT_DOUBLE_EQ(phi_rate(0.0, {1.0, 1.0}), -1.0);
    EXPECT_DOUBLE_EQ(phi_rate(1.0, {1.0, 1.0}), -4.0);
    const double phi = 1.0 / 0.6;
    const double expect = -2.0 * 0.4941 * phi - 4.4302 * (phi * phi + 1.0);
    EXPECT_NEAR(phi_rate(phi, {0.4941, 4.4302}), expect, 1e-12);
}

TEST(IntegratePhi, EndpointsAndErrors) {
    EXPECT_DOUBLE_EQ(integrate_phi({3.0, 7.0}, 0.5, 0.0), 2.0);
    EXPECT_NEAR(integrate_phi({0.4941, 4.4302}, 0.6, 0.0998), 0.6, 1e-3);
    EXPECT_NEAR(integrate_phi({5.0, 20.0}, 0.31, 0.04), 0.31, 1e-3);
    // At the exact transit time the clock lands on λ.
    const TimingBase b{0.4941, 4.4302};
    EXPECT_NEAR(integrate_phi(b, 0.6, inter_sample_time(b, 0.6)), 0.6, 1e-8);
    EXPECT_THROW((void)integrate_phi(b, 0.6, 1.0), DomainError);
    EXPECT_THROW((void)integrate_phi(b, 0.6, -0.1), DomainError);
    EXPECT_THROW((void)integrate_phi(b, 1.5, 0.0), DomainError);
}

TEST(MaxSamplingPeriod, Values) {
    EXPECT_DOUBLE_EQ(max_sampling_period({1.0, 1.0}), 1.0);
    EXPECT_NEAR(max_sampling_period({0.4941, 4.4302}), 0.3314, 1e-3);
    const double r = std::sqrt(15.0);
    EXPECT_NEAR(max_sampling_period({5.0, 20.0}), std::atan(r) / (5.0 * r), 1e-14);
    EXPECT_NEAR(max_sampling_period({5.0, 20.0}), 0.06806, 1e-4);
    EXPECT_THROW((void)max_sampling_period({0.0, 1.0}), DomainError);
    EXPECT_THROW((void)max_sampling_period({1.0, -1.0}), DomainError);
}

TEST(MaxSamplingPeriod, AgreesWithIntegralOracle) {
    for (auto [mu, gamma] : {std::pair{0.4941, 4.4302}, {5.0, 20.0}, {3.0, 1.0}, {2.0, 2.5}}) {
        EXPECT_NEAR(max_sampling_period({mu, gamma}), transit_time_oracle(mu, gamma, 0.0, 400000),
                    1e-9)
            << mu << ", " << gamma;
    }
}

TEST(InterSampleTime, Values) {
    EXPECT_NEAR(inter_sample_time({0.4941, 4.4302}, 0.6), 0.1, 1e-3);
    EXPECT_NEAR(inter_sample_time({5.0, 20.0}, 0.31), 0.04, 1e-3);
    EXPECT_NEAR(inter_sample_time({1.0, 1.0}, 0.5), 1.0 / 3.0, 1e-15);
    EXPECT_THROW((void)inter_sample_time({1.0, 1.0}, 1.0), DomainError);
    EXPECT_THROW((void)inter_sample_time({1.0, 1.0}, -0.1), DomainError);
    EXPECT_GT(inter_sample_time({1.0, 1e-6}, 0.0), 0.0);
}

TEST(InterSampleTime, AgreesWithIntegralOracle) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> rate(0.1, 50.0);
    std::uniform_real_distribution<double> lam(0.05, 0.95);
    for (int i = 0; i < 50; ++i) {
        const double mu = rate(rng);
        const double gamma = rate(rng);
        const double l = lam(rng);
        const double t = inter_sample_time({mu, gamma}, l);
        EXPECT_NEAR(t, transit_time_oracle(mu, gamma, l), 1e-8 * std::max(1.0, t));
    }
}

TEST(SolveLambda, ValuesAndErrors) {
    EXPECT_NEAR(solve_lambda({0.4941, 4.4302}, 0.1), 0.6, 1e-2);
    EXPECT_NEAR(solve_lambda({5.0, 20.0}, 0.04), 0.31, 1e-2);
    EXPECT_GT(solve_lambda({5.0, 20.0}, 1e-7), 0.999);
    EXPECT_THROW((void)solve_lambda({1.0, 1.0}, 1.0), InfeasiblePeriodError);
    EXPECT_THROW((void)solve_lambda({1.0, 1.0}, 2.0), InfeasiblePeriodError);
    EXPECT_THROW((void)solve_lambda({1.0, 1.0}, 0.0), DomainError);
    const TimingBase b{0.4941, 4.4302};
    const double l = solve_lambda(b, 0.1);
    EXPECT_LE(std::abs(inter_sample_time(b, l) - 0.1), inversion_tolerance(0.1));
}

TEST(TriggerCoefficient, PublishedValues) {
    EXPECT_NEAR(trigger_coefficient(0.6, 0.1), 1.0067, 1e-4);
    EXPECT_NEAR(trigger_coefficient(0.31, 0.04), 2.903, 5e-3);
    EXPECT_NEAR(trigger_coefficient(0.627, 0.02), 0.9554, 1e-4);
    EXPECT_THROW((void)trigger_coefficient(0.99, 0.1), ConstraintViolationError);
    EXPECT_THROW((void)trigger_coefficient(0.5, 0.0), DomainError);
}

TEST(SelectParameters, PublishedTuples) {
    ParameterHints h1;
    h1.h = 0.1;
    h1.s = 0.1;
    h1.alpha0 = 1.1;
    const auto d1 = select_parameters({0.4941, 4.4302}, 1.2, h1);
    EXPECT_TRUE(check_design(d1).ok());
    EXPECT_NEAR(std::log(1.1) / 1.1, 0.0866, 1e-4);
    EXPECT_LT(1.1 * 0.36, 1.0);

    ParameterHints h2;
    h2.h = 0.04;
    h2.s = 0.04;
    h2.alpha0 = 1.0;
    const auto d2 = select_parameters({5.0, 20.0}, 1.2, h2);
    EXPECT_TRUE(check_design(d2).ok());
    EXPECT_NEAR(d2.lambda, 0.31, 1e-2);

    ParameterHints bad;
    bad.h = 1.5;
    EXPECT_THROW((void)select_parameters({1.0, 1.0}, 1.0, bad), Error);
}

TEST(SelectParameters, DefaultPolicy) {
    const TimingBase b{2.0, 3.0};
    const auto d = select_parameters(b, 2.0);
    EXPECT_DOUBLE_EQ(d.alpha0, 1.8);
    EXPECT_NEAR(d.h, 0.5 * max_sampling_period(b), 1e-15);
    const double smax = std::min(std::exp(d.alpha0 * d.h) - 1.0, 1.0 / (d.lambda * d.lambda) - 1.0);
    EXPECT_NEAR(d.s, 0.9 * smax, 1e-12);
    EXPECT_TRUE(check_design(d).ok());
}

TEST(CheckDesign, PublishedTuplesWithRoundedLambda) {
    TimingDesign d1{{0.4941, 4.4302}, 0.6, 0.1, 0.1, 1.2, 1.1, 0.1};
    const auto r1 = check_design(d1, 1e-3);
    EXPECT_TRUE(r1.ok()) << r1.describe();
    TimingDesign d2{{5.0, 20.0}, 0.31, 0.04, 0.04, 1.2, 1.0, 0.6};
    const auto r2 = check_design(d2, 1e-3);
    EXPECT_TRUE(r2.ok()) << r2.describe();
    // Exact tolerance rejects the rounded λ.
    EXPECT_FALSE(check_design(d1).lambda_matches);
    d1.s = 2.0;
    EXPECT_FALSE(check_design(d1, 1e-3).ok());
}

TEST(SelectOutputParameters, SharedPeriod) {
    const TimingBase y{4.0, 18.0};
    const TimingBase u{5.0, 21.0};
    const auto d = select_output_parameters(y, u, 1.1, 1.0, 1.0);
    EXPECT_NEAR(d.h, 0.5 * std::min(max_sampling_period(y), max_sampling_period(u)), 1e-15);
    EXPECT_TRUE(check_design(d).ok()) << check_design(d).describe();
}

// ---- properties

TEST(TimingProperties, OdeMatchesClosedForm) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> rate(0.1, 50.0);
    std::uniform_real_distribution<double> lam(0.05, 0.95);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const TimingBase b{rate(rng), rate(rng)};
        const double l = lam(rng);
        const double t = inter_sample_time(b, l);
        worst = std::max(worst, std::abs(integrate_phi(b, l, t, 2048) - l));
    }
    EXPECT_LE(worst, 1e-6);
}

TEST(TimingProperties, BoundaryIdentity) {
    for (auto b : {TimingBase{0.4941, 4.4302}, TimingBase{5.0, 20.0}, TimingBase{3.0, 1.0}}) {
        const double T = max_sampling_period(b);
        EXPECT_NEAR(inter_sample_time(b, 1e-8), T, 1e-5 * T);
    }
}

TEST(TimingProperties, StrictlyDecreasingInLambda) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> rate(0.1, 50.0);
    std::uniform_real_distribution<double> lam(0.0, 0.99);
    for (int i = 0; i < 500; ++i) {
        const TimingBase b{rate(rng), rate(rng)};
        double l1 = lam(rng);
        double l2 = lam(rng);
        if (l1 == l2) continue;
        if (l1 > l2) std::swap(l1, l2);
        EXPECT_GT(inter_sample_time(b, l1), inter_sample_time(b, l2));
    }
}

TEST(TimingProperties, BranchContinuity) {
    for (double mu : {0.3, 1.0, 7.0}) {
        for (double l : {0.0, 0.2, 0.7}) {
            const double mid = inter_sample_time({mu, mu}, l);
            EXPECT_NEAR(inter_sample_time({mu, mu * (1 + 2e-9)}, l), mid, 1e-7 * std::max(1.0, mid));
            EXPECT_NEAR(inter_sample_time({mu, mu * (1 - 2e-9)}, l), mid, 1e-7 * std::max(1.0, mid));
        }
        const double T = max_sampling_period({mu, mu});
        EXPECT_NEAR(max_sampling_period({mu, mu * (1 + 2e-9)}), T, 1e-7 * std::max(1.0, T));
        EXPECT_NEAR(max_sampling_period({mu, mu * (1 - 2e-9)}), T, 1e-7 * std::max(1.0, T));
    }
}

TEST(TimingProperties, ClockStaysBracketed) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> rate(0.1, 50.0);
    std::uniform_real_distribution<double> lam(0.05, 0.95);
    for (int i = 0; i < 100; ++i) {
        const TimingBase b{rate(rng), rate(rng)};
        const double l = lam(rng);
        const double t = inter_sample_time(b, l);
        for (int k = 0; k <= 16; ++k) {
            const double phi = integrate_phi(b, l, t * k / 16.0, 256);
            EXPECT_GE(phi, l - 1e-9);
            EXPECT_LE(phi, 1.0 / l + 1e-12);
        }
    }
}
