#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <random>

#include "petc/builtins.hpp"
#include "petc/error.hpp"
#include "petc/lmi.hpp"

using namespace petc;
using namespace petc::lmi;

namespace {

// Largest eigenvalue through Eigen's solver, independent of the Jacobi code.
double max_eig(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Assignment random_assignment(const LmiInstance& inst, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vector v(inst.n_coords());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
    return inst.unpack(v);
}

systems::IqcPlant double_integrator() {
    return systems::IqcPlant::linear((Matrix(2, 2) << 0, 1, 0, 0).finished(),
                                     (Matrix(2, 1) << 0, 1).finished(),
                                     (Matrix(2, 1) << 0, 1).finished(),
                                     Matrix((Matrix(1, 2) << 1, 0).finished()));
}

void expect_reverifies(const LmiInstance& inst, const FeasibilityResult& r) {
    ASSERT_EQ(r.status, Status::Feasible) << inst.name() << ": " << r.message;
    const auto rep = verify(inst, r.assignment);
    EXPECT_TRUE(rep.passed()) << inst.name() << ": " << rep.message;
    EXPECT_FALSE(inst.domain_violation(r.assignment).has_value());
    EXPECT_LE(max_eig(inst.evaluate(r.assignment)), 1e-9 * rep.scale);
}

} // namespace

TEST(GainSynthesis, DimensionAndStructure) {
    const auto plant = builtins::example2_plant();
    const auto inst = build_lemma3(plant, 1.2);
    EXPECT_EQ(inst.dim(), 4);

    auto no_w = plant;
    no_w.Ew.setZero();
    const auto i2 = build_lemma3(no_w, 1.2);
    auto a = i2.zero_assignment();
    a["d"] = scalar(0.7);
    const auto F = i2.evaluate(a);
    const auto w = i2.layout().offset(i2.layout().sizes.size() - 1);
    EXPECT_EQ(F(w, w), -0.7);
    for (Eigen::Index j = 0; j < w; ++j) EXPECT_EQ(F(j, w), 0.0);

    std::mt19937_64 rng(1);
    const auto r = i2.value(random_assignment(i2, rng));
    EXPECT_TRUE(r.matrix() == r.matrix().transpose());
}

TEST(SampledDataCondition, Dimension) {
    const auto ex = builtins::example2_state();
    const auto inst = build_thm3(ex.plant, ex.gains, 1.2);
    EXPECT_EQ(inst.dim(), 9);
    const std::vector<Eigen::Index> sizes{2, 2, 1, 1, 2, 1};
    EXPECT_EQ(inst.layout().sizes, sizes);
}

TEST(SampledDataCondition, PublishedCertificateVerifies) {
    const auto ex = builtins::example2_state();
    const auto inst = build_thm3(ex.plant, ex.gains, 1.2);
    auto fixed = inst.zero_assignment();
    fixed["P"] = ex.P;
    fixed["mu"] = scalar(5.0);
    fixed["gamma"] = scalar(20.0);
    fixed["d"] = scalar(0.6);
    const auto full = recover_sigmas(inst, fixed, {"sigma1", "sigma2"});
    const auto rep = verify(inst, full, 1e-6);
    EXPECT_TRUE(rep.passed()) << rep.margin << " / " << rep.scale;
    EXPECT_LE(rep.margin / rep.scale, 1e-6);

    auto neg = full;
    neg["P"] = -ex.P;
    EXPECT_EQ(verify(inst, neg, 1e-6).verdict, Verdict::Invalid);

    auto small_d = full;
    small_d["d"] = scalar(1e-4);
    const auto bad = verify(inst, small_d, 1e-6);
    EXPECT_EQ(bad.verdict, Verdict::Fail);
    EXPECT_GT(bad.margin, 0.0);
    EXPECT_NEAR(bad.margin, max_eig(inst.evaluate(small_d)), 1e-9 * bad.scale);
}

TEST(SampledDataCondition, ZeroPlantIsInfeasibleAtIdentity) {
    systems::IqcPlant z;
    z.A = Matrix::Zero(2, 2);
    z.B = Matrix::Zero(2, 1);
    z.E = Matrix::Zero(2, 1);
    z.Ew = Matrix::Zero(2, 1);
    z.Cq = (Matrix(1, 2) << 1, 0).finished();
    z.p = iqc::Nonlinearity::sine(1);
    z.M = iqc::lipschitz_multiplier(1.0, 1, 1);
    const systems::StateFeedbackGains g{Matrix::Zero(1, 2), Matrix::Zero(1, 1)};
    const double alpha = 0.8;
    const auto inst = build_thm3(z, g, alpha);
    auto a = inst.zero_assignment();
    a["P"] = Matrix::Identity(2, 2);
    for (const char* v : {"mu", "gamma", "d"}) a[v] = Matrix::Constant(1, 1, 1.0);
    const auto rep = verify(inst, a);
    EXPECT_EQ(rep.verdict, Verdict::Fail);
    // With no dynamics the leading block is αP, so the margin is at least α.
    EXPECT_GE(rep.margin, alpha - 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(inst.evaluate(a).matrix(), Eigen::EigenvaluesOnly);
    EXPECT_NEAR(rep.margin, es.eigenvalues().maxCoeff(), 1e-12);
}

TEST(ObserverCondition, DimensionAndSymmetry) {
    const auto ex = builtins::example2_output();
    const auto inst = build_thm4(ex.plant, ex.design, 1.1);
    EXPECT_EQ(inst.dim(), 14);
    const std::vector<Eigen::Index> sizes{4, 3, 1, 1, 1, 3, 1};
    EXPECT_EQ(inst.layout().sizes, sizes);

    systems::ObserverDesign zero{Matrix::Zero(1, 1), Matrix::Zero(2, 1),
                                 {Matrix::Zero(1, 2), Matrix::Zero(1, 1)}};
    const auto z = build_thm4(ex.plant, zero, 1.1);
    auto a = z.zero_assignment();
    a["P"] = Matrix::Identity(4, 4);
    const auto F = z.evaluate(a);
    EXPECT_TRUE(F.matrix() == F.matrix().transpose());
    EXPECT_TRUE(F.matrix().allFinite());
}

TEST(Coupling, IdentityCertificate) {
    const Matrix C = (Matrix(1, 2) << 1, 0).finished();
    const auto inst = build_thm4_coupling(Matrix::Identity(4, 4), C, 1.0, 1.0);
    expect_reverifies(inst, solve_feasibility(inst));

    const auto tiny = build_thm4_coupling(Matrix::Identity(4, 4), C, 1e-6, 1e-6);
    auto a = tiny.zero_assignment();
    a["P1"] = Matrix::Identity(1, 1);
    a["P2"] = Matrix::Identity(2, 2);
    EXPECT_TRUE(verify(tiny, a).passed());
}

TEST(LinearReductions, DoubleIntegratorFeasible) {
    const auto plant = double_integrator();
    const Matrix K = (Matrix(1, 2) << -2, -3).finished();
    const auto c1 = build_cor1(plant, K, 0.5);
    expect_reverifies(c1, solve_feasibility(c1));
    const Matrix L = (Matrix(2, 1) << -5, -6).finished();
    const auto c2 = build_cor2(plant, K, L, 0.5);
    expect_reverifies(c2, solve_feasibility(c2));

    const auto nonlinear = builtins::example2_plant();
    EXPECT_THROW((void)build_cor1(nonlinear, K, 0.5), ConfigurationError);
    EXPECT_THROW((void)build_cor2(nonlinear, K, L, 0.5), ConfigurationError);
}

TEST(LinearReductions, ReductionOfThm3) {
    const auto plant = double_integrator();
    const Matrix K = (Matrix(1, 2) << -2, -3).finished();
    const auto c1 = build_cor1(plant, K, 0.5);
    const auto t3 = build_thm3(plant, {K, Matrix::Zero(1, 0)}, 0.5);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        auto a = random_assignment(c1, rng);
        a["P"] = a["P"] * a["P"].transpose() + Matrix::Identity(2, 2);
        for (const char* n : {"mu", "gamma", "d"}) a[n] = a[n].cwiseAbs();
        auto b = a;
        b["sigma1"] = scalar(0.0);
        b["sigma2"] = scalar(0.0);
        EXPECT_NEAR(verify(c1, a).margin, verify(t3, b).margin, 1e-10);
    }
}

TEST(LinearReductions, UnstableOpenLoopWithoutFeedbackIsNotSolved) {
    const auto plant = systems::IqcPlant::linear(Matrix::Identity(2, 2),
                                                 (Matrix(2, 1) << 0, 1).finished(),
                                                 (Matrix(2, 1) << 0, 1).finished());
    const auto inst = build_cor1(plant, Matrix::Zero(1, 2), 0.5);
    SolverOptions o;
    o.max_iter = 1500;
    EXPECT_EQ(solve_feasibility(inst, o).status, Status::InfeasibleBudget);
}

TEST(Solver, LargeDecayRateIsNotSolved) {
    const auto ex = builtins::example2_state();
    const auto inst = build_thm3(ex.plant, ex.gains, 1e6);
    SolverOptions o;
    o.max_iter = 1500;
    EXPECT_EQ(solve_feasibility(inst, o).status, Status::InfeasibleBudget);
}

TEST(Solver, ExampleInstancesFeasible) {
    const auto ex = builtins::example2_state();
    const auto l3 = build_lemma3(ex.plant, 1.2);
    expect_reverifies(l3, solve_feasibility(l3));
    const auto t3 = build_thm3(ex.plant, ex.gains, 1.2);
    expect_reverifies(t3, solve_feasibility(t3));

    const auto eo = builtins::example2_output();
    const auto t4 = build_thm4(eo.plant, eo.design, 1.1);
    const auto r4 = solve_feasibility(t4);
    expect_reverifies(t4, r4);
    const double c1 = std::sqrt(scalar_of(r4.assignment, "a1") / scalar_of(r4.assignment, "b1"));
    const double c2 = std::sqrt(scalar_of(r4.assignment, "a2") / scalar_of(r4.assignment, "b2"));
    const auto cp = build_thm4_coupling(r4.assignment.at("P"), *eo.plant.C, c1, c2);
    expect_reverifies(cp, solve_feasibility(cp));
}

TEST(Solver, Deterministic) {
    const auto ex = builtins::example2_state();
    const auto t3 = build_thm3(ex.plant, ex.gains, 1.2);
    const auto a = solve_feasibility(t3);
    const auto b = solve_feasibility(t3);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(t3.pack(a.assignment), t3.pack(b.assignment));
}

TEST(LmiInstance, Affinity) {
    const auto ex = builtins::example2_output();
    const auto inst = build_thm4(ex.plant, ex.design, 1.1);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int i = 0; i < 10; ++i) {
        Vector u(inst.n_coords()), v(inst.n_coords());
        for (Eigen::Index k = 0; k < u.size(); ++k) {
            u(k) = g(rng);
            v(k) = g(rng);
        }
        const Matrix lhs = inst.evaluate(inst.unpack(u)).matrix() +
                           inst.evaluate(inst.unpack(v)).matrix() -
                           inst.evaluate(inst.zero_assignment()).matrix();
        const Matrix rhs = inst.evaluate(inst.unpack(u + v)).matrix();
        EXPECT_LT((lhs - rhs).norm(), 1e-10 * std::max(1.0, rhs.norm()));
        EXPECT_LT((inst.value_at(u).matrix() - inst.evaluate(inst.unpack(u)).matrix()).norm(),
                  1e-10 * std::max(1.0, rhs.norm()));
    }
}

TEST(LmiInstance, BilinearEvaluatorRejected) {
    BlockLayout l{{1}, {"a"}};
    const std::vector<Variable> vars{Variable::scalar("x", Domain::Free),
                                     Variable::scalar("y", Domain::Free)};
    const auto bilinear = [](const Assignment& a) {
        SymMatrix m(1);
        m.set(0, 0, scalar_of(a, "x") * scalar_of(a, "y"));
        return m;
    };
    EXPECT_THROW(LmiInstance("bad", l, vars, bilinear), AssemblyError);
}

TEST(LmiInstance, PackUnpackRoundTrip) {
    const auto ex = builtins::example2_state();
    const auto inst = build_thm3(ex.plant, ex.gains, 1.2);
    std::mt19937_64 rng(5);
    const auto a = random_assignment(inst, rng);
    EXPECT_EQ(inst.pack(inst.unpack(inst.pack(a))), inst.pack(a));
    EXPECT_TRUE(a.at("P").isApprox(a.at("P").transpose(), 0.0));
}
