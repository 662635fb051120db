#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "petc/builtins.hpp"
#include "petc/error.hpp"
#include "petc/petcsim.hpp"

using namespace petc;
using namespace petc::sim;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

struct StateCase {
    systems::GeneralPlant plant;
    timing::TimingDesign design;
    TriggeringFunction tf;
};

StateCase ex1_case() {
    const auto ex = builtins::example1();
    StateCase c{ex.plant, ex.design, {}};
    c.design.lambda = timing::solve_lambda(c.design.base, c.design.h);
    c.tf = TriggeringFunction::from_map(timing::trigger_coefficient(c.design.lambda, c.design.s),
                                        c.design.s, ex.plant.V1);
    return c;
}

StateCase ex2_case() {
    const auto ex = builtins::example2_state();
    StateCase c{systems::as_general_plant(ex.plant, ex.gains, ex.P), ex.design, {}};
    c.design.lambda = timing::solve_lambda(c.design.base, c.design.h);
    c.tf = TriggeringFunction::from_matrix(timing::trigger_coefficient(c.design.lambda, c.design.s),
                                           c.design.s, ex.P);
    return c;
}

SimConfig config(double h, const Vector& x0, double w_bound, double t_end = 10.0,
                 std::uint64_t seed = 3) {
    SimConfig cfg;
    cfg.h = h;
    cfg.t_end = t_end;
    cfg.x0 = x0;
    cfg.w_bound = w_bound;
    cfg.seed = seed;
    return cfg;
}

struct OutputCase {
    builtins::Example2Output ex;
    timing::OutputTimingDesign timing;
    TriggeringFunction tf_y;
    TriggeringFunction tf_u;
};

OutputCase ex2_output_case() {
    OutputCase c{builtins::example2_output(), {}, {}, {}};
    c.timing = c.ex.timing;
    c.timing.channel_y.lambda = timing::solve_lambda(c.timing.channel_y.base, c.timing.h);
    c.timing.channel_u.lambda = timing::solve_lambda(c.timing.channel_u.base, c.timing.h);
    const double s = c.timing.s;
    c.tf_y = TriggeringFunction::from_matrix(timing::trigger_coefficient(c.timing.channel_y.lambda, s),
                                             s, c.ex.P1);
    c.tf_u = TriggeringFunction::from_matrix(timing::trigger_coefficient(c.timing.channel_u.lambda, s),
                                             s, c.ex.P2);
    return c;
}

double tail_sup(const SimTrace& tr, double from, bool estimation_error = false) {
    double m = 0.0;
    for (const auto& s : tr.samples) {
        if (s.t >= from) {
            m = std::max(m, estimation_error ? (s.x - s.xhat).norm() : s.x.norm());
        }
    }
    return m;
}

bool same_trace(const SimTrace& a, const SimTrace& b) {
    if (a.samples.size() != b.samples.size() || a.events.size() != b.events.size()) return false;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const auto& p = a.samples[i];
        const auto& q = b.samples[i];
        if (p.t != q.t || p.x != q.x || p.xhat != q.xhat || p.held != q.held || p.u != q.u ||
            p.w != q.w || p.V != q.V || p.phi != q.phi)
            return false;
    }
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        if (a.events[i].gamma != b.events[i].gamma || a.events[i].fired != b.events[i].fired)
            return false;
    }
    return true;
}

void expect_event_spacing(const SimTrace& tr) {
    for (std::size_t ch = 0; ch < tr.channels.size(); ++ch) {
        const auto t = tr.fire_times(ch);
        for (std::size_t i = 1; i < t.size(); ++i) {
            const double gap = t[i] - t[i - 1];
            EXPECT_GE(gap, tr.h * (1 - 1e-9));
            EXPECT_NEAR(gap / tr.h, std::round(gap / tr.h), 1e-6);
        }
    }
}

// Held signals stay constant inside an interval and change only at fires.
void expect_hold_semantics(const SimTrace& tr) {
    for (std::size_t i = 1; i < tr.samples.size(); ++i) {
        const auto& a = tr.samples[i - 1];
        const auto& b = tr.samples[i];
        if (a.interval == b.interval) {
            EXPECT_EQ(a.held, b.held);
            EXPECT_EQ(a.u, b.u);
        }
    }
    // Across an instant where nothing fired the held signal is unchanged.
    for (const auto& ev : tr.events) {
        bool any = false;
        for (bool f : ev.fired) any = any || f;
        if (any || ev.k == 0) continue;
        const Sample* before = nullptr;
        const Sample* after = nullptr;
        for (const auto& s : tr.samples) {
            if (s.interval == ev.k - 1) before = &s;
            if (s.interval == ev.k && after == nullptr) after = &s;
        }
        if (before != nullptr && after != nullptr) {
            EXPECT_EQ(before->held, after->held);
        }
    }
}

} // namespace

TEST(TriggeringFunction, StateForms) {
    const auto ex = builtins::example1();
    const auto tf = TriggeringFunction::from_map(1.0067, 0.1, ex.plant.V1);
    const double x = 0.37;
    const double e = -0.12;
    EXPECT_NEAR(gamma_state(vec({x}), vec({e}), tf),
                1.0067 * e * e - 0.1 * builtins::example1_v1(x), 1e-15);
    EXPECT_LT(gamma_state(vec({x}), vec({0}), tf), 0.0);
    EXPECT_GT(gamma_state(vec({0}), vec({e}), tf), 0.0);
    EXPECT_THROW((void)TriggeringFunction::from_matrix(1.0, 0.1, -Matrix::Identity(2, 2)),
                 DomainError);
}

TEST(TriggeringFunction, OutputForms) {
    const auto ex = builtins::example2_output();
    const auto ty = TriggeringFunction::from_matrix(0.9554, 0.02, ex.P1);
    const auto tu = TriggeringFunction::from_matrix(1.1526, 0.02, ex.P2);
    EXPECT_NEAR(gamma_output(vec({0.3}), vec({0.1}), ty), 0.9554 * 0.01 - 0.02 * 0.1462 * 0.09,
                1e-15);
    const Vector xh = vec({0.2, -0.4});
    const Vector xe = vec({0.05, 0.01});
    EXPECT_NEAR(gamma_input(xh, xe, tu), 1.1526 * xe.squaredNorm() - 0.02 * xh.dot(ex.P2 * xh),
                1e-15);
    EXPECT_LT(gamma_output(vec({0.3}), vec({0.0}), ty), 0.0);
}

TEST(SimConfig, Validation) {
    SimConfig c;
    c.h = 0.0;
    EXPECT_THROW(c.validate(), DomainError);
    c.h = 0.1;
    c.t_end = 0.05;
    EXPECT_THROW(c.validate(), DomainError);
    c.t_end = 1.0;
    c.substeps = 0;
    EXPECT_THROW(c.validate(), DomainError);
    c.substeps = 4;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.n_intervals(), 10);
}

TEST(StateFeedback, EquilibriumStaysAtRest) {
    const auto c = ex2_case();
    const auto tr = run_state_feedback(c.plant, c.tf, c.design, config(0.04, Vector::Zero(2), 0.0));
    for (const auto& s : tr.samples) EXPECT_EQ(s.x.norm(), 0.0);
    EXPECT_EQ(tr.fire_count(), 0);
    EXPECT_TRUE(tr.events.front().fired.front());
}

TEST(StateFeedback, DecaysWithoutDisturbance) {
    const auto c = ex2_case();
    const auto ex = builtins::example2_state();
    const auto tr = run_state_feedback(c.plant, c.tf, c.design, config(0.04, ex.x0, 0.0));
    EXPECT_LE(tr.samples.back().x.norm(), 1e-3);

    // Oracle: the continuous closed loop without sampling also converges.
    Vector x = ex.x0;
    const double dt = 1e-3;
    const auto f = [&](const Vector& z) {
        return systems::state_continuous_rhs(ex.plant, ex.gains, z, Vector::Zero(1));
    };
    for (int i = 0; i < 10000; ++i) {
        const Vector k1 = f(x), k2 = f(x + 0.5 * dt * k1), k3 = f(x + 0.5 * dt * k2),
                     k4 = f(x + dt * k3);
        x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    EXPECT_LE(x.norm(), 1e-3);
}

TEST(StateFeedback, ScalarPlantBoundGrowsWithDisturbance) {
    const auto c = ex1_case();
    const auto big = run_state_feedback(c.plant, c.tf, c.design, config(0.1, vec({0.3}), 0.8, 20.0));
    const auto small = run_state_feedback(c.plant, c.tf, c.design, config(0.1, vec({0.3}), 0.2, 20.0));
    EXPECT_LT(tail_sup(big, 10.0), 0.3);
    EXPECT_LT(tail_sup(small, 10.0), tail_sup(big, 10.0));
}

TEST(StateFeedback, StructuralProperties) {
    for (const auto& c : {ex1_case(), ex2_case()}) {
        const Vector x0 = c.plant.nx == 1 ? vec({0.3}) : vec({0.5, -0.5});
        const auto tr = run_state_feedback(c.plant, c.tf, c.design, config(c.design.h, x0, 0.1));
        expect_event_spacing(tr);
        expect_hold_semantics(tr);
        for (const auto& s : tr.samples) {
            EXPECT_GE(s.phi(0), c.design.lambda - 1e-9);
            EXPECT_LE(s.phi(0), 1.0 / c.design.lambda + 1e-9);
        }
        const auto again =
            run_state_feedback(c.plant, c.tf, c.design, config(c.design.h, x0, 0.1));
        EXPECT_TRUE(same_trace(tr, again));
    }
}

TEST(StateFeedback, Rk4Order) {
    auto c = ex2_case();
    const auto ex = builtins::example2_state();
    // A fixed, always-firing schedule isolates the integrator.
    c.tf = TriggeringFunction::from_matrix(1e6, 1e-9, ex.P);
    std::vector<Vector> ends;
    for (int sub : {2, 4, 8}) {
        auto cfg = config(0.04, ex.x0, 0.0, 1.0);
        cfg.substeps = sub;
        ends.push_back(run_state_feedback(c.plant, c.tf, c.design, cfg).samples.back().x);
    }
    const double d1 = (ends[0] - ends[1]).norm();
    const double d2 = (ends[1] - ends[2]).norm();
    EXPECT_GT(d1 / d2, 10.0);
    EXPECT_LT(d1 / d2, 24.0);
}

TEST(StateFeedback, DivergenceCarriesPartialTrace) {
    systems::GeneralPlant p;
    p.nx = p.nu = p.nw = 1;
    p.f = [](const Vector& x, const Vector&, const Vector&) -> Vector { return x.array().cube(); };
    p.k = [](const Vector& x) -> Vector { return 0.0 * x; };
    p.V1 = [](const Vector& x) { return x.squaredNorm(); };
    timing::TimingDesign d{{1.0, 1.0}, 0.5, 0.1, 0.1, 1.0, 0.9, 1.0};
    const auto tf = TriggeringFunction::from_map(1.0, 0.1, p.V1);
    try {
        (void)run_state_feedback(p, tf, d, config(0.1, vec({3.0}), 0.0));
        FAIL() << "expected divergence";
    } catch (const DivergedError& e) {
        EXPECT_FALSE(e.trace().samples.empty());
    }
}

TEST(OutputFeedback, EquilibriumStaysAtRest) {
    auto c = ex2_output_case();
    auto cfg = config(0.02, Vector::Zero(2), 0.0);
    cfg.xhat0 = Vector::Zero(2);
    const auto tr = run_output_feedback(c.ex.plant, c.ex.design, c.tf_y, c.tf_u, c.timing, cfg);
    for (const auto& s : tr.samples) {
        EXPECT_EQ(s.x.norm(), 0.0);
        EXPECT_EQ(s.xhat.norm(), 0.0);
    }
    EXPECT_EQ(tr.fire_count(0), 0);
    EXPECT_EQ(tr.fire_count(1), 0);
}

TEST(OutputFeedback, PublishedRunSettles) {
    auto c = ex2_output_case();
    auto cfg = config(0.02, c.ex.x0, c.ex.w_bound);
    cfg.xhat0 = c.ex.xhat0;
    const auto tr = run_output_feedback(c.ex.plant, c.ex.design, c.tf_y, c.tf_u, c.timing, cfg);
    EXPECT_LT(tail_sup(tr, 8.0), 0.05);
    EXPECT_LT(tail_sup(tr, 8.0, true), 0.05);
    expect_event_spacing(tr);
    expect_hold_semantics(tr);
    const auto again = run_output_feedback(c.ex.plant, c.ex.design, c.tf_y, c.tf_u, c.timing, cfg);
    EXPECT_TRUE(same_trace(tr, again));
}

TEST(OutputFeedback, SilentChannelHoldsItsValue) {
    auto c = ex2_output_case();
    c.tf_y = TriggeringFunction::from_matrix(1e-12, 0.02, c.ex.P1);
    auto cfg = config(0.02, c.ex.x0, 0.0);
    cfg.xhat0 = c.ex.xhat0;
    const auto tr = run_output_feedback(c.ex.plant, c.ex.design, c.tf_y, c.tf_u, c.timing, cfg);
    EXPECT_EQ(tr.fire_count(0), 0);
    for (const auto& s : tr.samples) EXPECT_EQ(s.held(0), tr.samples.front().held(0));
}

TEST(Monitor, CertifiedRunsHaveNoViolations) {
    for (const auto& c : {ex1_case(), ex2_case()}) {
        const Vector x0 = c.plant.nx == 1 ? vec({0.3}) : vec({0.5, -0.5});
        for (double wb : {0.0, 0.1}) {
            const auto tr = run_state_feedback(c.plant, c.tf, c.design, config(c.design.h, x0, wb));
            const auto rep = monitor_lyapunov(tr, monitor_params(c.design));
            EXPECT_TRUE(rep.ok()) << rep.jump_violations << " " << rep.flow_violations;
            EXPECT_GT(rep.jump_checks, 0);
            EXPECT_GT(rep.flow_checks, 0);
        }
    }
}

TEST(Monitor, LargerCoefficientFiresMoreAndKeepsJumpBound) {
    auto c = ex2_case();
    const auto ex = builtins::example2_state();
    c.tf = TriggeringFunction::from_matrix(2.0 * c.tf.coef(), c.design.s, ex.P);
    const auto tr = run_state_feedback(c.plant, c.tf, c.design, config(0.04, ex.x0, 0.05));
    const auto full = ex2_case();
    const auto ref = run_state_feedback(full.plant, full.tf, full.design, config(0.04, ex.x0, 0.05));
    EXPECT_GE(tr.fire_count(), ref.fire_count());
    EXPECT_EQ(monitor_lyapunov(tr, monitor_params(c.design)).jump_violations, 0);
}

TEST(Monitor, ZeroTraceIsClean) {
    const auto c = ex2_case();
    const auto tr = run_state_feedback(c.plant, c.tf, c.design, config(0.04, Vector::Zero(2), 0.0));
    const auto rep = monitor_lyapunov(tr, monitor_params(c.design));
    EXPECT_TRUE(rep.ok());
}

TEST(MonteCarlo, ZeroScenarioNeverFires) {
    auto sc = builtins::example1_scenario();
    sc.box = 0.0;
    sc.w_bound = 0.0;
    const auto rows = monte_carlo(sc, {0.1}, 1, 5);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].f_avg, 0.0);
    EXPECT_TRUE(rows[0].error.empty());
}

TEST(MonteCarlo, DeterministicAndThreadIndependent) {
    const auto sc = builtins::example1_scenario();
    const auto a = monte_carlo(sc, {0.1, 0.2}, 12, 9, 1);
    const auto b = monte_carlo(sc, {0.1, 0.2}, 12, 9, 3);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].f_avg, b[i].f_avg);
        EXPECT_EQ(a[i].seed, 9u);
        EXPECT_EQ(a[i].n_runs, 12);
        EXPECT_GE(a[i].f_avg, 0.0);
        EXPECT_LE(a[i].f_avg, 1.0);
    }
}

TEST(MonteCarlo, InfeasiblePeriodRowCarriesError) {
    const auto sc = builtins::example1_scenario();
    const auto rows = monte_carlo(sc, {0.1, 0.5}, 2, 1);
    EXPECT_TRUE(rows[0].error.empty());
    EXPECT_FALSE(rows[1].error.empty());
}

TEST(Csv, Rfc4180Layout) {
    const auto c = ex2_case();
    const auto tr = run_state_feedback(c.plant, c.tf, c.design, config(0.04, vec({0.5, -0.5}), 0.0, 0.2));
    std::ostringstream t, e;
    write_trace_csv(t, tr);
    write_events_csv(e, tr);
    const std::string ts = t.str();
    EXPECT_EQ(ts.rfind("time,x1,x2,u1,w1,held1,held2,V,phi\r\n", 0), 0u) << ts.substr(0, 60);
    std::size_t lines = 0;
    for (std::size_t p = ts.find("\r\n"); p != std::string::npos; p = ts.find("\r\n", p + 2)) ++lines;
    EXPECT_EQ(lines, tr.samples.size() + 1);
    EXPECT_EQ(e.str().rfind("k,t_k,Gamma_x,fired_x", 0), 0u);
}
