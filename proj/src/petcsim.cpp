#include "petc/petcsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace petc::sim {

// ---------------------------------------------------------------------------
// Triggering functions

TriggeringFunction TriggeringFunction::from_map(double coef, double s, Map v) {
    if (!(coef > 0.0) || !(s > 0.0)) {
        throw DomainError("triggering function needs coef > 0 and s > 0");
    }
    if (!v) {
        throw ConfigurationError("triggering function needs a Lyapunov map");
    }
    TriggeringFunction tf;
    tf.coef_ = coef;
    tf.s_ = s;
    tf.map_ = std::move(v);
    return tf;
}

TriggeringFunction TriggeringFunction::from_matrix(double coef, double s, const Matrix& P) {
    if (!(coef > 0.0) || !(s > 0.0)) {
        throw DomainError("triggering function needs coef > 0 and s > 0");
    }
    if (P.rows() != P.cols() || !P.isApprox(P.transpose(), 1e-12)) {
        throw DomainError("triggering matrix must be square and symmetric");
    }
    if (eig_sym(SymMatrix::symmetrized(P)).values.minCoeff() <= 0.0) {
        throw DomainError("triggering matrix must be positive definite");
    }
    TriggeringFunction tf;
    tf.coef_ = coef;
    tf.s_ = s;
    tf.P_ = P;
    return tf;
}

double TriggeringFunction::quad(const Vector& z) const {
    if (P_) {
        if (z.size() != P_->rows()) {
            throw ConfigurationError("triggering function: argument has the wrong dimension");
        }
        return z.dot(*P_ * z);
    }
    if (!map_) {
        throw ConfigurationError("triggering function is empty");
    }
    return map_(z);
}

double TriggeringFunction::operator()(const Vector& z, const Vector& err) const {
    return coef_ * err.squaredNorm() - s_ * quad(z);
}

double gamma_state(const Vector& x, const Vector& e, const TriggeringFunction& tf) {
    if (x.size() != e.size()) {
        throw ConfigurationError("gamma_state: x and e differ in dimension");
    }
    return tf(x, e);
}

double gamma_output(const Vector& y, const Vector& y_e, const TriggeringFunction& tf) {
    if (y.size() != y_e.size()) {
        throw ConfigurationError("gamma_output: y and y_e differ in dimension");
    }
    return tf(y, y_e);
}

double gamma_input(const Vector& xhat, const Vector& x_e, const TriggeringFunction& tf) {
    if (xhat.size() != x_e.size()) {
        throw ConfigurationError("gamma_input: xhat and x_e differ in dimension");
    }
    return tf(xhat, x_e);
}

// ---------------------------------------------------------------------------
// Configuration and traces

void SimConfig::validate() const {
    if (!(h > 0.0) || !(t_end >= h) || substeps < 1 || !(w_bound >= 0.0)) {
        std::ostringstream os;
        os << "invalid simulation config: need h > 0, t_end >= h, substeps >= 1, w_bound >= 0 "
           << "(h=" << h << ", t_end=" << t_end << ", substeps=" << substeps << ")";
        throw DomainError(os.str());
    }
}

int SimConfig::n_intervals() const {
    return static_cast<int>(std::llround(t_end / h));
}

int SimTrace::fire_count(std::size_t channel) const {
    int n = 0;
    for (const auto& ev : events) {
        if (ev.k > 0 && channel < ev.fired.size() && ev.fired[channel]) {
            ++n;
        }
    }
    return n;
}

double SimTrace::frequency(std::size_t channel) const {
    const auto instants = static_cast<double>(events.size()) - 1.0;
    if (instants <= 0.0) {
        return 0.0;
    }
    return fire_count(channel) / instants;
}

std::vector<double> SimTrace::fire_times(std::size_t channel) const {
    std::vector<double> out;
    for (const auto& ev : events) {
        if (channel < ev.fired.size() && ev.fired[channel]) {
            out.push_back(ev.t);
        }
    }
    return out;
}

namespace {

// Sub-steps of the scalar φ-clock per state sub-step.
constexpr int kPhiRefine = 8;

double advance_phi(double phi, const timing::TimingBase& base, double dt) {
    const double step = dt / kPhiRefine;
    for (int i = 0; i < kPhiRefine; ++i) {
        const double k1 = timing::phi_rate(phi, base);
        const double k2 = timing::phi_rate(phi + 0.5 * step * k1, base);
        const double k3 = timing::phi_rate(phi + 0.5 * step * k2, base);
        const double k4 = timing::phi_rate(phi + step * k3, base);
        phi += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return phi;
}

template <class Rhs>
Vector rk4_step(const Vector& z, double dt, const Rhs& rhs) {
    const Vector k1 = rhs(z);
    const Vector k2 = rhs(z + 0.5 * dt * k1);
    const Vector k3 = rhs(z + 0.5 * dt * k2);
    const Vector k4 = rhs(z + dt * k3);
    return z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector draw_w(std::mt19937_64& rng, Eigen::Index n, double bound) {
    Vector w = Vector::Zero(n);
    if (bound > 0.0) {
        std::uniform_real_distribution<double> unif(-bound, bound);
        for (Eigen::Index i = 0; i < n; ++i) {
            w(i) = unif(rng);
        }
    }
    return w;
}

void check_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw DomainError("simulation needs 0 < lambda < 1");
    }
}

void check_finite(const Vector& z, double t) {
    if (!z.allFinite()) {
        std::ostringstream os;
        os << "state became non-finite at t=" << t;
        throw SimulationDivergedError(os.str());
    }
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

SimTrace run_state_feedback(const systems::GeneralPlant& plant, const TriggeringFunction& tf,
                            const timing::TimingDesign& design, const SimConfig& cfg) {
    cfg.validate();
    plant.validate();
    design.base.validate();
    check_lambda(design.lambda);
    if (cfg.x0.size() != plant.nx) {
        throw ConfigurationError("x0 has the wrong dimension");
    }
    SimTrace trace;
    trace.channels = {"x"};
    trace.h = cfg.h;
    try {
        const int n = cfg.n_intervals();
        const double dt = cfg.h / cfg.substeps;
        const double phi0 = 1.0 / design.lambda;
        std::mt19937_64 rng(cfg.seed);
        Vector x = cfg.x0;
        Vector held = x;
        double phi = phi0;
        const auto lyap = [&](const Vector& xs, const Vector& hs, double ph) {
            return tf.quad(xs) + ph * (xs - hs).squaredNorm();
        };
        for (int k = 0; k <= n; ++k) {
            const double tk = k * cfg.h;
            Event ev;
            ev.k = k;
            ev.t = tk;
            const Vector e = x - held;
            ev.V_minus = lyap(x, held, phi);
            const double g = gamma_state(x, e, tf);
            const bool fire = k == 0 || (g >= 0.0 && e.squaredNorm() > 0.0);
            if (fire) {
                held = x;
            }
            phi = phi0;
            ev.V_plus = lyap(x, held, phi);
            ev.gamma = {g};
            ev.fired = {fire};
            trace.events.push_back(std::move(ev));
            if (k == n) {
                break;
            }
            const Vector w = draw_w(rng, plant.nw, cfg.w_bound);
            const Vector u = plant.eval_k(held);
            const auto rhs = [&](const Vector& z) { return plant.eval_f(z, u, w); };
            if (cfg.record_dense) {
                trace.samples.push_back(
                    {tk, k, x, Vector(), held, u, w, lyap(x, held, phi), Vector::Constant(1, phi)});
            }
            for (int j = 1; j <= cfg.substeps; ++j) {
                x = rk4_step(x, dt, rhs);
                phi = advance_phi(phi, design.base, dt);
                const double t = tk + j * dt;
                check_finite(x, t);
                if (cfg.record_dense) {
                    trace.samples.push_back({t, k, x, Vector(), held, u, w, lyap(x, held, phi),
                                             Vector::Constant(1, phi)});
                }
            }
        }
    } catch (const DivergedError&) {
        throw;
    } catch (const SimulationDivergedError& e) {
        throw DivergedError(e.what(), std::move(trace));
    }
    return trace;
}

SimTrace run_output_feedback(const systems::IqcPlant& plant, const systems::ObserverDesign& design,
                             const TriggeringFunction& tf_y, const TriggeringFunction& tf_u,
                             const timing::OutputTimingDesign& timing, const SimConfig& cfg,
                             const std::optional<OutputLyapunov>& lyap) {
    cfg.validate();
    plant.validate();
    systems::validate_observer(plant, design);
    timing.channel_y.base.validate();
    timing.channel_u.base.validate();
    check_lambda(timing.channel_y.lambda);
    check_lambda(timing.channel_u.lambda);
    const auto nx = plant.nx();
    if (cfg.x0.size() != nx || cfg.xhat0.size() != nx) {
        throw ConfigurationError("x0 and xhat0 must have dimension nx");
    }
    if (lyap && (lyap->P.rows() != 2 * nx || lyap->P.cols() != 2 * nx)) {
        throw ConfigurationError("output Lyapunov matrix must be 2nx x 2nx");
    }
    const Matrix& C = *plant.C;
    const auto ny = plant.ny();
    SimTrace trace;
    trace.channels = {"y", "u"};
    trace.h = cfg.h;
    trace.has_V = lyap.has_value();
    try {
        const int n = cfg.n_intervals();
        const double dt = cfg.h / cfg.substeps;
        const double phi0_y = 1.0 / timing.channel_y.lambda;
        const double phi0_u = 1.0 / timing.channel_u.lambda;
        std::mt19937_64 rng(cfg.seed);
        Vector x = cfg.x0;
        Vector xhat = cfg.xhat0;
        Vector yc = C * x;
        Vector xc = xhat;
        double phi_y = phi0_y;
        double phi_u = phi0_u;
        const auto value = [&](const Vector& xs, const Vector& xh, double py, double pu) {
            if (!lyap) {
                return 0.0;
            }
            Vector xi(2 * nx);
            xi << xs, xs - xh;
            return xi.dot(lyap->P * xi) + timing.c1 * py * (yc - C * xs).squaredNorm() +
                   timing.c2 * pu * (xc - xh).squaredNorm();
        };
        const auto held = [&]() {
            Vector hv(ny + nx);
            hv << yc, xc;
            return hv;
        };
        const auto phis = [&]() { return (Vector(2) << phi_y, phi_u).finished(); };
        for (int k = 0; k <= n; ++k) {
            const double tk = k * cfg.h;
            Event ev;
            ev.k = k;
            ev.t = tk;
            const Vector y = C * x;
            const Vector ye = yc - y;
            const Vector xe = xc - xhat;
            ev.V_minus = value(x, xhat, phi_y, phi_u);
            const double gy = gamma_output(y, ye, tf_y);
            const double gu = gamma_input(xhat, xe, tf_u);
            const bool fy = k == 0 || (gy >= 0.0 && ye.squaredNorm() > 0.0);
            const bool fu = k == 0 || (gu >= 0.0 && xe.squaredNorm() > 0.0);
            if (fy) {
                yc = y;
            }
            if (fu) {
                xc = xhat;
            }
            phi_y = phi0_y;
            phi_u = phi0_u;
            ev.V_plus = value(x, xhat, phi_y, phi_u);
            ev.gamma = {gy, gu};
            ev.fired = {fy, fu};
            trace.events.push_back(std::move(ev));
            if (k == n) {
                break;
            }
            const Vector w = draw_w(rng, plant.nw(), cfg.w_bound);
            const Vector u = systems::state_controller_output(plant, design.gains, xc);
            const auto rhs = [&](const Vector& z) {
                Vector dz(2 * nx);
                dz << plant.flow(z.head(nx), u, w),
                    systems::observer_rhs(plant, design, z.tail(nx), u, yc);
                return dz;
            };
            if (cfg.record_dense) {
                trace.samples.push_back(
                    {tk, k, x, xhat, held(), u, w, value(x, xhat, phi_y, phi_u), phis()});
            }
            Vector z(2 * nx);
            z << x, xhat;
            for (int j = 1; j <= cfg.substeps; ++j) {
                z = rk4_step(z, dt, rhs);
                phi_y = advance_phi(phi_y, timing.channel_y.base, dt);
                phi_u = advance_phi(phi_u, timing.channel_u.base, dt);
                const double t = tk + j * dt;
                check_finite(z, t);
                x = z.head(nx);
                xhat = z.tail(nx);
                if (cfg.record_dense) {
                    trace.samples.push_back(
                        {t, k, x, xhat, held(), u, w, value(x, xhat, phi_y, phi_u), phis()});
                }
            }
        }
    } catch (const DivergedError&) {
        throw;
    } catch (const SimulationDivergedError& e) {
        throw DivergedError(e.what(), std::move(trace));
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Lyapunov monitoring

MonitorParams monitor_params(const timing::TimingDesign& design) {
    MonitorParams p;
    p.s = design.s;
    p.alpha = design.alpha;
    p.alpha0 = design.alpha0;
    p.d = design.d;
    return p;
}

MonitorParams monitor_params(const timing::OutputTimingDesign& design) {
    MonitorParams p;
    p.s = design.s;
    p.alpha = design.alpha;
    p.alpha0 = design.alpha0;
    p.d = design.d;
    return p;
}

LyapunovReport monitor_lyapunov(const SimTrace& trace, const MonitorParams& params) {
    LyapunovReport rep;
    if (!trace.has_V) {
        return rep;
    }
    for (const auto& ev : trace.events) {
        if (ev.k == 0) {
            continue;
        }
        ++rep.jump_checks;
        const double bound = (1.0 + params.s) * ev.V_minus + params.tol_jump_rel * ev.V_minus;
        if (ev.V_plus > bound) {
            ++rep.jump_violations;
            const double excess =
                (ev.V_plus - (1.0 + params.s) * ev.V_minus) / std::max(ev.V_minus, 1e-300);
            rep.worst_jump_excess = std::max(rep.worst_jump_excess, excess);
        }
    }
    if (!(params.alpha > params.alpha0)) {
        return rep;
    }
    const double ratio = params.d / (params.alpha - params.alpha0);
    const double limit = -params.alpha0 + params.tol_flow_rel * params.alpha0;
    const auto& s = trace.samples;
    for (std::size_t j = 1; j + 1 < s.size(); ++j) {
        // Centered differences only inside one flow interval; the first sample
        // of each interval is the post-jump state.
        if (s[j - 1].interval != s[j].interval || s[j + 1].interval != s[j].interval) {
            continue;
        }
        const double v = s[j].V;
        if (!(v > 0.0) || !(s[j - 1].V > 0.0) || !(s[j + 1].V > 0.0)) {
            continue;
        }
        if (v < ratio * s[j].w.squaredNorm()) {
            continue;
        }
        ++rep.flow_checks;
        const double slope =
            (std::log(s[j + 1].V) - std::log(s[j - 1].V)) / (s[j + 1].t - s[j - 1].t);
        if (slope > limit) {
            ++rep.flow_violations;
            rep.worst_flow_excess = std::max(rep.worst_flow_excess, slope + params.alpha0);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

struct RunResult {
    double f0 = 0.0;
    double f1 = 0.0;
    std::string error;
};

Vector uniform_box(std::mt19937_64& rng, Eigen::Index n, double box) {
    std::uniform_real_distribution<double> unif(-box, box);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = unif(rng);
    }
    return v;
}

template <class Fn>
std::vector<RunResult> run_batch(int n_runs, unsigned threads, const Fn& fn) {
    std::vector<RunResult> results(static_cast<std::size_t>(n_runs));
    std::atomic<int> next{0};
    const auto worker = [&]() {
        for (int i = next++; i < n_runs; i = next++) {
            try {
                results[static_cast<std::size_t>(i)] = fn(i);
            } catch (const std::exception& e) {
                results[static_cast<std::size_t>(i)].error = e.what();
            }
        }
    };
    unsigned n_threads = threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : threads;
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max(1, n_runs)));
    if (n_threads <= 1) {
        worker();
        return results;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
    return results;
}

} // namespace

std::vector<StatsRow> monte_carlo(const Scenario& scenario, const std::vector<double>& h_list,
                                  int n_runs, std::uint64_t seed, unsigned threads) {
    if (n_runs < 1) {
        throw DomainError("monte_carlo needs n_runs >= 1");
    }
    std::vector<StatsRow> rows;
    for (const double h : h_list) {
        StatsRow row;
        row.h = h;
        row.n_runs = n_runs;
        row.seed = seed;
        try {
            std::vector<RunResult> results;
            if (scenario.kind == Scenario::Kind::State) {
                timing::TimingDesign design;
                design.base = scenario.base;
                design.h = h;
                design.s = scenario.s;
                design.alpha = scenario.alpha;
                design.alpha0 = scenario.alpha0;
                design.d = scenario.d;
                design.lambda = timing::solve_lambda(scenario.base, h);
                const double coef = timing::trigger_coefficient(design.lambda, scenario.s);
                row.certified = timing::check_design(design).ok();
                const auto tf = TriggeringFunction::from_map(coef, scenario.s, scenario.plant.V1);
                results = run_batch(n_runs, threads, [&](int i) {
                    const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(i);
                    std::mt19937_64 init(run_seed);
                    SimConfig cfg;
                    cfg.h = h;
                    cfg.t_end = scenario.t_end;
                    cfg.substeps = scenario.substeps;
                    cfg.seed = splitmix(run_seed);
                    cfg.w_bound = scenario.w_bound;
                    cfg.x0 = uniform_box(init, scenario.plant.nx, scenario.box);
                    cfg.record_dense = false;
                    const auto trace = run_state_feedback(scenario.plant, tf, design, cfg);
                    return RunResult{trace.frequency(0), 0.0, {}};
                });
            } else {
                timing::OutputTimingDesign design;
                design.channel_y = {scenario.base_y, timing::solve_lambda(scenario.base_y, h)};
                design.channel_u = {scenario.base_u, timing::solve_lambda(scenario.base_u, h)};
                design.h = h;
                design.s = scenario.s;
                design.alpha = scenario.alpha;
                design.alpha0 = scenario.alpha0;
                design.d = scenario.d;
                const double cy = timing::trigger_coefficient(design.channel_y.lambda, scenario.s);
                const double cu = timing::trigger_coefficient(design.channel_u.lambda, scenario.s);
                row.certified = timing::check_design(design).ok();
                const auto tf_y = TriggeringFunction::from_matrix(cy, scenario.s, scenario.P1);
                const auto tf_u = TriggeringFunction::from_matrix(cu, scenario.s, scenario.P2);
                const auto nx = scenario.iqc_plant.nx();
                results = run_batch(n_runs, threads, [&](int i) {
                    const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(i);
                    std::mt19937_64 init(run_seed);
                    SimConfig cfg;
                    cfg.h = h;
                    cfg.t_end = scenario.t_end;
                    cfg.substeps = scenario.substeps;
                    cfg.seed = splitmix(run_seed);
                    cfg.w_bound = scenario.w_bound;
                    cfg.x0 = uniform_box(init, nx, scenario.box);
                    cfg.xhat0 = uniform_box(init, nx, scenario.box);
                    cfg.record_dense = false;
                    const auto trace = run_output_feedback(scenario.iqc_plant, scenario.observer,
                                                           tf_y, tf_u, design, cfg);
                    return RunResult{trace.frequency(0), trace.frequency(1), {}};
                });
            }
            double s0 = 0.0;
            double s1 = 0.0;
            for (const auto& r : results) {
                if (!r.error.empty() && row.error.empty()) {
                    row.error = r.error;
                }
                s0 += r.f0;
                s1 += r.f1;
            }
            if (scenario.kind == Scenario::Kind::State) {
                row.f_avg = s0 / n_runs;
            } else {
                row.f_avg_y = s0 / n_runs;
                row.f_avg_u = s1 / n_runs;
            }
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV export

namespace {

void put_header(std::ostream& os, const char* prefix, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
        os << ',' << prefix << (i + 1);
    }
}

void put_values(std::ostream& os, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        os << ',' << v(i);
    }
}

} // namespace

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
    const auto prec = os.precision(std::numeric_limits<double>::max_digits10);
    os << "time";
    if (!trace.samples.empty()) {
        const auto& s = trace.samples.front();
        put_header(os, "x", s.x.size());
        put_header(os, "xhat", s.xhat.size());
        put_header(os, "u", s.u.size());
        put_header(os, "w", s.w.size());
        put_header(os, "held", s.held.size());
        os << ",V";
        if (s.phi.size() == 1) {
            os << ",phi";
        } else {
            put_header(os, "phi", s.phi.size());
        }
    }
    os << "\r\n";
    for (const auto& s : trace.samples) {
        os << s.t;
        put_values(os, s.x);
        put_values(os, s.xhat);
        put_values(os, s.u);
        put_values(os, s.w);
        put_values(os, s.held);
        os << ',' << s.V;
        put_values(os, s.phi);
        os << "\r\n";
    }
    os.precision(prec);
}

void write_events_csv(std::ostream& os, const SimTrace& trace) {
    const auto prec = os.precision(std::numeric_limits<double>::max_digits10);
    os << "k,t_k";
    for (const auto& c : trace.channels) {
        os << ",Gamma_" << c;
    }
    for (const auto& c : trace.channels) {
        os << ",fired_" << c;
    }
    os << ",V_minus,V_plus\r\n";
    for (const auto& ev : trace.events) {
        os << ev.k << ',' << ev.t;
        for (const double g : ev.gamma) {
            os << ',' << g;
        }
        for (const bool f : ev.fired) {
            os << ',' << (f ? 1 : 0);
        }
        os << ',' << ev.V_minus << ',' << ev.V_plus << "\r\n";
    }
    os.precision(prec);
}

} // namespace petc::sim
