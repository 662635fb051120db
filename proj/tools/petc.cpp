// petc: design, simulation and verification front end.
//
// Exit codes: 0 success, 1 infeasible / failed check, 2 malformed input.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "petc/builtins.hpp"
#include "petc/design.hpp"
#include "petc/error.hpp"
#include "petc/io.hpp"
#include "petc/lmi.hpp"
#include "petc/petcsim.hpp"
#include "petc/timing.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using petc::Matrix;
using petc::Vector;
using petc::io::Json;

namespace {

enum class Level { Error = 0, Info = 1, Debug = 2 };

Level log_level() {
    const char* env = std::getenv("PETC_LOG");
    if (env == nullptr) {
        return Level::Info;
    }
    const std::string v(env);
    if (v == "error") return Level::Error;
    if (v == "debug") return Level::Debug;
    return Level::Info;
}

void log(Level level, const std::string& msg) {
    static const Level current = log_level();
    if (level <= current) {
        static const char* tags[] = {"error", "info", "debug"};
        std::cerr << "[petc:" << tags[static_cast<int>(level)] << "] " << msg << '\n';
    }
}

std::string num(double v, int digits = 6) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

// Options shared by every subcommand.
struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::string out;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON job configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--out", c.out, "artifact directory");
}

void emit(const Common& c, const std::string& file, const std::string& text) {
    if (c.out.empty()) {
        return;
    }
    fs::create_directories(c.out);
    const auto path = (fs::path(c.out) / file).string();
    petc::io::write_text_file(path, text);
    log(Level::Info, "wrote " + path);
}

Json load_config(const Common& c, bool required) {
    if (c.config.empty()) {
        if (required) {
            throw petc::ConfigurationError("--config is required");
        }
        return Json::object();
    }
    Json j = petc::io::read_json_file(c.config);
    if (!j.is_object()) {
        throw petc::ConfigurationError("configuration must be a JSON object");
    }
    return j;
}

Json block(const Json& cfg, const char* name) {
    if (!cfg.contains(name)) {
        return Json::object();
    }
    if (!cfg.at(name).is_object()) {
        throw petc::ConfigurationError(std::string("'") + name + "' must be an object");
    }
    return cfg.at(name);
}

std::optional<double> opt_number(const Json& j, const char* key) {
    if (!j.contains(key)) {
        return std::nullopt;
    }
    return petc::io::number_from_json(j, key);
}

std::string builtin_name(const Json& sys) {
    if (!sys.is_string()) {
        return {};
    }
    const auto name = sys.get<std::string>();
    for (const auto& n : petc::builtins::names()) {
        if (n == name) {
            return name;
        }
    }
    throw petc::ConfigurationError("unknown builtin system '" + name + "'");
}

petc::systems::IqcPlant iqc_plant_from(const Json& sys) {
    const auto name = builtin_name(sys);
    if (name == "example1") {
        throw petc::ConfigurationError(
            "example1 has no IQC model; use simulate, montecarlo or example");
    }
    if (!name.empty()) {
        return petc::builtins::example2_plant();
    }
    return petc::io::plant_from_json(sys);
}

// ---------------------------------------------------------------- timing

struct TimingArgs {
    double mu = 0.0;
    double gamma = 0.0;
    double alpha = 0.0;
    std::optional<double> h;
    std::optional<double> s;
    std::optional<double> alpha0;
    std::optional<double> lambda;
    double d = 1.0;
};

int cmd_timing(const TimingArgs& a, const Common& c) {
    const petc::timing::TimingBase base{a.mu, a.gamma};
    base.validate();
    if (!(a.alpha > 0.0)) {
        throw petc::DomainError("alpha must be positive");
    }
    const double T = petc::timing::max_sampling_period(base);
    std::cout << "T(mu, gamma) = " << num(T) << '\n';
    if (a.h && *a.h >= T) {
        std::cout << "no admissible design: h = " << num(*a.h) << " >= T\n";
        return 1;
    }
    petc::timing::ParameterHints hints;
    hints.h = a.h;
    if (a.lambda && !a.h) {
        hints.h = petc::timing::inter_sample_time(base, *a.lambda);
    }
    hints.s = a.s;
    hints.alpha0 = a.alpha0;
    hints.d = a.d;
    auto d = petc::timing::select_parameters(base, a.alpha, hints);
    // A rounded λ is checked against h with a loose residual.
    double tol = -1.0;
    if (a.lambda) {
        d.lambda = *a.lambda;
        tol = 1e-3;
    }
    const auto report = petc::timing::check_design(d, tol);
    const double coef = petc::timing::trigger_coefficient(d.lambda, d.s);
    std::cout << "admissible h  = (" << num(report.lower_bound) << ", " << num(T) << ")\n"
              << "h             = " << num(d.h) << '\n'
              << "lambda        = " << num(d.lambda) << '\n'
              << "s             = " << num(d.s) << '\n'
              << "alpha0        = " << num(d.alpha0) << '\n'
              << "coefficient   = " << num(coef) << '\n'
              << "conditions    : " << report.describe() << '\n';
    Json j = {{"T", T},
              {"design", petc::io::to_json(d)},
              {"trigger_coefficient", coef},
              {"admissible_h", {report.lower_bound, T}},
              {"conditions_ok", report.ok()}};
    emit(c, "timing.json", petc::io::dump(j));
    return report.ok() ? 0 : 1;
}

// ---------------------------------------------------------------- design

struct DesignArgs {
    std::optional<double> alpha;
    std::optional<double> h;
    std::optional<double> s;
    std::optional<double> alpha0;
    int max_iter = 5000;
};

double design_alpha(const DesignArgs& a, const Json& d, const std::string& builtin,
                    double builtin_alpha) {
    if (a.alpha) return *a.alpha;
    if (auto v = opt_number(d, "alpha")) return *v;
    if (!builtin.empty()) return builtin_alpha;
    throw petc::ConfigurationError("alpha is required (--alpha or design.alpha)");
}

petc::timing::ParameterHints design_hints(const DesignArgs& a, const Json& d) {
    petc::timing::ParameterHints hints;
    hints.h = a.h ? a.h : opt_number(d, "h");
    hints.s = a.s ? a.s : opt_number(d, "s");
    hints.alpha0 = a.alpha0 ? a.alpha0 : opt_number(d, "alpha0");
    return hints;
}

petc::lmi::SolverOptions solver_options(const DesignArgs& a, const Json& d, const Common& c) {
    petc::lmi::SolverOptions opts;
    opts.max_iter = d.contains("max_iter") ? d.at("max_iter").get<int>() : a.max_iter;
    opts.seed = c.seed;
    return opts;
}

void print_margin(const std::string& label, const petc::lmi::MarginReport& r) {
    std::cout << label << ": " << petc::lmi::to_string(r.verdict) << " (margin " << num(r.margin)
              << ", scale " << num(r.scale) << ")\n";
}

int cmd_design_state(const DesignArgs& a, const Common& c) {
    const Json cfg = load_config(c, true);
    if (!cfg.contains("system")) {
        throw petc::ConfigurationError("missing field 'system'");
    }
    const Json& sys = cfg.at("system");
    const auto builtin = builtin_name(sys);
    const auto plant = iqc_plant_from(sys);
    const Json d = block(cfg, "design");
    const auto e2 = petc::builtins::example2_state();
    const double alpha = design_alpha(a, d, builtin, e2.design.alpha);

    std::optional<petc::systems::StateFeedbackGains> gains;
    if (cfg.contains("gains")) {
        const Json& g = cfg.at("gains");
        if (g.is_string() && g.get<std::string>() == "builtin") {
            if (builtin.empty()) {
                throw petc::ConfigurationError("\"gains\": \"builtin\" needs a builtin system");
            }
            gains = e2.gains;
        } else {
            gains = petc::io::gains_from_json(g);
        }
    }
    log(Level::Info, gains ? "using supplied gains" : "synthesizing gains");
    const auto res = petc::design::design_state(plant, gains, alpha, design_hints(a, d),
                                                solver_options(a, d, c));
    std::cout << "lmi           = " << res.lmi << '\n'
              << "K1            = " << res.gains.K1.format(Eigen::IOFormat(6, 0, ", ", "; ")) << '\n'
              << "mu, gamma, d  = " << num(res.mu) << ", " << num(res.gamma) << ", " << num(res.d)
              << '\n'
              << "h, lambda, s  = " << num(res.timing.h) << ", " << num(res.timing.lambda) << ", "
              << num(res.timing.s) << '\n'
              << "coefficient   = " << num(res.coef) << '\n';
    print_margin("verify", res.margin);

    Json art = petc::io::to_json(res);
    art["system"] = sys;
    art["alpha"] = alpha;
    emit(c, "design_state.json", petc::io::dump(art));
    return res.margin.passed() ? 0 : 1;
}

int cmd_design_output(const DesignArgs& a, const Common& c) {
    const Json cfg = load_config(c, true);
    if (!cfg.contains("system")) {
        throw petc::ConfigurationError("missing field 'system'");
    }
    const Json& sys = cfg.at("system");
    const auto builtin = builtin_name(sys);
    const auto plant = iqc_plant_from(sys);
    if (!plant.C) {
        throw petc::ConfigurationError("output feedback needs a measurement matrix C");
    }
    const Json d = block(cfg, "design");
    const auto eo = petc::builtins::example2_output();
    const double alpha = design_alpha(a, d, builtin, eo.timing.alpha);
    if (!cfg.contains("observer")) {
        throw petc::ConfigurationError("missing field 'observer'");
    }
    const Json& o = cfg.at("observer");
    petc::systems::ObserverDesign observer;
    if (o.is_string() && o.get<std::string>() == "builtin") {
        if (builtin.empty()) {
            throw petc::ConfigurationError("\"observer\": \"builtin\" needs a builtin system");
        }
        observer = eo.design;
    } else {
        observer = petc::io::observer_from_json(o);
    }
    const auto res = petc::design::design_output(plant, observer, alpha, design_hints(a, d),
                                                 solver_options(a, d, c));
    std::cout << "lmi              = " << res.lmi << '\n'
              << "mu1, gamma1, c1  = " << num(res.mu1) << ", " << num(res.gamma1) << ", "
              << num(res.c1) << '\n'
              << "mu2, gamma2, c2  = " << num(res.mu2) << ", " << num(res.gamma2) << ", "
              << num(res.c2) << '\n'
              << "h, s             = " << num(res.timing.h) << ", " << num(res.timing.s) << '\n'
              << "lambda1, lambda2 = " << num(res.timing.channel_y.lambda) << ", "
              << num(res.timing.channel_u.lambda) << '\n'
              << "coefficients     = " << num(res.coef_y) << ", " << num(res.coef_u) << '\n';
    print_margin("verify", res.margin);
    print_margin("verify coupling", res.coupling_margin);

    Json art = petc::io::to_json(res);
    art["system"] = sys;
    art["alpha"] = alpha;
    emit(c, "design_output.json", petc::io::dump(art));
    return res.margin.passed() && res.coupling_margin.passed() ? 0 : 1;
}

// ---------------------------------------------------------------- jobs

// A closed loop ready to simulate.
struct Loop {
    bool output = false;
    std::string label;
    double w_bound = 0.0;
    Vector x0;
    Vector xhat0;

    petc::systems::GeneralPlant plant;
    petc::timing::TimingDesign design;

    petc::systems::IqcPlant iqc;
    petc::systems::ObserverDesign observer;
    petc::timing::OutputTimingDesign timing;
    Matrix P1;
    Matrix P2;
    std::optional<petc::sim::OutputLyapunov> lyap;
};

// Re-solves λ for a new sampling period; the remaining parameters stay fixed.
void retime(Loop& L, double h) {
    if (L.output) {
        L.timing.h = h;
        L.timing.channel_y.lambda = petc::timing::solve_lambda(L.timing.channel_y.base, h);
        L.timing.channel_u.lambda = petc::timing::solve_lambda(L.timing.channel_u.base, h);
    } else {
        L.design.h = h;
        L.design.lambda = petc::timing::solve_lambda(L.design.base, h);
    }
}

Loop loop_from_artifact(const Json& art) {
    Loop L;
    const auto kind = art.value("kind", std::string());
    if (!art.contains("system")) {
        throw petc::ConfigurationError("artifact lacks 'system'");
    }
    L.label = art.contains("lmi") ? art.at("lmi").get<std::string>() : kind;
    const auto iqc = iqc_plant_from(art.at("system"));
    const auto P = petc::io::matrix_from_json(art.at("P"), "P");
    if (kind == "state") {
        const auto gains = petc::io::gains_from_json(art.at("gains"));
        L.plant = petc::systems::as_general_plant(iqc, gains, P);
        L.design = petc::io::timing_design_from_json(art.at("timing"));
        L.x0 = Vector::Constant(iqc.nx(), 0.5);
    } else if (kind == "output") {
        L.output = true;
        L.iqc = iqc;
        L.observer = petc::io::observer_from_json(art.at("observer"));
        L.timing = petc::io::output_timing_from_json(art.at("timing"));
        L.P1 = petc::io::matrix_from_json(art.at("P1"), "P1");
        L.P2 = petc::io::matrix_from_json(art.at("P2"), "P2");
        L.lyap = petc::sim::OutputLyapunov{P};
        L.x0 = Vector::Constant(iqc.nx(), 0.5);
        L.xhat0 = Vector::Zero(iqc.nx());
    } else {
        throw petc::ConfigurationError("artifact kind must be \"state\" or \"output\"");
    }
    return L;
}

Loop loop_from_builtin(const std::string& name) {
    Loop L;
    L.label = name;
    if (name == "example1") {
        const auto ex = petc::builtins::example1();
        L.plant = ex.plant;
        L.design = ex.design;
        L.x0 = Vector::Constant(1, ex.x0);
        L.w_bound = ex.w_bound;
    } else if (name == "example2") {
        const auto ex = petc::builtins::example2_state();
        L.plant = petc::systems::as_general_plant(ex.plant, ex.gains, ex.P);
        L.design = ex.design;
        L.x0 = ex.x0;
        L.w_bound = ex.w_bound;
    } else {
        const auto ex = petc::builtins::example2_output();
        L.output = true;
        L.iqc = ex.plant;
        L.observer = ex.design;
        L.timing = ex.timing;
        L.P1 = ex.P1;
        L.P2 = ex.P2;
        L.x0 = ex.x0;
        L.xhat0 = ex.xhat0;
        L.w_bound = ex.w_bound;
    }
    // Published λ values are rounded; re-solve them from h.
    retime(L, L.output ? L.timing.h : L.design.h);
    return L;
}

Loop resolve_loop(const Json& cfg) {
    if (cfg.contains("artifact")) {
        return loop_from_artifact(petc::io::read_json_file(cfg.at("artifact").get<std::string>()));
    }
    if (!cfg.contains("system")) {
        throw petc::ConfigurationError("configuration needs 'system' or 'artifact'");
    }
    const auto name = builtin_name(cfg.at("system"));
    if (name.empty()) {
        throw petc::ConfigurationError(
            "simulation of a custom system needs a design artifact ('artifact')");
    }
    return loop_from_builtin(name);
}

petc::sim::Scenario scenario_of(const Loop& L) {
    petc::sim::Scenario sc;
    sc.name = L.label;
    if (L.output) {
        sc.kind = petc::sim::Scenario::Kind::Output;
        sc.iqc_plant = L.iqc;
        sc.observer = L.observer;
        sc.base_y = L.timing.channel_y.base;
        sc.base_u = L.timing.channel_u.base;
        sc.P1 = L.P1;
        sc.P2 = L.P2;
        sc.s = L.timing.s;
        sc.alpha = L.timing.alpha;
        sc.alpha0 = L.timing.alpha0;
        sc.d = L.timing.d;
    } else {
        sc.kind = petc::sim::Scenario::Kind::State;
        sc.plant = L.plant;
        sc.base = L.design.base;
        sc.s = L.design.s;
        sc.alpha = L.design.alpha;
        sc.alpha0 = L.design.alpha0;
        sc.d = L.design.d;
    }
    sc.w_bound = L.w_bound;
    return sc;
}

std::string trace_csv(const petc::sim::SimTrace& tr) {
    std::ostringstream os;
    petc::sim::write_trace_csv(os, tr);
    return os.str();
}

std::string events_csv(const petc::sim::SimTrace& tr) {
    std::ostringstream os;
    petc::sim::write_events_csv(os, tr);
    return os.str();
}

std::string plot(const Loop& L, const petc::sim::SimTrace& tr) {
    const auto nx = tr.samples.empty() ? 0 : tr.samples.front().x.size();
    const auto nu = tr.samples.empty() ? 0 : tr.samples.front().u.size();
    std::vector<petc::tools::Series> xs(static_cast<std::size_t>(nx));
    std::vector<petc::tools::Series> us(static_cast<std::size_t>(nu));
    for (Eigen::Index i = 0; i < nx; ++i) {
        xs[static_cast<std::size_t>(i)].label = "x" + std::to_string(i + 1);
    }
    for (Eigen::Index i = 0; i < nu; ++i) {
        us[static_cast<std::size_t>(i)].label = "u" + std::to_string(i + 1);
        us[static_cast<std::size_t>(i)].steps = true;
    }
    for (const auto& s : tr.samples) {
        for (Eigen::Index i = 0; i < nx; ++i) {
            xs[static_cast<std::size_t>(i)].t.push_back(s.t);
            xs[static_cast<std::size_t>(i)].y.push_back(s.x(i));
        }
        for (Eigen::Index i = 0; i < nu; ++i) {
            us[static_cast<std::size_t>(i)].t.push_back(s.t);
            us[static_cast<std::size_t>(i)].y.push_back(s.u(i));
        }
    }
    return petc::tools::render_svg(L.label + ", h = " + num(tr.h), {xs, us});
}

struct SimArgs {
    std::optional<double> h;
    std::optional<double> t_end;
    std::optional<double> w_bound;
    bool svg = false;
};

int run_simulation(Loop L, const Json& sim_block, const SimArgs& a, const Common& c) {
    petc::sim::SimConfig cfg;
    cfg.h = L.output ? L.timing.h : L.design.h;
    if (auto v = a.h ? a.h : opt_number(sim_block, "h")) {
        retime(L, *v);
        cfg.h = *v;
    }
    cfg.t_end = a.t_end ? *a.t_end : sim_block.value("t_end", 10.0);
    cfg.substeps = sim_block.value("substeps", 64);
    cfg.seed = sim_block.contains("seed") ? sim_block.at("seed").get<std::uint64_t>() : c.seed;
    cfg.w_bound = a.w_bound ? *a.w_bound : opt_number(sim_block, "w_bound").value_or(L.w_bound);
    cfg.x0 = sim_block.contains("x0") ? petc::io::vector_from_json(sim_block.at("x0"), "x0") : L.x0;
    if (L.output) {
        cfg.xhat0 = sim_block.contains("xhat0")
                        ? petc::io::vector_from_json(sim_block.at("xhat0"), "xhat0")
                        : L.xhat0;
    }

    petc::sim::SimTrace tr;
    petc::sim::LyapunovReport rep;
    bool certified = false;
    if (L.output) {
        certified = petc::timing::check_design(L.timing).ok();
        const double s = L.timing.s;
        const auto tfy = petc::sim::TriggeringFunction::from_matrix(
            petc::timing::trigger_coefficient(L.timing.channel_y.lambda, s), s, L.P1);
        const auto tfu = petc::sim::TriggeringFunction::from_matrix(
            petc::timing::trigger_coefficient(L.timing.channel_u.lambda, s), s, L.P2);
        tr = petc::sim::run_output_feedback(L.iqc, L.observer, tfy, tfu, L.timing, cfg, L.lyap);
        rep = petc::sim::monitor_lyapunov(tr, petc::sim::monitor_params(L.timing));
    } else {
        certified = petc::timing::check_design(L.design).ok();
        const auto tf = petc::sim::TriggeringFunction::from_map(
            petc::timing::trigger_coefficient(L.design.lambda, L.design.s), L.design.s,
            L.plant.V1);
        tr = petc::sim::run_state_feedback(L.plant, tf, L.design, cfg);
        rep = petc::sim::monitor_lyapunov(tr, petc::sim::monitor_params(L.design));
    }
    if (!certified) {
        log(Level::Info, "timing conditions do not all hold at h = " + num(cfg.h));
    }

    std::cout << "system        = " << L.label << '\n'
              << "h, t_end      = " << num(cfg.h) << ", " << num(cfg.t_end) << '\n'
              << "w bound       = " << num(cfg.w_bound) << '\n';
    for (std::size_t ch = 0; ch < tr.channels.size(); ++ch) {
        std::cout << "events " << tr.channels[ch] << "      = " << tr.fire_count(ch) << " / "
                  << cfg.n_intervals() << " (" << num(100.0 * tr.frequency(ch), 4) << "%)\n";
    }
    std::cout << "final |x|     = " << num(tr.samples.back().x.norm()) << '\n';
    if (tr.has_V) {
        std::cout << "lyapunov      : " << rep.jump_violations << '/' << rep.jump_checks
                  << " jump and " << rep.flow_violations << '/' << rep.flow_checks
                  << " flow violations\n";
    } else {
        std::cout << "lyapunov      : not monitored (no quadratic certificate)\n";
    }

    Json lj = petc::io::to_json(rep);
    lj["certified"] = certified;
    lj["monitored"] = tr.has_V;
    emit(c, "trace.csv", trace_csv(tr));
    emit(c, "events.csv", events_csv(tr));
    emit(c, "lyapunov.json", petc::io::dump(lj));
    if (a.svg) {
        emit(c, "plot.svg", plot(L, tr));
    }
    return rep.ok() ? 0 : 1;
}

int cmd_simulate(const SimArgs& a, const Common& c) {
    const Json cfg = load_config(c, true);
    return run_simulation(resolve_loop(cfg), block(cfg, "sim"), a, c);
}

struct McArgs {
    std::vector<double> h;
    std::optional<int> runs;
    unsigned threads = 0;
};

Json stats_json(const std::vector<petc::sim::StatsRow>& rows, bool output) {
    Json arr = Json::array();
    for (const auto& r : rows) {
        Json j = petc::io::to_json(r);
        if (output) {
            j["f_avg_y"] = r.f_avg_y;
            j["f_avg_u"] = r.f_avg_u;
        } else {
            j["f_avg"] = r.f_avg;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

void print_rows(const std::vector<petc::sim::StatsRow>& rows, bool output) {
    std::cout << (output ? "h          f_y (%)    f_u (%)    certified\n"
                         : "h          f (%)      certified\n");
    for (const auto& r : rows) {
        char buf[128];
        if (!r.error.empty()) {
            std::snprintf(buf, sizeof buf, "%-10.4g error: ", r.h);
            std::cout << buf << r.error << '\n';
        } else if (output) {
            std::snprintf(buf, sizeof buf, "%-10.4g %-10.2f %-10.2f %s\n", r.h, 100 * r.f_avg_y,
                          100 * r.f_avg_u, r.certified ? "yes" : "no");
            std::cout << buf;
        } else {
            std::snprintf(buf, sizeof buf, "%-10.4g %-10.2f %s\n", r.h, 100 * r.f_avg,
                          r.certified ? "yes" : "no");
            std::cout << buf;
        }
    }
}

bool all_computed(const std::vector<petc::sim::StatsRow>& rows) {
    for (const auto& r : rows) {
        if (!r.error.empty()) return false;
    }
    return true;
}

int cmd_montecarlo(const McArgs& a, const Common& c) {
    const Json cfg = load_config(c, true);
    const Json mc = block(cfg, "montecarlo");
    petc::sim::Scenario sc;
    const auto name = cfg.contains("system") ? builtin_name(cfg.at("system")) : std::string();
    if (!cfg.contains("artifact") && name == "example1") {
        sc = petc::builtins::example1_scenario();
    } else if (!cfg.contains("artifact") && name == "example2-output") {
        sc = petc::builtins::example2_output_scenario();
    } else {
        sc = scenario_of(resolve_loop(cfg));
    }
    if (auto v = opt_number(mc, "box")) sc.box = *v;
    if (auto v = opt_number(mc, "w_bound")) sc.w_bound = *v;
    if (auto v = opt_number(mc, "t_end")) sc.t_end = *v;
    if (mc.contains("substeps")) sc.substeps = mc.at("substeps").get<int>();

    std::vector<double> hs = a.h;
    if (hs.empty() && mc.contains("h")) {
        for (const auto& v : mc.at("h")) hs.push_back(v.get<double>());
    }
    if (hs.empty()) {
        throw petc::ConfigurationError("no sampling periods given (--h or montecarlo.h)");
    }
    const int runs = a.runs ? *a.runs : mc.value("runs", 100);
    if (runs < 1) {
        throw petc::ConfigurationError("runs must be at least 1");
    }
    const bool output = sc.kind == petc::sim::Scenario::Kind::Output;
    const auto rows = petc::sim::monte_carlo(sc, hs, runs, c.seed, a.threads);
    print_rows(rows, output);
    emit(c, "stats.json", petc::io::dump(stats_json(rows, output)));
    return all_computed(rows) ? 0 : 1;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    std::string artifact;
    std::string paper;
    std::optional<double> rel_tol;
};

petc::lmi::MarginReport verify_state_artifact(const Json& art, double tol) {
    const auto plant = iqc_plant_from(art.at("system"));
    const auto gains = petc::io::gains_from_json(art.at("gains"));
    const double alpha = petc::io::number_from_json(art, "alpha");
    const auto lmi_name = art.at("lmi").get<std::string>();
    const auto inst = lmi_name == "cor1" ? petc::lmi::build_cor1(plant, gains.K1, alpha)
                                         : petc::lmi::build_thm3(plant, gains, alpha);
    if (inst.name() != lmi_name) {
        throw petc::ConfigurationError("unknown state LMI '" + lmi_name + "'");
    }
    return petc::lmi::verify(inst, petc::io::assignment_from_json(art.at("assignment")), tol);
}

std::pair<petc::lmi::MarginReport, petc::lmi::MarginReport>
verify_output_artifact(const Json& art, double tol) {
    const auto plant = iqc_plant_from(art.at("system"));
    const auto observer = petc::io::observer_from_json(art.at("observer"));
    const double alpha = petc::io::number_from_json(art, "alpha");
    const auto lmi_name = art.at("lmi").get<std::string>();
    const auto inst = lmi_name == "cor2"
                          ? petc::lmi::build_cor2(plant, observer.gains.K1, observer.L2, alpha)
                          : petc::lmi::build_thm4(plant, observer, alpha);
    if (inst.name() != lmi_name) {
        throw petc::ConfigurationError("unknown output LMI '" + lmi_name + "'");
    }
    const auto a = petc::io::assignment_from_json(art.at("assignment"));
    const auto timing = petc::io::output_timing_from_json(art.at("timing"));
    const auto coupling =
        petc::lmi::build_thm4_coupling(a.at("P"), *plant.C, timing.c1, timing.c2);
    return {petc::lmi::verify(inst, a, tol),
            petc::lmi::verify(coupling, petc::io::assignment_from_json(art.at("coupling")), tol)};
}

// The copies of P, P1, P2 outside the assignments must agree with them.
bool copies_agree(const Json& art) {
    const auto a = petc::io::assignment_from_json(art.at("assignment"));
    if (petc::io::matrix_from_json(art.at("P"), "P") != a.at("P")) {
        return false;
    }
    if (art.value("kind", "") == "output") {
        const auto cp = petc::io::assignment_from_json(art.at("coupling"));
        return petc::io::matrix_from_json(art.at("P1"), "P1") == cp.at("P1") &&
               petc::io::matrix_from_json(art.at("P2"), "P2") == cp.at("P2");
    }
    return true;
}

int cmd_verify(const VerifyArgs& a, const Common& c) {
    if (a.artifact.empty() == a.paper.empty()) {
        throw petc::ConfigurationError("give exactly one of --artifact or --paper");
    }
    Json out;
    bool pass = false;
    if (!a.paper.empty()) {
        if (a.paper != "example2") {
            throw petc::ConfigurationError("published certificates exist for example2 only");
        }
        const auto ex = petc::builtins::example2_state();
        const auto inst = petc::lmi::build_thm3(ex.plant, ex.gains, ex.design.alpha);
        petc::lmi::Assignment fixed = inst.zero_assignment();
        fixed["P"] = ex.P;
        fixed["mu"] = Matrix::Constant(1, 1, ex.design.base.mu);
        fixed["gamma"] = Matrix::Constant(1, 1, ex.design.base.gamma);
        fixed["d"] = Matrix::Constant(1, 1, ex.design.d);
        const auto full = petc::lmi::recover_sigmas(inst, fixed, {"sigma1", "sigma2"});
        const auto r = petc::lmi::verify(inst, full, a.rel_tol.value_or(1e-6));
        std::cout << "sigma1, sigma2 = " << num(petc::lmi::scalar_of(full, "sigma1")) << ", "
                  << num(petc::lmi::scalar_of(full, "sigma2")) << '\n';
        print_margin(inst.name(), r);
        out = {{"lmi", inst.name()}, {"assignment", petc::io::to_json(full)},
               {"verify", petc::io::to_json(r)}};
        pass = r.passed();
    } else {
        const Json art = petc::io::read_json_file(a.artifact);
        const double tol = a.rel_tol.value_or(1e-8);
        const auto kind = art.value("kind", std::string());
        const bool agree = copies_agree(art);
        if (!agree) {
            std::cout << "artifact matrices disagree with the stored assignment\n";
        }
        if (kind == "state") {
            const auto r = verify_state_artifact(art, tol);
            print_margin(art.at("lmi").get<std::string>(), r);
            out = {{"verify", petc::io::to_json(r)}};
            pass = r.passed();
        } else if (kind == "output") {
            const auto [r, rc] = verify_output_artifact(art, tol);
            print_margin(art.at("lmi").get<std::string>(), r);
            print_margin("thm4_coupling", rc);
            out = {{"verify", petc::io::to_json(r)}, {"coupling_verify", petc::io::to_json(rc)}};
            pass = r.passed() && rc.passed();
        } else {
            throw petc::ConfigurationError("artifact kind must be \"state\" or \"output\"");
        }
        if (art.contains("verify")) {
            const double recorded = art.at("verify").at("margin").get<double>();
            std::cout << "recorded margin " << num(recorded, 17) << ", recomputed "
                      << num(out["verify"]["margin"].get<double>(), 17) << '\n';
        }
        out["copies_agree"] = agree;
        pass = pass && agree;
    }
    emit(c, "verify.json", petc::io::dump(out));
    std::cout << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------- example

struct ExampleArgs {
    std::string name;
    bool table1 = false;
    bool table2 = false;
    int runs = 100;
    SimArgs sim;
};

bool increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) return false;
    }
    return true;
}

int cmd_example(const ExampleArgs& a, const Common& c) {
    builtin_name(Json(a.name));
    if (a.table1) {
        if (a.name != "example1") {
            throw petc::ConfigurationError("--table1 belongs to example1");
        }
        const auto ex = petc::builtins::example1();
        const auto rows =
            petc::sim::monte_carlo(petc::builtins::example1_scenario(), ex.table_h, a.runs, c.seed);
        print_rows(rows, false);
        std::vector<double> f;
        std::cout << "published  ";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            f.push_back(rows[i].f_avg);
            std::cout << num(100 * ex.table_f[i], 4) << ' ';
        }
        std::cout << "\nincreasing " << (increasing(f) ? "yes" : "no") << '\n';
        emit(c, "stats.json", petc::io::dump(stats_json(rows, false)));
        return all_computed(rows) && increasing(f) ? 0 : 1;
    }
    if (a.table2) {
        if (a.name != "example2-output") {
            throw petc::ConfigurationError("--table2 belongs to example2-output");
        }
        const auto ex = petc::builtins::example2_output();
        const auto rows = petc::sim::monte_carlo(petc::builtins::example2_output_scenario(),
                                                 ex.table_h, a.runs, c.seed);
        print_rows(rows, true);
        std::vector<double> fy;
        std::vector<double> fu;
        std::cout << "published  ";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            fy.push_back(rows[i].f_avg_y);
            fu.push_back(rows[i].f_avg_u);
            std::cout << num(100 * ex.table_fy[i], 4) << '/' << num(100 * ex.table_fu[i], 4) << ' ';
        }
        const bool inc = increasing(fy) && increasing(fu);
        std::cout << "\nincreasing " << (inc ? "yes" : "no") << '\n';
        emit(c, "stats.json", petc::io::dump(stats_json(rows, true)));
        return all_computed(rows) && inc ? 0 : 1;
    }
    return run_simulation(loop_from_builtin(a.name), Json::object(), a.sim, c);
}

CLI::App* sub_of(CLI::App& app, const std::string& name, const std::string& desc) {
    auto* sub = app.add_subcommand(name, desc);
    sub->set_help_flag("--help", "print help");
    return sub;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic event-triggered control design and simulation"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    Common common;

    TimingArgs ta;
    auto* timing = sub_of(app, "timing", "sampling bound and timing parameters");
    timing->add_option("--mu", ta.mu)->required();
    timing->add_option("--gamma", ta.gamma)->required();
    timing->add_option("--alpha", ta.alpha)->required();
    timing->add_option("--h", ta.h);
    timing->add_option("--s", ta.s);
    timing->add_option("--alpha0", ta.alpha0);
    timing->add_option("--d", ta.d);
    timing->add_option("--lambda", ta.lambda, "use this lambda instead of inverting h");
    add_common(timing, common);

    DesignArgs da;
    auto* dstate = sub_of(app, "design-state", "state-feedback design pipeline");
    auto* doutput = sub_of(app, "design-output", "observer-based output-feedback design");
    for (auto* sub : {dstate, doutput}) {
        sub->add_option("--alpha", da.alpha);
        sub->add_option("--h", da.h);
        sub->add_option("--s", da.s);
        sub->add_option("--alpha0", da.alpha0);
        sub->add_option("--max-iter", da.max_iter);
        add_common(sub, common);
    }

    SimArgs sa;
    auto* simulate = sub_of(app, "simulate", "simulate one closed-loop trajectory");
    simulate->add_option("--h", sa.h);
    simulate->add_option("--t-end", sa.t_end);
    simulate->add_option("--w-bound", sa.w_bound);
    simulate->add_flag("--svg", sa.svg, "also write plot.svg");
    add_common(simulate, common);

    McArgs ma;
    auto* mc = sub_of(app, "montecarlo", "triggering-frequency statistics");
    mc->add_option("--h", ma.h, "sampling periods");
    mc->add_option("--runs", ma.runs);
    mc->add_option("--threads", ma.threads);
    add_common(mc, common);

    VerifyArgs va;
    auto* verify = sub_of(app, "verify-lmi", "re-verify a stored or published certificate");
    verify->add_option("--artifact", va.artifact)->check(CLI::ExistingFile);
    verify->add_option("--paper", va.paper, "builtin with a published certificate");
    verify->add_option("--rel-tol", va.rel_tol);
    add_common(verify, common);

    ExampleArgs ea;
    auto* example = sub_of(app, "example", "run a bundled example");
    example->add_option("--name", ea.name)->required();
    example->add_flag("--table1", ea.table1);
    example->add_flag("--table2", ea.table2);
    example->add_option("--runs", ea.runs);
    example->add_option("--h", ea.sim.h);
    example->add_option("--t-end", ea.sim.t_end);
    example->add_option("--w-bound", ea.sim.w_bound);
    example->add_flag("--svg", ea.sim.svg);
    add_common(example, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*timing) return cmd_timing(ta, common);
        if (*dstate) return cmd_design_state(da, common);
        if (*doutput) return cmd_design_output(da, common);
        if (*simulate) return cmd_simulate(sa, common);
        if (*mc) return cmd_montecarlo(ma, common);
        if (*verify) return cmd_verify(va, common);
        if (*example) return cmd_example(ea, common);
    } catch (const petc::ConfigurationError& e) {
        log(Level::Error, e.what());
        return 2;
    } catch (const petc::DomainError& e) {
        log(Level::Error, e.what());
        return 2;
    } catch (const petc::AssemblyError& e) {
        log(Level::Error, e.what());
        return 2;
    } catch (const Json::exception& e) {
        log(Level::Error, std::string("malformed configuration: ") + e.what());
        return 2;
    } catch (const petc::Error& e) {
        log(Level::Error, e.what());
        return 1;
    } catch (const std::exception& e) {
        log(Level::Error, e.what());
        return 1;
    }
    return 2;
}
