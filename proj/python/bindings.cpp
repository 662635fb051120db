#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "petc/builtins.hpp"
#include "petc/design.hpp"
#include "petc/error.hpp"
#include "petc/io.hpp"
#include "petc/lmi.hpp"
#include "petc/petcsim.hpp"
#include "petc/timing.hpp"

namespace py = pybind11;
using namespace petc;
using io::Json;

namespace {

// Structured results cross the boundary as JSON text; the Python package
// decodes them into dicts.
std::string text(const Json& j) { return j.dump(); }

Json parse(const std::string& s) {
    try {
        return Json::parse(s);
    } catch (const Json::exception& e) {
        throw ConfigurationError(std::string("invalid JSON: ") + e.what());
    }
}

timing::ParameterHints hints(std::optional<double> h, std::optional<double> s,
                             std::optional<double> alpha0, double d) {
    timing::ParameterHints p;
    p.h = h;
    p.s = s;
    p.alpha0 = alpha0;
    p.d = d;
    return p;
}

std::string design_state_json(const std::string& plant_json, const std::optional<std::string>& gains_json,
                              double alpha, std::optional<double> h, std::optional<double> s,
                              std::optional<double> alpha0, int max_iter) {
    systems::IqcPlant plant;
    std::optional<systems::StateFeedbackGains> gains;
    if (plant_json == "example2") {
        const auto ex = builtins::example2_state();
        plant = ex.plant;
        if (gains_json && *gains_json == "builtin") gains = ex.gains;
    } else {
        plant = io::plant_from_json(parse(plant_json));
    }
    if (gains_json && *gains_json != "builtin") gains = io::gains_from_json(parse(*gains_json));
    lmi::SolverOptions o;
    if (max_iter > 0) o.max_iter = max_iter;
    return text(io::to_json(design::design_state(plant, gains, alpha, hints(h, s, alpha0, 1.0), o)));
}

std::string design_output_json(const std::string& plant_json, const std::string& observer_json,
                               double alpha, std::optional<double> h, std::optional<double> s) {
    systems::IqcPlant plant;
    systems::ObserverDesign obs;
    if (plant_json == "example2") {
        const auto ex = builtins::example2_output();
        plant = ex.plant;
        if (observer_json == "builtin") obs = ex.design;
    } else {
        plant = io::plant_from_json(parse(plant_json));
    }
    if (observer_json != "builtin") obs = io::observer_from_json(parse(observer_json));
    return text(io::to_json(design::design_output(plant, obs, alpha, hints(h, s, std::nullopt, 1.0))));
}

std::string verify_published_example2(double rel_tol) {
    const auto ex = builtins::example2_state();
    const auto inst = lmi::build_thm3(ex.plant, ex.gains, 1.2);
    auto fixed = inst.zero_assignment();
    fixed["P"] = ex.P;
    fixed["mu"] = Matrix::Constant(1, 1, 5.0);
    fixed["gamma"] = Matrix::Constant(1, 1, 20.0);
    fixed["d"] = Matrix::Constant(1, 1, 0.6);
    const auto full = lmi::recover_sigmas(inst, fixed, {"sigma1", "sigma2"});
    Json j = io::to_json(lmi::verify(inst, full, rel_tol));
    j["assignment"] = io::to_json(full);
    return text(j);
}

std::string monte_carlo_json(const std::string& name, const std::vector<double>& h, int runs,
                             std::uint64_t seed, unsigned threads) {
    sim::Scenario sc;
    if (name == "example1") {
        sc = builtins::example1_scenario();
    } else if (name == "example2-output") {
        sc = builtins::example2_output_scenario();
    } else {
        throw ConfigurationError("no frequency study for '" + name + "'");
    }
    std::vector<sim::StatsRow> rows;
    {
        py::gil_scoped_release release;
        rows = sim::monte_carlo(sc, h, runs, seed, threads);
    }
    Json arr = Json::array();
    for (const auto& r : rows) {
        Json j = io::to_json(r);
        if (sc.kind == sim::Scenario::Kind::Output) {
            j["f_avg_y"] = r.f_avg_y;
            j["f_avg_u"] = r.f_avg_u;
        } else {
            j["f_avg"] = r.f_avg;
        }
        arr.push_back(std::move(j));
    }
    return text(arr);
}

py::dict simulate_state(const std::string& name, std::optional<double> h, double t_end,
                        std::optional<double> w_bound, std::uint64_t seed) {
    systems::GeneralPlant plant;
    timing::TimingDesign design;
    Vector x0;
    double w = 0.0;
    std::optional<Matrix> P;
    if (name == "example1") {
        const auto ex = builtins::example1();
        plant = ex.plant;
        design = ex.design;
        x0 = Vector::Constant(1, ex.x0);
        w = ex.w_bound;
    } else if (name == "example2") {
        const auto ex = builtins::example2_state();
        plant = systems::as_general_plant(ex.plant, ex.gains, ex.P);
        design = ex.design;
        x0 = ex.x0;
        w = ex.w_bound;
        P = ex.P;
    } else {
        throw ConfigurationError("no state-feedback loop named '" + name + "'");
    }
    if (h) design.h = *h;
    design.lambda = timing::solve_lambda(design.base, design.h);
    const double coef = timing::trigger_coefficient(design.lambda, design.s);
    const auto tf = P ? sim::TriggeringFunction::from_matrix(coef, design.s, *P)
                      : sim::TriggeringFunction::from_map(coef, design.s, plant.V1);
    sim::SimConfig cfg;
    cfg.h = design.h;
    cfg.t_end = t_end;
    cfg.x0 = x0;
    cfg.w_bound = w_bound ? *w_bound : w;
    cfg.seed = seed;
    sim::SimTrace tr;
    {
        py::gil_scoped_release release;
        tr = sim::run_state_feedback(plant, tf, design, cfg);
    }
    const auto n = static_cast<Eigen::Index>(tr.samples.size());
    Vector t(n);
    Vector V(n);
    Matrix x(n, x0.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        t(i) = tr.samples[i].t;
        V(i) = tr.samples[i].V;
        x.row(i) = tr.samples[i].x.transpose();
    }
    const auto rep = sim::monitor_lyapunov(tr, sim::monitor_params(design));
    py::dict d;
    d["t"] = t;
    d["x"] = x;
    d["V"] = V;
    d["fire_times"] = tr.fire_times(0);
    d["frequency"] = tr.frequency(0);
    d["jump_violations"] = rep.jump_violations;
    d["flow_violations"] = rep.flow_violations;
    return d;
}

} // namespace

PYBIND11_MODULE(_petc, m) {
    m.doc() = "Periodic event-triggered control: timing, LMI certificates and simulation";

    auto base = py::register_exception<Error>(m, "PetcError");
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ConstraintViolationError>(m, "ConstraintViolationError", base.ptr());
    py::register_exception<SelectionError>(m, "SelectionError", base.ptr());
    py::register_exception<ConfigurationError>(m, "ConfigurationError", base.ptr());
    py::register_exception<InfeasibleDesignError>(m, "InfeasibleDesignError", base.ptr());
    py::register_exception<SimulationDivergedError>(m, "SimulationDivergedError", base.ptr());

    m.def("max_sampling_period",
          [](double mu, double gamma) { return timing::max_sampling_period({mu, gamma}); },
          py::arg("mu"), py::arg("gamma"));
    m.def("inter_sample_time",
          [](double mu, double gamma, double lambda) {
              return timing::inter_sample_time({mu, gamma}, lambda);
          },
          py::arg("mu"), py::arg("gamma"), py::arg("lambda_"));
    m.def("solve_lambda",
          [](double mu, double gamma, double h) { return timing::solve_lambda({mu, gamma}, h); },
          py::arg("mu"), py::arg("gamma"), py::arg("h"));
    m.def("integrate_phi",
          [](double mu, double gamma, double lambda, double tau, int steps) {
              return timing::integrate_phi({mu, gamma}, lambda, tau, steps);
          },
          py::arg("mu"), py::arg("gamma"), py::arg("lambda_"), py::arg("tau"),
          py::arg("steps") = 2048);
    m.def("trigger_coefficient", &timing::trigger_coefficient, py::arg("lambda_"), py::arg("s"));
    m.def("_select_parameters",
          [](double mu, double gamma, double alpha, std::optional<double> h, std::optional<double> s,
             std::optional<double> alpha0, double d) {
              return text(io::to_json(
                  timing::select_parameters({mu, gamma}, alpha, hints(h, s, alpha0, d))));
          },
          py::arg("mu"), py::arg("gamma"), py::arg("alpha"), py::arg("h") = py::none(),
          py::arg("s") = py::none(), py::arg("alpha0") = py::none(), py::arg("d") = 1.0);
    m.def("_check_design",
          [](const std::string& design_json, double lambda_tolerance) {
              const auto r = timing::check_design(io::timing_design_from_json(parse(design_json)),
                                                  lambda_tolerance);
              return py::make_tuple(r.ok(), r.ok() ? std::string() : r.describe());
          },
          py::arg("design"), py::arg("lambda_tolerance") = -1.0);
    m.def("_design_state", &design_state_json, py::arg("plant"), py::arg("gains") = py::none(),
          py::arg("alpha") = 1.2, py::arg("h") = py::none(), py::arg("s") = py::none(),
          py::arg("alpha0") = py::none(), py::arg("max_iter") = 0);
    m.def("_design_output", &design_output_json, py::arg("plant"), py::arg("observer"),
          py::arg("alpha") = 1.1, py::arg("h") = py::none(), py::arg("s") = py::none());
    m.def("_verify_published_example2", &verify_published_example2, py::arg("rel_tol") = 1e-6);
    m.def("_monte_carlo", &monte_carlo_json, py::arg("name"), py::arg("h"), py::arg("runs") = 100,
          py::arg("seed") = 1, py::arg("threads") = 0);
    m.def("simulate_state", &simulate_state, py::arg("name"), py::arg("h") = py::none(),
          py::arg("t_end") = 10.0, py::arg("w_bound") = py::none(), py::arg("seed") = 1);
    m.def("builtin_names", &builtins::names);
}
