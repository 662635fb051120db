#include "petc/design.hpp"

#include <cmath>

#include "petc/error.hpp"

namespace petc::design {

namespace {

lmi::FeasibilityResult solve_or_throw(const lmi::LmiInstance& inst,
                                      const lmi::SolverOptions& opts) {
    auto res = lmi::solve_feasibility(inst, opts);
    if (res.status != lmi::Status::Feasible) {
        throw InfeasibleDesignError(inst.name() + ": " + lmi::to_string(res.status) + " after " +
                                    std::to_string(res.iterations) + " iterations (" +
                                    res.message + ")");
    }
    return res;
}

} // namespace

StateDesign design_state(const systems::IqcPlant& plant,
                         const std::optional<systems::StateFeedbackGains>& gains, double alpha,
                         timing::ParameterHints hints, const lmi::SolverOptions& opts) {
    plant.validate();
    StateDesign out;
    if (gains) {
        out.gains = *gains;
    } else {
        const auto syn = solve_or_throw(lmi::build_lemma3(plant, alpha), opts);
        out.gains.K1 = systems::recover_state_gain(syn.assignment.at("P1"), syn.assignment.at("P2"));
        out.gains.K2 = syn.assignment.at("K2");
        out.synthesized = true;
    }
    systems::validate_gains(plant, out.gains);

    const auto inst = plant.is_linear() ? lmi::build_cor1(plant, out.gains.K1, alpha)
                                        : lmi::build_thm3(plant, out.gains, alpha);
    const auto res = solve_or_throw(inst, opts);
    out.lmi = inst.name();
    out.assignment = res.assignment;
    out.margin = lmi::verify(inst, res.assignment);
    out.P = res.assignment.at("P");
    out.mu = lmi::scalar_of(res.assignment, "mu");
    out.gamma = lmi::scalar_of(res.assignment, "gamma");
    out.d = lmi::scalar_of(res.assignment, "d");

    hints.d = out.d;
    out.timing = timing::select_parameters({out.mu, out.gamma}, alpha, hints);
    out.coef = timing::trigger_coefficient(out.timing.lambda, out.timing.s);
    return out;
}

OutputDesign design_output(const systems::IqcPlant& plant, const systems::ObserverDesign& observer,
                           double alpha, timing::ParameterHints hints,
                           const lmi::SolverOptions& opts) {
    plant.validate();
    systems::validate_observer(plant, observer);
    OutputDesign out;
    out.observer = observer;

    const auto inst = plant.is_linear()
                          ? lmi::build_cor2(plant, observer.gains.K1, observer.L2, alpha)
                          : lmi::build_thm4(plant, observer, alpha);
    const auto res = solve_or_throw(inst, opts);
    out.lmi = inst.name();
    out.assignment = res.assignment;
    out.margin = lmi::verify(inst, res.assignment);
    out.P = res.assignment.at("P");
    const auto sc = [&res](const char* n) { return lmi::scalar_of(res.assignment, n); };
    out.mu1 = sc("mu1");
    out.mu2 = sc("mu2");
    out.gamma1 = std::sqrt(sc("a1") * sc("b1"));
    out.gamma2 = std::sqrt(sc("a2") * sc("b2"));
    out.c1 = std::sqrt(sc("a1") / sc("b1"));
    out.c2 = std::sqrt(sc("a2") / sc("b2"));
    out.d = sc("d");

    const auto coupling = lmi::build_thm4_coupling(out.P, *plant.C, out.c1, out.c2);
    const auto cres = solve_or_throw(coupling, opts);
    out.coupling = cres.assignment;
    out.coupling_margin = lmi::verify(coupling, cres.assignment);
    out.P1 = cres.assignment.at("P1");
    out.P2 = cres.assignment.at("P2");

    hints.d = out.d;
    out.timing = timing::select_output_parameters({out.mu1, out.gamma1}, {out.mu2, out.gamma2},
                                                  alpha, out.c1, out.c2, hints);
    out.coef_y = timing::trigger_coefficient(out.timing.channel_y.lambda, out.timing.s);
    out.coef_u = timing::trigger_coefficient(out.timing.channel_u.lambda, out.timing.s);
    return out;
}

} // namespace petc::design
