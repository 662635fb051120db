#pragma once

// End-to-end design pipelines: LMI solve, timing-parameter selection and the
// resulting triggering functions.

#include <optional>

#include "petc/lmi.hpp"
#include "petc/systems.hpp"
#include "petc/timing.hpp"

namespace petc::design {

struct StateDesign {
    systems::StateFeedbackGains gains;
    bool synthesized = false; // gains came from the gain-synthesis LMI
    std::string lmi;          // "thm3" or "cor1"
    lmi::Assignment assignment;
    lmi::MarginReport margin;
    Matrix P;
    double mu = 0.0;
    double gamma = 0.0;
    double d = 0.0;
    timing::TimingDesign timing;
    double coef = 0.0;
};

/// Runs the gain-synthesis LMI when `gains` is empty, then the sampled-data
/// condition (the linear reduction when E = 0), then selects (α₀, h, λ, s).
/// Throws InfeasibleDesignError when an LMI stage runs out of budget.
[[nodiscard]] StateDesign design_state(const systems::IqcPlant& plant,
                                       const std::optional<systems::StateFeedbackGains>& gains,
                                       double alpha, timing::ParameterHints hints = {},
                                       const lmi::SolverOptions& opts = {});

struct OutputDesign {
    systems::ObserverDesign observer;
    std::string lmi; // "thm4" or "cor2"
    lmi::Assignment assignment;
    lmi::MarginReport margin;
    lmi::Assignment coupling;
    lmi::MarginReport coupling_margin;
    Matrix P;
    Matrix P1;
    Matrix P2;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double gamma1 = 0.0; // √(a₁b₁)
    double gamma2 = 0.0; // √(a₂b₂)
    double c1 = 0.0;     // √(a₁/b₁)
    double c2 = 0.0;     // √(a₂/b₂)
    double d = 0.0;
    timing::OutputTimingDesign timing;
    double coef_y = 0.0;
    double coef_u = 0.0;
};

/// Stage 1 solves the observer-based condition, stage 2 the coupling LMI for
/// P₁, P₂ at the resulting c₁, c₂; then both channels share one period.
[[nodiscard]] OutputDesign design_output(const systems::IqcPlant& plant,
                                         const systems::ObserverDesign& observer, double alpha,
                                         timing::ParameterHints hints = {},
                                         const lmi::SolverOptions& opts = {});

} // namespace petc::design
