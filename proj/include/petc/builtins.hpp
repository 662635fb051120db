#pragma once

// Bundled example data: a scalar polynomial plant with a fixed Lyapunov part,
// and a pendulum-like second-order plant with a sine nonlinearity under state
// feedback and under observer-based output feedback.

#include <string>
#include <vector>

#include "petc/petcsim.hpp"
#include "petc/systems.hpp"
#include "petc/timing.hpp"

namespace petc::builtins {

/// ẋ = x² - x³ + u + 0.1w,  u = -2x̃.
struct Example1 {
    systems::GeneralPlant plant;
    timing::TimingDesign design; // μ, γ, α, α₀, s, d, h, λ as published
    double published_coef = 0.0;
    double published_T = 0.0;
    double x0 = 0.0;
    double w_bound = 0.0;
    double mc_box = 0.0;     // x(0) uniform in [-mc_box, mc_box]
    double mc_w_bound = 0.0; // disturbance bound of the frequency study
    std::vector<double> table_h;
    std::vector<double> table_f; // published average frequencies, fractions
};

/// V₁(x) = 1.0192x² - 0.1298x³ + 0.4784x⁴.
[[nodiscard]] double example1_v1(double x);
[[nodiscard]] Example1 example1();

/// ẋ₁ = x₂, ẋ₂ = -sin x₁ + u + w, y = x₁, with M = diag(1, -1).
[[nodiscard]] systems::IqcPlant example2_plant();

struct Example2State {
    systems::IqcPlant plant;
    systems::StateFeedbackGains gains;
    Matrix P;
    timing::TimingDesign design;
    double published_coef = 0.0;
    Vector x0;
    double w_bound = 0.0;
};

[[nodiscard]] Example2State example2_state();

struct Example2Output {
    systems::IqcPlant plant;
    systems::ObserverDesign design;
    Matrix P1;
    Matrix P2;
    timing::OutputTimingDesign timing; // channel rates reconstructed from the published periods
    double published_coef_y = 0.0;
    double published_coef_u = 0.0;
    double published_T_y = 0.0;
    double published_T_u = 0.0;
    Vector x0;
    Vector xhat0;
    double w_bound = 0.0;
    double mc_box = 0.0;
    std::vector<double> table_h;
    std::vector<double> table_fy;
    std::vector<double> table_fu;
};

[[nodiscard]] Example2Output example2_output();

/// Frequency study of the scalar plant: x(0) uniform in the box, bounded w.
[[nodiscard]] sim::Scenario example1_scenario();

/// Two-channel frequency study of the output-feedback design.
[[nodiscard]] sim::Scenario example2_output_scenario();

/// Names accepted by the command-line tool.
[[nodiscard]] std::vector<std::string> names();

} // namespace petc::builtins
