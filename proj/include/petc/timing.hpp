#pragma once

// Inter-sample timing for periodic event-triggered control.
//
// The sampling-error weight φ obeys  φ' = -2μφ - γ(φ² + 1),  φ(0) = 1/λ.
// T̃(μ,γ,λ) is the exact time for φ to decay from 1/λ to λ and
// T(μ,γ) = T̃(μ,γ,0) bounds every admissible sampling period.

#include <optional>
#include <string>

namespace petc::timing {

struct TimingBase {
    double mu = 0.0;    // decay rate, 1/time
    double gamma = 0.0; // coupling rate, 1/time

    /// Throws DomainError unless mu > 0 and gamma > 0.
    void validate() const;
};

struct TimingDesign {
    TimingBase base;
    double lambda = 0.0; // contraction factor in (0,1)
    double h = 0.0;      // sampling period
    double s = 0.0;      // jump slack
    double alpha = 0.0;  // certified flow decay rate
    double alpha0 = 0.0; // working decay rate, 0 < alpha0 < alpha
    double d = 0.0;      // disturbance gain
};

/// One timing channel (μᵢ, γᵢ, λᵢ) of the output-feedback design.
struct ChannelTiming {
    TimingBase base;
    double lambda = 0.0;
};

struct OutputTimingDesign {
    ChannelTiming channel_y;
    ChannelTiming channel_u;
    double h = 0.0;
    double s = 0.0;
    double alpha = 0.0;
    double alpha0 = 0.0;
    double d = 0.0;
    double c1 = 1.0;
    double c2 = 1.0;
};

/// Outcome of checking the three timing conditions individually.
struct ConstraintReport {
    bool period_window = false;  // log(1+s)/α₀ < h < T (or min over channels)
    bool lambda_matches = false; // |T̃(μ,γ,λ) - h| ≤ tolerance, every channel
    bool jump_contraction = false; // (1+s)λ² < 1, every channel
    bool rates_ordered = false;  // 0 < α₀ < α, s > 0, d > 0
    double lower_bound = 0.0;    // log(1+s)/α₀
    double upper_bound = 0.0;    // T(μ,γ), or the channel minimum
    double max_lambda_residual = 0.0;

    [[nodiscard]] bool ok() const {
        return period_window && lambda_matches && jump_contraction && rates_ordered;
    }
    [[nodiscard]] std::string describe() const;
};

/// Right-hand side of the φ-clock ODE.
[[nodiscard]] double phi_rate(double phi, const TimingBase& base);

/// Fixed-step RK4 integration of the φ-clock from 1/λ over [0, tau].
/// Throws DomainError when tau is outside [0, T̃(μ,γ,λ)] or λ ∉ (0,1).
[[nodiscard]] double integrate_phi(const TimingBase& base, double lambda, double tau,
                                   int steps = 256);

/// T(μ,γ): the maximum admissible sampling period.
[[nodiscard]] double max_sampling_period(const TimingBase& base);

/// T̃(μ,γ,λ). Throws DomainError for λ ∉ [0,1) or an out-of-range arctanh argument.
[[nodiscard]] double inter_sample_time(const TimingBase& base, double lambda);

/// Inverts h = T̃(μ,γ,λ) for λ by bisection.
/// Throws InfeasiblePeriodError when h ≥ T(μ,γ) and DomainError when h ≤ 0.
[[nodiscard]] double solve_lambda(const TimingBase& base, double h);

/// λ⁻¹ - (1+s)λ, the error weight of the triggering function.
/// Throws ConstraintViolationError when (1+s)λ² ≥ 1.
[[nodiscard]] double trigger_coefficient(double lambda, double s);

struct ParameterHints {
    std::optional<double> h;
    std::optional<double> s;
    std::optional<double> alpha0;
    double d = 1.0;
};

/// Picks (α₀, h, λ, s) for a state-feedback design.
///
/// Defaults: α₀ = 0.9α, h = T(μ,γ)/2, λ = solve_lambda(h) and
/// s = 0.9·min(exp(α₀h) - 1, λ⁻² - 1). Any hinted value overrides its default.
/// Throws SelectionError when the resulting tuple violates a timing condition.
[[nodiscard]] TimingDesign select_parameters(const TimingBase& base, double alpha,
                                             const ParameterHints& hints = {});

/// Two-channel counterpart of select_parameters with a shared period.
/// The default period is half the smaller channel bound.
[[nodiscard]] OutputTimingDesign select_output_parameters(const TimingBase& channel_y,
                                                          const TimingBase& channel_u,
                                                          double alpha, double c1, double c2,
                                                          const ParameterHints& hints = {});

/// Checks the timing conditions of a state-feedback design. `lambda_tolerance`
/// bounds |T̃(μ,γ,λ) - h|; pass a loose value for rounded published tuples.
[[nodiscard]] ConstraintReport check_design(const TimingDesign& design,
                                            double lambda_tolerance = -1.0);

[[nodiscard]] ConstraintReport check_design(const OutputTimingDesign& design,
                                            double lambda_tolerance = -1.0);

/// Default inversion tolerance 1e-10·max(1,h).
[[nodiscard]] double inversion_tolerance(double h);

} // namespace petc::timing
