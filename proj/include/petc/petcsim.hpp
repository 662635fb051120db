#pragma once

// Periodic event-triggered closed loops: triggering functions, impulsive
// simulation on the sampling grid t_k = kh, Lyapunov monitoring and
// Monte-Carlo triggering-frequency statistics.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "petc/error.hpp"
#include "petc/systems.hpp"
#include "petc/timing.hpp"

namespace petc::sim {

/// Γ(z, err) = coef·‖err‖² - s·V(z), with V either a map or zᵀPz.
class TriggeringFunction {
public:
    using Map = std::function<double(const Vector&)>;

    TriggeringFunction() = default;
    static TriggeringFunction from_map(double coef, double s, Map v);
    /// Throws DomainError unless P is symmetric positive definite.
    static TriggeringFunction from_matrix(double coef, double s, const Matrix& P);

    [[nodiscard]] double coef() const { return coef_; }
    [[nodiscard]] double s() const { return s_; }
    [[nodiscard]] double quad(const Vector& z) const;
    [[nodiscard]] double operator()(const Vector& z, const Vector& err) const;

private:
    double coef_ = 0.0;
    double s_ = 0.0;
    Map map_;
    std::optional<Matrix> P_;
};

[[nodiscard]] double gamma_state(const Vector& x, const Vector& e, const TriggeringFunction& tf);
[[nodiscard]] double gamma_output(const Vector& y, const Vector& y_e,
                                  const TriggeringFunction& tf);
[[nodiscard]] double gamma_input(const Vector& xhat, const Vector& x_e,
                                 const TriggeringFunction& tf);

struct SimConfig {
    double h = 0.0;
    double t_end = 10.0;
    int substeps = 64;
    std::uint64_t seed = 0;
    double w_bound = 0.0; // w uniform in [-w_bound, w_bound] per channel and interval
    Vector x0;
    Vector xhat0;
    bool record_dense = true;

    /// Throws DomainError unless h > 0, t_end ≥ h and substeps ≥ 1.
    void validate() const;
    [[nodiscard]] int n_intervals() const;
};

/// One point of the dense grid. Held signals are x̃ (state case) or (y_c, x̂_c).
struct Sample {
    double t = 0.0;
    int interval = 0; // sampling interval (t_k, t_{k+1}] the sample belongs to
    Vector x;
    Vector xhat;
    Vector held;
    Vector u;
    Vector w;
    double V = 0.0;
    Vector phi;
};

struct Event {
    int k = 0;
    double t = 0.0;
    std::vector<double> gamma;
    std::vector<bool> fired;
    double V_minus = 0.0;
    double V_plus = 0.0;
};

struct SimTrace {
    std::vector<std::string> channels; // {"x"} or {"y", "u"}
    double h = 0.0;
    std::vector<Sample> samples;
    std::vector<Event> events; // k = 0..N
    bool has_V = true;

    /// Fires over the instants k = 1..N (the forced fire at t₀ is excluded).
    [[nodiscard]] double frequency(std::size_t channel = 0) const;
    [[nodiscard]] int fire_count(std::size_t channel = 0) const;
    [[nodiscard]] std::vector<double> fire_times(std::size_t channel = 0) const;
};

/// Raised when the state becomes non-finite; carries the trace up to that point.
class DivergedError : public SimulationDivergedError {
public:
    DivergedError(const std::string& what, SimTrace partial)
        : SimulationDivergedError(what), trace_(std::move(partial)) {}
    [[nodiscard]] const SimTrace& trace() const { return trace_; }

private:
    SimTrace trace_;
};

/// State-feedback PETC: Γₓ(x(t_k), e(t_k)) ≥ 0 refreshes x̃ ← x(t_k) (except
/// when e = 0, where refreshing changes nothing); u = k(x̃) on (t_k, t_{k+1}].
/// V = V₁(x) + φ‖e‖² uses tf.quad as V₁ and the φ-clock reset to λ⁻¹ at every t_k.
[[nodiscard]] SimTrace run_state_feedback(const systems::GeneralPlant& plant,
                                          const TriggeringFunction& tf,
                                          const timing::TimingDesign& design,
                                          const SimConfig& cfg);

/// ξᵀPξ part of the output-feedback Lyapunov function, if known.
struct OutputLyapunov {
    Matrix P; // 2nx × 2nx, acting on ξ = (x, x - x̂)
};

/// Observer-based output feedback with independent ETMs on y and on x̂.
[[nodiscard]] SimTrace run_output_feedback(const systems::IqcPlant& plant,
                                           const systems::ObserverDesign& design,
                                           const TriggeringFunction& tf_y,
                                           const TriggeringFunction& tf_u,
                                           const timing::OutputTimingDesign& timing,
                                           const SimConfig& cfg,
                                           const std::optional<OutputLyapunov>& lyap = {});

struct MonitorParams {
    double s = 0.0;
    double alpha = 0.0;
    double alpha0 = 0.0;
    double d = 0.0;
    double tol_jump_rel = 1e-9; // V⁺ ≤ (1+s)V⁻ + tol·V⁻
    double tol_flow_rel = 0.05; // slope of log V ≤ -α₀ + tol·α₀
};

[[nodiscard]] MonitorParams monitor_params(const timing::TimingDesign& design);
[[nodiscard]] MonitorParams monitor_params(const timing::OutputTimingDesign& design);

struct LyapunovReport {
    int jump_checks = 0;
    int jump_violations = 0;
    double worst_jump_excess = 0.0; // max of V⁺ - (1+s)V⁻ over violations, relative to V⁻
    int flow_checks = 0;
    int flow_violations = 0;
    double worst_flow_excess = 0.0; // max of slope + α₀ over violations

    [[nodiscard]] bool ok() const { return jump_violations == 0 && flow_violations == 0; }
};

[[nodiscard]] LyapunovReport monitor_lyapunov(const SimTrace& trace, const MonitorParams& params);

/// A batch study: the timing rates and slack stay fixed while λ and the
/// trigger coefficient are recomputed for every sampling period.
struct Scenario {
    enum class Kind { State, Output };
    std::string name;
    Kind kind = Kind::State;

    // State case.
    systems::GeneralPlant plant; // V1 is the Lyapunov part of Γₓ
    timing::TimingBase base;

    // Output case.
    systems::IqcPlant iqc_plant;
    systems::ObserverDesign observer;
    timing::TimingBase base_y;
    timing::TimingBase base_u;
    Matrix P1;
    Matrix P2;

    double s = 0.0;
    double alpha = 0.0;
    double alpha0 = 0.0;
    double d = 0.0;
    double box = 0.5; // initial states uniform in [-box, box]
    double w_bound = 0.0;
    double t_end = 10.0;
    int substeps = 16;
};

struct StatsRow {
    double h = 0.0;
    double f_avg = 0.0;   // state case
    double f_avg_y = 0.0; // output case
    double f_avg_u = 0.0;
    int n_runs = 0;
    std::uint64_t seed = 0;
    bool certified = false; // every timing condition holds at this h
    std::string error;      // set when the row could not be computed
};

/// Run i uses seed + i. `threads` = 0 picks the hardware concurrency.
[[nodiscard]] std::vector<StatsRow> monte_carlo(const Scenario& scenario,
                                                const std::vector<double>& h_list, int n_runs,
                                                std::uint64_t seed, unsigned threads = 0);

void write_trace_csv(std::ostream& os, const SimTrace& trace);
void write_events_csv(std::ostream& os, const SimTrace& trace);

} // namespace petc::sim
