#include "petc/timing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "petc/error.hpp"

namespace petc::timing {

namespace {

// Below this relative gap between γ and μ the γ = μ branch is used; r would
// otherwise lose most of its significant digits.
constexpr double kBranchGap = 1e-9;

bool near_equal_rates(const TimingBase& base) {
    return std::abs(base.gamma / base.mu - 1.0) < kBranchGap;
}

double ratio_root(const TimingBase& base) {
    const double g = base.gamma / base.mu;
    return std::sqrt(std::abs(g * g - 1.0));
}

} // namespace

void TimingBase::validate() const {
    if (!(mu > 0.0) || !(gamma > 0.0) || !std::isfinite(mu) || !std::isfinite(gamma)) {
        std::ostringstream os;
        os << "timing rates must be positive and finite (mu=" << mu << ", gamma=" << gamma << ")";
        throw DomainError(os.str());
    }
}

double phi_rate(double phi, const TimingBase& base) {
    return -2.0 * base.mu * phi - base.gamma * (phi * phi + 1.0);
}

double integrate_phi(const TimingBase& base, double lambda, double tau, int steps) {
    base.validate();
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw DomainError("integrate_phi: lambda must lie in (0,1)");
    }
    if (steps < 1) {
        throw DomainError("integrate_phi: steps must be positive");
    }
    const double horizon = inter_sample_time(base, lambda);
    if (!(tau >= 0.0) || tau > horizon * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "integrate_phi: tau=" << tau << " outside [0, " << horizon << "]";
        throw DomainError(os.str());
    }
    double phi = 1.0 / lambda;
    if (tau == 0.0) {
        return phi;
    }
    const double dt = tau / steps;
    for (int i = 0; i < steps; ++i) {
        const double k1 = phi_rate(phi, base);
        const double k2 = phi_rate(phi + 0.5 * dt * k1, base);
        const double k3 = phi_rate(phi + 0.5 * dt * k2, base);
        const double k4 = phi_rate(phi + dt * k3, base);
        phi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return phi;
}

double max_sampling_period(const TimingBase& base) {
    base.validate();
    if (near_equal_rates(base)) {
        return 1.0 / base.mu;
    }
    const double r = ratio_root(base);
    if (base.gamma > base.mu) {
        return std::atan(r) / (base.mu * r);
    }
    return std::atanh(r) / (base.mu * r);
}

double inter_sample_time(const TimingBase& base, double lambda) {
    base.validate();
    if (!(lambda >= 0.0 && lambda < 1.0)) {
        throw DomainError("inter_sample_time: lambda must lie in [0,1)");
    }
    if (near_equal_rates(base)) {
        return (1.0 - lambda) / ((1.0 + lambda) * base.mu);
    }
    const double g = base.gamma / base.mu;
    const double r = ratio_root(base);
    const double den = 2.0 * lambda / (1.0 + lambda) * (g - 1.0) + 1.0 + lambda;
    const double arg = r * (1.0 - lambda) / den;
    if (base.gamma > base.mu) {
        return std::atan(arg) / (base.mu * r);
    }
    if (!(std::abs(arg) < 1.0)) {
        std::ostringstream os;
        os << "inter_sample_time: arctanh argument " << arg << " outside (-1,1)";
        throw DomainError(os.str());
    }
    return std::atanh(arg) / (base.mu * r);
}

double inversion_tolerance(double h) {
    return 1e-10 * std::max(1.0, h);
}

double solve_lambda(const TimingBase& base, double h) {
    base.validate();
    if (!(h > 0.0)) {
        throw DomainError("solve_lambda: sampling period must be positive");
    }
    const double upper = max_sampling_period(base);
    if (h >= upper) {
        std::ostringstream os;
        os << "sampling period h=" << h << " is not below T(mu,gamma)=" << upper;
        throw InfeasiblePeriodError(os.str());
    }
    // T̃ is strictly decreasing in λ with T̃(0) = T > h > 0 = T̃(1).
    double lo = 0.0;
    double hi = 1.0;
    const double tol = inversion_tolerance(h);
    double mid = 0.5;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double t = inter_sample_time(base, mid);
        if (std::abs(t - h) <= tol) {
            break;
        }
        if (t > h) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

double trigger_coefficient(double lambda, double s) {
    if (!(lambda > 0.0 && lambda < 1.0) || !(s > 0.0)) {
        throw DomainError("trigger_coefficient: need 0 < lambda < 1 and s > 0");
    }
    if ((1.0 + s) * lambda * lambda >= 1.0) {
        std::ostringstream os;
        os << "(1+s)*lambda^2 = " << (1.0 + s) * lambda * lambda << " is not below 1";
        throw ConstraintViolationError(os.str());
    }
    return 1.0 / lambda - (1.0 + s) * lambda;
}

std::string ConstraintReport::describe() const {
    std::ostringstream os;
    os << "log(1+s)/alpha0=" << lower_bound << " < h < " << upper_bound << ": "
       << (period_window ? "ok" : "violated") << "; h=T~(lambda) residual " << max_lambda_residual
       << ": " << (lambda_matches ? "ok" : "violated")
       << "; (1+s)lambda^2<1: " << (jump_contraction ? "ok" : "violated")
       << "; 0<alpha0<alpha: " << (rates_ordered ? "ok" : "violated");
    return os.str();
}

namespace {

double lambda_residual(const TimingBase& base, double lambda, double h) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        return INFINITY;
    }
    try {
        return std::abs(inter_sample_time(base, lambda) - h);
    } catch (const DomainError&) {
        return INFINITY;
    }
}

} // namespace

ConstraintReport check_design(const TimingDesign& design, double lambda_tolerance) {
    design.base.validate();
    const double tol = lambda_tolerance < 0.0 ? inversion_tolerance(design.h) : lambda_tolerance;
    ConstraintReport rep;
    rep.rates_ordered = design.alpha0 > 0.0 && design.alpha0 < design.alpha && design.s > 0.0 &&
                        design.d > 0.0;
    rep.lower_bound = design.alpha0 > 0.0 ? std::log1p(design.s) / design.alpha0 : INFINITY;
    rep.upper_bound = max_sampling_period(design.base);
    rep.period_window = rep.lower_bound < design.h && design.h < rep.upper_bound;
    rep.max_lambda_residual = lambda_residual(design.base, design.lambda, design.h);
    rep.lambda_matches = rep.max_lambda_residual <= tol;
    rep.jump_contraction = (1.0 + design.s) * design.lambda * design.lambda < 1.0;
    return rep;
}

ConstraintReport check_design(const OutputTimingDesign& design, double lambda_tolerance) {
    design.channel_y.base.validate();
    design.channel_u.base.validate();
    const double tol = lambda_tolerance < 0.0 ? inversion_tolerance(design.h) : lambda_tolerance;
    ConstraintReport rep;
    rep.rates_ordered = design.alpha0 > 0.0 && design.alpha0 < design.alpha && design.s > 0.0 &&
                        design.d > 0.0 && design.c1 > 0.0 && design.c2 > 0.0;
    rep.lower_bound = design.alpha0 > 0.0 ? std::log1p(design.s) / design.alpha0 : INFINITY;
    rep.upper_bound = std::min(max_sampling_period(design.channel_y.base),
                               max_sampling_period(design.channel_u.base));
    rep.period_window = rep.lower_bound < design.h && design.h < rep.upper_bound;
    rep.max_lambda_residual =
        std::max(lambda_residual(design.channel_y.base, design.channel_y.lambda, design.h),
                 lambda_residual(design.channel_u.base, design.channel_u.lambda, design.h));
    rep.lambda_matches = rep.max_lambda_residual <= tol;
    const double ly = design.channel_y.lambda;
    const double lu = design.channel_u.lambda;
    rep.jump_contraction =
        (1.0 + design.s) * ly * ly < 1.0 && (1.0 + design.s) * lu * lu < 1.0;
    return rep;
}

namespace {

double pick_period(double upper, const ParameterHints& hints) {
    if (!hints.h) {
        return 0.5 * upper;
    }
    const double h = *hints.h;
    if (!(h > 0.0) || h >= upper) {
        std::ostringstream os;
        os << "no admissible parameters: h=" << h << " must lie in (0, " << upper
           << "); choose a smaller h";
        throw SelectionError(os.str());
    }
    return h;
}

double pick_alpha0(double alpha, const ParameterHints& hints) {
    if (!(alpha > 0.0)) {
        throw DomainError("alpha must be positive");
    }
    return hints.alpha0.value_or(0.9 * alpha);
}

} // namespace

TimingDesign select_parameters(const TimingBase& base, double alpha, const ParameterHints& hints) {
    base.validate();
    TimingDesign design;
    design.base = base;
    design.alpha = alpha;
    design.alpha0 = pick_alpha0(alpha, hints);
    design.d = hints.d;
    design.h = pick_period(max_sampling_period(base), hints);
    design.lambda = solve_lambda(base, design.h);
    const double s_window = std::expm1(design.alpha0 * design.h);
    const double s_jump = 1.0 / (design.lambda * design.lambda) - 1.0;
    design.s = hints.s.value_or(0.9 * std::min(s_window, s_jump));

    const auto report = check_design(design);
    if (!report.ok()) {
        throw SelectionError("selected parameters violate the timing conditions (" +
                             report.describe() + "); choose a smaller h or s");
    }
    return design;
}

OutputTimingDesign select_output_parameters(const TimingBase& channel_y,
                                            const TimingBase& channel_u, double alpha, double c1,
                                            double c2, const ParameterHints& hints) {
    channel_y.validate();
    channel_u.validate();
    OutputTimingDesign design;
    design.channel_y.base = channel_y;
    design.channel_u.base = channel_u;
    design.alpha = alpha;
    design.alpha0 = pick_alpha0(alpha, hints);
    design.d = hints.d;
    design.c1 = c1;
    design.c2 = c2;
    design.h = pick_period(
        std::min(max_sampling_period(channel_y), max_sampling_period(channel_u)), hints);
    design.channel_y.lambda = solve_lambda(channel_y, design.h);
    design.channel_u.lambda = solve_lambda(channel_u, design.h);
    const double lmax = std::max(design.channel_y.lambda, design.channel_u.lambda);
    const double s_window = std::expm1(design.alpha0 * design.h);
    const double s_jump = 1.0 / (lmax * lmax) - 1.0;
    design.s = hints.s.value_or(0.9 * std::min(s_window, s_jump));

    const auto report = check_design(design);
    if (!report.ok()) {
        throw SelectionError("selected parameters violate the timing conditions (" +
                             report.describe() + "); choose a smaller h or s");
    }
    return design;
}

} // namespace petc::timing
