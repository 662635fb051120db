#pragma once

// Plant, controller and observer models, and the closed-loop matrices of the
// impulsive output-feedback model.
//
// Incrementally quadratic plants:
//   ẋ = Ax + Bu + E p(q) + E_w w,   q = C_q x,   y = Cx.

#include <functional>
#include <optional>
#include <utility>

#include "petc/iqc.hpp"
#include "petc/symmat.hpp"

namespace petc::systems {

struct IqcPlant {
    Matrix A;
    Matrix B;
    Matrix E;
    Matrix Ew;
    Matrix Cq;
    std::optional<Matrix> C;
    iqc::Nonlinearity p;
    iqc::MultiplierMatrix M;

    [[nodiscard]] Eigen::Index nx() const { return A.rows(); }
    [[nodiscard]] Eigen::Index nu() const { return B.cols(); }
    [[nodiscard]] Eigen::Index np() const { return E.cols(); }
    [[nodiscard]] Eigen::Index nw() const { return Ew.cols(); }
    [[nodiscard]] Eigen::Index nq() const { return Cq.rows(); }
    [[nodiscard]] Eigen::Index ny() const { return C ? C->rows() : 0; }

    /// E = 0 (or no nonlinearity channel at all).
    [[nodiscard]] bool is_linear() const { return E.size() == 0 || E.isZero(0.0); }

    /// Throws ConfigurationError on any dimension mismatch.
    void validate() const;

    /// ẋ = Ax + Bu + E p(C_q x) + E_w w.
    [[nodiscard]] Vector flow(const Vector& x, const Vector& u, const Vector& w) const;

    /// A linear plant ẋ = Ax + Bu + E_w w with empty nonlinearity channels.
    static IqcPlant linear(Matrix A, Matrix B, Matrix Ew, std::optional<Matrix> C = std::nullopt);
};

/// A plant given by maps. Every evaluation is checked for finiteness and
/// throws SimulationDivergedError otherwise.
struct GeneralPlant {
    using Flow = std::function<Vector(const Vector& x, const Vector& u, const Vector& w)>;
    using Feedback = std::function<Vector(const Vector& x)>;
    using Scalar = std::function<double(const Vector& x)>;

    Eigen::Index nx = 0;
    Eigen::Index nu = 0;
    Eigen::Index nw = 0;
    Flow f;
    Feedback k;
    Scalar V1; // optional Lyapunov part of the trigger

    void validate() const;
    [[nodiscard]] Vector eval_f(const Vector& x, const Vector& u, const Vector& w) const;
    [[nodiscard]] Vector eval_k(const Vector& x) const;
    [[nodiscard]] double eval_V1(const Vector& x) const;
};

struct StateFeedbackGains {
    Matrix K1; // nu × nx
    Matrix K2; // nu × np
};

struct ObserverDesign {
    Matrix L1; // nq × ny
    Matrix L2; // nx × ny
    StateFeedbackGains gains;
};

/// ξ = (x, ê) with ê = x - x̂ and η = (y_e, x_e):
///   ξ̇ = A1ξ + A2η + H1p + H2δp̌ + H3δp̂ + H4w
///   η̇ = A3ξ + A4η + H5p + H6δp̌ + H7δp̂ + H8w
struct ClosedLoopMatrices {
    Matrix A1, A2, A3, A4;
    Matrix H1, H2, H3, H4, H5, H6, H7, H8;
};

void validate_gains(const IqcPlant& plant, const StateFeedbackGains& gains);
void validate_observer(const IqcPlant& plant, const ObserverDesign& design);

/// u = K₁x̃ + K₂p(C_q x̃).
[[nodiscard]] Vector state_controller_output(const IqcPlant& plant, const StateFeedbackGains& gains,
                                             const Vector& x_held);

/// Sampled observer:
///   dx̂/dt = Ax̂ + Bu + E p(q̂ + L₁(ŷ - y_c)) + L₂(ŷ - y_c),  ŷ = Cx̂, q̂ = C_q x̂.
[[nodiscard]] Vector observer_rhs(const IqcPlant& plant, const ObserverDesign& design,
                                  const Vector& xhat, const Vector& u, const Vector& y_held);

/// Throws ConfigurationError when the plant has no output matrix.
[[nodiscard]] ClosedLoopMatrices build_output_matrices(const IqcPlant& plant,
                                                       const ObserverDesign& design);

/// Flow of (x, e) between sampling instants with e = x - x̃:
///   ẋ = (A+BK₁)x - BK₁e + (E+BK₂)p + BK₂δp̃ + E_w w,  ė = ẋ,
/// where δp̃ = p(q - C_q e) - p(q).
[[nodiscard]] std::pair<Vector, Vector> state_impulsive_rhs(const IqcPlant& plant,
                                                            const StateFeedbackGains& gains,
                                                            const Vector& x, const Vector& e,
                                                            const Vector& w);

/// ẋ = (A+BK₁)x + (E+BK₂)p(C_q x) + E_w w.
[[nodiscard]] Vector state_continuous_rhs(const IqcPlant& plant, const StateFeedbackGains& gains,
                                          const Vector& x, const Vector& w);

/// Increments of the output-feedback model at ξ = (x, ê), η = (y_e, x_e).
struct OutputIncrements {
    Vector p;      // p(C_q x)
    Vector dp_hat; // p(q + C_q(x_e - ê)) - p(q)
    Vector dp_chk; // p(q - (C_q + L₁C)ê - L₁y_e) - p(q)
};

[[nodiscard]] OutputIncrements output_increments(const IqcPlant& plant,
                                                 const ObserverDesign& design, const Vector& xi,
                                                 const Vector& eta);

/// (ξ̇, η̇) from the closed-loop matrices.
[[nodiscard]] std::pair<Vector, Vector> output_impulsive_rhs(const IqcPlant& plant,
                                                             const ObserverDesign& design,
                                                             const ClosedLoopMatrices& m,
                                                             const Vector& xi, const Vector& eta,
                                                             const Vector& w);

/// K₁ = P₂P₁⁻¹. Throws DomainError unless P₁ is positive definite.
[[nodiscard]] Matrix recover_state_gain(const Matrix& P1, const Matrix& P2);

/// General-plant view of an IQC plant under state feedback, with V₁(x) = xᵀPx.
[[nodiscard]] GeneralPlant as_general_plant(const IqcPlant& plant, const StateFeedbackGains& gains,
                                            const Matrix& P);

} // namespace petc::systems
