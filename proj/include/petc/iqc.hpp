#pragma once

// Incremental multiplier matrices: a symmetric M certifies a nonlinearity p when
//   [δq; δp]ᵀ M [δq; δp] ≥ 0   for all q₁, q₂,
// with δq = q₂ - q₁ and δp = p(q₂) - p(q₁).

#include <cstdint>
#include <functional>

#include "petc/symmat.hpp"

namespace petc::iqc {

class MultiplierMatrix {
public:
    MultiplierMatrix() = default;
    /// Throws ConfigurationError unless m has dimension n_q + n_p.
    MultiplierMatrix(SymMatrix m, Eigen::Index n_q, Eigen::Index n_p);

    [[nodiscard]] const SymMatrix& matrix() const { return m_; }
    [[nodiscard]] Eigen::Index n_q() const { return n_q_; }
    [[nodiscard]] Eigen::Index n_p() const { return n_p_; }
    [[nodiscard]] MultiplierMatrix scaled(double factor) const;

private:
    SymMatrix m_;
    Eigen::Index n_q_ = 0;
    Eigen::Index n_p_ = 0;
};

/// A static nonlinearity q ↦ p(q). The map must be free of side effects.
class Nonlinearity {
public:
    using Map = std::function<Vector(const Vector&)>;

    Nonlinearity() = default;
    /// When zero_at_zero is set, ‖p(0)‖ ≤ 1e-12 is checked here.
    Nonlinearity(Eigen::Index n_q, Eigen::Index n_p, Map map, bool zero_at_zero = true);

    [[nodiscard]] Vector operator()(const Vector& q) const;
    [[nodiscard]] Eigen::Index n_q() const { return n_q_; }
    [[nodiscard]] Eigen::Index n_p() const { return n_p_; }
    [[nodiscard]] bool zero_at_zero() const { return zero_at_zero_; }

    /// Elementwise sine.
    static Nonlinearity sine(Eigen::Index n);
    /// p(q) = gain·q.
    static Nonlinearity linear(Eigen::Index n, double gain);
    /// p ≡ 0 (linear plants).
    static Nonlinearity zero(Eigen::Index n_q, Eigen::Index n_p);

private:
    Eigen::Index n_q_ = 0;
    Eigen::Index n_p_ = 0;
    Map map_;
    bool zero_at_zero_ = true;
};

/// diag(L²·I_{n_q}, -I_{n_p}) for a globally L-Lipschitz nonlinearity.
[[nodiscard]] MultiplierMatrix lipschitz_multiplier(double lipschitz, Eigen::Index n_q,
                                                    Eigen::Index n_p);

/// Multiplier of the sector condition (p - K₁q)ᵀ S (p - K₂q) ≤ 0:
///   [ -K₁ᵀSK₂ - K₂ᵀSK₁   * ;  S(K₁+K₂)   -2S ].
[[nodiscard]] MultiplierMatrix sector_multiplier(const Matrix& k1, const Matrix& k2,
                                                 const Matrix& s);

/// [δq; δp]ᵀ M [δq; δp].
[[nodiscard]] double iqc_form(const MultiplierMatrix& m, const Vector& dq, const Vector& dp);

struct MultiplierReport {
    double min_value = 0.0;
    Vector q1;
    Vector q2;
    bool valid = false; // min_value ≥ -1e-9
    int samples = 0;
};

/// Evaluates the constraint on n_samples seeded uniform pairs in
/// [-radius, radius]^{n_q} and reports the worst pair.
[[nodiscard]] MultiplierReport check_multiplier(const MultiplierMatrix& m, const Nonlinearity& p,
                                                int n_samples = 10000, double radius = 10.0,
                                                std::uint64_t seed = 0);

} // namespace petc::iqc
