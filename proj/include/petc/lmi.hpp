#pragma once

// Affine symmetric matrix inequalities F(v) = F₀ + Σ vᵢFᵢ ⪯ 0, the builders for
// the PETC design conditions, margin verification and an alternating-projection
// feasibility solver.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "petc/symmat.hpp"
#include "petc/systems.hpp"

namespace petc::lmi {

enum class VarKind { Scalar, Symmetric, Full };
enum class Domain { Free, Nonneg, Positive, PosDef };

struct Variable {
    std::string name;
    VarKind kind = VarKind::Scalar;
    Eigen::Index rows = 1;
    Eigen::Index cols = 1;
    Domain domain = Domain::Free;

    [[nodiscard]] Eigen::Index count() const;
    static Variable scalar(std::string name, Domain domain);
    static Variable symmetric(std::string name, Eigen::Index n, Domain domain);
    static Variable full(std::string name, Eigen::Index rows, Eigen::Index cols);
};

/// Variable values by name; scalars are stored as 1×1 matrices.
using Assignment = std::map<std::string, Matrix>;

[[nodiscard]] double scalar_of(const Assignment& a, const std::string& name);

class LmiInstance {
public:
    using Evaluator = std::function<SymMatrix(const Assignment&)>;

    LmiInstance() = default;
    /// Builds the affine data by evaluating at the origin and at unit vectors,
    /// then checks affinity at random points. A non-affine evaluator (for
    /// instance a bilinear term) throws AssemblyError.
    LmiInstance(std::string name, BlockLayout layout, std::vector<Variable> variables,
                Evaluator evaluator);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const BlockLayout& layout() const { return layout_; }
    [[nodiscard]] const std::vector<Variable>& variables() const { return vars_; }
    [[nodiscard]] const SymMatrix& constant() const { return f0_; }
    [[nodiscard]] const std::vector<SymMatrix>& basis() const { return basis_; }
    [[nodiscard]] Eigen::Index dim() const { return layout_.dim(); }
    [[nodiscard]] Eigen::Index n_coords() const { return static_cast<Eigen::Index>(basis_.size()); }

    /// F(v) through the affine data.
    [[nodiscard]] SymMatrix value(const Assignment& a) const;
    [[nodiscard]] SymMatrix value_at(const Vector& coords) const;
    /// F(v) through the original evaluator.
    [[nodiscard]] SymMatrix evaluate(const Assignment& a) const { return eval_(a); }

    [[nodiscard]] Vector pack(const Assignment& a) const;
    [[nodiscard]] Assignment unpack(const Vector& coords) const;
    [[nodiscard]] Assignment zero_assignment() const;

    /// First domain violation, if any.
    [[nodiscard]] std::optional<std::string> domain_violation(const Assignment& a) const;

private:
    std::string name_;
    BlockLayout layout_;
    std::vector<Variable> vars_;
    Evaluator eval_;
    SymMatrix f0_;
    std::vector<SymMatrix> basis_;
};

enum class Status { Feasible, InfeasibleBudget, Invalid };
enum class Verdict { Pass, Fail, Invalid };

[[nodiscard]] std::string to_string(Status s);
[[nodiscard]] std::string to_string(Verdict v);

struct MarginReport {
    Verdict verdict = Verdict::Invalid;
    double margin = 0.0;    // largest eigenvalue of F
    double scale = 1.0;     // max(1, ‖F‖_F)
    double tolerance = 0.0; // absolute threshold applied to margin
    std::string message;

    [[nodiscard]] bool passed() const { return verdict == Verdict::Pass; }
};

/// Passes iff every domain constraint holds and
/// nsd_margin(F) ≤ rel_tol·max(1, ‖F‖_F). A negative rel_tol demands strict
/// slack of that relative size.
[[nodiscard]] MarginReport verify(const LmiInstance& inst, const Assignment& a,
                                  double rel_tol = 1e-8);

struct SolverOptions {
    double eps_strict = 1e-8; // required relative slack: margin ≤ -eps_strict·scale
    int max_iter = 5000;
    std::uint64_t seed = 0;   // perturbs the starting point when nonzero
    double shift = 1.0;       // eigenvalues are clamped to ≤ -shift
    int shift_decay_every = 1000; // the shift shrinks tenfold after this many iterations
    double relaxation = 1.9;  // over-relaxation factor in (0, 2)
};

struct FeasibilityResult {
    Status status = Status::Invalid;
    Assignment assignment;
    double margin = 0.0;
    int iterations = 0;
    std::string message;
};

/// Alternating projections between the affine family F(v), extended by
/// diagonal blocks encoding the variable domains, and the shifted NSD cone.
/// Exhausting the budget is not a proof of infeasibility.
[[nodiscard]] FeasibilityResult solve_feasibility(const LmiInstance& inst,
                                                  const SolverOptions& opts = {});

// Builders. Each throws ConfigurationError on dimension mismatches.

/// Variables P1 ≻ 0, P2, K2, d > 0, σ > 0.
[[nodiscard]] LmiInstance build_lemma3(const systems::IqcPlant& plant, double alpha);

/// Variables P ≻ 0, mu > 0, gamma > 0, d > 0, sigma1 ≥ 0, sigma2 ≥ 0.
[[nodiscard]] LmiInstance build_thm3(const systems::IqcPlant& plant,
                                     const systems::StateFeedbackGains& gains, double alpha);

/// Variables P ≻ 0 (2nx), a1, a2, b1, b2, mu1, mu2, d > 0, sigma1..3 ≥ 0.
[[nodiscard]] LmiInstance build_thm4(const systems::IqcPlant& plant,
                                     const systems::ObserverDesign& design, double alpha);

/// diag(c₁CᵀP₁C, c₂P₂) - JᵀPJ ⪯ 0 with J = [I 0; I -I]; variables P1, P2 ≻ 0.
[[nodiscard]] LmiInstance build_thm4_coupling(const Matrix& P, const Matrix& C, double c1,
                                              double c2);

/// Linear-plant reductions. Throw ConfigurationError when E ≠ 0.
[[nodiscard]] LmiInstance build_cor1(const systems::IqcPlant& plant, const Matrix& K,
                                     double alpha);
[[nodiscard]] LmiInstance build_cor2(const systems::IqcPlant& plant, const Matrix& K,
                                     const Matrix& L, double alpha);

/// Grid search (0..max step `step`) over (sigma1, sigma2) at fixed other
/// variables, followed by a coordinate refinement; returns the completed
/// assignment minimizing the margin.
[[nodiscard]] Assignment recover_sigmas(const LmiInstance& inst, Assignment fixed,
                                        const std::vector<std::string>& sigma_names,
                                        double max = 50.0, double step = 0.1);

} // namespace petc::lmi
