#pragma once

// Dense symmetric matrices for small LMIs: block assembly, a cyclic Jacobi
// eigensolver, semidefiniteness margins and projection onto the NSD cone.

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace petc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric matrix; the lower triangle is always the exact mirror of the upper.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Eigen::Index n) : m_(Matrix::Zero(n, n)) {}

    /// Builds from the upper triangle of a square matrix (lower part ignored).
    static SymMatrix from_upper(const Matrix& m);
    /// Builds from (m + mᵀ)/2.
    static SymMatrix symmetrized(const Matrix& m);
    static SymMatrix identity(Eigen::Index n);
    static SymMatrix diagonal(const Vector& d);

    [[nodiscard]] Eigen::Index dim() const { return m_.rows(); }
    [[nodiscard]] const Matrix& matrix() const { return m_; }
    [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    /// Sets (i,j) and (j,i) together.
    void set(Eigen::Index i, Eigen::Index j, double v);

    SymMatrix& operator+=(const SymMatrix& o);
    SymMatrix& operator-=(const SymMatrix& o);
    SymMatrix& operator*=(double a);
    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
    friend SymMatrix operator*(double a, SymMatrix b) { return b *= a; }
    friend bool operator==(const SymMatrix& a, const SymMatrix& b) { return a.m_ == b.m_; }

    /// Frobenius inner product ⟨A,B⟩ = trace(AB).
    [[nodiscard]] double dot(const SymMatrix& o) const;
    [[nodiscard]] double frobenius_norm() const { return m_.norm(); }
    /// Congruence TᵀMT.
    [[nodiscard]] SymMatrix congruence(const Matrix& t) const;
    /// Principal submatrix on the given index set.
    [[nodiscard]] SymMatrix principal(const std::vector<Eigen::Index>& idx) const;

private:
    Matrix m_;
};

struct Spectrum {
    Vector values;  // ascending
    Matrix vectors; // orthonormal columns
    int sweeps = 0;
};

/// Eigendecomposition by cyclic Jacobi rotations with a threshold sweep.
[[nodiscard]] Spectrum eig_sym(const SymMatrix& m);

/// Largest eigenvalue; m ⪯ 0 exactly when this is ≤ 0.
[[nodiscard]] double nsd_margin(const SymMatrix& m);

/// Nearest symmetric matrix (Frobenius) whose eigenvalues are all ≤ margin.
[[nodiscard]] SymMatrix project_nsd(const SymMatrix& m, double margin = 0.0);

/// Block row/column sizes of a symmetric block matrix.
struct BlockLayout {
    std::vector<Eigen::Index> sizes;
    std::vector<std::string> names;

    [[nodiscard]] Eigen::Index dim() const;
    [[nodiscard]] Eigen::Index offset(std::size_t block) const;
    [[nodiscard]] std::string name(std::size_t block) const;
};

/// A block in the upper triangle (row ≤ col). Diagonal blocks are read from
/// their upper triangle.
struct Block {
    std::size_t row = 0;
    std::size_t col = 0;
    Matrix value;
};

/// Assembles the full symmetric matrix; unspecified blocks are zero and
/// lower blocks are transposes of their mirrors. Throws AssemblyError on any
/// size mismatch or a block below the diagonal.
[[nodiscard]] SymMatrix assemble(const BlockLayout& layout, const std::vector<Block>& blocks);

/// X = B A⁻¹ for symmetric positive definite A (Cholesky). Throws DomainError
/// when A is not positive definite.
[[nodiscard]] Matrix solve_right_spd(const Matrix& a, const Matrix& b);

} // namespace petc
