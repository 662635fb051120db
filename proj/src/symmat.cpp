#include "petc/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "petc/error.hpp"

namespace petc {

SymMatrix SymMatrix::from_upper(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw AssemblyError("symmetric matrix must be square");
    }
    SymMatrix out(m.rows());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            out.m_(i, j) = m(i, j);
            out.m_(j, i) = m(i, j);
        }
    }
    return out;
}

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw AssemblyError("symmetric matrix must be square");
    }
    return from_upper(0.5 * (m + m.transpose()));
}

SymMatrix SymMatrix::identity(Eigen::Index n) {
    SymMatrix out(n);
    out.m_.setIdentity();
    return out;
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
    SymMatrix out(d.size());
    out.m_.diagonal() = d;
    return out;
}

void SymMatrix::set(Eigen::Index i, Eigen::Index j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
    m_ += o.m_;
    return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
    m_ -= o.m_;
    return *this;
}

SymMatrix& SymMatrix::operator*=(double a) {
    m_ *= a;
    return *this;
}

double SymMatrix::dot(const SymMatrix& o) const {
    return m_.cwiseProduct(o.m_).sum();
}

SymMatrix SymMatrix::congruence(const Matrix& t) const {
    return from_upper(t.transpose() * m_ * t);
}

SymMatrix SymMatrix::principal(const std::vector<Eigen::Index>& idx) const {
    SymMatrix out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = a; b < idx.size(); ++b) {
            out.set(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b),
                    m_(idx[a], idx[b]));
        }
    }
    return out;
}

namespace {

constexpr double kOffTolerance = 1e-12;
constexpr int kMaxSweeps = 100;

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            s += 2.0 * a(i, j) * a(i, j);
        }
    }
    return std::sqrt(s);
}

} // namespace

Spectrum eig_sym(const SymMatrix& m) {
    const Eigen::Index n = m.dim();
    Matrix a = m.matrix();
    Matrix v = Matrix::Identity(n, n);
    const double scale = std::max(1.0, a.norm());
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        const double off = off_diagonal_norm(a);
        if (off <= kOffTolerance * scale) {
            break;
        }
        // Threshold sweep: early sweeps skip rotations on already small entries.
        const double threshold = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= threshold || apq == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&a](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
    Spectrum out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    out.sweeps = sweep;
    return out;
}

double nsd_margin(const SymMatrix& m) {
    if (m.dim() == 0) {
        return -INFINITY;
    }
    return eig_sym(m).values.maxCoeff();
}

SymMatrix project_nsd(const SymMatrix& m, double margin) {
    if (m.dim() == 0) {
        return m;
    }
    const Spectrum sp = eig_sym(m);
    if (sp.values.maxCoeff() <= margin) {
        return m;
    }
    const Vector clamped = sp.values.cwiseMin(margin);
    return SymMatrix::from_upper(sp.vectors * clamped.asDiagonal() * sp.vectors.transpose());
}

Eigen::Index BlockLayout::dim() const {
    return std::accumulate(sizes.begin(), sizes.end(), Eigen::Index{0});
}

Eigen::Index BlockLayout::offset(std::size_t block) const {
    return std::accumulate(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(block),
                           Eigen::Index{0});
}

std::string BlockLayout::name(std::size_t block) const {
    if (block < names.size()) {
        return names[block];
    }
    return "block" + std::to_string(block);
}

SymMatrix assemble(const BlockLayout& layout, const std::vector<Block>& blocks) {
    SymMatrix out(layout.dim());
    Matrix full = Matrix::Zero(layout.dim(), layout.dim());
    for (const auto& b : blocks) {
        std::ostringstream where;
        where << "(" << layout.name(b.row) << ", " << layout.name(b.col) << ")";
        if (b.row >= layout.sizes.size() || b.col >= layout.sizes.size()) {
            throw AssemblyError("block " + where.str() + " is outside the layout");
        }
        if (b.row > b.col) {
            throw AssemblyError("block " + where.str() + " lies below the diagonal");
        }
        const auto rows = layout.sizes[b.row];
        const auto cols = layout.sizes[b.col];
        if (b.value.rows() != rows || b.value.cols() != cols) {
            std::ostringstream os;
            os << "block " << where.str() << " has size " << b.value.rows() << "x"
               << b.value.cols() << ", layout expects " << rows << "x" << cols;
            throw AssemblyError(os.str());
        }
        const auto r0 = layout.offset(b.row);
        const auto c0 = layout.offset(b.col);
        if (b.row == b.col) {
            const Matrix upper = b.value.triangularView<Eigen::Upper>();
            full.block(r0, c0, rows, cols) += upper;
        } else {
            full.block(r0, c0, rows, cols) += b.value;
        }
    }
    return SymMatrix::from_upper(full);
}

Matrix solve_right_spd(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || b.cols() != a.rows()) {
        throw DomainError("solve_right_spd: dimension mismatch");
    }
    const Matrix sym = 0.5 * (a + a.transpose());
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success) {
        throw DomainError("solve_right_spd: matrix is not positive definite");
    }
    // X A = B  <=>  A Xᵀ = Bᵀ
    return llt.solve(b.transpose()).transpose();
}

} // namespace petc
