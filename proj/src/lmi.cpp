#include "petc/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "petc/error.hpp"

namespace petc::lmi {

Eigen::Index Variable::count() const {
    switch (kind) {
    case VarKind::Scalar:
        return 1;
    case VarKind::Symmetric:
        return rows * (rows + 1) / 2;
    case VarKind::Full:
        return rows * cols;
    }
    return 0;
}

Variable Variable::scalar(std::string name, Domain domain) {
    return {std::move(name), VarKind::Scalar, 1, 1, domain};
}

Variable Variable::symmetric(std::string name, Eigen::Index n, Domain domain) {
    return {std::move(name), VarKind::Symmetric, n, n, domain};
}

Variable Variable::full(std::string name, Eigen::Index rows, Eigen::Index cols) {
    return {std::move(name), VarKind::Full, rows, cols, Domain::Free};
}

double scalar_of(const Assignment& a, const std::string& name) {
    const auto it = a.find(name);
    if (it == a.end() || it->second.size() != 1) {
        throw ConfigurationError("assignment has no scalar '" + name + "'");
    }
    return it->second(0, 0);
}

namespace {

const Matrix& get(const Assignment& a, const std::string& name) {
    const auto it = a.find(name);
    if (it == a.end()) {
        throw ConfigurationError("assignment has no variable '" + name + "'");
    }
    return it->second;
}

Matrix eye(Eigen::Index n) {
    return Matrix::Identity(n, n);
}

Matrix zeros(Eigen::Index r, Eigen::Index c) {
    return Matrix::Zero(r, c);
}

void expect(bool ok, const std::string& what) {
    if (!ok) {
        throw ConfigurationError(what);
    }
}

// Adds σ·SᵀMS where S is (n_q+n_p)×dim.
void add_multiplier_term(Matrix& f, double sigma, const Matrix& s, const SymMatrix& m) {
    if (s.rows() == 0 || sigma == 0.0) {
        return;
    }
    f += sigma * s.transpose() * m.matrix() * s;
}

} // namespace

LmiInstance::LmiInstance(std::string name, BlockLayout layout, std::vector<Variable> variables,
                         Evaluator evaluator)
    : name_(std::move(name)), layout_(std::move(layout)), vars_(std::move(variables)),
      eval_(std::move(evaluator)) {
    Eigen::Index n = 0;
    for (const auto& v : vars_) {
        n += v.count();
    }
    f0_ = eval_(zero_assignment());
    if (f0_.dim() != layout_.dim()) {
        throw AssemblyError(name_ + ": evaluator dimension disagrees with the layout");
    }
    basis_.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        basis_.push_back(eval_(unpack(Vector::Unit(n, i))) - f0_);
    }
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 2; ++trial) {
        Vector c(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            c(i) = normal(rng);
        }
        const SymMatrix direct = eval_(unpack(c));
        const SymMatrix affine = value_at(c);
        const double err = (direct - affine).frobenius_norm();
        if (err > 1e-9 * std::max(1.0, direct.frobenius_norm())) {
            std::ostringstream os;
            os << name_ << ": evaluator is not affine in its variables (deviation " << err << ")";
            throw AssemblyError(os.str());
        }
    }
}

SymMatrix LmiInstance::value_at(const Vector& coords) const {
    if (coords.size() != n_coords()) {
        throw ConfigurationError(name_ + ": coordinate vector has the wrong length");
    }
    Matrix f = f0_.matrix();
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        const double c = coords(static_cast<Eigen::Index>(i));
        if (c != 0.0) {
            f += c * basis_[i].matrix();
        }
    }
    return SymMatrix::from_upper(f);
}

SymMatrix LmiInstance::value(const Assignment& a) const {
    return value_at(pack(a));
}

Vector LmiInstance::pack(const Assignment& a) const {
    Vector out(n_coords());
    Eigen::Index k = 0;
    for (const auto& v : vars_) {
        const Matrix& m = get(a, v.name);
        if (m.rows() != v.rows || m.cols() != v.cols) {
            std::ostringstream os;
            os << "variable '" << v.name << "' is " << m.rows() << "x" << m.cols()
               << ", expected " << v.rows << "x" << v.cols;
            throw ConfigurationError(os.str());
        }
        switch (v.kind) {
        case VarKind::Scalar:
            out(k++) = m(0, 0);
            break;
        case VarKind::Symmetric:
            for (Eigen::Index j = 0; j < v.rows; ++j) {
                for (Eigen::Index i = 0; i <= j; ++i) {
                    out(k++) = 0.5 * (m(i, j) + m(j, i));
                }
            }
            break;
        case VarKind::Full:
            for (Eigen::Index j = 0; j < v.cols; ++j) {
                for (Eigen::Index i = 0; i < v.rows; ++i) {
                    out(k++) = m(i, j);
                }
            }
            break;
        }
    }
    return out;
}

Assignment LmiInstance::unpack(const Vector& coords) const {
    // No length check against basis_: the constructor unpacks before the basis exists.
    Assignment out;
    Eigen::Index k = 0;
    for (const auto& v : vars_) {
        Matrix m = Matrix::Zero(v.rows, v.cols);
        switch (v.kind) {
        case VarKind::Scalar:
            m(0, 0) = coords(k++);
            break;
        case VarKind::Symmetric:
            for (Eigen::Index j = 0; j < v.rows; ++j) {
                for (Eigen::Index i = 0; i <= j; ++i) {
                    m(i, j) = coords(k);
                    m(j, i) = coords(k);
                    ++k;
                }
            }
            break;
        case VarKind::Full:
            for (Eigen::Index j = 0; j < v.cols; ++j) {
                for (Eigen::Index i = 0; i < v.rows; ++i) {
                    m(i, j) = coords(k++);
                }
            }
            break;
        }
        out.emplace(v.name, std::move(m));
    }
    return out;
}

Assignment LmiInstance::zero_assignment() const {
    Assignment out;
    for (const auto& v : vars_) {
        out.emplace(v.name, Matrix::Zero(v.rows, v.cols));
    }
    return out;
}

std::optional<std::string> LmiInstance::domain_violation(const Assignment& a) const {
    for (const auto& v : vars_) {
        const Matrix& m = get(a, v.name);
        switch (v.domain) {
        case Domain::Free:
            break;
        case Domain::Nonneg:
            if (!(m(0, 0) >= 0.0)) {
                return v.name + " must be non-negative";
            }
            break;
        case Domain::Positive:
            if (!(m(0, 0) > 0.0)) {
                return v.name + " must be positive";
            }
            break;
        case Domain::PosDef: {
            const double lo = eig_sym(SymMatrix::symmetrized(m)).values.minCoeff();
            if (!(lo > 0.0)) {
                std::ostringstream os;
                os << v.name << " must be positive definite (smallest eigenvalue " << lo << ")";
                return os.str();
            }
            break;
        }
        }
    }
    return std::nullopt;
}

std::string to_string(Status s) {
    switch (s) {
    case Status::Feasible:
        return "feasible";
    case Status::InfeasibleBudget:
        return "infeasible-budget";
    case Status::Invalid:
        return "invalid";
    }
    return "unknown";
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass:
        return "pass";
    case Verdict::Fail:
        return "fail";
    case Verdict::Invalid:
        return "invalid";
    }
    return "unknown";
}

MarginReport verify(const LmiInstance& inst, const Assignment& a, double rel_tol) {
    MarginReport rep;
    try {
        (void)inst.pack(a);
    } catch (const ConfigurationError& e) {
        rep.verdict = Verdict::Invalid;
        rep.message = e.what();
        return rep;
    }
    const SymMatrix f = inst.evaluate(a);
    rep.margin = nsd_margin(f);
    rep.scale = std::max(1.0, f.frobenius_norm());
    rep.tolerance = rel_tol * rep.scale;
    if (const auto bad = inst.domain_violation(a)) {
        rep.verdict = Verdict::Invalid;
        rep.message = *bad;
        return rep;
    }
    rep.verdict = rep.margin <= rep.tolerance ? Verdict::Pass : Verdict::Fail;
    std::ostringstream os;
    os << inst.name() << ": margin " << rep.margin << " vs threshold " << rep.tolerance;
    rep.message = os.str();
    return rep;
}

namespace {

// Diagonal block that encodes the domain of one variable as "block ⪯ 0".
struct DomainSlot {
    std::size_t var = 0;
    Eigen::Index coord0 = 0;
    Eigen::Index size = 0;
};

} // namespace

FeasibilityResult solve_feasibility(const LmiInstance& inst, const SolverOptions& opts) {
    const auto& vars = inst.variables();
    const Eigen::Index n = inst.n_coords();
    const Eigen::Index dim = inst.dim();

    std::vector<DomainSlot> slots;
    Eigen::Index aug = dim;
    Eigen::Index coord = 0;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].domain != Domain::Free) {
            slots.push_back({i, coord, vars[i].rows});
            aug += vars[i].rows;
        }
        coord += vars[i].count();
    }

    // G(v) = blockdiag(F(v), -v_d for each domain variable).
    const auto augmented = [&](const SymMatrix& f, Eigen::Index unit) {
        Matrix g = Matrix::Zero(aug, aug);
        g.topLeftCorner(dim, dim) = f.matrix();
        if (unit < 0) {
            return g;
        }
        Eigen::Index off = dim;
        for (const auto& s : slots) {
            const Variable& v = vars[s.var];
            if (unit >= s.coord0 && unit < s.coord0 + v.count()) {
                Vector c = Vector::Zero(n);
                c(unit) = 1.0;
                const Matrix m = inst.unpack(c).at(v.name);
                g.block(off, off, s.size, s.size) = -m;
            }
            off += s.size;
        }
        return g;
    };

    const Matrix g0 = augmented(inst.constant(), -1);
    std::vector<Matrix> gi;
    gi.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        gi.push_back(augmented(inst.basis()[static_cast<std::size_t>(i)], i));
    }
    Matrix gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = gi[static_cast<std::size_t>(i)]
                                 .cwiseProduct(gi[static_cast<std::size_t>(j)])
                                 .sum();
            gram(i, j) = v;
            gram(j, i) = v;
        }
    }
    const Eigen::CompleteOrthogonalDecomposition<Matrix> gram_solver(gram);

    Vector v = Vector::Zero(n);
    if (opts.seed != 0) {
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> normal(0.0, 0.1);
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = normal(rng);
        }
    }

    double shift = opts.shift;
    FeasibilityResult res;
    const auto finish = [&](Status status, int iterations) {
        res.assignment = inst.unpack(v);
        res.iterations = iterations;
        const auto rep = verify(inst, res.assignment, -opts.eps_strict);
        res.margin = rep.margin;
        res.status = status == Status::Feasible && !rep.passed() ? Status::InfeasibleBudget : status;
        res.message = rep.message;
        return res;
    };

    for (int it = 0; it < opts.max_iter; ++it) {
        Matrix g = g0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (v(i) != 0.0) {
                g += v(i) * gi[static_cast<std::size_t>(i)];
            }
        }
        const SymMatrix gs = SymMatrix::from_upper(g);
        const Spectrum sp = eig_sym(gs);
        const double scale = std::max(1.0, g.topLeftCorner(dim, dim).norm());
        if (sp.values.maxCoeff() <= -opts.eps_strict * scale) {
            const Assignment a = inst.unpack(v);
            if (verify(inst, a, -opts.eps_strict).passed()) {
                return finish(Status::Feasible, it);
            }
        }
        if (it > 0 && it % opts.shift_decay_every == 0) {
            shift *= 0.1;
        }
        const Vector clamped = sp.values.cwiseMin(-shift);
        const Matrix z = sp.vectors * clamped.asDiagonal() * sp.vectors.transpose() - g0;
        Vector b(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            b(i) = gi[static_cast<std::size_t>(i)].cwiseProduct(z).sum();
        }
        const Vector target = gram_solver.solve(b);
        v += opts.relaxation * (target - v);
        if (!v.allFinite()) {
            res.status = Status::Invalid;
            res.iterations = it;
            res.message = inst.name() + ": solver iterate became non-finite";
            return res;
        }
    }
    return finish(Status::InfeasibleBudget, opts.max_iter);
}

// ---------------------------------------------------------------------------
// Builders

LmiInstance build_lemma3(const systems::IqcPlant& plant, double alpha) {
    plant.validate();
    expect(alpha > 0.0, "alpha must be positive");
    const auto nx = plant.nx();
    const auto nu = plant.nu();
    const auto np = plant.np();
    const auto nq = plant.nq();
    const auto nw = plant.nw();
    BlockLayout layout{{nx, np, nw}, {"x", "p", "w"}};
    const auto dim = layout.dim();
    Matrix s = zeros(nq + np, dim);
    s.block(0, 0, nq, nx) = plant.Cq;
    s.block(nq, nx, np, np) = eye(np);
    std::vector<Variable> vars{Variable::symmetric("P1", nx, Domain::PosDef),
                               Variable::full("P2", nu, nx), Variable::full("K2", nu, np),
                               Variable::scalar("d", Domain::Positive),
                               Variable::scalar("sigma", Domain::Positive)};
    const auto eval = [plant, alpha, layout, s](const Assignment& a) {
        const Matrix& p1 = get(a, "P1");
        const Matrix& p2 = get(a, "P2");
        const Matrix& k2 = get(a, "K2");
        const double d = scalar_of(a, "d");
        const Matrix& A = plant.A;
        const Matrix& B = plant.B;
        const Matrix phi = A * p1 + p1 * A.transpose() + B * p2 + p2.transpose() * B.transpose() +
                           alpha * p1;
        Matrix f = assemble(layout, {{0, 0, phi},
                                     {0, 1, plant.E + B * k2},
                                     {0, 2, plant.Ew},
                                     {2, 2, -d * eye(plant.nw())}})
                       .matrix();
        add_multiplier_term(f, scalar_of(a, "sigma"), s, plant.M.matrix());
        return SymMatrix::from_upper(f);
    };
    return {"lemma3", layout, vars, eval};
}

LmiInstance build_thm3(const systems::IqcPlant& plant, const systems::StateFeedbackGains& gains,
                       double alpha) {
    plant.validate();
    systems::validate_gains(plant, gains);
    expect(alpha > 0.0, "alpha must be positive");
    const auto nx = plant.nx();
    const auto np = plant.np();
    const auto nq = plant.nq();
    const auto nw = plant.nw();
    BlockLayout layout{{nx, nx, np, np, nx, nw}, {"x", "e", "p", "dp", "r", "w"}};
    const auto dim = layout.dim();
    Matrix s1 = zeros(nq + np, dim);
    s1.block(0, 0, nq, nx) = plant.Cq;
    s1.block(nq, layout.offset(2), np, np) = eye(np);
    Matrix s2 = zeros(nq + np, dim);
    s2.block(0, layout.offset(1), nq, nx) = -plant.Cq;
    s2.block(nq, layout.offset(3), np, np) = eye(np);

    const Matrix acl = plant.A + plant.B * gains.K1;
    const Matrix bk1 = plant.B * gains.K1;
    const Matrix bk2 = plant.B * gains.K2;
    const Matrix ebk2 = plant.E + bk2;

    std::vector<Variable> vars{Variable::symmetric("P", nx, Domain::PosDef),
                               Variable::scalar("mu", Domain::Positive),
                               Variable::scalar("gamma", Domain::Positive),
                               Variable::scalar("d", Domain::Positive),
                               Variable::scalar("sigma1", Domain::Nonneg),
                               Variable::scalar("sigma2", Domain::Nonneg)};
    const auto eval = [=, M = plant.M.matrix(), Ew = plant.Ew](const Assignment& a) {
        const Matrix& P = get(a, "P");
        const double mu = scalar_of(a, "mu");
        const double g = scalar_of(a, "gamma");
        const double d = scalar_of(a, "d");
        const Matrix psi = P * acl + acl.transpose() * P + alpha * P;
        Matrix f = assemble(layout, {{0, 0, psi},
                                     {0, 1, -P * bk1},
                                     {0, 2, P * ebk2},
                                     {0, 3, P * bk2},
                                     {0, 4, acl.transpose()},
                                     {0, 5, P * Ew},
                                     {1, 1, -g * eye(nx)},
                                     {1, 4, -bk1.transpose() + (alpha / 2.0 - mu) * eye(nx)},
                                     {2, 4, ebk2.transpose()},
                                     {3, 4, bk2.transpose()},
                                     {4, 4, -g * eye(nx)},
                                     {4, 5, Ew},
                                     {5, 5, -d * eye(nw)}})
                       .matrix();
        add_multiplier_term(f, scalar_of(a, "sigma1"), s1, M);
        add_multiplier_term(f, scalar_of(a, "sigma2"), s2, M);
        return SymMatrix::from_upper(f);
    };
    return {"thm3", layout, vars, eval};
}

namespace {

std::vector<Variable> thm4_scalars() {
    std::vector<Variable> vars;
    for (const char* name : {"a1", "a2", "b1", "b2", "mu1", "mu2", "d"}) {
        vars.push_back(Variable::scalar(name, Domain::Positive));
    }
    return vars;
}

Matrix channel_diag(double first, double second, Eigen::Index ny, Eigen::Index nx) {
    Vector v(ny + nx);
    v.head(ny).setConstant(first);
    v.tail(nx).setConstant(second);
    return v.asDiagonal();
}

} // namespace

LmiInstance build_thm4(const systems::IqcPlant& plant, const systems::ObserverDesign& design,
                       double alpha) {
    plant.validate();
    systems::validate_observer(plant, design);
    expect(alpha > 0.0, "alpha must be positive");
    const auto m = systems::build_output_matrices(plant, design);
    const auto nx = plant.nx();
    const auto ny = plant.ny();
    const auto np = plant.np();
    const auto nq = plant.nq();
    const auto nw = plant.nw();
    const Matrix& C = *plant.C;
    BlockLayout layout{{2 * nx, ny + nx, np, np, np, ny + nx, nw},
                       {"xi", "eta", "p", "dp_chk", "dp_hat", "r", "w"}};
    const auto dim = layout.dim();
    Matrix s1 = zeros(nq + np, dim);
    s1.block(0, 0, nq, nx) = plant.Cq;
    s1.block(nq, layout.offset(2), np, np) = eye(np);
    Matrix s2 = zeros(nq + np, dim);
    s2.block(0, nx, nq, nx) = -(plant.Cq + design.L1 * C);
    s2.block(0, layout.offset(1), nq, ny) = -design.L1;
    s2.block(nq, layout.offset(3), np, np) = eye(np);
    Matrix s3 = zeros(nq + np, dim);
    s3.block(0, nx, nq, nx) = -plant.Cq;
    s3.block(0, layout.offset(1) + ny, nq, nx) = plant.Cq;
    s3.block(nq, layout.offset(4), np, np) = eye(np);

    std::vector<Variable> vars{Variable::symmetric("P", 2 * nx, Domain::PosDef)};
    for (auto& v : thm4_scalars()) {
        vars.push_back(std::move(v));
    }
    for (const char* name : {"sigma1", "sigma2", "sigma3"}) {
        vars.push_back(Variable::scalar(name, Domain::Nonneg));
    }
    const auto eval = [=, M = plant.M.matrix()](const Assignment& a) {
        const Matrix& P = get(a, "P");
        const auto sc = [&a](const char* n) { return scalar_of(a, n); };
        const Matrix r1 = -channel_diag(sc("a1"), sc("a2"), ny, nx);
        const Matrix r2 = -channel_diag(sc("b1"), sc("b2"), ny, nx);
        const Matrix r3 = -channel_diag(sc("mu1"), sc("mu2"), ny, nx);
        Matrix f =
            assemble(layout,
                     {{0, 0, P * m.A1 + m.A1.transpose() * P + alpha * P},
                      {0, 1, P * m.A2},
                      {0, 2, P * m.H1},
                      {0, 3, P * m.H2},
                      {0, 4, P * m.H3},
                      {0, 5, m.A3.transpose()},
                      {0, 6, P * m.H4},
                      {1, 1, r1},
                      {1, 5, m.A4.transpose() + r3.transpose() + alpha / 2.0 * eye(ny + nx)},
                      {2, 5, m.H5.transpose()},
                      {3, 5, m.H6.transpose()},
                      {4, 5, m.H7.transpose()},
                      {5, 5, r2},
                      {5, 6, m.H8},
                      {6, 6, -sc("d") * eye(nw)}})
                .matrix();
        add_multiplier_term(f, sc("sigma1"), s1, M);
        add_multiplier_term(f, sc("sigma2"), s2, M);
        add_multiplier_term(f, sc("sigma3"), s3, M);
        return SymMatrix::from_upper(f);
    };
    return {"thm4", layout, vars, eval};
}

LmiInstance build_thm4_coupling(const Matrix& P, const Matrix& C, double c1, double c2) {
    const auto nx = C.cols();
    const auto ny = C.rows();
    expect(P.rows() == 2 * nx && P.cols() == 2 * nx, "coupling: P must be 2nx x 2nx");
    expect(c1 > 0.0 && c2 > 0.0, "coupling: c1 and c2 must be positive");
    Matrix j(2 * nx, 2 * nx);
    j << eye(nx), zeros(nx, nx), eye(nx), -eye(nx);
    const Matrix jpj = j.transpose() * (0.5 * (P + P.transpose())) * j;
    BlockLayout layout{{nx, nx}, {"x", "e"}};
    std::vector<Variable> vars{Variable::symmetric("P1", ny, Domain::PosDef),
                               Variable::symmetric("P2", nx, Domain::PosDef)};
    const auto eval = [=](const Assignment& a) {
        Matrix f = -jpj;
        f.topLeftCorner(nx, nx) += c1 * C.transpose() * get(a, "P1") * C;
        f.bottomRightCorner(nx, nx) += c2 * get(a, "P2");
        return SymMatrix::from_upper(f);
    };
    return {"thm4_coupling", layout, vars, eval};
}

LmiInstance build_cor1(const systems::IqcPlant& plant, const Matrix& K, double alpha) {
    plant.validate();
    expect(plant.is_linear(), "the linear reduction requires E = 0");
    expect(alpha > 0.0, "alpha must be positive");
    const auto nx = plant.nx();
    const auto nw = plant.nw();
    expect(K.rows() == plant.nu() && K.cols() == nx, "K must be nu x nx");
    BlockLayout layout{{nx, nx, nx, nw}, {"x", "e", "r", "w"}};
    const Matrix acl = plant.A + plant.B * K;
    const Matrix bk = plant.B * K;
    std::vector<Variable> vars{Variable::symmetric("P", nx, Domain::PosDef),
                               Variable::scalar("mu", Domain::Positive),
                               Variable::scalar("gamma", Domain::Positive),
                               Variable::scalar("d", Domain::Positive)};
    const auto eval = [=, Ew = plant.Ew](const Assignment& a) {
        const Matrix& P = get(a, "P");
        const double mu = scalar_of(a, "mu");
        const double g = scalar_of(a, "gamma");
        return assemble(layout, {{0, 0, P * acl + acl.transpose() * P + alpha * P},
                                 {0, 1, -P * bk},
                                 {0, 2, acl.transpose()},
                                 {0, 3, P * Ew},
                                 {1, 1, -g * eye(nx)},
                                 {1, 2, -bk.transpose() + (alpha / 2.0 - mu) * eye(nx)},
                                 {2, 2, -g * eye(nx)},
                                 {2, 3, Ew},
                                 {3, 3, -scalar_of(a, "d") * eye(nw)}});
    };
    return {"cor1", layout, vars, eval};
}

LmiInstance build_cor2(const systems::IqcPlant& plant, const Matrix& K, const Matrix& L,
                       double alpha) {
    plant.validate();
    expect(plant.is_linear(), "the linear reduction requires E = 0");
    expect(plant.C.has_value(), "output feedback needs an output matrix C");
    expect(alpha > 0.0, "alpha must be positive");
    const auto nx = plant.nx();
    const auto ny = plant.ny();
    const auto nw = plant.nw();
    systems::ObserverDesign design;
    design.gains.K1 = K;
    design.gains.K2 = zeros(plant.nu(), plant.np());
    design.L1 = zeros(plant.nq(), ny);
    design.L2 = L;
    const auto m = systems::build_output_matrices(plant, design);
    BlockLayout layout{{2 * nx, ny + nx, ny + nx, nw}, {"xi", "eta", "r", "w"}};
    std::vector<Variable> vars{Variable::symmetric("P", 2 * nx, Domain::PosDef)};
    for (auto& v : thm4_scalars()) {
        vars.push_back(std::move(v));
    }
    const auto eval = [=](const Assignment& a) {
        const Matrix& P = get(a, "P");
        const auto sc = [&a](const char* n) { return scalar_of(a, n); };
        const Matrix r1 = -channel_diag(sc("a1"), sc("a2"), ny, nx);
        const Matrix r2 = -channel_diag(sc("b1"), sc("b2"), ny, nx);
        const Matrix r3 = -channel_diag(sc("mu1"), sc("mu2"), ny, nx);
        return assemble(
            layout, {{0, 0, P * m.A1 + m.A1.transpose() * P + alpha * P},
                     {0, 1, P * m.A2},
                     {0, 2, m.A3.transpose()},
                     {0, 3, P * m.H4},
                     {1, 1, r1},
                     {1, 2, m.A4.transpose() + r3.transpose() + alpha / 2.0 * eye(ny + nx)},
                     {2, 2, r2},
                     {2, 3, m.H8},
                     {3, 3, -sc("d") * eye(nw)}});
    };
    return {"cor2", layout, vars, eval};
}

Assignment recover_sigmas(const LmiInstance& inst, Assignment fixed,
                          const std::vector<std::string>& sigma_names, double max, double step) {
    expect(!sigma_names.empty(), "recover_sigmas: no sigma variables given");
    expect(step > 0.0 && max >= 0.0, "recover_sigmas: need step > 0 and max >= 0");
    for (const auto& name : sigma_names) {
        fixed[name] = Matrix::Zero(1, 1);
    }
    const auto margin_at = [&](const std::vector<double>& s) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            fixed[sigma_names[i]](0, 0) = s[i];
        }
        return nsd_margin(inst.value(fixed));
    };
    const int steps = static_cast<int>(std::floor(max / step + 1e-9));
    std::vector<double> best(sigma_names.size(), 0.0);
    double best_m = margin_at(best);
    if (sigma_names.size() <= 2) {
        std::vector<double> s(sigma_names.size(), 0.0);
        const int outer = sigma_names.size() == 2 ? steps : 0;
        for (int i = 0; i <= steps; ++i) {
            for (int j = 0; j <= outer; ++j) {
                s[0] = i * step;
                if (s.size() == 2) {
                    s[1] = j * step;
                }
                const double m = margin_at(s);
                if (m < best_m) {
                    best_m = m;
                    best = s;
                }
            }
        }
    } else {
        // Coordinate sweeps over the same grid.
        for (int sweep = 0; sweep < 4; ++sweep) {
            for (std::size_t k = 0; k < best.size(); ++k) {
                std::vector<double> s = best;
                for (int i = 0; i <= steps; ++i) {
                    s[k] = i * step;
                    const double m = margin_at(s);
                    if (m < best_m) {
                        best_m = m;
                        best = s;
                    }
                }
            }
        }
    }
    // Pattern search refinement with a shrinking step.
    for (double h = step / 2.0; h > 1e-9; h /= 2.0) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::size_t k = 0; k < best.size(); ++k) {
                for (const double dir : {-1.0, 1.0}) {
                    std::vector<double> s = best;
                    s[k] = std::max(0.0, s[k] + dir * h);
                    const double m = margin_at(s);
                    if (m < best_m) {
                        best_m = m;
                        best = s;
                        improved = true;
                    }
                }
            }
        }
    }
    (void)margin_at(best);
    return fixed;
}

} // namespace petc::lmi
