#include "petc/systems.hpp"

#include <cmath>
#include <sstream>

#include "petc/error.hpp"

namespace petc::systems {

namespace {

void expect(bool ok, const std::string& what) {
    if (!ok) {
        throw ConfigurationError(what);
    }
}

std::string shape(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << name << " is " << shape(m) << ", expected " << rows << "x" << cols;
        throw ConfigurationError(os.str());
    }
}

void expect_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) {
        throw SimulationDivergedError(std::string(what) + " produced a non-finite value");
    }
}

} // namespace

void IqcPlant::validate() const {
    const auto n = nx();
    expect_shape(A, n, n, "A");
    expect(B.rows() == n, "B must have nx rows, got " + shape(B));
    expect(E.rows() == n, "E must have nx rows, got " + shape(E));
    expect(Ew.rows() == n, "E_w must have nx rows, got " + shape(Ew));
    expect(Cq.cols() == n, "C_q must have nx columns, got " + shape(Cq));
    if (C) {
        expect(C->cols() == n, "C must have nx columns, got " + shape(*C));
    }
    expect(p.n_q() == nq() && p.n_p() == np(), "nonlinearity dimensions disagree with C_q and E");
    expect(M.n_q() == nq() && M.n_p() == np(), "multiplier partition disagrees with (n_q, n_p)");
}

Vector IqcPlant::flow(const Vector& x, const Vector& u, const Vector& w) const {
    Vector dx = A * x + B * u + Ew * w;
    if (np() > 0) {
        dx += E * p(Cq * x);
    }
    return dx;
}

IqcPlant IqcPlant::linear(Matrix A, Matrix B, Matrix Ew, std::optional<Matrix> C) {
    IqcPlant plant;
    const auto n = A.rows();
    plant.A = std::move(A);
    plant.B = std::move(B);
    plant.Ew = std::move(Ew);
    plant.E = Matrix::Zero(n, 0);
    plant.Cq = Matrix::Zero(0, n);
    plant.C = std::move(C);
    plant.p = iqc::Nonlinearity::zero(0, 0);
    plant.M = iqc::MultiplierMatrix(SymMatrix(0), 0, 0);
    plant.validate();
    return plant;
}

void GeneralPlant::validate() const {
    expect(nx > 0, "general plant needs nx > 0");
    expect(static_cast<bool>(f), "general plant needs a flow map");
    expect(static_cast<bool>(k), "general plant needs a feedback map");
}

Vector GeneralPlant::eval_f(const Vector& x, const Vector& u, const Vector& w) const {
    Vector dx = f(x, u, w);
    expect(dx.size() == nx, "flow map returned the wrong dimension");
    expect_finite(dx, "flow map");
    return dx;
}

Vector GeneralPlant::eval_k(const Vector& x) const {
    Vector u = k(x);
    expect(u.size() == nu, "feedback map returned the wrong dimension");
    expect_finite(u, "feedback map");
    return u;
}

double GeneralPlant::eval_V1(const Vector& x) const {
    expect(static_cast<bool>(V1), "general plant has no V1 map");
    const double v = V1(x);
    if (!std::isfinite(v)) {
        throw SimulationDivergedError("V1 produced a non-finite value");
    }
    return v;
}

void validate_gains(const IqcPlant& plant, const StateFeedbackGains& gains) {
    expect_shape(gains.K1, plant.nu(), plant.nx(), "K1");
    expect_shape(gains.K2, plant.nu(), plant.np(), "K2");
}

void validate_observer(const IqcPlant& plant, const ObserverDesign& design) {
    validate_gains(plant, design.gains);
    expect(plant.C.has_value(), "output feedback needs an output matrix C");
    expect_shape(design.L1, plant.nq(), plant.ny(), "L1");
    expect_shape(design.L2, plant.nx(), plant.ny(), "L2");
}

Vector state_controller_output(const IqcPlant& plant, const StateFeedbackGains& gains,
                               const Vector& x_held) {
    Vector u = gains.K1 * x_held;
    if (plant.np() > 0) {
        u += gains.K2 * plant.p(plant.Cq * x_held);
    }
    return u;
}

Vector observer_rhs(const IqcPlant& plant, const ObserverDesign& design, const Vector& xhat,
                    const Vector& u, const Vector& y_held) {
    expect(plant.C.has_value(), "observer needs an output matrix C");
    const Vector innovation = *plant.C * xhat - y_held;
    Vector r = plant.A * xhat + plant.B * u + design.L2 * innovation;
    if (plant.np() > 0) {
        r += plant.E * plant.p(plant.Cq * xhat + design.L1 * innovation);
    }
    return r;
}

ClosedLoopMatrices build_output_matrices(const IqcPlant& plant, const ObserverDesign& design) {
    plant.validate();
    validate_observer(plant, design);
    const Matrix& A = plant.A;
    const Matrix& B = plant.B;
    const Matrix& E = plant.E;
    const Matrix& C = *plant.C;
    const Matrix& K1 = design.gains.K1;
    const Matrix& K2 = design.gains.K2;
    const Matrix& L2 = design.L2;
    const auto nx = plant.nx();
    const auto ny = plant.ny();
    const auto np = plant.np();
    const auto nw = plant.nw();

    const Matrix acl = A + B * K1;
    const Matrix bk1 = B * K1;
    const Matrix bk2 = B * K2;
    const Matrix ebk2 = E + bk2;

    ClosedLoopMatrices m;
    m.A1.resize(2 * nx, 2 * nx);
    m.A1 << acl, -bk1, Matrix::Zero(nx, nx), A + L2 * C;
    m.A2.resize(2 * nx, ny + nx);
    m.A2 << Matrix::Zero(nx, ny), bk1, L2, Matrix::Zero(nx, nx);
    m.A3.resize(ny + nx, 2 * nx);
    m.A3 << -C * acl, C * bk1, -acl, acl + L2 * C;
    m.A4.resize(ny + nx, ny + nx);
    m.A4 << Matrix::Zero(ny, ny), -C * bk1, L2, -bk1;

    m.H1.resize(2 * nx, np);
    m.H1 << ebk2, Matrix::Zero(nx, np);
    m.H2.resize(2 * nx, np);
    m.H2 << Matrix::Zero(nx, np), -E;
    m.H3.resize(2 * nx, np);
    m.H3 << bk2, Matrix::Zero(nx, np);
    m.H4.resize(2 * nx, nw);
    m.H4 << plant.Ew, plant.Ew;

    m.H5.resize(ny + nx, np);
    m.H5 << -C * ebk2, -ebk2;
    m.H6.resize(ny + nx, np);
    m.H6 << Matrix::Zero(ny, np), -E;
    m.H7.resize(ny + nx, np);
    m.H7 << -C * bk2, -bk2;
    m.H8.resize(ny + nx, nw);
    m.H8 << -C * plant.Ew, Matrix::Zero(nx, nw);
    return m;
}

std::pair<Vector, Vector> state_impulsive_rhs(const IqcPlant& plant,
                                              const StateFeedbackGains& gains, const Vector& x,
                                              const Vector& e, const Vector& w) {
    const Matrix& B = plant.B;
    Vector dx = (plant.A + B * gains.K1) * x - B * gains.K1 * e + plant.Ew * w;
    if (plant.np() > 0) {
        const Vector q = plant.Cq * x;
        const Vector p = plant.p(q);
        const Vector dp = plant.p(q - plant.Cq * e) - p;
        dx += (plant.E + B * gains.K2) * p + B * gains.K2 * dp;
    }
    return {dx, dx};
}

Vector state_continuous_rhs(const IqcPlant& plant, const StateFeedbackGains& gains,
                            const Vector& x, const Vector& w) {
    Vector dx = (plant.A + plant.B * gains.K1) * x + plant.Ew * w;
    if (plant.np() > 0) {
        dx += (plant.E + plant.B * gains.K2) * plant.p(plant.Cq * x);
    }
    return dx;
}

OutputIncrements output_increments(const IqcPlant& plant, const ObserverDesign& design,
                                   const Vector& xi, const Vector& eta) {
    const auto nx = plant.nx();
    const auto ny = plant.ny();
    const Vector x = xi.head(nx);
    const Vector ehat = xi.tail(nx);
    const Vector ye = eta.head(ny);
    const Vector xe = eta.tail(nx);
    const Vector q = plant.Cq * x;
    OutputIncrements inc;
    inc.p = plant.p(q);
    inc.dp_hat = plant.p(q + plant.Cq * (xe - ehat)) - inc.p;
    const Vector dq_chk = -(plant.Cq + design.L1 * *plant.C) * ehat - design.L1 * ye;
    inc.dp_chk = plant.p(q + dq_chk) - inc.p;
    return inc;
}

std::pair<Vector, Vector> output_impulsive_rhs(const IqcPlant& plant, const ObserverDesign& design,
                                               const ClosedLoopMatrices& m, const Vector& xi,
                                               const Vector& eta, const Vector& w) {
    const auto inc = output_increments(plant, design, xi, eta);
    Vector dxi = m.A1 * xi + m.A2 * eta + m.H1 * inc.p + m.H2 * inc.dp_chk + m.H3 * inc.dp_hat +
                 m.H4 * w;
    Vector deta = m.A3 * xi + m.A4 * eta + m.H5 * inc.p + m.H6 * inc.dp_chk +
                  m.H7 * inc.dp_hat + m.H8 * w;
    return {dxi, deta};
}

Matrix recover_state_gain(const Matrix& P1, const Matrix& P2) {
    return solve_right_spd(P1, P2);
}

GeneralPlant as_general_plant(const IqcPlant& plant, const StateFeedbackGains& gains,
                              const Matrix& P) {
    plant.validate();
    validate_gains(plant, gains);
    expect_shape(P, plant.nx(), plant.nx(), "P");
    GeneralPlant g;
    g.nx = plant.nx();
    g.nu = plant.nu();
    g.nw = plant.nw();
    g.f = [plant](const Vector& x, const Vector& u, const Vector& w) {
        return plant.flow(x, u, w);
    };
    g.k = [plant, gains](const Vector& x) { return state_controller_output(plant, gains, x); };
    g.V1 = [P](const Vector& x) { return x.dot(P * x); };
    return g;
}

} // namespace petc::systems
