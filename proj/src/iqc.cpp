#include "petc/iqc.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "petc/error.hpp"

namespace petc::iqc {

MultiplierMatrix::MultiplierMatrix(SymMatrix m, Eigen::Index n_q, Eigen::Index n_p)
    : m_(std::move(m)), n_q_(n_q), n_p_(n_p) {
    if (n_q < 0 || n_p < 0 || m_.dim() != n_q + n_p) {
        std::ostringstream os;
        os << "multiplier of dimension " << m_.dim() << " does not match n_q + n_p = "
           << n_q + n_p;
        throw ConfigurationError(os.str());
    }
}

MultiplierMatrix MultiplierMatrix::scaled(double factor) const {
    return {factor * m_, n_q_, n_p_};
}

Nonlinearity::Nonlinearity(Eigen::Index n_q, Eigen::Index n_p, Map map, bool zero_at_zero)
    : n_q_(n_q), n_p_(n_p), map_(std::move(map)), zero_at_zero_(zero_at_zero) {
    if (!map_) {
        throw ConfigurationError("nonlinearity map is empty");
    }
    const Vector p0 = map_(Vector::Zero(n_q_));
    if (p0.size() != n_p_) {
        throw ConfigurationError("nonlinearity output has the wrong dimension");
    }
    if (zero_at_zero_ && p0.norm() > 1e-12) {
        throw ConfigurationError("nonlinearity declared zero at zero but p(0) != 0");
    }
}

Vector Nonlinearity::operator()(const Vector& q) const {
    if (q.size() != n_q_) {
        throw ConfigurationError("nonlinearity input has the wrong dimension");
    }
    return map_(q);
}

Nonlinearity Nonlinearity::sine(Eigen::Index n) {
    return {n, n, [](const Vector& q) -> Vector { return q.array().sin().matrix(); }};
}

Nonlinearity Nonlinearity::linear(Eigen::Index n, double gain) {
    return {n, n, [gain](const Vector& q) -> Vector { return gain * q; }};
}

Nonlinearity Nonlinearity::zero(Eigen::Index n_q, Eigen::Index n_p) {
    return {n_q, n_p, [n_p](const Vector&) -> Vector { return Vector::Zero(n_p); }};
}

MultiplierMatrix lipschitz_multiplier(double lipschitz, Eigen::Index n_q, Eigen::Index n_p) {
    if (!(lipschitz > 0.0)) {
        throw DomainError("Lipschitz constant must be positive");
    }
    Vector d(n_q + n_p);
    d.head(n_q).setConstant(lipschitz * lipschitz);
    d.tail(n_p).setConstant(-1.0);
    return {SymMatrix::diagonal(d), n_q, n_p};
}

MultiplierMatrix sector_multiplier(const Matrix& k1, const Matrix& k2, const Matrix& s) {
    const auto n_p = s.rows();
    if (s.cols() != n_p || k1.rows() != n_p || k2.rows() != n_p || k1.cols() != k2.cols()) {
        throw ConfigurationError("sector multiplier: inconsistent K1, K2, S dimensions");
    }
    if (!s.isApprox(s.transpose(), 0.0)) {
        throw ConfigurationError("sector multiplier: S must be symmetric");
    }
    const auto n_q = k1.cols();
    BlockLayout layout{{n_q, n_p}, {"q", "p"}};
    const Matrix top = -k1.transpose() * s * k2 - k2.transpose() * s * k1;
    const Matrix cross = (s * (k1 + k2)).transpose();
    return {assemble(layout, {{0, 0, top}, {0, 1, cross}, {1, 1, -2.0 * s}}), n_q, n_p};
}

double iqc_form(const MultiplierMatrix& m, const Vector& dq, const Vector& dp) {
    if (dq.size() != m.n_q() || dp.size() != m.n_p()) {
        throw ConfigurationError("iqc_form: increment dimensions do not match the multiplier");
    }
    Vector z(m.n_q() + m.n_p());
    z << dq, dp;
    return z.dot(m.matrix().matrix() * z);
}

MultiplierReport check_multiplier(const MultiplierMatrix& m, const Nonlinearity& p, int n_samples,
                                  double radius, std::uint64_t seed) {
    if (n_samples < 1) {
        throw DomainError("check_multiplier: need at least one sample");
    }
    if (p.n_q() != m.n_q() || p.n_p() != m.n_p()) {
        throw ConfigurationError("check_multiplier: nonlinearity and multiplier disagree");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-radius, radius);
    MultiplierReport rep;
    rep.min_value = INFINITY;
    rep.samples = n_samples;
    Vector q1(m.n_q());
    Vector q2(m.n_q());
    for (int i = 0; i < n_samples; ++i) {
        for (Eigen::Index k = 0; k < q1.size(); ++k) {
            q1(k) = unif(rng);
        }
        for (Eigen::Index k = 0; k < q2.size(); ++k) {
            q2(k) = unif(rng);
        }
        const double v = iqc_form(m, q2 - q1, p(q2) - p(q1));
        if (v < rep.min_value) {
            rep.min_value = v;
            rep.q1 = q1;
            rep.q2 = q2;
        }
    }
    rep.valid = rep.min_value >= -1e-9;
    return rep;
}

} // namespace petc::iqc
