#include "petc/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "petc/error.hpp"

namespace petc::io {

std::string dump(const Json& j) {
    return j.dump(2) + "\n";
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigurationError("cannot open '" + path + "'");
    }
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigurationError("malformed JSON in '" + path + "': " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigurationError("cannot write '" + path + "'");
    }
    out << text;
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

namespace {

double as_number(const Json& j, const std::string& what) {
    if (!j.is_number()) {
        throw ConfigurationError(what + ": expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw ConfigurationError(what + ": value is not finite");
    }
    return v;
}

} // namespace

Matrix matrix_from_json(const Json& j, const std::string& what) {
    if (j.is_number()) {
        return Matrix::Constant(1, 1, as_number(j, what));
    }
    if (!j.is_array()) {
        throw ConfigurationError(what + ": expected a number or an array");
    }
    if (j.empty()) {
        return Matrix(0, 0);
    }
    if (!j.front().is_array()) {
        Matrix m(static_cast<Eigen::Index>(j.size()), 1);
        for (std::size_t i = 0; i < j.size(); ++i) {
            m(static_cast<Eigen::Index>(i), 0) = as_number(j[i], what);
        }
        return m;
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigurationError(what + ": rows have unequal lengths");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = as_number(row[static_cast<std::size_t>(c)], what);
        }
    }
    return m;
}

Vector vector_from_json(const Json& j, const std::string& what) {
    const Matrix m = matrix_from_json(j, what);
    if (m.cols() != 1 && m.rows() != 1) {
        throw ConfigurationError(what + ": expected a vector");
    }
    return m.reshaped();
}

double number_from_json(const Json& j, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigurationError("missing field '" + key + "'");
    }
    return as_number(j.at(key), key);
}

Json to_json(const lmi::Assignment& a) {
    Json out = Json::object();
    for (const auto& [name, m] : a) {
        out[name] = m.size() == 1 ? Json(m(0, 0)) : matrix_to_json(m);
    }
    return out;
}

lmi::Assignment assignment_from_json(const Json& j) {
    if (!j.is_object()) {
        throw ConfigurationError("assignment must be an object");
    }
    lmi::Assignment a;
    for (const auto& [name, value] : j.items()) {
        a[name] = matrix_from_json(value, name);
    }
    return a;
}

Json to_json(const lmi::MarginReport& r) {
    return {{"verdict", lmi::to_string(r.verdict)},
            {"margin", r.margin},
            {"scale", r.scale},
            {"tolerance", r.tolerance},
            {"message", r.message}};
}

Json to_json(const lmi::FeasibilityResult& r) {
    return {{"status", lmi::to_string(r.status)},
            {"margin", r.margin},
            {"iterations", r.iterations},
            {"assignment", to_json(r.assignment)},
            {"message", r.message}};
}

Json describe(const lmi::LmiInstance& inst) {
    Json blocks = Json::array();
    for (std::size_t i = 0; i < inst.layout().sizes.size(); ++i) {
        blocks.push_back({{"name", inst.layout().name(i)}, {"size", inst.layout().sizes[i]}});
    }
    Json vars = Json::array();
    for (const auto& v : inst.variables()) {
        static const char* kinds[] = {"scalar", "symmetric", "full"};
        static const char* domains[] = {"free", "nonneg", "positive", "posdef"};
        vars.push_back({{"name", v.name},
                        {"kind", kinds[static_cast<int>(v.kind)]},
                        {"rows", v.rows},
                        {"cols", v.cols},
                        {"domain", domains[static_cast<int>(v.domain)]}});
    }
    return {{"name", inst.name()}, {"dim", inst.dim()}, {"blocks", blocks}, {"variables", vars}};
}

Json to_json(const timing::TimingDesign& d) {
    return {{"mu", d.base.mu},   {"gamma", d.base.gamma}, {"lambda", d.lambda},
            {"h", d.h},          {"s", d.s},              {"alpha", d.alpha},
            {"alpha0", d.alpha0}, {"d", d.d}};
}

Json to_json(const timing::OutputTimingDesign& d) {
    return {{"mu1", d.channel_y.base.mu},
            {"gamma1", d.channel_y.base.gamma},
            {"lambda1", d.channel_y.lambda},
            {"mu2", d.channel_u.base.mu},
            {"gamma2", d.channel_u.base.gamma},
            {"lambda2", d.channel_u.lambda},
            {"h", d.h},
            {"s", d.s},
            {"alpha", d.alpha},
            {"alpha0", d.alpha0},
            {"d", d.d},
            {"c1", d.c1},
            {"c2", d.c2}};
}

timing::TimingDesign timing_design_from_json(const Json& j) {
    timing::TimingDesign d;
    d.base = {number_from_json(j, "mu"), number_from_json(j, "gamma")};
    d.lambda = number_from_json(j, "lambda");
    d.h = number_from_json(j, "h");
    d.s = number_from_json(j, "s");
    d.alpha = number_from_json(j, "alpha");
    d.alpha0 = number_from_json(j, "alpha0");
    d.d = number_from_json(j, "d");
    return d;
}

timing::OutputTimingDesign output_timing_from_json(const Json& j) {
    timing::OutputTimingDesign d;
    d.channel_y = {{number_from_json(j, "mu1"), number_from_json(j, "gamma1")},
                   number_from_json(j, "lambda1")};
    d.channel_u = {{number_from_json(j, "mu2"), number_from_json(j, "gamma2")},
                   number_from_json(j, "lambda2")};
    d.h = number_from_json(j, "h");
    d.s = number_from_json(j, "s");
    d.alpha = number_from_json(j, "alpha");
    d.alpha0 = number_from_json(j, "alpha0");
    d.d = number_from_json(j, "d");
    d.c1 = number_from_json(j, "c1");
    d.c2 = number_from_json(j, "c2");
    return d;
}

Json to_json(const systems::StateFeedbackGains& g) {
    return {{"K1", matrix_to_json(g.K1)}, {"K2", matrix_to_json(g.K2)}};
}

Json to_json(const systems::ObserverDesign& o) {
    return {{"K1", matrix_to_json(o.gains.K1)},
            {"K2", matrix_to_json(o.gains.K2)},
            {"L1", matrix_to_json(o.L1)},
            {"L2", matrix_to_json(o.L2)}};
}

namespace {

Matrix field(const Json& j, const char* key) {
    if (!j.contains(key)) {
        throw ConfigurationError(std::string("missing field '") + key + "'");
    }
    return matrix_from_json(j.at(key), key);
}

// A row vector given as a flat array is read as 1×n for gains.
Matrix gain_field(const Json& j, const char* key) {
    Matrix m = field(j, key);
    if (j.at(key).is_array() && !j.at(key).empty() && !j.at(key).front().is_array()) {
        m.transposeInPlace();
    }
    return m;
}

} // namespace

systems::StateFeedbackGains gains_from_json(const Json& j) {
    systems::StateFeedbackGains g;
    g.K1 = gain_field(j, "K1");
    g.K2 = j.contains("K2") ? gain_field(j, "K2") : Matrix(g.K1.rows(), 0);
    return g;
}

systems::ObserverDesign observer_from_json(const Json& j) {
    systems::ObserverDesign o;
    o.gains = gains_from_json(j);
    o.L1 = j.contains("L1") ? gain_field(j, "L1") : Matrix(0, 0);
    o.L2 = field(j, "L2");
    return o;
}

systems::IqcPlant plant_from_json(const Json& j) {
    if (!j.is_object()) {
        throw ConfigurationError("system must be an object or a builtin name");
    }
    const Matrix A = field(j, "A");
    const Matrix B = field(j, "B");
    const Matrix Ew = field(j, "Ew");
    std::optional<Matrix> C;
    if (j.contains("C")) {
        C = gain_field(j, "C");
    }
    if (!j.contains("E")) {
        return systems::IqcPlant::linear(A, B, Ew, C);
    }
    systems::IqcPlant plant;
    plant.A = A;
    plant.B = B;
    plant.Ew = Ew;
    plant.C = C;
    plant.E = field(j, "E");
    plant.Cq = gain_field(j, "Cq");
    const auto nq = plant.Cq.rows();
    const auto np = plant.E.cols();
    const Json nl = j.value("nonlinearity", Json("sin"));
    if (nl.is_string()) {
        const auto name = nl.get<std::string>();
        if (name == "sin") {
            plant.p = iqc::Nonlinearity::sine(nq);
        } else if (name == "tanh") {
            plant.p = iqc::Nonlinearity(nq, nq, [](const Vector& q) -> Vector {
                return q.array().tanh().matrix();
            });
        } else if (name == "zero") {
            plant.p = iqc::Nonlinearity::zero(nq, np);
        } else {
            throw ConfigurationError("unknown nonlinearity '" + name + "'");
        }
    } else if (nl.is_object() && nl.contains("linear")) {
        plant.p = iqc::Nonlinearity::linear(nq, number_from_json(nl, "linear"));
    } else {
        throw ConfigurationError("nonlinearity must be \"sin\", \"tanh\", \"zero\" or {\"linear\": g}");
    }
    const Json mj = j.value("multiplier", Json{{"lipschitz", 1.0}});
    if (mj.contains("lipschitz")) {
        plant.M = iqc::lipschitz_multiplier(number_from_json(mj, "lipschitz"), nq, np);
    } else if (mj.contains("sector")) {
        const Json& s = mj.at("sector");
        plant.M = iqc::sector_multiplier(field(s, "K1"), field(s, "K2"), field(s, "S"));
    } else if (mj.contains("matrix")) {
        plant.M = iqc::MultiplierMatrix(SymMatrix::from_upper(field(mj, "matrix")), nq, np);
    } else {
        throw ConfigurationError("multiplier must give lipschitz, sector or matrix");
    }
    plant.validate();
    return plant;
}

Json to_json(const design::StateDesign& d) {
    return {{"kind", "state"},
            {"lmi", d.lmi},
            {"synthesized_gains", d.synthesized},
            {"gains", to_json(d.gains)},
            {"assignment", to_json(d.assignment)},
            {"verify", to_json(d.margin)},
            {"P", matrix_to_json(d.P)},
            {"mu", d.mu},
            {"gamma", d.gamma},
            {"d", d.d},
            {"timing", to_json(d.timing)},
            {"trigger_coefficient", d.coef},
            {"T", timing::max_sampling_period(d.timing.base)}};
}

Json to_json(const design::OutputDesign& d) {
    return {{"kind", "output"},
            {"lmi", d.lmi},
            {"observer", to_json(d.observer)},
            {"assignment", to_json(d.assignment)},
            {"verify", to_json(d.margin)},
            {"coupling", to_json(d.coupling)},
            {"coupling_verify", to_json(d.coupling_margin)},
            {"P", matrix_to_json(d.P)},
            {"P1", matrix_to_json(d.P1)},
            {"P2", matrix_to_json(d.P2)},
            {"timing", to_json(d.timing)},
            {"trigger_coefficient_y", d.coef_y},
            {"trigger_coefficient_u", d.coef_u},
            {"T1", timing::max_sampling_period(d.timing.channel_y.base)},
            {"T2", timing::max_sampling_period(d.timing.channel_u.base)}};
}

Json to_json(const sim::StatsRow& r) {
    Json out = {{"h", r.h},
                {"n_runs", r.n_runs},
                {"seed", r.seed},
                {"certified", r.certified}};
    if (!r.error.empty()) {
        out["error"] = r.error;
    }
    return out;
}

Json to_json(const sim::LyapunovReport& r) {
    return {{"jump_checks", r.jump_checks},
            {"jump_violations", r.jump_violations},
            {"worst_jump_excess", r.worst_jump_excess},
            {"flow_checks", r.flow_checks},
            {"flow_violations", r.flow_violations},
            {"worst_flow_excess", r.worst_flow_excess},
            {"ok", r.ok()}};
}

} // namespace petc::io
