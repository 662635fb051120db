#include "petc/builtins.hpp"

#include <cmath>

namespace petc::builtins {

double example1_v1(double x) {
    const double x2 = x * x;
    return 1.0192 * x2 - 0.1298 * x2 * x + 0.4784 * x2 * x2;
}

Example1 example1() {
    Example1 ex;
    ex.plant.nx = 1;
    ex.plant.nu = 1;
    ex.plant.nw = 1;
    ex.plant.f = [](const Vector& x, const Vector& u, const Vector& w) {
        Vector dx(1);
        dx(0) = x(0) * x(0) - x(0) * x(0) * x(0) + u(0) + 0.1 * w(0);
        return dx;
    };
    ex.plant.k = [](const Vector& x) -> Vector { return -2.0 * x; };
    ex.plant.V1 = [](const Vector& x) { return example1_v1(x(0)); };

    ex.design.base = {0.4941, 4.4302};
    ex.design.alpha = 1.2;
    ex.design.d = 0.1;
    ex.design.s = 0.1;
    ex.design.alpha0 = 1.1;
    ex.design.h = 0.1;
    ex.design.lambda = 0.6;
    ex.published_coef = 1.0067;
    ex.published_T = 0.3314;
    ex.x0 = 0.3;
    ex.w_bound = 0.8;
    ex.mc_box = 0.5;
    ex.mc_w_bound = 0.3;
    ex.table_h = {0.1, 0.15, 0.2, 0.25};
    ex.table_f = {0.666, 0.831, 0.891, 0.929};
    return ex;
}

systems::IqcPlant example2_plant() {
    systems::IqcPlant plant;
    plant.A = (Matrix(2, 2) << 0.0, 1.0, 0.0, 0.0).finished();
    plant.B = (Matrix(2, 1) << 0.0, 1.0).finished();
    plant.E = (Matrix(2, 1) << 0.0, -1.0).finished();
    plant.Ew = (Matrix(2, 1) << 0.0, 1.0).finished();
    plant.Cq = (Matrix(1, 2) << 1.0, 0.0).finished();
    plant.C = (Matrix(1, 2) << 1.0, 0.0).finished();
    plant.p = iqc::Nonlinearity::sine(1);
    plant.M = iqc::lipschitz_multiplier(1.0, 1, 1);
    plant.validate();
    return plant;
}

Example2State example2_state() {
    Example2State ex;
    ex.plant = example2_plant();
    ex.gains.K1 = (Matrix(1, 2) << -11.2257, -5.5774).finished();
    ex.gains.K2 = Matrix::Constant(1, 1, 1.0);
    ex.P = (Matrix(2, 2) << 6.5131, 0.6581, 0.6581, 0.7294).finished();
    ex.design.base = {5.0, 20.0};
    ex.design.alpha = 1.2;
    ex.design.d = 0.6;
    ex.design.h = 0.04;
    ex.design.s = 0.04;
    ex.design.lambda = 0.31;
    ex.design.alpha0 = 1.0;
    ex.published_coef = 2.90;
    ex.x0 = (Vector(2) << 0.5, -0.5).finished();
    ex.w_bound = 0.1;
    return ex;
}

Example2Output example2_output() {
    Example2Output ex;
    ex.plant = example2_plant();
    ex.design.gains.K1 = (Matrix(1, 2) << -7.3936, -3.9937).finished();
    ex.design.gains.K2 = Matrix::Constant(1, 1, 1.0);
    ex.design.L1 = Matrix::Constant(1, 1, -1.0);
    ex.design.L2 = (Matrix(2, 1) << -5.1294, -18.0352).finished();
    ex.P1 = Matrix::Constant(1, 1, 0.1462);
    ex.P2 = (Matrix(2, 2) << 0.6307, 0.1195, 0.1195, 0.1434).finished();

    // Only the periods T = 0.0751, 0.0639 and λ = 0.627, 0.575 at h = 0.02 are
    // published; these rates are the unique pairs reproducing all four numbers.
    ex.timing.channel_y = {{4.612307964924824, 18.079318033638963}, 0.627};
    ex.timing.channel_u = {{5.2456104021338055, 21.352082742360516}, 0.575};
    ex.timing.h = 0.02;
    ex.timing.s = 0.02;
    ex.timing.alpha = 1.1;
    ex.timing.alpha0 = 1.0;
    ex.timing.d = 1.0;
    ex.timing.c1 = 1.0;
    ex.timing.c2 = 1.0;
    ex.published_coef_y = 0.9554;
    ex.published_coef_u = 1.1526;
    ex.published_T_y = 0.0751;
    ex.published_T_u = 0.0639;
    ex.x0 = (Vector(2) << -0.2, 0.6).finished();
    ex.xhat0 = (Vector(2) << -0.3, 0.7).finished();
    ex.w_bound = 0.05;
    ex.mc_box = 0.5;
    ex.table_h = {0.005, 0.01, 0.015, 0.02, 0.025};
    ex.table_fy = {0.223, 0.400, 0.512, 0.599, 0.668};
    ex.table_fu = {0.161, 0.261, 0.321, 0.380, 0.417};
    return ex;
}

sim::Scenario example1_scenario() {
    const auto ex = example1();
    sim::Scenario sc;
    sc.name = "example1";
    sc.kind = sim::Scenario::Kind::State;
    sc.plant = ex.plant;
    sc.base = ex.design.base;
    sc.s = ex.design.s;
    sc.alpha = ex.design.alpha;
    sc.alpha0 = ex.design.alpha0;
    sc.d = ex.design.d;
    sc.box = ex.mc_box;
    sc.w_bound = ex.mc_w_bound;
    return sc;
}

sim::Scenario example2_output_scenario() {
    const auto ex = example2_output();
    sim::Scenario sc;
    sc.name = "example2-output";
    sc.kind = sim::Scenario::Kind::Output;
    sc.iqc_plant = ex.plant;
    sc.observer = ex.design;
    sc.base_y = ex.timing.channel_y.base;
    sc.base_u = ex.timing.channel_u.base;
    sc.P1 = ex.P1;
    sc.P2 = ex.P2;
    sc.s = ex.timing.s;
    sc.alpha = ex.timing.alpha;
    sc.alpha0 = ex.timing.alpha0;
    sc.d = ex.timing.d;
    sc.box = ex.mc_box;
    sc.w_bound = ex.w_bound;
    return sc;
}

std::vector<std::string> names() {
    return {"example1", "example2", "example2-output"};
}

} // namespace petc::builtins
