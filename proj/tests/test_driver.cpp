#include <doctest.h>

#include <cmath>
#include <random>

#include "rbsde/driver.hpp"
#include "rbsde/solver.hpp"
#include "support/gen.hpp"

using namespace rbsde;

namespace {

DriverSpec expr_spec(const TreeModel& model, const std::string& text,
                     std::map<std::string, AdaptedProcess> coeffs = {}) {
    DriverSpec d;
    d.f = std::make_shared<ExprDriver>(parse_expr(text), std::move(coeffs));
    d.g = AdaptedProcess(model, model.depth() - 1, 0.0);
    d.nu_integrand = AdaptedProcess(model, model.depth() - 1, 0.0);
    d.r = AdaptedProcess(model, model.depth() - 1, 1.0);
    d.h = AdaptedProcess(model, model.depth() - 1, 1.0);
    return d;
}

RBSDEData data_with(const TreeModel& model, DriverSpec driver, double xi_value = 0.0,
                    double obstacle = -10.0) {
    RBSDEData data;
    data.driver = std::move(driver);
    data.xi.assign(model.nodes_at(model.depth()), xi_value);
    data.obstacle = AdaptedProcess(model, model.depth(), obstacle);
    return data;
}

}  // namespace

TEST_CASE("drift increment assembles the three terms") {
    TreeModel m = build_tree(2, 2, 0.25, 1.0);
    RBSDEData zero = data_with(m, expr_spec(m, "0"));
    CHECK(drift_increment(zero, m, NodeId{0, 0}, 1.0, 1.0, 0.0, 0.0) == doctest::Approx(0.0));

    // f = |z|^2, z sigma = 2, dt = 0.25 -> 1.0
    TreeModel m2 = build_tree(2, 2, 0.25, 2.0);
    RBSDEData quad = data_with(m2, expr_spec(m2, "sq(z)"));
    CHECK(drift_increment(quad, m2, NodeId{0, 0}, 0.0, 1.0, 0.0, 0.0) == doctest::Approx(1.0));

    // binary mode: result is f dt for any g since the brackets vanish
    RBSDEData withg = data_with(m2, expr_spec(m2, "sq(z)"));
    withg.driver.g = AdaptedProcess(m2, 1, 3.0);
    CHECK(drift_increment(withg, m2, NodeId{0, 0}, 0.0, 1.0, 0.0, 0.0) == doctest::Approx(1.0));
    // and the g d<N-perp> term enters through the supplied bracket
    CHECK(drift_increment(withg, m2, NodeId{0, 0}, 0.0, 1.0, 0.5, 0.1) ==
          doctest::Approx(1.0 + 0.1 + 3.0 * 0.5));
}

TEST_CASE("validate_qg") {
    TreeModel m = build_tree(2, 2, 0.25, 1.0);

    RBSDEData quad = data_with(m, expr_spec(m, "sq(z)"));
    quad.driver.lambda = GrowthFn::constant(1.0);
    CHECK(validate_qg(quad, m).pass);

    RBSDEData zero = data_with(m, expr_spec(m, "0"));
    CHECK(validate_qg(zero, m).pass);

    // f = y |z|^3 violates quadratic growth at large |z|
    RBSDEData cubic = data_with(m, expr_spec(m, "y*abs(z)^3"));
    cubic.driver.lambda = GrowthFn::affine(1.0);
    const ValidationReport rep = validate_qg(cubic, m);
    CHECK(!rep.pass);
    CHECK(std::abs(rep.worst.z) >= 1.0);
}

TEST_CASE("validate_der") {
    TreeModel m = build_tree(2, 2, 0.25, 1.0);

    RBSDEData half = data_with(m, expr_spec(m, "0.5*sq(z)"));
    half.driver.lambda = GrowthFn::constant(1.0);
    half.driver.rho_prime = GrowthFn::constant(1.0);
    CHECK(validate_der(half, m).pass);

    // f = y^2 with constant rho fails for large |y|
    RBSDEData ysq = data_with(m, expr_spec(m, "sq(y)"));
    ysq.driver.rho = GrowthFn::constant(1.0);
    ysq.driver.lambda = GrowthFn::constant(2.0);
    const ValidationReport rep = validate_der(ysq, m);
    CHECK(!rep.pass);
    CHECK(rep.worst.check == "f_y");

    // linear driver passes with matching constants
    RBSDEData lin = data_with(m, expr_spec(m, "2*y + 3*z"));
    lin.driver.rho = GrowthFn::constant(2.0);
    lin.driver.rho_prime = GrowthFn::constant(3.0);
    lin.driver.lambda = GrowthFn::constant(1.0);
    CHECK(validate_der(lin, m).pass);
}

TEST_CASE("recenter") {
    TreeModel m = build_tree(2, 2, 0.25, 1.0);
    std::mt19937_64 rng(13);

    // around zero: f_bar = f - alpha
    DriverSpec d = expr_spec(m, "sq(z) + y + 2");
    AdaptedProcess zeros_y(m, 2, 0.0);
    AdaptedProcess zeros_z(m, 1, 0.0);
    DriverSpec centered = recenter(d, zeros_y, zeros_z, m);
    for (int rep = 0; rep < 20; ++rep) {
        const double y = testgen::uniform(rng, -1, 1), z = testgen::uniform(rng, -1, 1);
        CHECK((*centered.f)(NodeId{0, 0}, 0.0, y, z) ==
              doctest::Approx((*d.f)(NodeId{0, 0}, 0.0, y, z) - 2.0));
    }
    CHECK((*centered.f)(NodeId{1, 1}, 0.25, 0.0, 0.0) == doctest::Approx(0.0));
    CHECK(centered.lambda(0.0) == doctest::Approx(2.0 * d.lambda(0.0)));

    // linear driver: recentering keeps the slopes
    DriverSpec lin = expr_spec(m, "2*y + 3*z");
    AdaptedProcess y1(m, 2, 0.7);
    AdaptedProcess z1(m, 1, -0.2);
    DriverSpec lin_c = recenter(lin, y1, z1, m);
    for (int rep = 0; rep < 20; ++rep) {
        const double y = testgen::uniform(rng, -1, 1), z = testgen::uniform(rng, -1, 1);
        CHECK((*lin_c.f)(NodeId{0, 0}, 0.0, y, z) == doctest::Approx(2.0 * y + 3.0 * z));
    }

    // f = 0.5 |z|^2 around Z1 sigma = 1: f_bar = 0.5 z^2 + z, checked pointwise
    DriverSpec quad = expr_spec(m, "0.5*sq(z)");
    AdaptedProcess z_one(m, 1, 1.0);
    DriverSpec quad_c = recenter(quad, zeros_y, z_one, m);
    for (int rep = 0; rep < 100; ++rep) {
        const double z = testgen::uniform(rng, -3, 3);
        CHECK((*quad_c.f)(NodeId{0, 0}, 0.0, 0.0, z) ==
              doctest::Approx(0.5 * z * z + z).epsilon(1e-12));
    }
}

TEST_CASE("translate_obstacle") {
    TreeModel m = build_tree(2, 2, 0.25, 1.0);

    // already nonpositive: identity
    RBSDEData low = data_with(m, expr_spec(m, "sq(z)"), 0.5, -1.0);
    TranslatedData t0 = translate_obstacle(low, m);
    CHECK(t0.shift == 0.0);
    CHECK(t0.data.xi[0] == doctest::Approx(0.5));

    // L = 1, xi = 2 -> shifted to L = 0, xi = 1
    RBSDEData one = data_with(m, expr_spec(m, "sq(z)"), 2.0, 1.0);
    TranslatedData t1 = translate_obstacle(one, m);
    CHECK(t1.shift == doctest::Approx(1.0));
    CHECK(t1.data.xi[0] == doctest::Approx(1.0));
    for (int t = 0; t <= 2; ++t)
        for (double l : t1.data.obstacle.level(t)) CHECK(l == doctest::Approx(0.0));

    // inverse translation restores the original solution node-wise
    std::mt19937_64 rng(6);
    testgen::GenConfig cfg;
    cfg.binding_obstacle = true;
    cfg.allow_quaternary = false;
    testgen::Instance inst = testgen::make_instance(rng, cfg);
    // raise the obstacle so the shift is nontrivial
    for (int t = 0; t <= inst.model.depth(); ++t)
        for (double& l : inst.data.obstacle.level(t)) l += 0.3;
    for (std::size_t i = 0; i < inst.data.xi.size(); ++i)
        inst.data.xi[i] = std::max(inst.data.xi[i], inst.data.obstacle.level(inst.model.depth())[i]);

    const Solution direct = solve_auto(inst.data, inst.model, inst.measure, 1e-12, 400).solution;
    const TranslatedData shifted = translate_obstacle(inst.data, inst.model);
    CHECK(shifted.shift > 0.0);
    const Solution via = solve_auto(shifted.data, inst.model, inst.measure, 1e-12, 400).solution;
    for (int t = 0; t <= inst.model.depth(); ++t)
        for (std::size_t i = 0; i < inst.model.nodes_at(t); ++i)
            CHECK(via.y.level(t)[i] + shifted.shift ==
                  doctest::Approx(direct.y.level(t)[i]).epsilon(1e-9));
}

TEST_CASE("translated residual drift bound") {
    // |f_shift(s,0,0)| <= |f(s,0,0)| + rho r^2 U
    TreeModel m = build_tree(2, 2, 0.25, 1.0);
    RBSDEData d = data_with(m, expr_spec(m, "0.3*y + sq(z) + 0.1"), 2.0, 0.8);
    d.driver.rho = GrowthFn::constant(0.3);
    const TranslatedData shifted = translate_obstacle(d, m);
    const AdaptedProcess alpha0 = residual_drift(d.driver, m);
    const AdaptedProcess alpha1 = residual_drift(shifted.data.driver, m);
    for (int t = 0; t < 2; ++t)
        for (std::size_t i = 0; i < m.nodes_at(t); ++i)
            CHECK(std::abs(alpha1.level(t)[i]) <=
                  std::abs(alpha0.level(t)[i]) + 0.3 * shifted.shift + 1e-12);
}

TEST_CASE("linearize") {
    TreeModel m = build_tree(2, 2, 0.25, 1.0);
    std::mt19937_64 rng(19);

    DriverSpec d = expr_spec(m, "2*y + 3*z + sq(z)");
    Linearization lin = linearize(d, m);
    CHECK(lin.beta.at(NodeId{0, 0}) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(lin.gamma.at(NodeId{0, 0}) == doctest::Approx(3.0).epsilon(1e-8));
    // remainder is the pure quadratic
    for (int rep = 0; rep < 20; ++rep) {
        const double z = testgen::uniform(rng, -2, 2);
        CHECK((*lin.remainder)(NodeId{0, 0}, 0.0, 0.5, z) == doctest::Approx(z * z).epsilon(1e-7));
    }

    DriverSpec pure = expr_spec(m, "sq(z)");
    Linearization lp = linearize(pure, m);
    CHECK(lp.beta.at(NodeId{0, 0}) == doctest::Approx(0.0));
    CHECK(lp.gamma.at(NodeId{0, 0}) == doctest::Approx(0.0));

    DriverSpec mixed = expr_spec(m, "tanh(y) + z*y");
    Linearization lm = linearize(mixed, m);
    CHECK(lm.beta.at(NodeId{0, 0}) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(lm.gamma.at(NodeId{0, 0}) == doctest::Approx(0.0).epsilon(1e-8));
    // remainder vanishes to second order at the origin
    CHECK(std::abs((*lm.remainder)(NodeId{0, 0}, 0.0, 0.0, 0.0)) < 1e-12);
    CHECK(std::abs(driver_fy(*lm.remainder, NodeId{0, 0}, 0.0, 0.0, 0.0)) < 1e-6);
    CHECK(std::abs(driver_fz(*lm.remainder, NodeId{0, 0}, 0.0, 0.0, 0.0)) < 1e-6);
}

TEST_CASE("linearization reconstructs the driver pointwise") {
    std::mt19937_64 rng(21);
    TreeModel m = build_tree(2, 2, 0.25, 1.0);
    for (const char* text : {"0.4*sq(z) + 0.2*y + 0.1*z", "tanh(y) - 0.3*sq(z)", "y + z"}) {
        DriverSpec d = expr_spec(m, text);
        Linearization lin = linearize(d, m);
        for (int rep = 0; rep < 40; ++rep) {
            const double y = testgen::uniform(rng, -1.5, 1.5);
            const double z = testgen::uniform(rng, -1.5, 1.5);
            const NodeId v{1, static_cast<std::size_t>(testgen::uniform_int(rng, 0, 1))};
            const double reconstructed = lin.beta.at(v) * y + lin.gamma.at(v) * z +
                                         (*lin.remainder)(v, 0.25, y, z);
            CHECK(reconstructed == doctest::Approx((*d.f)(v, 0.25, y, z)).epsilon(1e-9));
        }
    }
}

TEST_CASE("validate_monotone") {
    TreeModel m = build_tree(2, 2, 0.25, 1.0);
    RBSDEData down = data_with(m, expr_spec(m, "0.25*sq(z) - y*sq(y)"));
    down.driver.family = Family::monotone_y;
    down.driver.mu = 0.0;
    CHECK(validate_monotone(down, m).pass);

    RBSDEData up = data_with(m, expr_spec(m, "2*y"));
    up.driver.family = Family::monotone_y;
    up.driver.mu = 0.0;
    CHECK(!validate_monotone(up, m).pass);
    up.driver.mu = 2.0;
    CHECK(validate_monotone(up, m).pass);
}

TEST_CASE("driver errors carry the node") {
    TreeModel m = build_tree(2, 2, 0.25, 1.0);
    DriverSpec d = expr_spec(m, "y / z");
    CHECK_THROWS_WITH_AS((*d.f)(NodeId{1, 1}, 0.25, 1.0, 0.0), doctest::Contains("node"), Error);
    CHECK_THROWS_AS(expr_spec(m, "y + unknown_name"), Error);
}
