#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rch/flow.hpp"

using namespace rch;

TEST_CASE("control signal basics") {
    ControlSignal g;
    g.breaks = {0, 1, 3};
    g.values = {{1.0, 0.0}, {0.0, -2.0}};
    g.validate();
    CHECK(g.duration() == 3);
    CHECK(g.at(0.5)[0] == 1);
    CHECK(g.at(1.0)[1] == -2);  // right-continuous
    CHECK(g.at(3.0)[1] == -2);
    CHECK(g.sup_norm(NormSpec{}) == 2);
    ControlSignal h = ControlSignal::constant({0.5, 0.5}, 2);
    g.append(h);
    CHECK(g.duration() == 5);
    CHECK(g.at(4)[0] == 0.5);
    ControlSignal bad;
    bad.breaks = {0, 2, 1};
    bad.values = {{0.0}, {0.0}};
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("rk4 is fourth order on x' = -x") {
    VectorField f = builtin("linear1d", {{"lambda", 1.0}});
    auto err = [&](double h) {
        Vec x = integrate_endpoint(f, {1.0}, ControlSignal::zero(1, 1), 1.0, h);
        return std::abs(x[0] - std::exp(-1.0));
    };
    double e1 = err(0.1), e2 = err(0.05);
    CHECK(e1 / e2 == doctest::Approx(16).epsilon(0.1));
}

TEST_CASE("constant control on the linear system matches the closed form") {
    VectorField f = builtin("linear1d", {{"lambda", 2.0}});
    Vec x = integrate_endpoint(f, {0.0}, ControlSignal::constant({1.0}, 3), 3.0, 0.01);
    CHECK(x[0] == doctest::Approx(0.5 * (1 - std::exp(-6.0))).epsilon(1e-9));
}

TEST_CASE("integration steps land on control breakpoints") {
    VectorField f = builtin("linear1d", {{"lambda", 0.0}});
    ControlSignal g;
    g.breaks = {0, 0.3, 1.0};
    g.values = {{1.0}, {-1.0}};
    Trajectory tr = integrate(f, {0.0}, g, 1.0, 0.25);
    bool hit = false;
    for (double t : tr.times) hit = hit || std::abs(t - 0.3) < 1e-15;
    CHECK(hit);
    CHECK(tr.states.back()[0] == doctest::Approx(0.3 - 0.7));
}

TEST_CASE("integrate preconditions") {
    VectorField f = builtin("linear1d");
    CHECK_THROWS_AS(integrate(f, {0.0, 0.0}, ControlSignal::zero(1, 1), 1, 0.1), PreconditionError);
    CHECK_THROWS_AS(integrate(f, {0.0}, ControlSignal::zero(1, 1), 2, 0.1), PreconditionError);
    CHECK_THROWS_AS(integrate(f, {0.0}, ControlSignal::zero(1, 1), 1, 0.0), PreconditionError);
    CHECK_THROWS_AS(integrate(f, {50.0}, ControlSignal::zero(1, 1), 1, 0.1), PreconditionError);
}

TEST_CASE("domain exit is flagged") {
    VectorField f = builtin("logistic_shift");
    Trajectory tr = integrate(f, {-1.0}, ControlSignal::zero(1, 5), 5.0, 0.01);
    CHECK(tr.exited_domain);
}

TEST_CASE("gronwall bound holds for perturbed controls") {
    // |x_g(T) - x_h(T)| <= T |g-h| e^{LT} for constant controls
    std::mt19937_64 rng(11);
    VectorField f = builtin("saddle_node_rot");
    const double L = 2.5;  // bound on |J| over the sampled region below
    for (int t = 0; t < 200; ++t) {
        std::uniform_real_distribution<double> U(-0.2, 0.2);
        Vec x0{U(rng), U(rng)}, a{U(rng), U(rng)}, b{U(rng), U(rng)};
        double T = 0.5;
        Vec xa = integrate_endpoint(f, x0, ControlSignal::constant(a, T), T, 0.01);
        Vec xb = integrate_endpoint(f, x0, ControlSignal::constant(b, T), T, 0.01);
        double gap = std::hypot(a[0] - b[0], a[1] - b[1]);
        CHECK(std::hypot(xa[0] - xb[0], xa[1] - xb[1]) <= gronwall_bound(L, T, gap) + 1e-12);
    }
    CHECK(gronwall_bound(0, 2, 0.5) == doctest::Approx(1.0));
    CHECK_THROWS_AS(gronwall_bound(-1, 1, 1), PreconditionError);
}

TEST_CASE("time map image covers sampled endpoints") {
    VectorField f = builtin("diag_linear2d");
    GridSpec g = GridSpec::make(Box{{-1, -1}, {1, 1}}, 0.02);
    CellSet s = CellSet::from_box(g, Box{{0.4, 0.2}, {0.6, 0.4}});
    TimeMapResult tm = time_t_map(f, s, 0.5);
    CHECK(!tm.exited);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(0, 1);
    for (int t = 0; t < 500; ++t) {
        Vec x{0.4 + 0.2 * U(rng), 0.2 + 0.2 * U(rng)};
        Vec y = integrate_endpoint(f, x, ControlSignal::zero(2, 0.5), 0.5, 0.01);
        CHECK(tm.image.contains_point(y.data()));
    }
    // contraction: the image is smaller than the source
    CHECK(tm.image.count() < s.count());
}

TEST_CASE("trajectory csv columns") {
    VectorField f = builtin("diag_linear2d");
    Trajectory tr = integrate(f, {1.0, 1.0}, ControlSignal::zero(2, 0.1), 0.1, 0.05);
    std::stringstream ss;
    write_trajectory_csv(ss, tr);
    std::string head;
    std::getline(ss, head);
    CHECK(head == "t,x1,x2");
    int rows = 0;
    std::string line;
    while (std::getline(ss, line)) ++rows;
    CHECK(rows == static_cast<int>(tr.times.size()));
}
