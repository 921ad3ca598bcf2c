#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rch/intensity.hpp"

using namespace rch;

TEST_CASE("1D reachable interval from the closed form") {
    VectorField f = builtin("linear1d", {{"lambda", 2.0}});
    Interval1D iv = reach_1d_analytic(f, 0.0, 1.0, Box{{-5}, {5}});
    CHECK(iv.a == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(iv.b == doctest::Approx(0.5).epsilon(1e-10));
    // x - x^2 around its sink at 1: u = x - 1 solves u^2 + u +- r = 0
    VectorField l = builtin("logistic_shift");
    Interval1D a = reach_1d_analytic(l, 1.0, 0.25, Box{{0.01}, {3}});
    CHECK(a.a - 1 == doctest::Approx(-0.5).epsilon(1e-8));
    CHECK(a.b - 1 == doctest::Approx((-1 + std::sqrt(2.0)) / 2).epsilon(1e-10));
    Interval1D b = reach_1d_analytic(l, 1.0, 0.1, Box{{0.01}, {3}});
    CHECK(b.a - 1 == doctest::Approx((-1 + std::sqrt(0.6)) / 2).epsilon(1e-10));
    CHECK(b.b - 1 == doctest::Approx((-1 + std::sqrt(1.4)) / 2).epsilon(1e-10));
    Interval1D c = reach_1d_analytic(l, 1.0, 0.3, Box{{0.01}, {3}});
    CHECK(c.a_open_end);  // no root left of the sink: spills out of the bracket
}

TEST_CASE("1D analytic refuses non-sinks") {
    VectorField l = builtin("logistic_shift");
    CHECK_THROWS_AS(reach_1d_analytic(l, 0.0, 0.1, Box{{-1}, {0.5}}), PreconditionError);
    CHECK_THROWS_AS(reach_1d_analytic(l, 0.5, 0.1, Box{{0}, {1}}), PreconditionError);
}

TEST_CASE("1D intensities") {
    CHECK(intensity_1d(builtin("logistic_shift"), 1.0, 0.0, kInf).mu == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(intensity_1d(builtin("piecewise_sine"), 1.0, 0.0, kInf).mu ==
          doctest::Approx(1 / std::numbers::pi).epsilon(1e-9));
    VectorField q = builtin("quartic_ck");
    Vec x0 = find_equilibrium(q, {-1.6}), x1 = find_equilibrium(q, {2.8});
    Intensity1D m = intensity_1d(q, x0[0], -kInf, x1[0]);
    CHECK(m.mu == doctest::Approx(9).epsilon(1e-9));
    CHECK(m.argmax_right == doctest::Approx(2).epsilon(1e-6));
    VectorField lin = builtin("linear1d");
    CHECK(std::isinf(intensity_1d(lin, 0.0, -kInf, kInf).mu));
}

TEST_CASE("closed-form p-norm intensity") {
    CHECK(mu_pnorm_formula_check(2) == doctest::Approx(0.25));
    CHECK(mu_pnorm_formula_check(1) == doctest::Approx(std::sqrt(2.0) / 4));
    CHECK(mu_pnorm_formula_check(HUGE_VAL) == doctest::Approx(1 / (4 * std::sqrt(2.0))));
    CHECK_THROWS_AS(mu_pnorm_formula_check(0.5), PreconditionError);
}

TEST_CASE("scan of x - x^2 flags the escape near 0.25") {
    VectorField f = builtin("logistic_shift");
    GridSpec g = GridSpec::make(Box{{-0.5}, {2}}, 1e-3);
    CellSet A = CellSet::from_point(g, {1.0});
    CellSet D = CellSet::from_box(g, Box{{0.0005}, {2}});
    ReachConfig c;
    c.seed_invariant = true;
    std::vector<double> rs;
    for (int i = 0; i <= 10; ++i) rs.push_back(0.05 * i);
    ScanOptions so;
    so.domain_estimate = &D;
    auto pts = discontinuity_scan(f, A, rs, c, so);
    double first = -1;
    for (auto& p : pts)
        if (p.escaped) {
            first = p.r;
            break;
        }
    CHECK(first > 0.2);
    CHECK(first <= 0.3);
}

TEST_CASE("scan of the linear system grows linearly without jumps") {
    VectorField f = builtin("linear1d");
    GridSpec g = GridSpec::make(Box{{-3}, {3}}, 1e-3);
    CellSet A = CellSet::from_point(g, {0.0});
    ReachConfig c;
    c.seed_invariant = true;
    auto pts = discontinuity_scan(f, A, {0.25, 0.5, 0.75, 1.0, 1.5, 2.0}, c);
    for (auto& p : pts) {
        CHECK(!p.jump);
        CHECK(!p.escaped);
        CHECK(p.diameter == doctest::Approx(2 * p.r).epsilon(0.01));
    }
    CHECK_THROWS_AS(discontinuity_scan(f, A, {0.5, 0.25}, c), PreconditionError);
}

TEST_CASE("bisection on x - x^2 brackets 1/4") {
    VectorField f = builtin("logistic_shift");
    GridSpec g = GridSpec::make(Box{{-0.5}, {2}}, 1e-3);
    CellSet A = CellSet::from_point(g, {1.0});
    CellSet K = CellSet::from_box(g, Box{{0.02}, {2}});
    ReachConfig c;
    c.seed_invariant = true;
    Anchors an{{{1.0}}};
    IntensityBracket br = intensity_bisect(f, A, K, 1.0, 0.01, c, &an);
    CHECK(br.lo < 0.25);
    CHECK(br.hi > 0.2);
    CHECK(br.hi_verified);
    CHECK(br.hi - br.lo <= 0.011 + (br.has_band ? br.band_hi - br.band_lo : 0));
    // the barrier sits at x = 1/2, so the margin K keeps from 0 does not matter
    CHECK(br.lo > 0.2);
    CHECK(contains(br.target, br.feasible_evidence.set));
    CHECK(br.infeasible_evidence.left_target);
}

TEST_CASE("bisection preconditions") {
    VectorField f = builtin("logistic_shift");
    GridSpec g = GridSpec::make(Box{{-0.5}, {2}}, 1e-2);
    CellSet A = CellSet::from_point(g, {1.0});
    CellSet K = CellSet::from_box(g, Box{{0.5}, {1.5}});
    ReachConfig c;
    c.seed_invariant = true;
    CHECK_THROWS_AS(intensity_bisect(f, A, K, 1.0, 0.0, c), PreconditionError);
    CellSet off = CellSet::from_point(g, {0.0});
    CHECK_THROWS_AS(intensity_bisect(f, A, off, 1.0, 0.1, c), PreconditionError);
}

TEST_CASE("equilibrium finder") {
    Vec e = find_equilibrium(builtin("pp", {{"K", 4}}), {1.4, 1.9});
    CHECK(e[0] == doctest::Approx(1.386294).epsilon(1e-6));
    CHECK(e[1] == doctest::Approx(2.070495).epsilon(1e-6));
}

TEST_CASE("every catalog attractor has positive intensity") {
    struct Item {
        std::string name;
        std::map<std::string, double> p;
        Vec x;
        Box target;
        double delta, r_max;
    };
    std::vector<Item> items = {
        {"linear1d", {}, {0.0}, Box{{-1}, {1}}, 1e-3, 2},
        {"logistic_shift", {}, {1.0}, Box{{0.05}, {2}}, 1e-3, 1},
        {"scaled_logistic", {{"c", 3}}, {1.0}, Box{{0.05}, {2}}, 1e-3, 2},
        {"piecewise_sine", {}, {1.0}, Box{{0.05}, {3}}, 1e-3, 1},
        {"quartic_ck", {}, {-1.566647}, Box{{-4}, {2.7}}, 1e-3, 20},
        {"cubic3", {}, {2.0}, Box{{1.05}, {3}}, 1e-3, 1},
        {"diag_linear2d", {}, {0.0, 0.0}, Box{{-1, -1}, {1, 1}}, 0.02, 2},
        {"saddle_node_rot", {}, {0.0, 0.0}, Box{{-0.8, -0.8}, {0.6, 0.6}}, 0.02, 1},
        {"saddle_node_uv", {}, {0.0, 0.0}, Box{{-0.8, -0.8}, {0.9, 0.8}}, 0.02, 1},
        {"pp", {{"K", 3}}, {1.386294, 1.704435}, Box{{0, 0}, {5, 5}}, 0.05, 0.5},
    };
    for (auto& it : items) {
        CAPTURE(it.name);
        VectorField f = builtin(it.name, it.p);
        Vec x = find_equilibrium(f, it.x);
        GridSpec g = GridSpec::make(it.target, it.delta);
        CellSet A = CellSet::from_point(g, x);
        CellSet K = CellSet::full(g);
        ReachConfig c;
        c.seed_invariant = true;
        IntensityBracket br = intensity_bisect(f, A, K, it.r_max, it.r_max / 16, c);
        CHECK(br.lo > 0);
    }
}

TEST_CASE("analytic endpoints move outward with r") {
    VectorField l = builtin("logistic_shift");
    double pa = 1, pb = 1;
    for (double r = 0.02; r < 0.25; r += 0.02) {
        Interval1D iv = reach_1d_analytic(l, 1.0, r, Box{{0.01}, {3}});
        CHECK(iv.a < pa);
        CHECK(iv.b > pb);
        pa = iv.a;
        pb = iv.b;
    }
}

TEST_CASE("over and under agree with the analytic interval within 10 cells") {
    const double d = 1e-3;
    for (double r : {0.05, 0.1, 0.2}) {
        CAPTURE(r);
        VectorField l = builtin("logistic_shift");
        GridSpec g = GridSpec::make(Box{{0.2}, {2}}, d);
        ReachConfig c;
        c.r = r;
        c.seed_invariant = true;
        ReachResult rr = reach(l, CellSet::from_point(g, {1.0}), c);
        Interval1D iv = reach_1d_analytic(l, 1.0, r, Box{{0.2}, {2}});
        Vec lo, hi, ulo, uhi;
        rr.over.set.center_extent(lo, hi);
        rr.under.set.center_extent(ulo, uhi);
        CHECK(std::abs(lo[0] - iv.a) <= 10 * d);
        CHECK(std::abs(hi[0] - iv.b) <= 10 * d);
        CHECK(std::abs(ulo[0] - iv.a) <= 10 * d);
        CHECK(std::abs(uhi[0] - iv.b) <= 10 * d);
    }
}

TEST_CASE("1D bracket, scan and exact value are consistent") {
    VectorField f = builtin("piecewise_sine");
    double mu = intensity_1d(f, 1.0, 0.0, kInf).mu;
    GridSpec g = GridSpec::make(Box{{-0.5}, {3}}, 1e-3);
    CellSet A = CellSet::from_point(g, {1.0});
    CellSet K = CellSet::from_box(g, Box{{0.02}, {3}});
    ReachConfig c;
    c.seed_invariant = true;
    Anchors an{{{1.0}}};
    IntensityBracket br = intensity_bisect(f, A, K, 1.0, 0.01, c, &an);
    CHECK(br.lo <= mu);
    CHECK(br.hi >= mu);
    std::vector<double> rs;
    for (int i = 0; i <= 10; ++i) rs.push_back(0.05 * i);
    ScanOptions so;
    so.domain_estimate = &K;
    auto pts = discontinuity_scan(f, A, rs, c, so);
    double last_in = 0, first_out = kInf;
    for (auto& p : pts) {
        if (!p.escaped) last_in = p.r;
        else first_out = std::min(first_out, p.r);
    }
    CHECK(last_in <= br.hi);
    CHECK(first_out >= br.lo);
}
