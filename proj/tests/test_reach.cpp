#include <omp.h>

#include <cmath>
#include <random>

#include "doctest.h"
#include "rch/reach.hpp"

using namespace rch;

namespace {

struct Case2D {
    VectorField f;
    GridSpec g;
    CellSet seed;
    ReachConfig c;
};

Case2D saddle(double r, double delta = 0.01) {
    Case2D k{builtin("saddle_node_rot"), GridSpec::make(Box{{-1, -1}, {1, 1}}, delta), {}, {}};
    k.seed = CellSet::from_point(k.g, {0.0, 0.0});
    k.c.r = r;
    k.c.seed_invariant = true;
    k.c.H = 0.5;
    return k;
}

// random piecewise-constant control with sup norm <= r
ControlSignal random_control(std::mt19937_64& rng, int n, double r, double T, const NormSpec& nm) {
    std::uniform_real_distribution<double> U(-1, 1), L(0.05, 0.6), S(0, 1);
    ControlSignal g;
    g.breaks.push_back(0);
    double t = 0;
    while (t < T) {
        Vec u(n);
        double s = 0;
        while (s == 0) {
            for (auto& v : u) v = U(rng);
            s = norm_eval(nm, u);
        }
        // mostly on the sphere, where escapes happen
        double a = S(rng) < 0.7 ? 1.0 : S(rng);
        for (auto& v : u) v *= a * r / s;
        t = std::min(T, t + L(rng));
        g.breaks.push_back(t);
        g.values.push_back(u);
    }
    return g;
}

}  // namespace

TEST_CASE("1D linear system: over and under bracket r/lambda") {
    for (double lam : {0.5, 2.0}) {
        VectorField f = builtin("linear1d", {{"lambda", lam}});
        GridSpec g = GridSpec::make(Box{{-2}, {2}}, 1e-3);
        CellSet seed = CellSet::from_point(g, {0.0});
        ReachConfig c;
        c.r = 0.5;
        c.seed_invariant = true;
        ReachResult rr = reach(f, seed, c);
        CHECK(rr.over.converged);
        CHECK(rr.certified);
        Vec lo, hi, ulo, uhi;
        rr.over.set.center_extent(lo, hi);
        rr.under.set.center_extent(ulo, uhi);
        double e = 0.5 / lam;
        CHECK(hi[0] + 5e-4 >= e);
        CHECK(lo[0] - 5e-4 <= -e);
        CHECK(uhi[0] <= e);
        CHECK(ulo[0] >= -e);
        CHECK(hi[0] - uhi[0] < 10e-3);
    }
}

TEST_CASE("under is inside over") {
    for (double r : {0.1, 0.2}) {
        Case2D k = saddle(r);
        ReachResult rr = reach(k.f, k.seed, k.c);
        CHECK(rr.over.converged);
        CHECK(contains(rr.over.set, rr.under.set));
        CHECK(rr.under.set.count() > 10);
    }
    VectorField f = builtin("logistic_shift");
    GridSpec g = GridSpec::make(Box{{0.2}, {2}}, 1e-3);
    ReachConfig c;
    c.r = 0.15;
    c.seed_invariant = true;
    ReachResult rr = reach(f, CellSet::from_point(g, {1.0}), c);
    CHECK(contains(rr.over.set, rr.under.set));
}

TEST_CASE("monotone in r") {
    Case2D a = saddle(0.05), b = saddle(0.1), d = saddle(0.2);
    OverResult oa = reach_over(a.f, a.seed, a.c), ob = reach_over(b.f, b.seed, b.c), od = reach_over(d.f, d.seed, d.c);
    CHECK(contains(ob.set, oa.set));
    CHECK(contains(od.set, ob.set));
    CHECK(oa.set.count() < ob.set.count());
}

TEST_CASE("monotone in the seed") {
    Case2D k = saddle(0.1);
    CellSet big = CellSet::from_box(k.g, Box{{-0.05, -0.05}, {0.05, 0.05}});
    ReachConfig c = k.c;
    c.seed_invariant = false;
    OverResult small = reach_over(k.f, k.seed, c), large = reach_over(k.f, big, c);
    CHECK(contains(large.set, small.set));
    CHECK(contains(large.set, big));
}

TEST_CASE("serial and parallel fixpoints agree") {
    Case2D k = saddle(0.15);
    OverResult p = reach_over(k.f, k.seed, k.c);
    OverResult s = reach_over_serial(k.f, k.seed, k.c);
    CHECK(p.converged);
    CHECK(s.converged);
    CHECK(p.set == s.set);
}

TEST_CASE("results do not depend on the worker count") {
    Case2D k = saddle(0.15);
    int before = omp_get_max_threads();
    omp_set_num_threads(1);
    ReachResult a = reach(k.f, k.seed, k.c);
    omp_set_num_threads(4);
    ReachResult b = reach(k.f, k.seed, k.c);
    omp_set_num_threads(before);
    CHECK(a.over.set == b.over.set);
    CHECK(a.under.set == b.under.set);
    REQUIRE(a.under.witnesses.size() == b.under.witnesses.size());
    for (size_t i = 0; i < a.under.witnesses.size(); ++i) {
        CHECK(a.under.witnesses[i].cell == b.under.witnesses[i].cell);
        CHECK(a.under.witnesses[i].u == b.under.witnesses[i].u);
    }
}

TEST_CASE("witness replay lands in its cell with admissible controls") {
    Case2D k = saddle(0.2);
    ReachResult rr = reach(k.f, k.seed, k.c);
    std::mt19937_64 rng(8);
    auto& ws = rr.under.witnesses;
    REQUIRE(ws.size() > 50);
    std::uniform_int_distribution<size_t> U(0, ws.size() - 1);
    for (int t = 0; t < 40; ++t) {
        const Witness& w = ws[U(rng)];
        Vec start;
        ControlSignal g = witness_signal(rr.under, w.cell, start);
        if (!g.values.empty()) CHECK(g.sup_norm(k.c.norm) <= k.c.r);
        Vec x = replay_witness(k.f, rr.under, w.cell);
        Box b = k.g.cell_box(w.cell);
        CHECK(b.contains(x.data()));
    }
}

TEST_CASE("random controls stay inside the over-approximation") {
    for (double p : {1.0, 2.0, HUGE_VAL}) {
        Case2D k = saddle(0.15, 0.01);
        k.c.norm = NormSpec{p, 0};
        OverResult o = reach_over(k.f, k.seed, k.c);
        REQUIRE(o.converged);
        std::mt19937_64 rng(17 + static_cast<int>(p));
        int bad = 0;
        for (int t = 0; t < 334; ++t) {  // 3 norms x 334 ~ 10^3 signals
            ControlSignal g = random_control(rng, 2, 0.15, 12.0, k.c.norm);
            Trajectory tr = integrate(k.f, {0.0, 0.0}, g, 12.0, 0.01);
            for (const Vec& x : tr.states)
                if (!o.set.contains_point(x.data())) ++bad;
        }
        CHECK(bad == 0);
    }
}

TEST_CASE("seed independence on the cubic") {
    VectorField f = builtin("cubic3");
    GridSpec g = GridSpec::make(Box{{-1}, {3}}, 1e-3);
    ReachConfig c;
    c.r = 0.5;
    OverResult a = reach_over(f, CellSet::from_point(g, {0.1}), c);
    OverResult b = reach_over(f, CellSet::from_point(g, {1.0}), c);
    OverResult d = reach_over(f, CellSet::from_box(g, Box{{0}, {2}}), c);
    CHECK(a.converged);
    CHECK(a.set == b.set);
    CHECK(a.set == d.set);
    OmegaResult om = omega_limit(f, a.set, 3.0);
    CHECK(om.stabilized);
    CHECK(contains(om.set, CellSet::from_box(g, Box{{0.002}, {1.998}})));
}

TEST_CASE("reachable sets shrink toward the attractor as r halves") {
    VectorField f = builtin("diag_linear2d");
    GridSpec g = GridSpec::make(Box{{-1.5, -1}, {1.5, 1}}, 0.005);
    CellSet A = CellSet::from_point(g, {0.0, 0.0});
    ReachConfig c;
    c.seed_invariant = true;
    CellSet prev;
    double dprev = 1e9;
    for (double r = 0.8; r > 0.04; r *= 0.5) {
        c.r = r;
        OverResult o = reach_over(f, A, c);
        REQUIRE(o.converged);
        double d = o.set.diameter(NormSpec{});
        if (!prev.empty()) CHECK(contains(prev, o.set));
        CHECK(d < dprev);
        prev = o.set;
        dprev = d;
    }
    CHECK(dprev < 0.15);
}

TEST_CASE("escape is reported, not hidden") {
    Case2D k = saddle(0.4);
    OverResult o = reach_over(k.f, k.seed, k.c);
    CHECK(!o.converged);
    CHECK(o.escaped);
}

TEST_CASE("config preconditions") {
    Case2D k = saddle(0.1);
    ReachConfig c = k.c;
    c.r = -1;
    CHECK_THROWS_AS(reach_over(k.f, k.seed, c), PreconditionError);
    c = k.c;
    c.scheme = "bogus";
    CHECK_THROWS_AS(reach_over(k.f, k.seed, c), PreconditionError);
    CHECK_THROWS_AS(reach_over(k.f, CellSet(k.g), k.c), PreconditionError);
    GridSpec g1 = GridSpec::make(Box{{-1}, {1}}, 0.1);
    CHECK_THROWS_AS(reach_over(k.f, CellSet::from_point(g1, {0.0}), k.c), PreconditionError);
}

TEST_CASE("literal euler scheme contains the blob fixpoint on a linear system") {
    VectorField f = builtin("diag_linear2d");
    GridSpec g = GridSpec::make(Box{{-1.5, -1}, {1.5, 1}}, 0.02);
    CellSet A = CellSet::from_point(g, {0.0, 0.0});
    ReachConfig c;
    c.r = 0.5;
    c.seed_invariant = true;
    OverResult blob = reach_over(f, A, c);
    c.scheme = "euler";
    OverResult eu = reach_over(f, A, c);
    CHECK(blob.converged);
    CHECK(contains(eu.set, blob.set));
}

TEST_CASE("orbit cells trace a closed curve") {
    VectorField f = builtin("pp", {{"K", 4}});
    GridSpec g = GridSpec::make(Box{{0, 0}, {5, 5}}, 0.02);
    Anchors pts;
    CellSet c = orbit_cells(f, {1.0, 1.0}, g, 200, 40, &pts);
    Vec lo, hi;
    c.center_extent(lo, hi);
    CHECK(lo[0] == doctest::Approx(0.272).epsilon(0.1));
    CHECK(hi[0] == doctest::Approx(3.211).epsilon(0.02));
    CHECK(lo[1] == doctest::Approx(0.544).epsilon(0.05));
    CHECK(hi[1] == doctest::Approx(3.618).epsilon(0.02));
    CellSet filled = fill_holes(c);
    CHECK(filled.count() > 5 * c.count());
    CHECK(pts.points.size() > 100);
}
