#include <cmath>

#include "doctest.h"
#include "rch/continuation.hpp"

using namespace rch;

namespace {

ReachConfig cfg1d() {
    ReachConfig c;
    c.seed_invariant = true;
    return c;
}

}  // namespace

TEST_CASE("interior cells and padded bbox") {
    GridSpec g = GridSpec::make(Box{{0, 0}, {1, 1}}, 0.1);
    CellSet s = CellSet::from_box(g, Box{{0.21, 0.21}, {0.69, 0.69}});
    CHECK(interior_cells(s).count() == 9);
    Box b = cell_bbox(s, 1);
    CHECK(b.lo[0] == doctest::Approx(0.1));
    CHECK(b.hi[1] == doctest::Approx(0.8));
    CHECK_THROWS_AS(cell_bbox(CellSet(g)), PreconditionError);
}

TEST_CASE("block persists for a large perturbation on the logistic, flagged advisory") {
    VectorField f = builtin("scaled_logistic", {{"c", 1.0}});
    VectorField fh = builtin("scaled_logistic", {{"c", 3.0}});
    GridSpec g = GridSpec::make(Box{{0.4}, {1.6}}, 1e-3);
    CellSet seed = CellSet::from_point(g, {1.0});
    ContinuationReport rep = persistent_block(f, fh, seed, 0.2, cfg1d());
    CHECK(rep.advisory);
    CHECK(rep.f_distance.upper > 0.25);
    CHECK(rep.block_ok_for_f);
    CHECK(rep.block_ok_for_fhat);
    CHECK(rep.containment);
    CHECK(!rep.A_hat.empty());
}

TEST_CASE("continuation from the intensity bracket follows the shifted sink") {
    VectorField f = builtin("logistic_shift");
    VectorField fh = offset_field(f, {-0.1});
    GridSpec g = GridSpec::make(Box{{-0.5}, {2}}, 1e-3);
    CellSet A = CellSet::from_point(g, {1.0});
    CellSet K = CellSet::from_box(g, Box{{0.05}, {2}});
    Anchors an{{{1.0}}};
    IntensityBracket br = intensity_bisect(f, A, K, 1.0, 0.01, cfg1d(), &an);
    REQUIRE(br.lo > 0.1);
    ContinuationReport rep = continuation_from_intensity(f, fh, A, br, cfg1d());
    CHECK(rep.block_ok_for_f);
    CHECK(rep.block_ok_for_fhat);
    CHECK(rep.containment);
    CHECK(rep.diagnostic.empty());
    double xs = (1 + std::sqrt(0.6)) / 2;
    CHECK(rep.A_hat.contains_point(&xs));
    Vec lo, hi;
    rep.A_hat.center_extent(lo, hi);
    CHECK(hi[0] - lo[0] < 0.01);
}

TEST_CASE("zero perturbation: the continuation is the attractor itself") {
    VectorField f = builtin("logistic_shift");
    GridSpec g = GridSpec::make(Box{{-0.5}, {2}}, 1e-3);
    CellSet A = CellSet::from_point(g, {1.0});
    CellSet K = CellSet::from_box(g, Box{{0.05}, {2}});
    IntensityBracket br = intensity_bisect(f, A, K, 1.0, 0.05, cfg1d());
    ContinuationReport rep = continuation_from_intensity(f, f, A, br, cfg1d());
    CHECK(rep.block_ok_for_fhat);
    CHECK(rep.containment);
    Vec lo, hi;
    rep.A_hat.center_extent(lo, hi);
    CHECK(lo[0] > 0.99);
    CHECK(hi[0] < 1.01);
}

TEST_CASE("refusal when the field distance exceeds the bracket") {
    VectorField f = builtin("logistic_shift");
    VectorField fh = offset_field(f, {-0.3});
    GridSpec g = GridSpec::make(Box{{-0.5}, {2}}, 1e-2);
    CellSet A = CellSet::from_point(g, {1.0});
    IntensityBracket br;
    br.lo = 0.2;
    br.hi = 0.3;
    CHECK_THROWS_AS(continuation_from_intensity(f, fh, A, br, cfg1d()), PreconditionError);
}

TEST_CASE("block persistence under constant offsets across the catalog") {
    struct Item {
        std::string name;
        std::map<std::string, double> p;
        Vec x;
        Box win;
        double r, delta;
    };
    std::vector<Item> items = {
        {"linear1d", {}, {0.0}, Box{{-1}, {1}}, 0.3, 1e-3},
        {"logistic_shift", {}, {1.0}, Box{{0.3}, {1.8}}, 0.15, 1e-3},
        {"cubic3", {}, {2.0}, Box{{1.2}, {3}}, 0.2, 1e-3},
        {"diag_linear2d", {}, {0.0, 0.0}, Box{{-1, -1}, {1, 1}}, 0.3, 0.01},
        {"saddle_node_uv", {}, {0.0, 0.0}, Box{{-0.6, -0.6}, {0.8, 0.6}}, 0.1, 0.01},
    };
    for (auto& it : items) {
        CAPTURE(it.name);
        VectorField f = builtin(it.name, it.p);
        GridSpec g = GridSpec::make(it.win, it.delta);
        CellSet A = CellSet::from_point(g, it.x);
        Vec off(f.dim, 0.0);
        off[0] = 0.4 * it.r;
        VectorField fh = offset_field(f, off);
        ReachConfig c = cfg1d();
        ContinuationReport rep = persistent_block(f, fh, A, it.r, c);
        CHECK(!rep.advisory);
        CHECK(rep.block_ok_for_fhat);
        CHECK(rep.block_ok_for_f);
        CHECK(rep.containment);
    }
}

TEST_CASE("semicontinuity probe") {
    VectorField f = builtin("logistic_shift");
    GridSpec g = GridSpec::make(Box{{0.4}, {1.6}}, 1e-3);
    CellSet A = CellSet::from_point(g, {1.0});
    CellSet V = CellSet::from_box(g, Box{{0.7}, {1.3}});
    SemicontinuityReport rep = semicontinuity_probe(f, A, V, 20, cfg1d());
    CHECK(rep.r > 0);
    CHECK(rep.passed == 20);
    CHECK(contains(V, rep.block));
    SemicontinuityReport none = semicontinuity_probe(f, A, V, 0, cfg1d());
    CHECK(none.trials == 0);
    CHECK(none.r == rep.r);
    CellSet tight = CellSet::from_box(g, Box{{0.9995}, {1.0005}});
    CHECK_THROWS_AS(semicontinuity_probe(f, A, tight, 5, cfg1d()), PreconditionError);
}

TEST_CASE("semicontinuity on the linear system") {
    VectorField f = builtin("linear1d");
    GridSpec g = GridSpec::make(Box{{-0.5}, {0.5}}, 1e-3);
    CellSet A = CellSet::from_point(g, {0.0});
    CellSet V = CellSet::from_box(g, Box{{-0.1}, {0.1}});
    SemicontinuityReport rep = semicontinuity_probe(f, A, V, 20, cfg1d());
    CHECK(rep.r > 0.05);
    CHECK(rep.r < 0.1);
    CHECK(rep.passed == 20);
}

TEST_CASE("a bounded reachable set is a block for its own field and is associated with the seed") {
    VectorField f = builtin("diag_linear2d");
    GridSpec g = GridSpec::make(Box{{-1, -1}, {1, 1}}, 0.01);
    CellSet A = CellSet::from_point(g, {0.0, 0.0});
    ReachConfig c = cfg1d();
    c.r = 0.3;
    OverResult o = reach_over(f, A, c);
    REQUIRE(o.converged);
    BlockReport b = check_attractor_block(f, o.set, 3.0);
    CHECK(b.is_block);
    OmegaResult om = omega_limit(f, o.set, 3.0);
    Vec lo, hi;
    om.set.center_extent(lo, hi);
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(lo[i]) <= 5 * g.delta[i]);
        CHECK(std::abs(hi[i]) <= 5 * g.delta[i]);
    }
}
