#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rch/geometry.hpp"

using namespace rch;

namespace {

Vec rand_vec(std::mt19937_64& rng, int n, double s = 3.0) {
    std::uniform_real_distribution<double> U(-s, s);
    Vec v(n);
    for (auto& x : v) x = U(rng);
    return v;
}

}  // namespace

TEST_CASE("norm axioms hold on random vectors") {
    std::mt19937_64 rng(1);
    for (double p : {1.0, 1.5, 2.0, 3.0, HUGE_VAL}) {
        NormSpec nm{p, 0};
        for (int t = 0; t < 300; ++t) {
            int n = 1 + t % 4;
            Vec a = rand_vec(rng, n), b = rand_vec(rng, n), s(n);
            double lam = std::uniform_real_distribution<double>(-4, 4)(rng);
            for (int i = 0; i < n; ++i) s[i] = a[i] + b[i];
            CHECK(norm_eval(nm, a) >= 0);
            CHECK(norm_eval(nm, s) <= norm_eval(nm, a) + norm_eval(nm, b) + 1e-12);
            Vec la = a;
            for (auto& x : la) x *= lam;
            CHECK(norm_eval(nm, la) == doctest::Approx(std::abs(lam) * norm_eval(nm, a)).epsilon(1e-12));
        }
        CHECK(norm_eval(nm, Vec{0.0, 0.0, 0.0}) == 0.0);
    }
}

TEST_CASE("norm values and parsing") {
    Vec v{3, -4};
    CHECK(norm_eval(NormSpec{1, 0}, v) == 7);
    CHECK(norm_eval(NormSpec{2, 0}, v) == doctest::Approx(5));
    CHECK(norm_eval(NormSpec{HUGE_VAL, 0}, v) == 4);
    CHECK(NormSpec::parse("inf").is_inf());
    CHECK(NormSpec::parse("max").is_inf());
    CHECK(NormSpec::parse("1.5").p == 1.5);
    CHECK(NormSpec{1, 0}.dual() == HUGE_VAL);
    CHECK(NormSpec{2, 0}.dual() == 2);
    CHECK_THROWS_AS(NormSpec::parse("0.5"), PreconditionError);
    CHECK_THROWS_AS(NormSpec::parse("abc"), PreconditionError);
}

TEST_CASE("ball directions are unit vectors in the chosen norm") {
    for (double p : {1.0, 2.0, HUGE_VAL}) {
        NormSpec nm{p, 0};
        auto ds = ball_directions(nm, 2, 32);
        CHECK(ds.size() == 32);
        for (auto& d : ds) CHECK(norm_eval(nm, d) == doctest::Approx(1.0));
    }
    auto d1 = ball_directions(NormSpec{}, 1, 2);
    REQUIRE(d1.size() == 2);
    CHECK(d1[0][0] * d1[1][0] == -1);
}

TEST_CASE("grid indexing round trip") {
    GridSpec g = GridSpec::make(Box{{-1, 0, 2}, {1, 0.5, 3}}, Vec{0.1, 0.05, 0.25});
    CHECK(g.counts == std::vector<int64_t>{20, 10, 4});
    CHECK(g.size() == 800);
    std::vector<int64_t> k(3);
    for (int64_t i = 0; i < g.size(); i += 7) {
        g.unravel(i, k.data());
        CHECK(g.index(k.data()) == i);
        Box b = g.cell_box(i);
        Vec c = g.center(i);
        for (int a = 0; a < 3; ++a) CHECK(c[a] == doctest::Approx(0.5 * (b.lo[a] + b.hi[a])));
    }
    CHECK_THROWS_AS(GridSpec::make(Box{{0}, {1}}, 0.0), PreconditionError);
    CHECK_THROWS_AS(GridSpec::make(Box{{1}, {0}}, 0.1), PreconditionError);
}

TEST_CASE("cellset algebra") {
    GridSpec g = GridSpec::make(Box{{0, 0}, {1, 1}}, 0.1);
    CellSet a = CellSet::from_box(g, Box{{0.15, 0.15}, {0.45, 0.45}});
    CellSet b = CellSet::from_box(g, Box{{0.3, 0.3}, {0.75, 0.75}});
    CellSet u = a;
    u |= b;
    CellSet i = a;
    i &= b;
    CHECK(contains(u, a));
    CHECK(contains(u, b));
    CHECK(contains(a, i));
    CHECK(u.count() == a.count() + b.count() - i.count());
    CellSet c = a.complement();
    CHECK(c.count() + a.count() == g.size());
    c &= a;
    CHECK(c.empty());
    CHECK(!a.touches_boundary());
    CHECK(CellSet::full(g).touches_boundary());
}

TEST_CASE("add_point marks every cell whose closed box holds the point") {
    GridSpec g = GridSpec::make(Box{{0, 0}, {1, 1}}, 0.25);
    CellSet s(g);
    double corner[2] = {0.5, 0.5};
    CHECK(s.add_point(corner));
    CHECK(s.count() == 4);
    double out[2] = {1.5, 0.2};
    CHECK(!s.add_point(out));
}

TEST_CASE("cellset csv round trip is bit exact") {
    std::mt19937_64 rng(5);
    GridSpec g = GridSpec::make(Box{{-0.3, 1.0 / 3}, {0.7, 2.1}}, Vec{0.013, 1e-2 / 3});
    CellSet s(g);
    std::uniform_int_distribution<int64_t> U(0, g.size() - 1);
    for (int t = 0; t < 500; ++t) s.set(U(rng));
    std::stringstream ss;
    write_cellset_csv(ss, s);
    std::string text = ss.str();
    CHECK(text.rfind("# grid lo=", 0) == 0);
    CellSet r = read_cellset_csv(ss);
    CHECK(r == s);
    CHECK(r.grid().box.lo == g.box.lo);
    CHECK(r.grid().delta == g.delta);
    std::stringstream again;
    write_cellset_csv(again, r);
    CHECK(again.str() == text);
}

TEST_CASE("csv reader rejects malformed input") {
    std::stringstream a("0,0,0.5,0.5\n");
    CHECK_THROWS(read_cellset_csv(a));
    std::stringstream b("# grid lo=0 hi=1 delta=0.5\n7,0.25\n");
    CHECK_THROWS(read_cellset_csv(b));
}

TEST_CASE("inflate and set distance agree") {
    GridSpec g = GridSpec::make(Box{{-1, -1}, {1, 1}}, 0.02);
    CellSet s = CellSet::from_point(g, {0.0, 0.0});
    for (double p : {1.0, 2.0, HUGE_VAL}) {
        NormSpec nm{p, 0};
        CellSet t = inflate(s, 0.2, nm);
        CHECK(contains(t, s));
        CHECK(set_distance(t, t.complement(), nm) >= 0);
        Vec lo, hi;
        t.center_extent(lo, hi);
        CHECK(hi[0] == doctest::Approx(0.2).epsilon(0.15));
        CHECK(lo[1] == doctest::Approx(-0.2).epsilon(0.15));
    }
    CellSet a = CellSet::from_box(g, Box{{-0.5, -0.1}, {-0.3, 0.1}});
    CellSet b = CellSet::from_box(g, Box{{0.3, -0.1}, {0.5, 0.1}});
    double d = set_distance(a, b, NormSpec{});
    CHECK(d > 0.55);
    CHECK(d < 0.65);
}

TEST_CASE("fill_holes closes an annulus") {
    GridSpec g = GridSpec::make(Box{{-1, -1}, {1, 1}}, 0.02);
    CellSet ring(g);
    for (int t = 0; t < 4000; ++t) {
        double a = 2 * M_PI * t / 4000;
        double x[2] = {0.5 * std::cos(a), 0.5 * std::sin(a)};
        ring.add_point(x);
    }
    CellSet disk = fill_holes(ring);
    CHECK(contains(disk, ring));
    CHECK(disk.contains_point(Vec{0.0, 0.0}.data()));
    CHECK(!disk.contains_point(Vec{0.8, 0.0}.data()));
    CHECK(disk.count() == doctest::Approx(M_PI * 0.25 / 4e-4).epsilon(0.05));
}

TEST_CASE("boundary cells and diameter") {
    GridSpec g = GridSpec::make(Box{{0, 0}, {1, 1}}, 0.1);
    CellSet s = CellSet::from_box(g, Box{{0.21, 0.21}, {0.69, 0.69}});
    CHECK(s.count() == 25);
    CHECK(s.boundary_cells().size() == 16);
    CHECK(s.diameter(NormSpec{HUGE_VAL, 0}) == doctest::Approx(0.5));
}
