#include <cmath>
#include <random>

#include "doctest.h"
#include "rch/expr.hpp"
#include "rch/field.hpp"
#include "rch/fieldfile.hpp"

using namespace rch;

namespace {

double ev(const std::string& s, Vec x = {0.0, 0.0}, std::map<std::string, double> p = {}) {
    auto e = parse_expression(s, static_cast<int>(x.size()), p);
    ExprProgram prog(*e, p);
    return prog.eval(x.data());
}

}  // namespace

TEST_CASE("precedence and associativity") {
    CHECK(ev("1 + 2 * 3") == 7);
    CHECK(ev("(1 + 2) * 3") == 9);
    CHECK(ev("2 ^ 3 ^ 2") == 512);  // right assoc
    CHECK(ev("-2 ^ 2") == -4);      // unary minus binds looser than ^
    CHECK(ev("8 / 4 / 2") == 1);
    CHECK(ev("10 - 4 - 3") == 3);
    CHECK(ev("2 * -3") == -6);
    CHECK(ev("1e-3 * 1000") == doctest::Approx(1));
}

TEST_CASE("variables, parameters and functions") {
    CHECK(ev("x + 2*y", {1.5, -2}) == -2.5);
    CHECK(ev("x1 * x2", {3, 4}) == 12);
    CHECK(ev("a*x", {2, 0}, {{"a", 0.5}}) == 1);
    CHECK(ev("sin(pi/2) + cos(0) + exp(0) + sqrt(4) + abs(-1) + tanh(0)") == doctest::Approx(6));
}

TEST_CASE("parse errors carry position") {
    try {
        parse_expression("x + * 2", 1, {});
        FAIL("no throw");
    } catch (const ParseError& e) {
        CHECK(e.col == 5);
    }
    CHECK_THROWS_AS(parse_expression("x + q", 1, {}), ParseError);   // unknown name
    CHECK_THROWS_AS(parse_expression("y", 1, {}), ParseError);       // state out of range
    CHECK_THROWS_AS(parse_expression("foo(1)", 1, {}), ParseError);  // unknown function
    CHECK_THROWS_AS(parse_expression("(1 + 2", 1, {}), ParseError);
}

TEST_CASE("print then reparse gives the same tree") {
    std::map<std::string, double> p{{"K", 4}, {"k", 0.5}};
    for (std::string s : {"a*x*(1-x/K) - k*y*(1-exp(-c*x))", "-(x+y)^2/4 - -x", "x^-2 + 3*(y - 1)^(1/3)"}) {
        std::map<std::string, double> q = p;
        q["a"] = 1;
        q["c"] = 1.5;
        auto e = parse_expression(s, 2, q);
        auto e2 = parse_expression(print_expr(*e), 2, q);
        CHECK(e->same(*e2));
    }
}

TEST_CASE("expression fields match the builtin closures") {
    std::mt19937_64 rng(3);
    for (const auto& name : builtin_names()) {
        std::map<std::string, double> p;
        if (name == "pp") p["K"] = 4;
        VectorField b = builtin(name, p);
        if (b.exprs.empty()) continue;
        std::string src;
        for (auto& s : b.exprs) src += s + "\n";
        VectorField e = parse_field(src, b.dim, b.params, b.domain);
        for (int t = 0; t < 50; ++t) {
            Vec x(b.dim);
            for (int i = 0; i < b.dim; ++i)
                x[i] = std::uniform_real_distribution<double>(0.2 * b.domain.lo[i], 0.2 * b.domain.hi[i])(rng);
            Vec y1 = b.eval(x), y2 = e.eval(x);
            for (int i = 0; i < b.dim; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("analytic jacobians agree with finite differences") {
    std::mt19937_64 rng(4);
    for (const auto& name : builtin_names()) {
        std::map<std::string, double> p;
        if (name == "pp") p["K"] = 4;
        VectorField f = builtin(name, p);
        if (name == "piecewise_sine") continue;  // kinks
        VectorField g = f;
        g.jac = nullptr;
        const int n = f.dim;
        for (int t = 0; t < 20; ++t) {
            Vec x(n);
            for (int i = 0; i < n; ++i)
                x[i] = std::uniform_real_distribution<double>(0.1 * f.domain.lo[i], 0.1 * f.domain.hi[i])(rng);
            std::vector<double> J1(n * n), J2(n * n);
            f.jacobian(x.data(), J1.data());
            g.jacobian(x.data(), J2.data());
            for (int i = 0; i < n * n; ++i) CHECK(J1[i] == doctest::Approx(J2[i]).epsilon(1e-5).scale(1));
        }
    }
}

TEST_CASE("builtin catalog values") {
    VectorField pp = builtin("pp", {{"K", 3}});
    Vec y = pp.eval(Vec{1.386294361, 1.704435});
    CHECK(std::abs(y[0]) < 1e-5);
    CHECK(std::abs(y[1]) < 1e-5);
    CHECK_THROWS_AS(builtin("pp", {}), PreconditionError);  // K required
    CHECK_THROWS_AS(builtin("nope"), PreconditionError);
    VectorField q = builtin("quartic_ck");
    CHECK(q.eval(Vec{2.0})[0] == doctest::Approx(-9));
    CHECK(q.eval(Vec{-1.0})[0] == doctest::Approx(-2.25));
}

TEST_CASE("offset and bump perturbations stay within their amplitude") {
    VectorField f = builtin("diag_linear2d");
    VectorField o = offset_field(f, {0.02, -0.01});
    Vec x{0.3, -0.2};
    Vec a = f.eval(x), b = o.eval(x);
    CHECK(b[0] - a[0] == doctest::Approx(0.02));
    CHECK(b[1] - a[1] == doctest::Approx(-0.01));
    VectorField bp = bump_field(f, {0.0, 0.0}, 0.3, {0.05, 0.0});
    GridSpec g = GridSpec::make(f.domain, 0.05);
    SupDistance d = sup_norm_distance(f, bp, Box{{-1, -1}, {1, 1}}, NormSpec{}, g);
    CHECK(d.lower <= 0.05 + 1e-12);
    CHECK(d.lower > 0.04);
    CHECK(d.upper >= d.lower);
}

TEST_CASE("lipschitz estimate on linear fields") {
    VectorField f = builtin("diag_linear2d");
    Box b{{-1, -1}, {1, 1}};
    CHECK(estimate_lipschitz(f, b, NormSpec{}) == doctest::Approx(2.0).epsilon(0.2));
    VectorField l = builtin("linear1d", {{"lambda", 0.5}});
    CHECK(estimate_lipschitz(l, Box{{-1}, {1}}, NormSpec{}) == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("field file grammar") {
    std::string text = R"(# predator prey, expression form
[field]
dim = 2
f1 = a*x*(1 - x/K) - k*y*(1 - exp(-c*x))
f2 = -b*y + beta*y*(1 - exp(-f0*x))
[params]
a = 1
K = 4
k = 0.5
c = 1.5
b = 0.5
beta = 1
f0 = 0.5
[domain]
lo = -0.5, -0.5
hi = 8, 8
[control]
breaks = 0, 1, 2
value = 0.5, 0
value = 0, -0.5
)";
    FieldFile ff = parse_field_file(text);
    VectorField ref = builtin("pp", {{"K", 4}});
    Vec x{1.2, 0.7};
    CHECK(ff.field.eval(x)[0] == doctest::Approx(ref.eval(x)[0]));
    CHECK(ff.field.eval(x)[1] == doctest::Approx(ref.eval(x)[1]));
    REQUIRE(ff.control.has_value());
    CHECK(ff.control->duration() == 2);
    CHECK(ff.control->at(1.5)[1] == -0.5);
    CHECK(ff.field.domain.hi[0] == 8);

    FieldFile over = parse_field_file(text, {{"K", 3}});
    CHECK(over.field.eval(x)[0] == doctest::Approx(builtin("pp", {{"K", 3}}).eval(x)[0]));

    FieldFile named = parse_field_file("[field]\nname = linear1d\n[params]\nlambda = 2\n");
    CHECK(named.field.eval(Vec{1.0})[0] == -2);
}

TEST_CASE("field file errors report the line") {
    auto line_of = [](const std::string& t) {
        try {
            parse_field_file(t);
        } catch (const ConfigError& e) {
            return e.line;
        }
        return -1;
    };
    CHECK(line_of("[field]\ndim = 1\nf1 = x +\n") == 3);
    CHECK(line_of("[field]\nname = linear1d\n[bogus]\n") == 3);
    CHECK(line_of("[field]\nname = linear1d\n[params]\nlambda = two\n") == 4);
    CHECK(line_of("x = 1\n") == 1);
    CHECK(line_of("[field]\ndim = 2\nf1 = x\n") == 2);  // missing f2
    CHECK(line_of("[field]\nname = linear1d\n[domain]\nlo = 1\nhi = 0\n") > 0);
}
