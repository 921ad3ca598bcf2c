#include "rch/field.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>

#include "rch/expr.hpp"

namespace rch {

Vec VectorField::eval(const Vec& x) const {
    if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("field eval: dimension mismatch");
    Vec out(dim);
    f(x.data(), out.data());
    return out;
}

void VectorField::jacobian(const double* x, double* J) const {
    if (jac) {
        jac(x, J);
        return;
    }
    const int n = dim;
    double xp[16], fp[16], fm[16];
    std::vector<double> big;
    for (int j = 0; j < n; ++j) xp[j] = x[j];
    for (int j = 0; j < n; ++j) {
        double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + h;
        f(xp, fp);
        xp[j] = x[j] - h;
        f(xp, fm);
        xp[j] = x[j];
        for (int i = 0; i < n; ++i) J[i * n + j] = (fp[i] - fm[i]) / (2 * h);
    }
}

VectorField parse_field(const std::string& source, int dim, const std::map<std::string, double>& params,
                        const std::optional<Box>& domain) {
    if (dim < 1 || dim > 16) throw PreconditionError("field dimension must be in 1..16");
    auto comps = parse_components(source, dim, params);
    auto progs = std::make_shared<std::vector<ExprProgram>>();
    VectorField vf;
    vf.dim = dim;
    vf.name = "expr";
    vf.params = params;
    for (auto& c : comps) {
        progs->emplace_back(*c, params);
        vf.exprs.push_back(print_expr(*c));
    }
    vf.f = [progs](const double* x, double* out) {
        for (size_t i = 0; i < progs->size(); ++i) out[i] = (*progs)[i].eval(x);
    };
    if (domain) {
        domain->validate();
        if (domain->dim() != dim) throw PreconditionError("domain dimension does not match field");
        vf.domain = *domain;
    } else {
        vf.domain = Box{Vec(dim, -10.0), Vec(dim, 10.0)};
    }
    return vf;
}

namespace {

double need(const std::map<std::string, double>& p, const std::string& k) {
    auto it = p.find(k);
    if (it == p.end()) throw PreconditionError("missing parameter '" + k + "'");
    return it->second;
}

double get(const std::map<std::string, double>& p, const std::string& k, double def) {
    auto it = p.find(k);
    return it == p.end() ? def : it->second;
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"linear1d",   "logistic_shift", "scaled_logistic", "piecewise_sine", "diag_linear2d",
            "saddle_node_rot", "saddle_node_uv", "quartic_ck",   "cubic3",        "pp"};
}

VectorField builtin(const std::string& name, const std::map<std::string, double>& params) {
    VectorField v;
    v.name = name;
    if (name == "linear1d") {
        double lam = get(params, "lambda", 1.0);
        v.dim = 1;
        v.params = {{"lambda", lam}};
        v.domain = Box{{-10.0}, {10.0}};
        v.f = [lam](const double* x, double* o) { o[0] = -lam * x[0]; };
        v.jac = [lam](const double*, double* J) { J[0] = -lam; };
        v.exprs = {"-lambda*x"};
    } else if (name == "logistic_shift") {
        v.dim = 1;
        v.domain = Box{{-2.0}, {4.0}};
        v.f = [](const double* x, double* o) { o[0] = x[0] - x[0] * x[0]; };
        v.jac = [](const double* x, double* J) { J[0] = 1.0 - 2.0 * x[0]; };
        v.exprs = {"x - x^2"};
    } else if (name == "scaled_logistic") {
        double c = get(params, "c", 1.0);
        v.dim = 1;
        v.params = {{"c", c}};
        v.domain = Box{{-2.0}, {4.0}};
        v.f = [c](const double* x, double* o) { o[0] = c * x[0] * (1.0 - x[0]); };
        v.jac = [c](const double* x, double* J) { J[0] = c * (1.0 - 2.0 * x[0]); };
        v.exprs = {"c*x*(1-x)"};
    } else if (name == "piecewise_sine") {
        v.dim = 1;
        v.domain = Box{{-2.0}, {4.0}};
        v.f = [](const double* x, double* o) {
            double t = x[0];
            if (t < 0) o[0] = t;
            else if (t < 1) o[0] = std::sin(std::numbers::pi * t) / std::numbers::pi;
            else o[0] = 1.0 - t;
        };
        v.jac = [](const double* x, double* J) {
            double t = x[0];
            if (t < 0) J[0] = 1.0;
            else if (t < 1) J[0] = std::cos(std::numbers::pi * t);
            else J[0] = -1.0;
        };
    } else if (name == "diag_linear2d") {
        v.dim = 2;
        v.domain = Box{{-3.0, -3.0}, {3.0, 3.0}};
        v.f = [](const double* x, double* o) {
            o[0] = -x[0];
            o[1] = -2.0 * x[1];
        };
        v.jac = [](const double*, double* J) {
            J[0] = -1;
            J[1] = 0;
            J[2] = 0;
            J[3] = -2;
        };
        v.exprs = {"-x", "-2*y"};
    } else if (name == "saddle_node_rot") {
        const double s = std::sqrt(2.0) / 4.0;
        v.dim = 2;
        v.domain = Box{{-3.0, -3.0}, {3.0, 3.0}};
        v.f = [s](const double* x, double* o) {
            double w = x[0] + x[1];
            o[0] = s * w * w - x[0];
            o[1] = s * w * w - x[1];
        };
        v.jac = [s](const double* x, double* J) {
            double w = 2 * s * (x[0] + x[1]);
            J[0] = w - 1;
            J[1] = w;
            J[2] = w;
            J[3] = w - 1;
        };
        v.exprs = {"sqrt(2)/4*(x+y)^2 - x", "sqrt(2)/4*(x+y)^2 - y"};
    } else if (name == "saddle_node_uv") {
        v.dim = 2;
        v.domain = Box{{-3.0, -3.0}, {3.0, 3.0}};
        v.f = [](const double* x, double* o) {
            o[0] = x[0] * (x[0] - 1.0);
            o[1] = -x[1];
        };
        v.jac = [](const double* x, double* J) {
            J[0] = 2 * x[0] - 1;
            J[1] = 0;
            J[2] = 0;
            J[3] = -1;
        };
        v.exprs = {"x*(x-1)", "-y"};
    } else if (name == "quartic_ck") {
        v.dim = 1;
        v.domain = Box{{-6.0}, {6.0}};
        v.f = [](const double* x, double* o) {
            double t = x[0];
            o[0] = 0.75 * t * t * t * t - t * t * t - 3 * t * t - 1;
        };
        v.jac = [](const double* x, double* J) {
            double t = x[0];
            J[0] = 3 * t * t * t - 3 * t * t - 6 * t;
        };
        v.exprs = {"3/4*x^4 - x^3 - 3*x^2 - 1"};
    } else if (name == "cubic3") {
        v.dim = 1;
        v.domain = Box{{-3.0}, {5.0}};
        v.f = [](const double* x, double* o) {
            double t = x[0];
            o[0] = -t * (t - 1) * (t - 2);
        };
        v.jac = [](const double* x, double* J) {
            double t = x[0];
            J[0] = -3 * t * t + 6 * t - 2;
        };
        v.exprs = {"-x*(x-1)*(x-2)"};
    } else if (name == "pp") {
        const double a = get(params, "a", 1.0), K = need(params, "K"), k = get(params, "k", 0.5),
                     c = get(params, "c", 1.5), b = get(params, "b", 0.5), beta = get(params, "beta", 1.0),
                     f0 = get(params, "f0", 0.5);
        v.dim = 2;
        v.params = {{"a", a}, {"K", K}, {"k", k}, {"c", c}, {"b", b}, {"beta", beta}, {"f0", f0}};
        v.domain = Box{{-0.5, -0.5}, {8.0, 8.0}};
        v.f = [=](const double* x, double* o) {
            double e1 = std::exp(-c * x[0]), e2 = std::exp(-f0 * x[0]);
            o[0] = a * x[0] * (1 - x[0] / K) - k * x[1] * (1 - e1);
            o[1] = -b * x[1] + beta * x[1] * (1 - e2);
        };
        v.jac = [=](const double* x, double* J) {
            double e1 = std::exp(-c * x[0]), e2 = std::exp(-f0 * x[0]);
            J[0] = a * (1 - 2 * x[0] / K) - k * x[1] * c * e1;
            J[1] = -k * (1 - e1);
            J[2] = beta * x[1] * f0 * e2;
            J[3] = -b + beta * (1 - e2);
        };
        v.exprs = {"a*x*(1-x/K) - k*y*(1-exp(-c*x))", "-b*y + beta*y*(1-exp(-f0*x))"};
    } else {
        throw PreconditionError("unknown builtin field '" + name + "'");
    }
    for (auto& [key, val] : params)
        if (!v.params.count(key)) throw PreconditionError("builtin '" + name + "' has no parameter '" + key + "'");
    return v;
}

VectorField offset_field(const VectorField& f, const Vec& c) {
    if (static_cast<int>(c.size()) != f.dim) throw std::invalid_argument("offset_field: dimension mismatch");
    VectorField g = f;
    g.name = f.name + "+offset";
    auto base = f.f;
    g.f = [base, c](const double* x, double* o) {
        base(x, o);
        for (size_t i = 0; i < c.size(); ++i) o[i] += c[i];
    };
    g.exprs.clear();
    return g;
}

VectorField bump_field(const VectorField& f, const Vec& center, double width, const Vec& dir) {
    VectorField g = f;
    g.name = f.name + "+bump";
    const int n = f.dim;
    auto base = f.f;
    auto bj = f.jac;
    auto weight = [center, width, n](const double* x) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
        return std::exp(-s / (2 * width * width));
    };
    g.f = [base, weight, dir, n](const double* x, double* o) {
        base(x, o);
        double w = weight(x);
        for (int i = 0; i < n; ++i) o[i] += w * dir[i];
    };
    g.jac = [f, weight, dir, center, width, n](const double* x, double* J) {
        f.jacobian(x, J);
        double w = weight(x);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) J[i * n + j] += dir[i] * w * (-(x[j] - center[j]) / (width * width));
    };
    g.exprs.clear();
    return g;
}

double operator_norm(const double* J, int n, const NormSpec& nm) {
    if (n == 1) return std::abs(J[0]);
    if (nm.is_inf()) {
        double m = 0;
        for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int j = 0; j < n; ++j) s += std::abs(J[i * n + j]);
            m = std::max(m, s);
        }
        return m;
    }
    if (nm.p == 1.0) {
        double m = 0;
        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += std::abs(J[i * n + j]);
            m = std::max(m, s);
        }
        return m;
    }
    if (nm.p == 2.0) {
        if (n == 2) {
            double a = J[0], b = J[1], c = J[2], d = J[3];
            double T = a * a + b * b + c * c + d * d, D = a * d - b * c;
            double disc = std::max(0.0, T * T - 4 * D * D);
            return std::sqrt(std::max(0.0, (T + std::sqrt(disc)) / 2));
        }
        // power iteration on J^T J
        std::vector<double> v(n, 1.0 / std::sqrt(n)), w(n), u(n);
        double s = 0;
        for (int it = 0; it < 100; ++it) {
            for (int i = 0; i < n; ++i) {
                w[i] = 0;
                for (int j = 0; j < n; ++j) w[i] += J[i * n + j] * v[j];
            }
            for (int j = 0; j < n; ++j) {
                u[j] = 0;
                for (int i = 0; i < n; ++i) u[j] += J[i * n + j] * w[i];
            }
            double nu = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
            if (nu == 0) return 0;
            s = nu;
            for (int j = 0; j < n; ++j) v[j] = u[j] / nu;
        }
        return std::sqrt(s);
    }
    // general p: ratio over sampled directions, floored by the p=2 value scaled into range
    double m = 0;
    std::vector<double> w(n);
    for (const auto& d : ball_directions(nm, n, std::max(2 * n, 256))) {
        for (int i = 0; i < n; ++i) {
            w[i] = 0;
            for (int j = 0; j < n; ++j) w[i] += J[i * n + j] * d[j];
        }
        m = std::max(m, norm_raw(nm.p, w.data(), n));
    }
    return m;
}

double estimate_lipschitz(const VectorField& f, const Box& region, const NormSpec& n, int samples, uint64_t seed) {
    if (samples < 1000) throw PreconditionError("estimate_lipschitz: samples must be >= 1000");
    const int d = f.dim;
    if (region.dim() != d) throw PreconditionError("estimate_lipschitz: region dimension mismatch");
    for (int i = 0; i < d; ++i)
        if (region.lo[i] < f.domain.lo[i] - 1e-12 || region.hi[i] > f.domain.hi[i] + 1e-12)
            throw PreconditionError("estimate_lipschitz: region outside the field domain");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Vec x(d), y(d), fx(d), fy(d), diff(d), J(d * d);
    auto draw = [&](Vec& p) {
        for (int i = 0; i < d; ++i) p[i] = region.lo[i] + U(rng) * (region.hi[i] - region.lo[i]);
    };
    double best = 0;
    int pairs = samples / 2;
    for (int s = 0; s < pairs; ++s) {
        draw(x);
        if (s % 2 == 0) {
            draw(y);
        } else {
            for (int i = 0; i < d; ++i) {
                double span = region.hi[i] - region.lo[i];
                y[i] = std::clamp(x[i] + (U(rng) - 0.5) * 0.02 * span, region.lo[i], region.hi[i]);
            }
        }
        for (int i = 0; i < d; ++i) diff[i] = x[i] - y[i];
        double dx = norm_raw(n.p, diff.data(), d);
        if (dx <= 0) continue;
        f.eval(x.data(), fx.data());
        f.eval(y.data(), fy.data());
        for (int i = 0; i < d; ++i) diff[i] = fx[i] - fy[i];
        best = std::max(best, norm_raw(n.p, diff.data(), d) / dx);
    }
    int jacs = samples - pairs;
    // corners first: polynomial fields peak there
    int corners = d <= 10 ? (1 << d) : 0;
    for (int s = 0; s < jacs + corners; ++s) {
        if (s < corners) {
            for (int i = 0; i < d; ++i) x[i] = ((s >> i) & 1) ? region.hi[i] : region.lo[i];
        } else {
            draw(x);
        }
        f.jacobian(x.data(), J.data());
        best = std::max(best, operator_norm(J.data(), d, n));
    }
    return 1.1 * best;
}

SupDistance sup_norm_distance(const VectorField& f, const VectorField& g, const Box& region, const NormSpec& n,
                              const GridSpec& grid) {
    if (f.dim != g.dim || grid.dim() != f.dim || region.dim() != f.dim)
        throw std::invalid_argument("sup_norm_distance: dimension mismatch");
    SupDistance out;
    const int d = f.dim;
    Vec c(d), a(d), b(d);
    // index ranges of cells whose closed box meets the region
    std::vector<int64_t> lo(d), hi(d), k(d);
    for (int j = 0; j < d; ++j) {
        lo[j] = std::max<int64_t>(0, static_cast<int64_t>(std::ceil((region.lo[j] - grid.box.lo[j]) / grid.delta[j])) - 1);
        hi[j] = std::min<int64_t>(grid.counts[j] - 1,
                                  static_cast<int64_t>(std::floor((region.hi[j] - grid.box.lo[j]) / grid.delta[j])));
        if (lo[j] > hi[j]) throw PreconditionError("sup_norm_distance: region misses the grid");
    }
    k = lo;
    while (true) {
        // every region point lies in some visited cell, hence within one radius of its center
        int64_t i = grid.index(k.data());
        grid.center(i, c.data());
        f.eval(c.data(), a.data());
        g.eval(c.data(), b.data());
        for (int j = 0; j < d; ++j) a[j] -= b[j];
        out.lower = std::max(out.lower, norm_raw(n.p, a.data(), d));
        int j = 0;
        for (; j < d; ++j) {
            if (++k[j] <= hi[j]) break;
            k[j] = lo[j];
        }
        if (j == d) break;
    }
    out.L_f = f.lipschitz_hint ? *f.lipschitz_hint : estimate_lipschitz(f, region, n);
    out.L_g = g.lipschitz_hint ? *g.lipschitz_hint : estimate_lipschitz(g, region, n);
    out.upper = out.lower + (out.L_f + out.L_g) * grid.cell_radius(n);
    return out;
}

}  // namespace rch
