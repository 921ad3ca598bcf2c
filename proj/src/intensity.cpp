#include "rch/intensity.hpp"

#include <algorithm>
#include <cmath>

namespace rch {

namespace {

double f1(const VectorField& f, double x) {
    double y = 0;
    f.eval(&x, &y);
    return y;
}

void require_sink_1d(const VectorField& f, double xs) {
    if (f.dim != 1) throw PreconditionError("1D operation on a field of dimension " + std::to_string(f.dim));
    double scale = std::max(1.0, std::abs(xs));
    if (std::abs(f1(f, xs)) > 1e-10 * scale)
        throw PreconditionError("not an equilibrium: f(x*) = " + fmt_double(f1(f, xs)));
    for (double e : {1e-6, 1e-5, 1e-4}) {
        double h = e * scale;
        if (!(f1(f, xs - h) > 0) || !(f1(f, xs + h) < 0))
            throw PreconditionError("sign condition fails near x* = " + fmt_double(xs) + " (not a sink)");
    }
}

// first point walking from x0 toward x1 where pred holds; refined by bisection
bool first_crossing(const VectorField& f, double x0, double x1, double level, bool upward, double& out) {
    const int N = 20000;
    auto hit = [&](double x) { return upward ? f1(f, x) >= level : f1(f, x) <= -level; };
    double prev = x0;
    for (int i = 1; i <= N; ++i) {
        double x = x0 + (x1 - x0) * i / N;
        if (hit(x)) {
            double a = prev, b = x;  // hit(b), !hit(a)
            for (int k = 0; k < 200 && std::abs(b - a) > 1e-13 * std::max(1.0, std::abs(b)); ++k) {
                double m = 0.5 * (a + b);
                if (hit(m)) b = m;
                else a = m;
            }
            out = 0.5 * (a + b);
            return true;
        }
        prev = x;
    }
    return false;
}

// sup of s*f on [a,b]; at_edge says the sampled maximum sat at b
double sup_side(const VectorField& f, double a, double b, double s, double& arg, bool& at_edge) {
    const int N = 20000;
    double best = -kInf;
    int bi = 0;
    for (int i = 0; i <= N; ++i) {
        double x = a + (b - a) * i / N;
        double v = s * f1(f, x);
        if (v > best) {
            best = v;
            bi = i;
        }
    }
    at_edge = (bi == N);
    double lo = a + (b - a) * std::max(0, bi - 1) / N, hi = a + (b - a) * std::min(N, bi + 1) / N;
    // golden section on the bracketing cells
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = s * f1(f, c), fd = s * f1(f, d);
    for (int k = 0; k < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++k) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = s * f1(f, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = s * f1(f, d);
        }
    }
    double xm = 0.5 * (lo + hi), vm = s * f1(f, xm);
    if (vm >= best) {
        best = vm;
        arg = xm;
    } else {
        arg = a + (b - a) * bi / N;
    }
    return best;
}

bool solve_small(std::vector<double> A, std::vector<double> b, std::vector<double>& x, int n) {
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int i = c + 1; i < n; ++i)
            if (std::abs(A[i * n + c]) > std::abs(A[p * n + c])) p = i;
        if (A[p * n + c] == 0) return false;
        if (p != c) {
            for (int j = 0; j < n; ++j) std::swap(A[c * n + j], A[p * n + j]);
            std::swap(b[c], b[p]);
        }
        for (int i = c + 1; i < n; ++i) {
            double m = A[i * n + c] / A[c * n + c];
            for (int j = c; j < n; ++j) A[i * n + j] -= m * A[c * n + j];
            b[i] -= m * b[c];
        }
    }
    x.assign(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= A[i * n + j] * x[j];
        x[i] = s / A[i * n + i];
    }
    return true;
}

}  // namespace

Interval1D reach_1d_analytic(const VectorField& f, double xs, double r, const Box& bracket) {
    require_sink_1d(f, xs);
    if (r < 0) throw PreconditionError("reach_1d_analytic: r must be >= 0");
    if (!(bracket.lo[0] < xs && xs < bracket.hi[0])) throw PreconditionError("reach_1d_analytic: x* outside bracket");
    Interval1D out{xs, xs, false, false};
    if (r == 0) return out;
    double a, b;
    // a tangential touch (f reaches r without crossing) still counts as a root
    auto touch = [&](double end, double sgn, double& x) {
        double arg = xs;
        bool edge = false;
        double m = sup_side(f, xs, end, sgn, arg, edge);
        if (m < r - 1e-12 * std::max(1.0, r)) return false;
        // golden section only pins a flat max to ~1e-7; polish on the sign of f'
        auto df = [&](double y) {
            double J;
            f.jacobian(&y, &J);
            return J;
        };
        double lo = arg - 1e-4, hi = arg + 1e-4;
        if (df(lo) * df(hi) < 0) {
            for (int k = 0; k < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++k) {
                double mid = 0.5 * (lo + hi);
                if (df(mid) * df(lo) > 0) lo = mid;
                else hi = mid;
            }
            arg = 0.5 * (lo + hi);
        }
        x = arg;
        return true;
    };
    if (first_crossing(f, xs, bracket.lo[0], r, true, a) || touch(bracket.lo[0], 1.0, a)) out.a = a;
    else {
        out.a = bracket.lo[0];
        out.a_open_end = true;
    }
    if (first_crossing(f, xs, bracket.hi[0], r, false, b) || touch(bracket.hi[0], -1.0, b)) out.b = b;
    else {
        out.b = bracket.hi[0];
        out.b_open_end = true;
    }
    return out;
}

Intensity1D intensity_1d(const VectorField& f, double xs, double lo, double hi) {
    require_sink_1d(f, xs);
    if (!(lo < xs && xs < hi)) throw PreconditionError("intensity_1d: attractor not inside the basin");
    Intensity1D res;
    bool edge = false;
    // right side: escape needs control beating -f all the way to hi
    double b = std::isfinite(hi) ? hi : f.domain.hi[0];
    if (b <= xs) throw PreconditionError("intensity_1d: field domain ends before the attractor");
    res.right = std::max(0.0, sup_side(f, xs, b, -1.0, res.argmax_right, edge));
    if (!std::isfinite(hi) && edge) res.right = kInf;
    double a = std::isfinite(lo) ? lo : f.domain.lo[0];
    if (a >= xs) throw PreconditionError("intensity_1d: field domain ends before the attractor");
    // sample from the attractor outward so "edge" means the far end
    res.left = std::max(0.0, sup_side(f, xs, a, 1.0, res.argmax_left, edge));
    if (!std::isfinite(lo) && edge) res.left = kInf;
    res.mu = std::min(res.left, res.right);
    return res;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Feasible: return "feasible";
        case Verdict::Infeasible: return "infeasible";
        default: return "indeterminate";
    }
}

Verdict classify_r(const VectorField& f, const CellSet& A, const CellSet& target, double r, const ReachConfig& base,
                   const Anchors* anchors, OverResult* over_out, UnderResult* under_out, BisectProbe* probe) {
    ReachConfig c = base;
    c.r = r;
    OverResult over = reach_over(f, A, c, &target);
    BisectProbe pb{r, Verdict::Indeterminate, over.set.count(), over.escaped, over.left_target, over.converged, 0};
    Verdict v;
    UnderResult under;
    if (over.converged && !over.escaped && !over.left_target) {
        v = Verdict::Feasible;
    } else if (r > 0) {
        under = reach_under(f, A, c, anchors, &target);
        pb.under_cells = under.set.count();
        v = under.left_target ? Verdict::Infeasible : Verdict::Indeterminate;
    } else {
        v = Verdict::Indeterminate;
    }
    pb.v = v;
    if (probe) *probe = pb;
    if (over_out) *over_out = std::move(over);
    if (under_out) *under_out = std::move(under);
    return v;
}

IntensityBracket intensity_bisect(const VectorField& f, const CellSet& A, const CellSet& target, double r_max,
                                  double tol, const ReachConfig& base, const Anchors* anchors) {
    if (!(tol > 0)) throw PreconditionError("intensity_bisect: tol must be positive");
    if (!(r_max > 0)) throw PreconditionError("intensity_bisect: r_max must be positive");
    if (!contains(target, A)) throw PreconditionError("intensity_bisect: attractor is not inside the target");
    IntensityBracket br;
    br.target = target;
    auto run = [&](double r, OverResult* o, UnderResult* u) {
        BisectProbe pb;
        Verdict v = classify_r(f, A, target, r, base, anchors, o, u, &pb);
        br.probes.push_back(pb);
        return v;
    };
    OverResult o;
    UnderResult u;
    if (run(0.0, &o, nullptr) != Verdict::Feasible)
        throw PreconditionError("intensity_bisect: target is not forward invariant at r = 0");
    double lo = 0, hi = kInf;
    br.feasible_evidence = std::move(o);
    double ind_lo = kInf, ind_hi = -kInf;
    auto note = [&](double r, Verdict v, OverResult& oo, UnderResult& uu) {
        if (v == Verdict::Feasible) {
            lo = r;
            br.feasible_evidence = std::move(oo);
        } else if (v == Verdict::Infeasible) {
            hi = r;
            br.infeasible_evidence = std::move(uu);
        } else {
            ind_lo = std::min(ind_lo, r);
            ind_hi = std::max(ind_hi, r);
        }
    };
    {
        OverResult oo;
        UnderResult uu;
        Verdict v = run(r_max, &oo, &uu);
        note(r_max, v, oo, uu);
        if (v == Verdict::Feasible) {
            br.lo = lo;
            br.hi = kInf;
            return br;
        }
    }
    // bisect the feasible/undecided gap and the undecided/infeasible gap
    for (int guard = 0; guard < 200; ++guard) {
        double up = std::min(hi, ind_lo);  // first r above lo that is not feasible
        if (!std::isfinite(hi)) {
            // nothing infeasible up to r_max: only the feasible edge can move
            if (up - lo <= tol) break;
            OverResult oo;
            UnderResult uu;
            double mid = 0.5 * (lo + up);
            Verdict v = run(mid, &oo, &uu);
            note(mid, v, oo, uu);
            continue;
        }
        if (hi - lo <= tol) break;
        double g1 = up - lo, g2 = ind_hi > -kInf ? hi - ind_hi : 0.0;
        if (std::max(g1, g2) < tol / 64) break;  // pinned against the undecided band
        double mid = g1 >= g2 ? 0.5 * (lo + up) : 0.5 * (ind_hi + hi);
        OverResult oo;
        UnderResult uu;
        Verdict v = run(mid, &oo, &uu);
        note(mid, v, oo, uu);
    }
    br.lo = lo;
    br.hi = std::isfinite(hi) ? hi : r_max;
    br.hi_verified = std::isfinite(hi);
    if (ind_hi > -kInf) {
        br.has_band = true;
        br.band_lo = ind_lo;
        br.band_hi = ind_hi;
    }
    br.certified = br.hi_verified && base.scheme == "blob";
    return br;
}

std::vector<ScanPoint> discontinuity_scan(const VectorField& f, const CellSet& A, const std::vector<double>& rs,
                                          const ReachConfig& base, const ScanOptions& opt) {
    for (size_t i = 1; i < rs.size(); ++i)
        if (!(rs[i] > rs[i - 1])) throw PreconditionError("discontinuity_scan: r values must increase");
    std::vector<ScanPoint> out;
    for (double r : rs) {
        ReachConfig c = base;
        c.r = r;
        OverResult o = reach_over(f, A, c, opt.domain_estimate);
        ScanPoint p;
        p.r = r;
        p.cell_count = o.set.count();
        p.diameter = o.set.diameter(base.norm);
        p.escaped = o.escaped || o.left_target || !o.converged;
        out.push_back(p);
    }
    // a jump: diameter grows faster than jump_factor times the growth of r
    for (size_t i = 1; i < out.size(); ++i) {
        const ScanPoint &a = out[i - 1], &b = out[i];
        if (a.r <= 0 || a.escaped || b.escaped || a.diameter <= 0) continue;
        if (b.diameter / a.diameter > opt.jump_factor * (b.r / a.r)) out[i].jump = true;
    }
    return out;
}

double mu_pnorm_formula_check(double p) {
    if (!(p >= 1)) throw PreconditionError("mu_pnorm_formula_check: p must be >= 1");
    double inv = std::isinf(p) ? 0.0 : 1.0 / p;
    return std::pow(2.0, inv - 0.5) / 4.0;
}

Vec find_equilibrium(const VectorField& f, const Vec& x0, double tol, int max_iter) {
    const int n = f.dim;
    Vec x = x0, fx(n), dx;
    std::vector<double> J(n * n);
    for (int it = 0; it < max_iter; ++it) {
        f.eval(x.data(), fx.data());
        double nr = norm_raw(kInf, fx.data(), n);
        if (nr <= tol) return x;
        f.jacobian(x.data(), J.data());
        Vec rhs(n);
        for (int i = 0; i < n; ++i) rhs[i] = -fx[i];
        if (!solve_small(J, rhs, dx, n)) throw PreconditionError("find_equilibrium: singular Jacobian");
        for (int i = 0; i < n; ++i) x[i] += dx[i];
    }
    f.eval(x.data(), fx.data());
    if (norm_raw(kInf, fx.data(), n) <= 1e3 * tol) return x;
    throw PreconditionError("find_equilibrium: Newton did not converge");
}

}  // namespace rch
