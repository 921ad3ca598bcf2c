#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <random>

#include "rch/reach.hpp"

namespace rch {

double lipschitz_on_grid(const VectorField& f, const GridSpec& g, const NormSpec& n) {
    Box reg = g.box;
    for (int i = 0; i < g.dim(); ++i) {
        reg.lo[i] = std::max(reg.lo[i], f.domain.lo[i]);
        reg.hi[i] = std::min(reg.hi[i], f.domain.hi[i]);
        if (!(reg.lo[i] < reg.hi[i])) throw PreconditionError("grid box does not meet the field domain");
    }
    return estimate_lipschitz(f, reg, n, 4000);
}

double macro_step(const VectorField& f, const GridSpec& g, const ReachConfig& c) {
    if (c.H > 0) return c.H;
    if (f.dim == 1 || c.r == 0 || c.scheme != "blob") return 1.0;
    // balance the raster cost (about a cell radius per step) against the k H^3 linearization remainder
    const int n = f.dim;
    Box reg = g.box;
    for (int i = 0; i < n; ++i) {
        reg.lo[i] = std::max(reg.lo[i], f.domain.lo[i]);
        reg.hi[i] = std::min(reg.hi[i], f.domain.hi[i]);
    }
    std::mt19937_64 rng(4242);
    Vec x(n), xp(n);
    std::vector<double> Jp(n * n), Jm(n * n);
    double L2 = 0;
    for (int s = 0; s < 2000; ++s) {
        for (int i = 0; i < n; ++i) x[i] = std::uniform_real_distribution<double>(reg.lo[i], reg.hi[i])(rng);
        double s2 = 0;
        for (int a = 0; a < n; ++a) {
            double e = 1e-5 * std::max(1.0, std::abs(x[a]));
            xp = x;
            xp[a] = x[a] + e;
            f.jacobian(xp.data(), Jp.data());
            xp[a] = x[a] - e;
            f.jacobian(xp.data(), Jm.data());
            for (int k = 0; k < n * n; ++k) s2 += (Jp[k] - Jm[k]) * (Jp[k] - Jm[k]) / (4 * e * e);
        }
        L2 = std::max(L2, std::sqrt(s2));
    }
    double r2 = c.r;
    if (c.norm.is_inf()) r2 = c.r * std::sqrt(static_cast<double>(n));
    else if (c.norm.p > 2) r2 = c.r * std::pow(static_cast<double>(n), 0.5 - 1.0 / c.norm.p);
    double rho = g.cell_radius(NormSpec{2.0, 0});
    double k = 0.5 * 1.5 * L2 * (1.21 * r2 * r2) / 3.0;
    if (!(k > 0)) return 1.0;
    return std::clamp(std::cbrt(rho / (2 * k)), 0.05, 1.0);
}

void check_config(const VectorField& f, const CellSet& seed, const ReachConfig& c) {
    if (!(c.r >= 0) || !std::isfinite(c.r)) throw PreconditionError("reach: r must be a finite value >= 0");
    if (seed.dim() != f.dim) throw PreconditionError("reach: seed grid and field dimension differ");
    if (seed.empty()) throw PreconditionError("reach: empty seed");
    if (!(c.H >= 0) || !std::isfinite(c.H)) throw PreconditionError("reach: macro step must be >= 0 (0 = auto)");
    if (c.scheme != "blob" && c.scheme != "euler") throw PreconditionError("reach: unknown scheme '" + c.scheme + "'");
    if (c.directions < 4 && f.dim > 1) throw PreconditionError("reach: need at least 4 directions");
}

namespace {

// sup of |f| over the grid box (sampled, padded)
double sup_field(const VectorField& f, const GridSpec& g, const NormSpec& n) {
    std::mt19937_64 rng(777);
    const int d = f.dim;
    Vec x(d), y(d);
    double s = 0;
    for (int k = 0; k < 4000; ++k) {
        for (int i = 0; i < d; ++i) {
            double lo = std::max(g.box.lo[i], f.domain.lo[i]), hi = std::min(g.box.hi[i], f.domain.hi[i]);
            x[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
        }
        f.eval(x.data(), y.data());
        s = std::max(s, norm_raw(n.p, y.data(), d));
    }
    return 1.1 * s;
}

using CoverFn = std::function<CoverStatus(int64_t, std::vector<Span>&, BlobEngine::Work&)>;

struct Engine {
    const VectorField& f;
    const GridSpec& g;
    ReachConfig c;
    std::unique_ptr<BlobEngine> blob;
    double eh = 0, erad = 0;  // euler step and inflation radius
    CoverFn cover;

    Engine(const VectorField& f_, const GridSpec& g_, const ReachConfig& c_) : f(f_), g(g_), c(c_) {
        if (c.scheme == "blob") {
            BlobParams bp;
            bp.H = macro_step(f, g, c);
            bp.r = c.r;
            bp.norm = c.norm;
            bp.directions = c.directions;
            bp.h_max = c.h_max;
            bp.tol = c.tol;
            blob = std::make_unique<BlobEngine>(f, g, bp);
            cover = [this](int64_t cell, std::vector<Span>& out, BlobEngine::Work& w) {
                return blob->cover(cell, out, w);
            };
        } else {
            double L = c.L > 0 ? c.L : lipschitz_on_grid(f, g, c.norm);
            eh = c.h > 0 ? c.h : default_step(L);
            if (eh * L >= 0.5) throw PreconditionError("reach: euler step violates h*L < 0.5");
            double F = sup_field(f, g, c.norm);
            double rho = g.cell_radius(c.norm);
            double C = L * (F + c.r);
            erad = eh * c.r + L * eh * rho + C * eh * eh + rho;
            cover = [this](int64_t cell, std::vector<Span>& out, BlobEngine::Work& w) {
                CoverStatus st;
                const int n = f.dim;
                w.x.resize(n);
                w.u.resize(n);
                g.center(cell, w.x.data());
                f.eval(w.x.data(), w.u.data());
                for (int i = 0; i < n; ++i) w.x[i] += eh * w.u[i];
                for (double v : w.x)
                    if (!std::isfinite(v)) st.exited_domain = true;
                if (st.exited_domain || !f.domain.contains(w.x.data())) {
                    st.exited_domain = st.clipped = true;
                    return st;
                }
                bool cl = false;
                cover_ball(g, c.norm, w.x.data(), erad, out, cl);
                st.clipped = cl;
                return st;
            };
        }
    }
};

// seed plus the sweep over [0, H) when the seed is not invariant
std::vector<int64_t> initial_set(Engine& e, const CellSet& seed, CellSet& Q, bool& escaped) {
    Q = CellSet(seed.grid());
    Q |= seed;
    Q.clipped = false;
    std::vector<int64_t> cells = seed.indices();
    if (e.c.scheme != "blob" || e.c.seed_invariant) return cells;
    BlobEngine::Work w;
    std::vector<Span> spans;
    for (int64_t s : seed.indices()) {
        spans.clear();
        CoverStatus st = e.blob->cover(s, spans, w, true);
        if (st.clipped || st.exited_domain) escaped = true;
        for (const Span& sp : spans)
            for (int64_t k = sp.lo; k <= sp.hi; ++k) {
                int64_t idx = sp.base + k;
                if (!Q.test(idx)) {
                    Q.set(idx);
                    cells.push_back(idx);
                }
            }
    }
    return cells;
}

}  // namespace

OverResult reach_over(const VectorField& f, const CellSet& seed, const ReachConfig& c, const CellSet* target) {
    check_config(f, seed, c);
    if (!c.parallel) return reach_over_serial(f, seed, c, target);
    const GridSpec& g = seed.grid();
    Engine e(f, g, c);
    OverResult res;
    std::vector<int64_t> frontier = initial_set(e, seed, res.set, res.escaped);
    if (target)
        for (int64_t k : frontier)
            if (!target->test(k)) res.left_target = true;
    std::vector<uint8_t> mark(static_cast<size_t>(g.size()), 0);  // candidates of the current layer
    while (!res.escaped && !res.left_target) {
        if (frontier.empty()) {
            res.converged = true;
            break;
        }
        if (res.layers >= c.max_layers) break;
        const CellSet& Q = res.set;
        std::vector<int64_t> cand;
        bool stop = false;  // escape or target exit: the layer result no longer matters
        const long N = static_cast<long>(frontier.size());
#pragma omp parallel
        {
            BlobEngine::Work w;
            std::vector<Span> spans;
            std::vector<int64_t> mine;
#pragma omp for schedule(dynamic, 64) nowait
            for (long i = 0; i < N; ++i) {
                bool halt;
#pragma omp atomic read
                halt = stop;
                if (halt) continue;
                spans.clear();
                CoverStatus st = e.cover(frontier[static_cast<size_t>(i)], spans, w);
                bool out = st.clipped || st.exited_domain;
                for (const Span& sp : spans) {
                    if (out) break;
                    for (int64_t k = sp.lo; k <= sp.hi; ++k) {
                        int64_t idx = sp.base + k;
                        if (Q.test(idx)) continue;
                        if (target && !target->test(idx)) {
                            out = true;
                            break;
                        }
                        uint8_t old;
#pragma omp atomic capture
                        {
                            old = mark[static_cast<size_t>(idx)];
                            mark[static_cast<size_t>(idx)] = 1;
                        }
                        if (!old) mine.push_back(idx);
                    }
                }
                if (out) {
#pragma omp critical
                    {
                        if (st.clipped || st.exited_domain) res.escaped = true;
                        else res.left_target = true;
                        stop = true;
                    }
                }
            }
#pragma omp critical
            cand.insert(cand.end(), mine.begin(), mine.end());
        }
        std::sort(cand.begin(), cand.end());
        for (int64_t k : cand) {
            mark[static_cast<size_t>(k)] = 0;
            res.set.set(k);
        }
        frontier.swap(cand);
        ++res.layers;
    }
    res.set.clipped = res.escaped;
    return res;
}

OverResult reach_over_serial(const VectorField& f, const CellSet& seed, const ReachConfig& c, const CellSet* target) {
    check_config(f, seed, c);
    const GridSpec& g = seed.grid();
    Engine e(f, g, c);
    OverResult res;
    std::vector<int64_t> init = initial_set(e, seed, res.set, res.escaped);
    std::deque<std::pair<int64_t, long>> q;
    for (int64_t k : init) {
        q.emplace_back(k, 0);
        if (target && !target->test(k)) res.left_target = true;
    }
    BlobEngine::Work w;
    std::vector<Span> spans;
    long depth = 0;
    while (!q.empty() && !res.escaped && !res.left_target) {
        auto [cell, d] = q.front();
        if (d >= c.max_layers) break;
        q.pop_front();
        depth = std::max(depth, d);
        spans.clear();
        CoverStatus st = e.cover(cell, spans, w);
        if (st.clipped || st.exited_domain) {
            res.escaped = true;
            break;
        }
        for (const Span& sp : spans)
            for (int64_t k = sp.lo; k <= sp.hi && !res.left_target; ++k) {
                int64_t idx = sp.base + k;
                if (res.set.test(idx)) continue;
                res.set.set(idx);
                q.emplace_back(idx, d + 1);
                if (target && !target->test(idx)) res.left_target = true;
            }
    }
    res.converged = q.empty() && !res.escaped && !res.left_target;
    res.layers = res.converged ? depth + 1 : depth;
    res.set.clipped = res.escaped;
    return res;
}

ReachResult reach(const VectorField& f, const CellSet& seed, const ReachConfig& c, const Anchors* anchors) {
    ReachResult rr;
    rr.r = c.r;
    rr.L_used = c.L > 0 ? c.L : lipschitz_on_grid(f, seed.grid(), c.norm);
    rr.over = reach_over(f, seed, c);
    if (c.r > 0) {
        rr.under = reach_under(f, seed, c, anchors);
    } else {
        rr.under.set = CellSet(seed.grid());
        rr.under.set |= seed;
        rr.under.set.clipped = false;
        for (int64_t k : seed.indices()) rr.under.witnesses.push_back({k, -1, {}, 0, seed.grid().center(k)});
    }
    rr.certified = rr.over.converged && !rr.over.escaped && c.scheme == "blob";
    return rr;
}

}  // namespace rch
