#include <algorithm>
#include <cmath>
#include <limits>

#include "rch/reach.hpp"

namespace rch {

OmegaResult omega_limit(const VectorField& f, const CellSet& s, double t_probe, int max_iter, double h_max) {
    if (s.empty()) throw PreconditionError("omega_limit: empty set");
    if (!(t_probe > 0)) throw PreconditionError("omega_limit: t_probe must be positive");
    OmegaResult res;
    std::vector<CellSet> hist{s};
    CellSet cur = s;
    bool shrinking = false;
    for (int it = 0; it < max_iter; ++it) {
        TimeMapResult tm = time_t_map(f, cur, t_probe, h_max);
        res.iterations = it + 1;
        if (tm.exited) {
            res.exited = true;
            res.set = tm.image;
            return res;
        }
        CellSet nxt = tm.image;
        // once the image falls inside its preimage the sequence is nested; keep it so
        if (!shrinking && contains(cur, nxt)) shrinking = true;
        if (shrinking) nxt &= cur;
        if (nxt == cur) {
            res.stabilized = true;
            res.set = nxt;
            return res;
        }
        // periodic pattern: the union over the period contains the limit set
        for (size_t j = hist.size() > 8 ? hist.size() - 8 : 0; j + 1 < hist.size(); ++j)
            if (hist[j] == nxt) {
                CellSet u = nxt;
                for (size_t m = j; m < hist.size(); ++m) u |= hist[m];
                res.stabilized = true;
                res.set = u;
                return res;
            }
        hist.push_back(nxt);
        if (hist.size() > 9) hist.erase(hist.begin());
        cur = std::move(nxt);
    }
    res.set = cur;
    return res;
}

BlockReport check_attractor_block(const VectorField& f, const CellSet& b, double t_probe, double h_max) {
    if (b.empty()) throw PreconditionError("check_attractor_block: empty block");
    if (!(t_probe > 0)) throw PreconditionError("check_attractor_block: t_probe must be positive");
    BlockReport rep;
    rep.block = b;
    rep.probe_time = t_probe;
    CellSet comp = b.complement();
    const NormSpec n{};
    rep.margin = std::numeric_limits<double>::infinity();
    rep.is_block = true;
    CellSet img = b;
    for (int k = 0; k < 3; ++k) {
        TimeMapResult tm = time_t_map(f, img, t_probe, h_max);
        if (tm.exited) {
            rep.exited = true;
            rep.is_block = false;
            rep.margin = 0;
            return rep;
        }
        img = tm.image;
        double m;
        if (comp.empty()) {
            // no complement inside the grid: the clearance is to the box edge
            m = img.touches_boundary() ? 0.0 : std::numeric_limits<double>::infinity();
        } else {
            m = set_distance(img, comp, n);
        }
        rep.margin = std::min(rep.margin, m);
        if (!(m > 0)) rep.is_block = false;
    }
    if (!std::isfinite(rep.margin)) rep.margin = -1;  // whole grid as block: no finite clearance
    return rep;
}

BasinResult estimate_basin(const VectorField& f, const CellSet& attractor, const Box& window, const GridSpec& grid,
                           double T_max, double eps, double h) {
    if (attractor.empty()) throw PreconditionError("estimate_basin: empty attractor");
    if (attractor.grid() != grid) throw PreconditionError("estimate_basin: attractor grid differs");
    const int n = f.dim;
    const NormSpec n2{};
    CellSet nb = inflate(attractor, eps, n2);
    {
        Vec lo, hi;
        attractor.center_extent(lo, hi);
        for (int i = 0; i < n; ++i)
            if (lo[i] < window.lo[i] || hi[i] > window.hi[i])
                throw PreconditionError("estimate_basin: attractor not inside the window");
    }
    // forward invariance of the neighborhood at grid scale: sample trajectories must stay within eps more
    CellSet nb2 = inflate(nb, eps, n2);
    for (int64_t c : nb.indices()) {
        Vec x = grid.center(c);
        bool ex = false;
        Vec y = integrate_endpoint(f, x, ControlSignal::zero(n, 1.0), 1.0, h, &ex);
        if (ex || !nb2.contains_point(y.data()))
            throw PreconditionError("estimate_basin: attractor neighborhood is not forward invariant at grid scale");
    }
    BasinResult res;
    res.basin = CellSet(grid);
    const int64_t N = grid.size();
    auto& bits = res.basin.raw();
    const long steps = std::max(1L, static_cast<long>(std::ceil(T_max / h)));
#pragma omp parallel
    {
        Vec x(n), u(n, 0.0);
        std::vector<double> w(5 * n);
#pragma omp for schedule(dynamic, 256)
        for (int64_t c = 0; c < N; ++c) {
            grid.center(c, x.data());
            if (!window.contains(x.data()) || !f.domain.contains(x.data())) continue;
            bool in = false;
            for (long j = 0; j <= steps; ++j) {
                if (nb.contains_point(x.data())) {
                    in = true;
                    break;
                }
                if (j == steps) break;
                rk4_step(f, x.data(), u.data(), h, w.data());
                bool ok = true;
                for (double v : x)
                    if (!std::isfinite(v)) ok = false;
                if (!ok || !window.contains(x.data()) || !f.domain.contains(x.data())) break;
            }
            if (in) bits[static_cast<size_t>(c)] = 1;  // each c written by one thread
        }
    }
    return res;
}

CellSet orbit_cells(const VectorField& f, const Vec& x0, const GridSpec& g, double t_skip, double t_span,
                    Anchors* pts) {
    if (static_cast<int>(x0.size()) != f.dim || g.dim() != f.dim) throw PreconditionError("orbit_cells: dimension mismatch");
    if (!(t_skip >= 0) || !(t_span > 0)) throw PreconditionError("orbit_cells: bad time span");
    const int n = f.dim;
    const double dmin = *std::min_element(g.delta.begin(), g.delta.end());
    Vec x = x0, v(n), zero(n, 0.0);
    std::vector<double> w(5 * n);
    double t = 0;
    while (t < t_skip) {
        double h = std::min(0.01, t_skip - t);
        rk4_step(f, x.data(), zero.data(), h, w.data());
        t += h;
        if (!f.domain.contains(x.data())) throw PreconditionError("orbit_cells: orbit left the field domain");
    }
    CellSet s(g);
    t = 0;
    if (!s.add_point(x.data())) throw PreconditionError("orbit_cells: orbit outside the grid");
    if (pts) pts->points.push_back(x);
    double since = 0;
    while (t < t_span) {
        f.eval(x.data(), v.data());
        double sp = norm_raw(2.0, v.data(), n);
        double h = std::min({0.01, t_span - t, 0.25 * dmin / std::max(sp, 1e-12)});
        rk4_step(f, x.data(), zero.data(), h, w.data());
        t += h;
        since += h * sp;
        if (!s.add_point(x.data())) throw PreconditionError("orbit_cells: orbit left the grid");
        if (pts && since >= dmin) {
            pts->points.push_back(x);
            since = 0;
        }
    }
    s.clipped = false;
    return s;
}

}  // namespace rch
