#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <tuple>
#include <unordered_map>

#include "rch/reach.hpp"

namespace rch {

namespace {

struct Cand {
    int64_t cell, pred;
    int dir;
    Vec u, point;
};

class Expander {
public:
    Expander(const VectorField& f, const GridSpec& g, const ReachConfig& c) : f_(f), g_(g), c_(c) {
        n_ = f.dim;
        if (n_ == 1) dirs_ = {{1.0}, {-1.0}};
        else dirs_ = ball_directions(c.norm, n_, std::max(c.under_directions, 2 * n_));
        r_acc_ = c.r * (1.0 - c.under_floor);
        r_nom_ = r_acc_ * (1.0 - 1e-9);
        steps_ = std::max(2, static_cast<int>(std::ceil(c.H / (0.5 * c.h_max) - 1e-9)));
        dmin_ = *std::min_element(g.delta.begin(), g.delta.end());
        // 3^n neighbor offsets, nearest first is decided per landing
        int tot = 1;
        for (int i = 0; i < n_; ++i) tot *= 3;
        for (int t = 0; t < tot; ++t) {
            std::vector<int64_t> o(n_);
            int q = t;
            bool zero = true;
            for (int i = 0; i < n_; ++i) {
                o[i] = q % 3 - 1;
                q /= 3;
                if (o[i]) zero = false;
            }
            if (!zero) offs_.push_back(o);
        }
    }

    int ndirs() const { return static_cast<int>(dirs_.size()); }
    int steps() const { return steps_; }

    // plain RK4 with the fixed under step; false on domain exit / blow-up
    bool shoot(const double* a, const double* u, double* x, std::vector<double>& w) const {
        w.resize(5 * n_);
        std::copy(a, a + n_, x);
        const double dt = c_.H / steps_;
        for (int j = 0; j < steps_; ++j) {
            rk4_step(f_, x, u, dt, w.data());
            for (int i = 0; i < n_; ++i)
                if (!std::isfinite(x[i])) return false;
            if (!f_.domain.contains(x)) return false;
        }
        return true;
    }

    // same integration, stopped at the first step outside the grid box; T gets that time
    bool shoot_to_edge(const double* a, const double* u, double* x, double& T, std::vector<double>& w) const {
        w.resize(5 * n_);
        std::copy(a, a + n_, x);
        const double dt = c_.H / steps_;
        for (int j = 0; j < steps_; ++j) {
            rk4_step(f_, x, u, dt, w.data());
            for (int i = 0; i < n_; ++i)
                if (!std::isfinite(x[i])) return false;
            if (!g_.box.contains(x)) {
                T = (j + 1) * dt;
                return true;
            }
            if (!f_.domain.contains(x)) return false;
        }
        return false;
    }

    // sensitivity G = d x(H) / d u for a constant control (Psi' = J Psi + I)
    bool sensitivity(const double* a, const double* u, double* G, std::vector<double>& w) const {
        const int n = n_, n2 = n * n, S = n + n2;
        w.resize(6 * S + n2);
        double* y = w.data();
        double* k[4] = {y + S, y + 2 * S, y + 3 * S, y + 4 * S};
        double* yt = y + 5 * S;
        double* J = y + 6 * S;
        auto deriv = [&](const double* s, double* o) {
            f_.eval(s, o);
            for (int i = 0; i < n; ++i) o[i] += u[i];
            f_.jacobian(s, J);
            const double* P = s + n;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double acc = (i == j) ? 1.0 : 0.0;
                    for (int m = 0; m < n; ++m) acc += J[i * n + m] * P[m * n + j];
                    o[n + i * n + j] = acc;
                }
        };
        std::copy(a, a + n, y);
        std::fill(y + n, y + S, 0.0);
        const double dt = c_.H / steps_;
        for (int j = 0; j < steps_; ++j) {
            deriv(y, k[0]);
            for (int i = 0; i < S; ++i) yt[i] = y[i] + 0.5 * dt * k[0][i];
            deriv(yt, k[1]);
            for (int i = 0; i < S; ++i) yt[i] = y[i] + 0.5 * dt * k[1][i];
            deriv(yt, k[2]);
            for (int i = 0; i < S; ++i) yt[i] = y[i] + dt * k[2][i];
            deriv(yt, k[3]);
            for (int i = 0; i < S; ++i) y[i] += dt / 6.0 * (k[0][i] + 2 * k[1][i] + 2 * k[2][i] + k[3][i]);
            for (int i = 0; i < S; ++i)
                if (!std::isfinite(y[i])) return false;
            if (!f_.domain.contains(y)) return false;
        }
        std::copy(y + n, y + S, G);
        return true;
    }

    bool cell_of(const double* x, int64_t& idx) const {
        std::vector<int64_t> k(n_);
        for (int i = 0; i < n_; ++i) {
            double t = std::floor((x[i] - g_.box.lo[i]) / g_.delta[i]);
            if (t < 0 || t >= static_cast<double>(g_.counts[i])) return false;
            k[i] = static_cast<int64_t>(t);
        }
        idx = g_.index(k.data());
        return true;
    }

    static bool solve(const double* G, const double* b, double* x, int n) {
        // small dense solve with partial pivoting
        std::vector<double> A(G, G + n * n), rhs(b, b + n);
        for (int c = 0; c < n; ++c) {
            int p = c;
            for (int i = c + 1; i < n; ++i)
                if (std::abs(A[i * n + c]) > std::abs(A[p * n + c])) p = i;
            if (A[p * n + c] == 0) return false;
            if (p != c) {
                for (int j = 0; j < n; ++j) std::swap(A[c * n + j], A[p * n + j]);
                std::swap(rhs[c], rhs[p]);
            }
            for (int i = c + 1; i < n; ++i) {
                double m = A[i * n + c] / A[c * n + c];
                for (int j = c; j < n; ++j) A[i * n + j] -= m * A[c * n + j];
                rhs[i] -= m * rhs[c];
            }
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = rhs[i];
            for (int j = i + 1; j < n; ++j) s -= A[i * n + j] * x[j];
            x[i] = s / A[i * n + i];
        }
        return true;
    }

    // Newton on the control so that the endpoint from a hits the center of cid
    bool aim(const Vec& a, const Vec& u0, const Vec& e0, const Vec& G, int64_t cid, Vec& ut, Vec& et,
             std::vector<double>& w) const {
        const int n = n_;
        Vec z(n), rhs(n), du(n);
        g_.center(cid, z.data());
        ut = u0;
        et = e0;
        const NormSpec nm{c_.norm.p, 0};
        for (int it = 0; it < 6; ++it) {
            for (int i = 0; i < n; ++i) rhs[i] = z[i] - et[i];
            if (!solve(G.data(), rhs.data(), du.data(), n)) return false;
            for (int i = 0; i < n; ++i) ut[i] += du[i];
            if (norm_eval(nm, ut) > r_acc_) return false;
            if (!shoot(a.data(), ut.data(), et.data(), w)) return false;
            double err = 0;
            for (int i = 0; i < n; ++i) err = std::max(err, std::abs(et[i] - z[i]));
            if (err <= 1e-6 * dmin_) return true;
        }
        return false;
    }

    // one direction from anchor a; claimed(cell) says the cell is already taken
    template <class Claimed>
    bool expand(int64_t src, const Vec& a, int k, const Claimed& claimed, Cand& out, bool& off_grid,
                Witness& offw) const {
        const int n = n_;
        Vec u(n), e(n), G(n * n), z(n), ut(n), et(n);
        std::vector<double> w;
        for (int i = 0; i < n; ++i) u[i] = r_nom_ * dirs_[static_cast<size_t>(k)][i];
        if (!shoot(a.data(), u.data(), e.data(), w)) {
            double T;
            if (shoot_to_edge(a.data(), u.data(), e.data(), T, w)) {
                off_grid = true;
                offw = {-1, src, u, T, e};
            }
            return false;
        }
        int64_t land;
        if (!cell_of(e.data(), land)) {
            off_grid = true;
            offw = {-1, src, u, c_.H, e};
            return false;
        }
        // primary landing cell first, then neighbors by distance to the landing point
        std::vector<int64_t> cand;
        if (!claimed(land)) cand.push_back(land);
        std::vector<int64_t> kk(n), kn(n);
        g_.unravel(land, kk.data());
        std::vector<std::pair<double, int64_t>> nb;
        for (const auto& o : offs_) {
            for (int i = 0; i < n; ++i) kn[i] = kk[i] + o[i];
            if (!g_.in_range(kn.data())) continue;
            int64_t id = g_.index(kn.data());
            if (claimed(id)) continue;
            g_.center(id, z.data());
            double d = 0;
            for (int i = 0; i < n; ++i) d += (z[i] - e[i]) * (z[i] - e[i]) / (g_.delta[i] * g_.delta[i]);
            nb.emplace_back(d, id);
        }
        std::sort(nb.begin(), nb.end());
        for (auto& p : nb) cand.push_back(p.second);
        if (cand.empty()) return false;
        if (!sensitivity(a.data(), u.data(), G.data(), w)) return false;
        for (int64_t cid : cand)
            if (aim(a, u, e, G, cid, ut, et, w)) {
                out = {cid, src, k, ut, et};
                return true;
            }
        return false;
    }

    // reach cid from a, warm-started at a known control u0 with endpoint e0
    bool fill(int64_t src, const Vec& a, const Vec& u0, const Vec& e0, int64_t cid, Cand& out) const {
        const int n = n_;
        Vec G(n * n), ut(n), et(n);
        std::vector<double> w;
        if (!sensitivity(a.data(), u0.data(), G.data(), w)) return false;
        if (!aim(a, u0, e0, G, cid, ut, et, w)) return false;
        out = {cid, src, -1, ut, et};
        return true;
    }

    const std::vector<std::vector<int64_t>>& offsets() const { return offs_; }

private:
    const VectorField& f_;
    const GridSpec& g_;
    ReachConfig c_;
    int n_;
    std::vector<Vec> dirs_;
    std::vector<std::vector<int64_t>> offs_;
    double r_acc_, r_nom_, dmin_;
    int steps_;
};

// grid distance (Chebyshev steps) to the nearest cell outside the target
std::vector<int32_t> exit_distance(const CellSet& target) {
    const GridSpec& g = target.grid();
    const int n = g.dim();
    std::vector<int32_t> d(static_cast<size_t>(g.size()), -1);
    std::deque<int64_t> q;
    for (int64_t i = 0; i < g.size(); ++i)
        if (!target.test(i)) {
            d[static_cast<size_t>(i)] = 0;
            q.push_back(i);
        }
    std::vector<int64_t> k(n), kn(n);
    auto push_edge = [&](int64_t i) {
        // cells on the grid edge border the outside
        if (d[static_cast<size_t>(i)] < 0 && g.on_edge(i)) {
            d[static_cast<size_t>(i)] = 1;
            q.push_back(i);
        }
    };
    for (int64_t i = 0; i < g.size(); ++i) push_edge(i);
    int tot = 1;
    for (int i = 0; i < n; ++i) tot *= 3;
    while (!q.empty()) {
        int64_t c = q.front();
        q.pop_front();
        g.unravel(c, k.data());
        for (int t = 0; t < tot; ++t) {
            int qq = t;
            for (int i = 0; i < n; ++i) {
                kn[i] = k[i] + qq % 3 - 1;
                qq /= 3;
            }
            if (!g.in_range(kn.data())) continue;
            int64_t id = g.index(kn.data());
            if (d[static_cast<size_t>(id)] >= 0) continue;
            d[static_cast<size_t>(id)] = d[static_cast<size_t>(c)] + 1;
            q.push_back(id);
        }
    }
    return d;
}

}  // namespace

UnderResult reach_under(const VectorField& f, const CellSet& seed, const ReachConfig& c, const Anchors* anchors,
                        const CellSet* target) {
    check_config(f, seed, c);
    if (!(c.r > 0)) throw PreconditionError("reach_under: r must be positive");
    const GridSpec& g = seed.grid();
    ReachConfig cu = c;
    if (!(cu.H > 0)) cu.H = 1.0;  // witness steps need not match the over-approximation's macro step
    Expander ex(f, g, cu);
    UnderResult res;
    res.set = CellSet(g);
    res.set |= seed;
    res.set.clipped = false;
    std::unordered_map<int64_t, size_t> where;

    // seed cells and their anchor points
    std::vector<std::pair<int64_t, Vec>> src;
    for (int64_t k : seed.indices()) {
        where[k] = res.witnesses.size();
        res.witnesses.push_back({k, -1, {}, 0, {}});
    }
    if (anchors && !anchors->points.empty()) {
        for (const Vec& p : anchors->points) {
            int64_t idx;
            Vec tmp = p;
            bool in = true;
            std::vector<int64_t> kk(f.dim);
            for (int i = 0; i < f.dim; ++i) {
                double t = std::floor((p[i] - g.box.lo[i]) / g.delta[i]);
                if (t < 0 || t >= static_cast<double>(g.counts[i])) in = false;
                else kk[i] = static_cast<int64_t>(t);
            }
            if (!in) continue;
            idx = g.index(kk.data());
            auto it = where.find(idx);
            if (it == where.end() || !res.witnesses[it->second].point.empty()) continue;
            res.witnesses[it->second].point = p;
        }
    } else {
        for (auto& w : res.witnesses) w.point = g.center(w.cell);
    }
    for (const auto& w : res.witnesses)
        if (!w.point.empty()) src.emplace_back(w.cell, w.point);
    if (target)
        for (const auto& w : res.witnesses)
            if (!target->test(w.cell)) {
                res.left_target = true;
                res.exit_cell = w.cell;
                return res;
            }

    const int D = ex.ndirs();
    auto add = [&](const Cand& cd) {
        res.set.set(cd.cell);
        where[cd.cell] = res.witnesses.size();
        res.witnesses.push_back({cd.cell, cd.pred, cd.u, cu.H, cd.point});
    };

    if (target) {
        // best first toward the target edge; stops at the first exit
        std::vector<int32_t> dist = exit_distance(*target);
        using Item = std::tuple<int32_t, int64_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        std::unordered_map<int64_t, Vec> pts;
        for (auto& [cell, p] : src) {
            pq.emplace(dist[static_cast<size_t>(cell)], cell);
            pts[cell] = p;
        }
        auto claimed = [&](int64_t id) { return res.set.test(id); };
        while (!pq.empty()) {
            auto [dd, cell] = pq.top();
            pq.pop();
            Vec a = pts[cell];
            for (int k = 0; k < D; ++k) {
                Cand cd;
                bool off = false;
                Witness offw;
                if (ex.expand(cell, a, k, claimed, cd, off, offw)) {
                    add(cd);
                    pts[cd.cell] = cd.point;
                    if (!target->test(cd.cell)) {
                        res.left_target = true;
                        res.exit_cell = cd.cell;
                        return res;
                    }
                    pq.emplace(dist[static_cast<size_t>(cd.cell)], cd.cell);
                } else if (off) {
                    res.left_window = true;
                    res.left_target = true;
                    res.exit_step = offw;
                    return res;
                }
            }
            ++res.layers;
            if (static_cast<long>(res.witnesses.size()) >= c.max_under_cells) break;
        }
        return res;
    }

    // layer-synchronous search; duplicates resolved by (cell, pred, direction)
    std::vector<std::pair<int64_t, Vec>> frontier = src;
    while (!frontier.empty()) {
        if (static_cast<long>(res.witnesses.size()) >= c.max_under_cells) break;
        const CellSet& Q = res.set;
        auto claimed = [&](int64_t id) { return Q.test(id); };
        std::vector<Cand> all;
        bool off_any = false;
        const long N = static_cast<long>(frontier.size()) * D;
#pragma omp parallel
        {
            std::vector<Cand> mine;
            bool off_mine = false;
#pragma omp for schedule(dynamic, 64) nowait
            for (long t = 0; t < N; ++t) {
                const auto& [cell, a] = frontier[static_cast<size_t>(t / D)];
                Cand cd;
                bool off = false;
                Witness offw;
                if (ex.expand(cell, a, static_cast<int>(t % D), claimed, cd, off, offw)) mine.push_back(std::move(cd));
                if (off) off_mine = true;
            }
#pragma omp critical
            {
                off_any = off_any || off_mine;
                for (auto& cd : mine) all.push_back(std::move(cd));
            }
        }
        std::sort(all.begin(), all.end(), [](const Cand& x, const Cand& y) {
            if (x.cell != y.cell) return x.cell < y.cell;
            if (x.pred != y.pred) return x.pred < y.pred;
            return x.dir < y.dir;
        });
        std::vector<std::pair<int64_t, Vec>> next;
        std::vector<int64_t> fresh;
        for (size_t i = 0; i < all.size(); ++i) {
            if (i > 0 && all[i].cell == all[i - 1].cell) continue;
            add(all[i]);
            next.emplace_back(all[i].cell, all[i].point);
            fresh.push_back(all[i].cell);
        }
        res.left_window = res.left_window || off_any;
        // fill the gaps between landings: neighbors of fresh cells, warm-started from a neighbor's witness
        while (!fresh.empty() && static_cast<long>(res.witnesses.size()) < c.max_under_cells) {
            std::vector<int64_t> pending;
            std::vector<int64_t> kk(f.dim), kn(f.dim);
            for (int64_t cell : fresh) {
                g.unravel(cell, kk.data());
                for (const auto& o : ex.offsets()) {
                    for (int i = 0; i < f.dim; ++i) kn[i] = kk[i] + o[i];
                    if (!g.in_range(kn.data())) continue;
                    int64_t id = g.index(kn.data());
                    if (!res.set.test(id)) pending.push_back(id);
                }
            }
            std::sort(pending.begin(), pending.end());
            pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
            std::vector<Cand> got(pending.size());
            std::vector<uint8_t> okv(pending.size(), 0);
            const long P = static_cast<long>(pending.size());
#pragma omp parallel for schedule(dynamic, 32)
            for (long t = 0; t < P; ++t) {
                int64_t cid = pending[static_cast<size_t>(t)];
                std::vector<int64_t> k1(f.dim), k2(f.dim);
                g.unravel(cid, k1.data());
                std::vector<int64_t> tried;
                for (const auto& o : ex.offsets()) {
                    for (int i = 0; i < f.dim; ++i) k2[i] = k1[i] + o[i];
                    if (!g.in_range(k2.data())) continue;
                    int64_t nb = g.index(k2.data());
                    if (!res.set.test(nb)) continue;
                    const Witness& wn = res.witnesses[where.at(nb)];
                    int64_t source;
                    Vec a, u0, e0;
                    if (wn.pred >= 0) {
                        source = wn.pred;
                        a = res.witnesses[where.at(wn.pred)].point;
                        u0 = wn.u;
                        e0 = wn.point;
                    } else {
                        if (wn.point.empty()) continue;
                        source = nb;
                        a = wn.point;
                        u0.assign(f.dim, 0.0);
                        e0.assign(f.dim, 0.0);
                        std::vector<double> w;
                        if (!ex.shoot(a.data(), u0.data(), e0.data(), w)) continue;
                    }
                    if (std::find(tried.begin(), tried.end(), source) != tried.end()) continue;
                    tried.push_back(source);
                    if (ex.fill(source, a, u0, e0, cid, got[static_cast<size_t>(t)])) {
                        okv[static_cast<size_t>(t)] = 1;
                        break;
                    }
                    if (tried.size() >= 3) break;
                }
            }
            fresh.clear();
            for (size_t t = 0; t < pending.size(); ++t)
                if (okv[t]) {
                    add(got[t]);
                    next.emplace_back(got[t].cell, got[t].point);
                    fresh.push_back(got[t].cell);
                }
        }
        frontier.swap(next);
        ++res.layers;
    }
    return res;
}

ControlSignal witness_signal(const UnderResult& u, int64_t cell, Vec& start) {
    std::unordered_map<int64_t, size_t> where;
    for (size_t i = 0; i < u.witnesses.size(); ++i) where[u.witnesses[i].cell] = i;
    std::vector<const Witness*> chain;
    auto it = where.find(cell);
    if (it == where.end()) throw PreconditionError("witness: cell not in the under-approximation");
    const Witness* w = &u.witnesses[it->second];
    while (w->pred >= 0) {
        chain.push_back(w);
        w = &u.witnesses[where.at(w->pred)];
    }
    if (w->point.empty()) throw PreconditionError("witness: chain starts at a seed cell without an anchor");
    start = w->point;
    ControlSignal g;
    if (chain.empty()) return g;
    std::reverse(chain.begin(), chain.end());
    g.breaks.push_back(0.0);
    double t = 0;
    for (const Witness* c : chain) {
        t += c->T;
        g.breaks.push_back(t);
        g.values.push_back(c->u);
    }
    return g;
}

Vec replay_witness(const VectorField& f, const UnderResult& u, int64_t cell, double h_max) {
    Vec start;
    ControlSignal g = witness_signal(u, cell, start);
    if (g.values.empty()) return start;
    // same fixed step as the search
    Vec x = start;
    std::vector<double> w(5 * f.dim);
    for (size_t s = 0; s < g.values.size(); ++s) {
        double T = g.breaks[s + 1] - g.breaks[s];
        int steps = std::max(2, static_cast<int>(std::ceil(T / (0.5 * h_max) - 1e-9)));
        double dt = T / steps;
        for (int j = 0; j < steps; ++j) rk4_step(f, x.data(), g.values[s].data(), dt, w.data());
    }
    return x;
}

}  // namespace rch
