#include "rch/blob.hpp"
#include "rch/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rch {

namespace {

void matmul(const double* A, const double* B, double* C, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int k = 0; k < n; ++k) s += A[i * n + k] * B[k * n + j];
            C[i * n + j] = s;
        }
}

bool matinv(const double* A, double* R, int n, double* tmp) {
    if (n == 1) {
        if (A[0] == 0) return false;
        R[0] = 1.0 / A[0];
        return true;
    }
    if (n == 2) {
        double d = A[0] * A[3] - A[1] * A[2];
        if (d == 0) return false;
        R[0] = A[3] / d;
        R[1] = -A[1] / d;
        R[2] = -A[2] / d;
        R[3] = A[0] / d;
        return true;
    }
    // Gauss-Jordan with partial pivoting on [A | I]
    const int w = 2 * n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < w; ++j) tmp[i * w + j] = j < n ? A[i * n + j] : (j - n == i ? 1.0 : 0.0);
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int i = c + 1; i < n; ++i)
            if (std::abs(tmp[i * w + c]) > std::abs(tmp[piv * w + c])) piv = i;
        if (tmp[piv * w + c] == 0) return false;
        if (piv != c)
            for (int j = 0; j < w; ++j) std::swap(tmp[c * w + j], tmp[piv * w + j]);
        double d = tmp[c * w + c];
        for (int j = 0; j < w; ++j) tmp[c * w + j] /= d;
        for (int i = 0; i < n; ++i) {
            if (i == c) continue;
            double m = tmp[i * w + c];
            if (m == 0) continue;
            for (int j = 0; j < w; ++j) tmp[i * w + j] -= m * tmp[c * w + j];
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R[i * n + j] = tmp[i * w + n + j];
    return true;
}

double opnorm2(const double* A, int n) {
    static const NormSpec two{2.0, 0};
    return operator_norm(A, n, two);
}

}  // namespace

BlobEngine::BlobEngine(const VectorField& f, const GridSpec& g, const BlobParams& p) : f_(f), g_(g), p_(p) {
    if (f.dim != g.dim()) throw std::invalid_argument("blob engine: field/grid dimension mismatch");
    const int n = f.dim;
    if (n == 2) {
        int N = std::max(8, p.directions);
        N = (N + 3) / 4 * 4;  // keep the axes in the fan
        for (int k = 0; k < N; ++k) {
            double th = 2.0 * std::numbers::pi * k / N;
            Vec v{std::cos(th), std::sin(th)};
            for (auto& c : v)
                if (std::abs(c) < 1e-15) c = 0.0;
            dirs_.push_back(v);
        }
    } else if (n >= 3) {
        dirs_ = ball_directions(NormSpec{2.0, 0}, n, std::max(p.directions, 2 * n));
    }
    tol_ = p.tol > 0 ? p.tol : 1e-3 * *std::min_element(g.delta.begin(), g.delta.end());
}

CoverStatus BlobEngine::cover(int64_t cell, std::vector<Span>& out, Work& w, bool sweep) const {
    Vec c = g_.center(cell);
    Vec half(g_.dim());
    for (int i = 0; i < g_.dim(); ++i) half[i] = 0.5 * g_.delta[i];
    return cover_box(c, half, out, w, sweep);
}

CoverStatus BlobEngine::cover_box(const Vec& c, const Vec& half, std::vector<Span>& out, Work& w,
                                  bool sweep) const {
    if (g_.dim() == 1) return cover1d(c, half, out, w, sweep);
    return covernd(c, half, out, w, sweep);
}

static void emit_interval(const GridSpec& g, double a, double b, std::vector<Span>& out, CoverStatus& st) {
    double L0 = g.box.lo[0], d = g.delta[0];
    int64_t lo = static_cast<int64_t>(std::ceil((a - L0) / d)) - 1;
    int64_t hi = static_cast<int64_t>(std::floor((b - L0) / d));
    if (lo < 0) {
        st.clipped = true;
        lo = 0;
    }
    if (hi > g.counts[0] - 1) {
        st.clipped = true;
        hi = g.counts[0] - 1;
    }
    if (lo <= hi) out.push_back({0, lo, hi});
}

CoverStatus BlobEngine::cover1d(const Vec& c, const Vec& half, std::vector<Span>& out, Work& w, bool sweep) const {
    CoverStatus st;
    const double H = p_.H, r = p_.r;
    double xl = c[0] - half[0], xh = c[0] + half[0];
    double J = 0;
    double L = 0;
    for (double x : {xl, c[0], xh}) {
        f_.jacobian(&x, &J);
        L = std::max(L, std::abs(J));
    }
    double hs = std::min(p_.h_max, p_.sub_scale / std::max(L, 1e-12));
    int m = std::max(2, static_cast<int>(std::ceil(H / hs - 1e-9)));
    double v = 0;
    if (sweep) {
        double fv = 0;
        f_.eval(&c[0], &fv);
        v = std::abs(fv) + r + L * half[0];
        int ms = static_cast<int>(std::ceil(2.0 * v * H / (g_.delta[0] / 8)));
        m = std::clamp(std::max(m, ms), m, 200000);
    }
    double dt = H / m;
    w.buf.resize(10);
    double* work = w.buf.data();
    double ul = -r, uh = r;
    double lo_min = xl, hi_max = xh, vmax = 0;
    const Box& dom = f_.domain;
    for (int j = 0; j < m; ++j) {
        if (sweep) {
            double fa = 0, fb = 0;
            f_.eval(&xl, &fa);
            f_.eval(&xh, &fb);
            vmax = std::max({vmax, std::abs(fa) + r, std::abs(fb) + r});
        }
        rk4_step(f_, &xl, &ul, dt, work);
        rk4_step(f_, &xh, &uh, dt, work);
        if (!std::isfinite(xl) || !std::isfinite(xh) || xl < dom.lo[0] || xh > dom.hi[0]) {
            st.exited_domain = true;
            st.clipped = true;
            return st;
        }
        lo_min = std::min(lo_min, xl);
        hi_max = std::max(hi_max, xh);
    }
    st.substeps = m;
    double a, b;
    if (sweep) {
        double pad = vmax * dt / 2 + tol_;
        a = lo_min - pad;
        b = hi_max + pad;
    } else {
        a = xl - tol_;
        b = xh + tol_;
    }
    emit_interval(g_, a, b, out, st);
    return st;
}

CoverStatus BlobEngine::covernd(const Vec& c, const Vec& half, std::vector<Span>& out, Work& w, bool sweep) const {
    CoverStatus st;
    const int n = g_.dim();
    const int n2 = n * n;
    const double H = p_.H, r = p_.r;
    const double q = p_.norm.dual();
    // largest Euclidean length of a control with norm <= r
    double r2 = r;
    if (p_.norm.is_inf()) r2 = r * std::sqrt(static_cast<double>(n));
    else if (p_.norm.p > 2) r2 = r * std::pow(static_cast<double>(n), 0.5 - 1.0 / p_.norm.p);
    double rho2 = 0;
    for (int i = 0; i < n; ++i) rho2 += half[i] * half[i];
    rho2 = std::sqrt(rho2);

    w.J.resize(n2);
    f_.jacobian(c.data(), w.J.data());
    double L = opnorm2(w.J.data(), n);
    double hs = std::min(p_.h_max, p_.sub_scale / std::max(L, 1e-12));
    int m = std::max(2, static_cast<int>(std::ceil(H / hs - 1e-9)));
    if (sweep) {
        w.x.resize(n);
        f_.eval(c.data(), w.x.data());
        double v = norm_raw(2.0, w.x.data(), n) + r2 + L * rho2;
        double dmin = *std::min_element(g_.delta.begin(), g_.delta.end());
        int ms = static_cast<int>(std::ceil(2.0 * v * H / (dmin / 8)));
        m = std::clamp(std::max(m, ms), m, 20000);
    }
    if (m % 2) ++m;
    const double dt = H / m;
    st.substeps = m;

    // RK4 on (x, Phi)
    const int S = n + n2;
    w.xs.resize(static_cast<size_t>(m + 1) * n);
    w.phis.resize(static_cast<size_t>(m + 1) * n2);
    w.tmp.resize(static_cast<size_t>(6 * S + 2 * n2 + 4 * n2));
    double* y = w.tmp.data();
    double* k1 = y + S;
    double* k2 = k1 + S;
    double* k3 = k2 + S;
    double* k4 = k3 + S;
    double* yt = k4 + S;
    double* Jt = yt + S;
    auto deriv = [&](const double* s, double* out_) {
        f_.eval(s, out_);
        f_.jacobian(s, Jt);
        matmul(Jt, s + n, out_ + n, n);
    };
    for (int i = 0; i < n; ++i) y[i] = c[i];
    for (int i = 0; i < n2; ++i) y[n + i] = (i % (n + 1) == 0) ? 1.0 : 0.0;
    std::copy(y, y + n, w.xs.begin());
    std::copy(y + n, y + S, w.phis.begin());
    const Box& dom = f_.domain;
    for (int j = 0; j < m; ++j) {
        deriv(y, k1);
        for (int i = 0; i < S; ++i) yt[i] = y[i] + 0.5 * dt * k1[i];
        deriv(yt, k2);
        for (int i = 0; i < S; ++i) yt[i] = y[i] + 0.5 * dt * k2[i];
        deriv(yt, k3);
        for (int i = 0; i < S; ++i) yt[i] = y[i] + dt * k3[i];
        deriv(yt, k4);
        for (int i = 0; i < S; ++i) y[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        for (int i = 0; i < S; ++i)
            if (!std::isfinite(y[i])) {
                st.exited_domain = st.clipped = true;
                return st;
            }
        if (!dom.contains(y)) {
            st.exited_domain = st.clipped = true;
            return st;
        }
        std::copy(y, y + n, w.xs.begin() + static_cast<long>(j + 1) * n);
        std::copy(y + n, y + S, w.phis.begin() + static_cast<long>(j + 1) * n2);
    }

    // inverses of Phi(t_i, 0)
    w.inv.resize(static_cast<size_t>(m + 1) * n2);
    double* gj = Jt + n2;  // scratch for Gauss-Jordan (2n*n)
    std::vector<double> gjbuf;
    if (n > 2) {
        gjbuf.resize(2 * n2);
        gj = gjbuf.data();
    }
    for (int i = 0; i <= m; ++i)
        if (!matinv(&w.phis[static_cast<size_t>(i) * n2], &w.inv[static_cast<size_t>(i) * n2], n, gj)) {
            st.exited_domain = st.clipped = true;
            return st;
        }

    std::vector<double> P(n2);
    // nD linear deviation bound and the integral of |Phi(t,s)| for the final time
    double Zmax = rho2;
    double intPhiH = 0;
    std::vector<double> Zlin(m + 1, 0.0);
    for (int j = 0; j <= m; ++j) {
        const double* Pj = &w.phis[static_cast<size_t>(j) * n2];
        double acc = 0, prev = 0;
        for (int i = 0; i <= j; ++i) {
            matmul(Pj, &w.inv[static_cast<size_t>(i) * n2], P.data(), n);
            double v = opnorm2(P.data(), n);
            if (i > 0) acc += 0.5 * dt * (v + prev);
            prev = v;
        }
        Zlin[j] = 1.1 * (opnorm2(Pj, n) * rho2 + r2 * acc);
        Zmax = std::max(Zmax, Zlin[j]);
        if (j == m) intPhiH = acc;
    }
    // |Phi(H, s)| at the nodes, for the remainder integral
    std::vector<double> phiH(m + 1);
    {
        const double* Pm = &w.phis[static_cast<size_t>(m) * n2];
        for (int i = 0; i <= m; ++i) {
            matmul(Pm, &w.inv[static_cast<size_t>(i) * n2], P.data(), n);
            phiH[i] = opnorm2(P.data(), n);
        }
    }

    // second-derivative size across the tube, secant estimate at a few nodes
    double eta = std::max(Zmax, 1e-6);
    w.Jp.resize(n2);
    w.Jm.resize(n2);
    w.x.resize(n);
    double L2 = 0;
    double vmax = 0;
    for (int j : {0, m / 2, m}) {
        const double* xj = &w.xs[static_cast<size_t>(j) * n];
        double s2 = 0;
        for (int a = 0; a < n; ++a) {
            std::copy(xj, xj + n, w.x.begin());
            w.x[a] = xj[a] + eta;
            f_.jacobian(w.x.data(), w.Jp.data());
            w.x[a] = xj[a] - eta;
            f_.jacobian(w.x.data(), w.Jm.data());
            double fr = 0;
            for (int i = 0; i < n2; ++i) fr += (w.Jp[i] - w.Jm[i]) * (w.Jp[i] - w.Jm[i]);
            s2 += fr / (4 * eta * eta);
        }
        L2 = std::max(L2, std::sqrt(s2));
    }
    L2 *= 1.5;
    // remainder e(H) <= int |Phi(H,s)| L2/2 (Zlin(s) + e)^2 ds, with e bounded by a first pass
    auto rem_of = [&](double e) {
        double acc = 0;
        for (int i = 1; i <= m; ++i) {
            double a = (Zlin[i - 1] + e), b = (Zlin[i] + e);
            acc += 0.5 * dt * (phiH[i - 1] * a * a + phiH[i] * b * b);
        }
        return 0.5 * L2 * acc;
    };
    double rem = 0.5 * L2 * Zmax * Zmax * std::max(intPhiH, dt);
    rem = 1.1 * rem_of(1.1 * rem);

    if (sweep) {
        // tube of Euclidean balls along the center trajectory
        for (int j = 0; j <= m; ++j) {
            const double* xj = &w.xs[static_cast<size_t>(j) * n];
            f_.eval(xj, w.x.data());
            double v = norm_raw(2.0, w.x.data(), n) + r2 + L * Zmax;
            vmax = std::max(vmax, v);
        }
        w.dir_h.resize(dirs_.size());
        for (int j = 0; j <= m; ++j) {
            const double* xj = &w.xs[static_cast<size_t>(j) * n];
            double rad = (Zlin[j] + rem + tol_ + vmax * dt / 2);
            for (size_t k = 0; k < dirs_.size(); ++k) {
                double s = 0;
                for (int i = 0; i < n; ++i) s += dirs_[k][i] * xj[i];
                w.dir_h[k] = s + rad;
            }
            emit_polygon(w.dir_h.data(), out, st);
        }
        return st;
    }

    // supports of the final-time cover on every separating direction
    const double* M = &w.phis[static_cast<size_t>(m) * n2];
    const double* xH = &w.xs[static_cast<size_t>(m) * n];
    // A_i = (M inv_i)^T
    w.A.resize(static_cast<size_t>(m + 1) * n2);
    for (int i = 0; i <= m; ++i) {
        matmul(M, &w.inv[static_cast<size_t>(i) * n2], P.data(), n);
        double* Ai = &w.A[static_cast<size_t>(i) * n2];
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) Ai[a * n + b] = P[b * n + a];
    }
    w.dir_h.resize(dirs_.size());
    std::vector<double> tv(n);
    for (size_t k = 0; k < dirs_.size(); ++k) {
        const double* d = dirs_[k].data();
        double h = 0;
        for (int i = 0; i < n; ++i) h += d[i] * xH[i];
        // M^T d against the cell half-widths
        for (int a = 0; a < n; ++a) {
            double s = 0;
            for (int b = 0; b < n; ++b) s += M[b * n + a] * d[b];
            h += std::abs(s) * half[a];
        }
        if (r > 0) {
            double acc = 0;
            for (int i = 0; i <= m; ++i) {
                const double* Ai = &w.A[static_cast<size_t>(i) * n2];
                for (int a = 0; a < n; ++a) {
                    double s = 0;
                    for (int b = 0; b < n; ++b) s += Ai[a * n + b] * d[b];
                    tv[a] = s;
                }
                double v = norm_raw(q, tv.data(), n);
                double wgt = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                acc += wgt * v;
            }
            h += r * acc * dt / 3.0 * 1.01;
        }
        h += rem + tol_;
        w.dir_h[k] = h;
    }
    emit_polygon(w.dir_h.data(), out, st);
    return st;
}

void BlobEngine::emit_polygon(const double* hs, std::vector<Span>& out, CoverStatus& st) const {
    const int n = g_.dim();
    const size_t N = dirs_.size();
    if (n == 2) {
        const double Lx = g_.box.lo[0], Ly = g_.box.lo[1], dx = g_.delta[0], dy = g_.delta[1];
        const double wx = dx / 2, wy = dy / 2;
        // axis supports: fan index 0 is +x, N/4 is +y, N/2 is -x, 3N/4 is -y
        double yhi = hs[N / 4], ylo = -hs[3 * N / 4];
        int64_t jlo = static_cast<int64_t>(std::ceil((ylo - Ly) / dy - 1.0));
        int64_t jhi = static_cast<int64_t>(std::floor((yhi - Ly) / dy));
        if (jlo < 0) {
            st.clipped = true;
            jlo = 0;
        }
        if (jhi > g_.counts[1] - 1) {
            st.clipped = true;
            jhi = g_.counts[1] - 1;
        }
        for (int64_t j = jlo; j <= jhi; ++j) {
            double yc = Ly + (static_cast<double>(j) + 0.5) * dy;
            double xl = -std::numeric_limits<double>::infinity(), xr = std::numeric_limits<double>::infinity();
            bool empty = false;
            for (size_t k = 0; k < N; ++k) {
                double a = dirs_[k][0], bb = dirs_[k][1];
                double rhs = hs[k] + std::abs(a) * wx + std::abs(bb) * wy - bb * yc;
                if (a > 0) xr = std::min(xr, rhs / a);
                else if (a < 0) xl = std::max(xl, rhs / a);
                else if (rhs < 0) empty = true;
            }
            if (empty || xl > xr) continue;
            int64_t ilo = static_cast<int64_t>(std::ceil((xl - Lx) / dx - 0.5));
            int64_t ihi = static_cast<int64_t>(std::floor((xr - Lx) / dx - 0.5));
            if (ilo < 0) {
                st.clipped = true;
                ilo = 0;
            }
            if (ihi > g_.counts[0] - 1) {
                st.clipped = true;
                ihi = g_.counts[0] - 1;
            }
            if (ilo <= ihi) out.push_back({j * g_.strides[1], ilo, ihi});
        }
        return;
    }
    // general n: scan the bounding box, test each cell against the fan
    std::vector<int64_t> lo(n), hi(n), k(n);
    for (int a = 0; a < n; ++a) {
        double up = hs[2 * a], dn = -hs[2 * a + 1];
        double L = g_.box.lo[a], d = g_.delta[a];
        lo[a] = static_cast<int64_t>(std::ceil((dn - L) / d - 1.0));
        hi[a] = static_cast<int64_t>(std::floor((up - L) / d));
        if (lo[a] < 0) {
            st.clipped = true;
            lo[a] = 0;
        }
        if (hi[a] > g_.counts[a] - 1) {
            st.clipped = true;
            hi[a] = g_.counts[a] - 1;
        }
        if (lo[a] > hi[a]) return;
    }
    k = lo;
    std::vector<double> cc(n);
    while (true) {
        int64_t idx = g_.index(k.data());
        g_.center(idx, cc.data());
        bool in = true;
        for (size_t t = 0; t < N && in; ++t) {
            double s = 0, wsum = 0;
            for (int a = 0; a < n; ++a) {
                s += dirs_[t][a] * cc[a];
                wsum += std::abs(dirs_[t][a]) * g_.delta[a] / 2;
            }
            if (s - wsum > hs[t]) in = false;
        }
        if (in) out.push_back({idx, 0, 0});
        int a = 0;
        for (; a < n; ++a) {
            if (++k[a] <= hi[a]) break;
            k[a] = lo[a];
        }
        if (a == n) break;
    }
}

void cover_ball(const GridSpec& g, const NormSpec& nm, const double* c, double radius, std::vector<Span>& out,
                bool& clipped) {
    const int n = g.dim();
    std::vector<int64_t> lo(n), hi(n), k(n);
    for (int a = 0; a < n; ++a) {
        double L = g.box.lo[a], d = g.delta[a];
        lo[a] = static_cast<int64_t>(std::ceil((c[a] - radius - L) / d - 1.0));
        hi[a] = static_cast<int64_t>(std::floor((c[a] + radius - L) / d));
        if (lo[a] < 0) {
            clipped = true;
            lo[a] = 0;
        }
        if (hi[a] > g.counts[a] - 1) {
            clipped = true;
            hi[a] = g.counts[a] - 1;
        }
        if (lo[a] > hi[a]) return;
    }
    k = lo;
    while (true) {
        int64_t idx = g.index(k.data());
        Box b = g.cell_box(idx);
        if (box_point_distance(nm, b, c) <= radius) out.push_back({idx, 0, 0});
        int a = 0;
        for (; a < n; ++a) {
            if (++k[a] <= hi[a]) break;
            k[a] = lo[a];
        }
        if (a == n) break;
    }
}

}  // namespace rch
