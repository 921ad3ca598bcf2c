#include "rch/flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rch/blob.hpp"

namespace rch {

ControlSignal ControlSignal::constant(const Vec& u, double T) {
    ControlSignal g;
    g.breaks = {0.0, T};
    g.values = {u};
    return g;
}

ControlSignal ControlSignal::zero(int dim, double T) { return constant(Vec(dim, 0.0), T); }

const Vec& ControlSignal::at(double t) const {
    // interval i covers [t_i, t_{i+1}); the last one is closed
    auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
    long i = static_cast<long>(it - breaks.begin()) - 1;
    i = std::clamp<long>(i, 0, static_cast<long>(values.size()) - 1);
    return values[static_cast<size_t>(i)];
}

double ControlSignal::sup_norm(const NormSpec& n) const {
    double s = 0;
    for (const auto& v : values) s = std::max(s, norm_eval(NormSpec{n.p, 0}, v));
    return s;
}

void ControlSignal::append(const ControlSignal& g) {
    if (breaks.empty()) {
        *this = g;
        return;
    }
    double T0 = duration();
    for (size_t i = 0; i < g.values.size(); ++i) {
        values.push_back(g.values[i]);
        breaks.push_back(T0 + g.breaks[i + 1]);
    }
}

void ControlSignal::validate() const {
    if (breaks.size() < 2 || values.size() + 1 != breaks.size())
        throw PreconditionError("control signal: need k+1 breakpoints for k values");
    if (breaks[0] != 0.0) throw PreconditionError("control signal: first breakpoint must be 0");
    for (size_t i = 1; i < breaks.size(); ++i)
        if (!(breaks[i] > breaks[i - 1])) throw PreconditionError("control signal: breakpoints must increase");
    for (const auto& v : values)
        if (v.size() != values[0].size()) throw PreconditionError("control signal: inconsistent value dimension");
}

double default_step(double L) { return L > 0 ? std::min(0.01, 0.1 / L) : 0.01; }

void rk4_step(const VectorField& f, double* x, const double* u, double h, double* w) {
    const int n = f.dim;
    double* k1 = w;
    double* k2 = w + n;
    double* k3 = w + 2 * n;
    double* k4 = w + 3 * n;
    double* t = w + 4 * n;
    f.eval(x, k1);
    for (int i = 0; i < n; ++i) {
        k1[i] += u[i];
        t[i] = x[i] + 0.5 * h * k1[i];
    }
    f.eval(t, k2);
    for (int i = 0; i < n; ++i) {
        k2[i] += u[i];
        t[i] = x[i] + 0.5 * h * k2[i];
    }
    f.eval(t, k3);
    for (int i = 0; i < n; ++i) {
        k3[i] += u[i];
        t[i] = x[i] + h * k3[i];
    }
    f.eval(t, k4);
    for (int i = 0; i < n; ++i) {
        k4[i] += u[i];
        x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
}

Trajectory integrate(const VectorField& f, const Vec& x0, const ControlSignal& g, double T, double h, bool record) {
    const int n = f.dim;
    if (static_cast<int>(x0.size()) != n) throw PreconditionError("integrate: x0 dimension mismatch");
    if (!(h > 0)) throw PreconditionError("integrate: step must be positive");
    if (!(T >= 0)) throw PreconditionError("integrate: T must be nonnegative");
    g.validate();
    if (g.dim() != n) throw PreconditionError("integrate: control dimension mismatch");
    if (g.duration() < T * (1 - 1e-12)) throw PreconditionError("integrate: control shorter than horizon");
    if (!f.domain.contains(x0.data())) throw PreconditionError("integrate: x0 outside the field domain");

    Trajectory tr;
    Vec x = x0;
    std::vector<double> w(5 * n);
    tr.times.push_back(0.0);
    tr.states.push_back(x);
    double t = 0;
    for (size_t seg = 0; seg < g.values.size() && t < T; ++seg) {
        double a = g.breaks[seg], b = std::min(g.breaks[seg + 1], T);
        if (b <= a) continue;
        long m = std::max(1L, static_cast<long>(std::ceil((b - a) / h - 1e-9)));
        double dt = (b - a) / static_cast<double>(m);
        const double* u = g.values[seg].data();
        for (long j = 0; j < m; ++j) {
            rk4_step(f, x.data(), u, dt, w.data());
            t = (j + 1 == m) ? b : a + static_cast<double>(j + 1) * dt;
            for (double v : x)
                if (!std::isfinite(v)) throw FlowError("integrate: non-finite state", t);
            bool out = !f.domain.contains(x.data());
            if (record || out) {
                tr.times.push_back(t);
                tr.states.push_back(x);
            }
            if (out) {
                tr.exited_domain = true;
                return tr;
            }
        }
    }
    if (!record) {
        tr.times.push_back(t);
        tr.states.push_back(x);
    }
    return tr;
}

Vec integrate_endpoint(const VectorField& f, const Vec& x0, const ControlSignal& g, double T, double h,
                       bool* exited) {
    Trajectory tr = integrate(f, x0, g, T, h, false);
    if (exited) *exited = tr.exited_domain;
    return tr.states.back();
}

double gronwall_bound(double L, double T, double gap) {
    if (L < 0 || T < 0 || gap < 0) throw PreconditionError("gronwall_bound: arguments must be nonnegative");
    if (gap == 0) return 0.0;
    return T * gap * std::exp(L * T);
}

TimeMapResult time_t_map(const VectorField& f, const CellSet& s, double t, double h_max) {
    if (!(t > 0)) throw PreconditionError("time_t_map: t must be positive");
    const GridSpec& g = s.grid();
    BlobParams bp;
    bp.H = t;
    bp.r = 0;
    bp.h_max = h_max;
    BlobEngine eng(f, g, bp);
    TimeMapResult res{CellSet(g), false};
    std::vector<int64_t> cells = s.indices();
    const long N = static_cast<long>(cells.size());
    auto& bits = res.image.raw();
    bool exited = false;
#pragma omp parallel
    {
        BlobEngine::Work w;
        std::vector<Span> spans, mine;
        bool ex = false;
#pragma omp for schedule(dynamic, 16)
        for (long i = 0; i < N; ++i) {
            spans.clear();
            CoverStatus st = eng.cover(cells[static_cast<size_t>(i)], spans, w);
            if (st.exited_domain || st.clipped) ex = true;
            mine.insert(mine.end(), spans.begin(), spans.end());
        }
#pragma omp critical
        {
            exited = exited || ex;
            for (const Span& sp : mine)
                for (int64_t k = sp.lo; k <= sp.hi; ++k) bits[static_cast<size_t>(sp.base + k)] = 1;
        }
    }
    res.exited = exited;
    res.image.clipped = exited;
    return res;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "t";
    int n = tr.states.empty() ? 0 : static_cast<int>(tr.states[0].size());
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    os << "\n";
    for (size_t k = 0; k < tr.times.size(); ++k) {
        os << fmt_double(tr.times[k]);
        for (double v : tr.states[k]) os << "," << fmt_double(v);
        os << "\n";
    }
}

}  // namespace rch
