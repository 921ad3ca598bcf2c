#include "rch/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace rch {

bool NormSpec::is_inf() const { return std::isinf(p); }

double NormSpec::dual() const {
    if (is_inf()) return 1.0;
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return p / (p - 1.0);
}

std::string NormSpec::str() const { return is_inf() ? "inf" : fmt_double(p); }

NormSpec NormSpec::parse(const std::string& s) {
    NormSpec n;
    if (s == "inf" || s == "max" || s == "Inf" || s == "infinity") {
        n.p = std::numeric_limits<double>::infinity();
        return n;
    }
    size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw PreconditionError("norm p must be >= 1 or 'inf': " + s);
    }
    if (pos != s.size() || !(v >= 1.0)) throw PreconditionError("norm p must be >= 1 or 'inf': " + s);
    n.p = v;
    return n;
}

double norm_raw(double p, const double* v, int dim) {
    if (std::isinf(p)) {
        double m = 0;
        for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(v[i]));
        return m;
    }
    if (p == 1.0) {
        double s = 0;
        for (int i = 0; i < dim; ++i) s += std::abs(v[i]);
        return s;
    }
    if (p == 2.0) {
        if (dim == 1) return std::abs(v[0]);
        if (dim == 2) return std::hypot(v[0], v[1]);
        double s = 0;
        for (int i = 0; i < dim; ++i) s += v[i] * v[i];
        return std::sqrt(s);
    }
    // scale first so large/small entries do not overflow
    double m = 0;
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(v[i]));
    if (m == 0) return 0;
    double s = 0;
    for (int i = 0; i < dim; ++i) s += std::pow(std::abs(v[i]) / m, p);
    return m * std::pow(s, 1.0 / p);
}

double norm_eval(const NormSpec& n, const Vec& v) {
    if (n.dim > 0 && static_cast<int>(v.size()) != n.dim)
        throw std::invalid_argument("norm_eval: dimension mismatch");
    return norm_raw(n.p, v.data(), static_cast<int>(v.size()));
}

std::vector<Vec> ball_directions(const NormSpec& n, int dim, int count) {
    if (dim <= 0) throw std::invalid_argument("ball_directions: dim must be positive");
    if (dim == 1) return {Vec{1.0}, Vec{-1.0}};
    if (count < 2 * dim) throw std::invalid_argument("ball_directions: count < 2*dim");
    std::vector<Vec> out;
    out.reserve(count);
    if (dim == 2) {
        for (int k = 0; k < count; ++k) {
            double th = 2.0 * std::numbers::pi * k / count;
            Vec v{std::cos(th), std::sin(th)};
            // snap tiny roundoff so axis and diagonal samples are exact
            for (auto& c : v)
                if (std::abs(c) < 1e-15) c = 0.0;
            if (std::abs(std::abs(v[0]) - std::abs(v[1])) < 1e-15) v[1] = std::copysign(std::abs(v[0]), v[1]);
            double nv = norm_raw(n.p, v.data(), 2);
            for (auto& c : v) c /= nv;
            out.push_back(std::move(v));
        }
        return out;
    }
    // axes first, then a Fibonacci-type spiral on the sphere
    for (int i = 0; i < dim; ++i)
        for (double s : {1.0, -1.0}) {
            Vec v(dim, 0.0);
            v[i] = s;
            out.push_back(v);
        }
    int rest = count - 2 * dim;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < rest; ++k) {
        Vec v(dim, 0.0);
        double z = 1.0 - 2.0 * (k + 0.5) / rest;
        double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
        double th = golden * k;
        v[0] = rad * std::cos(th);
        v[1] = rad * std::sin(th);
        v[2] = z;
        // higher dims: rotate through extra axes with a cheap quasi-random sequence
        for (int i = 3; i < dim; ++i) {
            double a = std::fmod((k + 1) * (0.7548776662466927 + 0.1 * i), 1.0) * 2.0 - 1.0;
            v[i] = a;
        }
        double nv = norm_raw(n.p, v.data(), dim);
        for (auto& c : v) c /= nv;
        out.push_back(std::move(v));
    }
    return out;
}

bool Box::contains(const double* x) const {
    for (int i = 0; i < dim(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

void Box::validate() const {
    if (lo.size() != hi.size() || lo.empty()) throw PreconditionError("box: lo/hi dimension mismatch");
    for (size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i])) throw PreconditionError("box: need lo < hi on every axis");
}

double box_point_distance(const NormSpec& n, const Box& b, const double* x) {
    double g[16];
    std::vector<double> big;
    double* gp = g;
    if (b.dim() > 16) {
        big.resize(b.dim());
        gp = big.data();
    }
    for (int i = 0; i < b.dim(); ++i) gp[i] = std::max({0.0, b.lo[i] - x[i], x[i] - b.hi[i]});
    return norm_raw(n.p, gp, b.dim());
}

GridSpec GridSpec::make(const Box& box, const Vec& delta) {
    box.validate();
    if (delta.size() != box.lo.size()) throw PreconditionError("grid: delta dimension mismatch");
    GridSpec g;
    g.box = box;
    g.delta = delta;
    int64_t stride = 1;
    for (size_t i = 0; i < delta.size(); ++i) {
        if (!(delta[i] > 0)) throw PreconditionError("grid: delta must be positive");
        double c = std::ceil((box.hi[i] - box.lo[i]) / delta[i] - 1e-9);
        if (c < 1) c = 1;
        if (c > 1e9) throw PreconditionError("grid: too many cells");
        g.counts.push_back(static_cast<int64_t>(c));
        g.strides.push_back(stride);
        stride *= static_cast<int64_t>(c);
        if (stride > (int64_t(1) << 34)) throw PreconditionError("grid: too many cells");
    }
    return g;
}

GridSpec GridSpec::make(const Box& box, double delta) { return make(box, Vec(box.lo.size(), delta)); }

int64_t GridSpec::size() const {
    int64_t s = 1;
    for (auto c : counts) s *= c;
    return s;
}

int64_t GridSpec::index(const int64_t* k) const {
    int64_t idx = 0;
    for (int i = 0; i < dim(); ++i) idx += k[i] * strides[i];
    return idx;
}

void GridSpec::unravel(int64_t idx, int64_t* k) const {
    for (int i = 0; i < dim(); ++i) {
        k[i] = idx % counts[i];
        idx /= counts[i];
    }
}

void GridSpec::center(int64_t idx, double* out) const {
    for (int i = 0; i < dim(); ++i) {
        int64_t k = idx % counts[i];
        idx /= counts[i];
        out[i] = box.lo[i] + (static_cast<double>(k) + 0.5) * delta[i];
    }
}

Vec GridSpec::center(int64_t idx) const {
    Vec c(dim());
    center(idx, c.data());
    return c;
}

Box GridSpec::cell_box(int64_t idx) const {
    Box b{Vec(dim()), Vec(dim())};
    for (int i = 0; i < dim(); ++i) {
        int64_t k = idx % counts[i];
        idx /= counts[i];
        b.lo[i] = box.lo[i] + static_cast<double>(k) * delta[i];
        b.hi[i] = box.lo[i] + static_cast<double>(k + 1) * delta[i];
    }
    return b;
}

bool GridSpec::in_range(const int64_t* k) const {
    for (int i = 0; i < dim(); ++i)
        if (k[i] < 0 || k[i] >= counts[i]) return false;
    return true;
}

bool GridSpec::on_edge(int64_t idx) const {
    for (int i = 0; i < dim(); ++i) {
        int64_t k = idx % counts[i];
        idx /= counts[i];
        if (k == 0 || k == counts[i] - 1) return true;
    }
    return false;
}

double GridSpec::cell_diameter(const NormSpec& n) const { return norm_raw(n.p, delta.data(), dim()); }
double GridSpec::cell_radius(const NormSpec& n) const { return 0.5 * cell_diameter(n); }

bool GridSpec::operator==(const GridSpec& o) const {
    return box.lo == o.box.lo && box.hi == o.box.hi && delta == o.delta;
}

CellSet::CellSet(GridSpec g) : grid_(std::move(g)), bits_(static_cast<size_t>(grid_.size()), 0) {}

int64_t CellSet::count() const {
    int64_t c = 0;
    for (auto b : bits_) c += b;
    return c;
}

bool CellSet::empty() const {
    return std::find(bits_.begin(), bits_.end(), uint8_t(1)) == bits_.end();
}

std::vector<int64_t> CellSet::indices() const {
    std::vector<int64_t> out;
    for (size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(static_cast<int64_t>(i));
    return out;
}

bool CellSet::touches_boundary() const {
    for (size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] && grid_.on_edge(static_cast<int64_t>(i))) return true;
    return false;
}

bool CellSet::add_point(const double* x) {
    const int d = dim();
    // per axis: one cell, or two when x sits exactly on a shared face
    std::vector<int64_t> lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        double t = (x[i] - grid_.box.lo[i]) / grid_.delta[i];
        if (!(t >= 0) || t > static_cast<double>(grid_.counts[i])) return false;
        double fl = std::floor(t);
        int64_t k = static_cast<int64_t>(fl);
        lo[i] = hi[i] = std::min(k, grid_.counts[i] - 1);
        if (fl == t && k > 0) lo[i] = k - 1;
    }
    std::vector<int64_t> k = lo;
    while (true) {
        set(grid_.index(k.data()));
        int i = 0;
        for (; i < d; ++i) {
            if (++k[i] <= hi[i]) break;
            k[i] = lo[i];
        }
        if (i == d) break;
    }
    return true;
}

bool CellSet::contains_point(const double* x) const {
    const int d = dim();
    std::vector<int64_t> k(d);
    for (int i = 0; i < d; ++i) {
        double t = (x[i] - grid_.box.lo[i]) / grid_.delta[i];
        if (!(t >= 0) || t >= static_cast<double>(grid_.counts[i])) return false;
        k[i] = static_cast<int64_t>(std::floor(t));
    }
    return test(grid_.index(k.data()));
}

void CellSet::add_box(const Box& b) {
    const int d = dim();
    std::vector<int64_t> lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        double tl = (b.lo[i] - grid_.box.lo[i]) / grid_.delta[i];
        double th = (b.hi[i] - grid_.box.lo[i]) / grid_.delta[i];
        // closed cells: a cell [k, k+1] meets [tl, th] iff k <= th and k+1 >= tl
        int64_t kl = static_cast<int64_t>(std::ceil(tl)) - 1;
        int64_t kh = static_cast<int64_t>(std::floor(th));
        if (kl < 0) {
            if (tl < 0) clipped = true;
            kl = 0;
        }
        if (kh > grid_.counts[i] - 1) {
            if (th > static_cast<double>(grid_.counts[i])) clipped = true;
            kh = grid_.counts[i] - 1;
        }
        if (kl > kh) return;
        lo[i] = kl;
        hi[i] = kh;
    }
    std::vector<int64_t> k = lo;
    while (true) {
        set(grid_.index(k.data()));
        int i = 0;
        for (; i < d; ++i) {
            if (++k[i] <= hi[i]) break;
            k[i] = lo[i];
        }
        if (i == d) break;
    }
}

static void require_same_grid(const CellSet& a, const CellSet& b) {
    if (a.grid() != b.grid()) throw std::invalid_argument("cell sets live on different grids");
}

CellSet& CellSet::operator|=(const CellSet& o) {
    require_same_grid(*this, o);
    for (size_t i = 0; i < bits_.size(); ++i) bits_[i] |= o.bits_[i];
    clipped = clipped || o.clipped;
    return *this;
}

CellSet& CellSet::operator&=(const CellSet& o) {
    require_same_grid(*this, o);
    for (size_t i = 0; i < bits_.size(); ++i) bits_[i] &= o.bits_[i];
    return *this;
}

CellSet CellSet::complement() const {
    CellSet c(grid_);
    for (size_t i = 0; i < bits_.size(); ++i) c.bits_[i] = bits_[i] ? 0 : 1;
    return c;
}

bool CellSet::operator==(const CellSet& o) const { return grid_ == o.grid_ && bits_ == o.bits_; }

namespace {

// offsets of the 3^d block around a cell, excluding the cell itself
std::vector<std::vector<int64_t>> neighbor_offsets(int d) {
    std::vector<std::vector<int64_t>> out;
    std::vector<int64_t> k(d, -1);
    while (true) {
        bool zero = std::all_of(k.begin(), k.end(), [](int64_t v) { return v == 0; });
        if (!zero) out.push_back(k);
        int i = 0;
        for (; i < d; ++i) {
            if (++k[i] <= 1) break;
            k[i] = -1;
        }
        if (i == d) break;
    }
    return out;
}

}  // namespace

std::vector<int64_t> CellSet::boundary_cells() const {
    const int d = dim();
    auto offs = neighbor_offsets(d);
    std::vector<int64_t> out;
    std::vector<int64_t> k(d), m(d);
    for (size_t i = 0; i < bits_.size(); ++i) {
        if (!bits_[i]) continue;
        grid_.unravel(static_cast<int64_t>(i), k.data());
        bool bnd = false;
        for (auto& o : offs) {
            for (int j = 0; j < d; ++j) m[j] = k[j] + o[j];
            if (!grid_.in_range(m.data()) || !test(grid_.index(m.data()))) {
                bnd = true;
                break;
            }
        }
        if (bnd) out.push_back(static_cast<int64_t>(i));
    }
    return out;
}

void CellSet::center_extent(Vec& lo, Vec& hi) const {
    lo.clear();
    hi.clear();
    const int d = dim();
    std::vector<int64_t> kl(d, std::numeric_limits<int64_t>::max()), kh(d, -1), k(d);
    bool any = false;
    for (size_t i = 0; i < bits_.size(); ++i) {
        if (!bits_[i]) continue;
        any = true;
        grid_.unravel(static_cast<int64_t>(i), k.data());
        for (int j = 0; j < d; ++j) {
            kl[j] = std::min(kl[j], k[j]);
            kh[j] = std::max(kh[j], k[j]);
        }
    }
    if (!any) return;
    lo.resize(d);
    hi.resize(d);
    for (int j = 0; j < d; ++j) {
        lo[j] = grid_.box.lo[j] + (static_cast<double>(kl[j]) + 0.5) * grid_.delta[j];
        hi[j] = grid_.box.lo[j] + (static_cast<double>(kh[j]) + 0.5) * grid_.delta[j];
    }
}

double CellSet::diameter(const NormSpec& n) const {
    Vec lo, hi;
    center_extent(lo, hi);
    if (lo.empty()) return 0.0;
    // bounding-box diameter of the closed cells
    Vec span(lo.size());
    for (size_t j = 0; j < lo.size(); ++j) span[j] = hi[j] - lo[j] + grid_.delta[j];
    return norm_raw(n.p, span.data(), static_cast<int>(span.size()));
}

CellSet CellSet::from_box(const GridSpec& g, const Box& b) {
    CellSet s(g);
    s.add_box(b);
    return s;
}

CellSet CellSet::from_point(const GridSpec& g, const Vec& x) {
    CellSet s(g);
    if (!s.add_point(x.data())) s.clipped = true;
    return s;
}

CellSet CellSet::full(const GridSpec& g) {
    CellSet s(g);
    std::fill(s.bits_.begin(), s.bits_.end(), uint8_t(1));
    return s;
}

CellSet fill_holes(const CellSet& s) {
    const GridSpec& g = s.grid();
    const int n = g.dim();
    std::vector<uint8_t> out(static_cast<size_t>(g.size()), 0);
    std::vector<int64_t> stack;
    for (int64_t i = 0; i < g.size(); ++i)
        if (g.on_edge(i) && !s.test(i)) {
            out[static_cast<size_t>(i)] = 1;
            stack.push_back(i);
        }
    std::vector<int64_t> k(n);
    while (!stack.empty()) {
        int64_t c = stack.back();
        stack.pop_back();
        g.unravel(c, k.data());
        for (int a = 0; a < n; ++a)
            for (int sgn : {-1, 1}) {
                int64_t ka = k[a] + sgn;
                if (ka < 0 || ka >= g.counts[a]) continue;
                int64_t id = c + sgn * g.strides[a];
                if (out[static_cast<size_t>(id)] || s.test(id)) continue;
                out[static_cast<size_t>(id)] = 1;
                stack.push_back(id);
            }
    }
    CellSet r(g);
    for (int64_t i = 0; i < g.size(); ++i) if (!out[static_cast<size_t>(i)]) r.set(i);
    return r;
}

CellSet inflate(const CellSet& s, double radius, const NormSpec& n) {
    if (radius < 0) throw std::invalid_argument("inflate: negative radius");
    if (radius == 0) return s;
    const GridSpec& g = s.grid();
    const int d = g.dim();
    // stencil: offsets whose cell lies at gap-distance < radius from the origin cell
    std::vector<int64_t> kmax(d);
    for (int i = 0; i < d; ++i) kmax[i] = static_cast<int64_t>(std::ceil(radius / g.delta[i])) + 1;
    std::vector<std::vector<int64_t>> stencil;
    std::vector<int64_t> k(d);
    for (int i = 0; i < d; ++i) k[i] = -kmax[i];
    std::vector<double> gap(d);
    while (true) {
        for (int i = 0; i < d; ++i) gap[i] = static_cast<double>(std::max<int64_t>(std::abs(k[i]) - 1, 0)) * g.delta[i];
        if (norm_raw(n.p, gap.data(), d) < radius) stencil.push_back(k);
        int i = 0;
        for (; i < d; ++i) {
            if (++k[i] <= kmax[i]) break;
            k[i] = -kmax[i];
        }
        if (i == d) break;
    }
    CellSet out = s;
    std::vector<int64_t> c(d), m(d);
    // interior cells add nothing the boundary cells do not already add
    for (int64_t idx : s.boundary_cells()) {
        g.unravel(idx, c.data());
        for (auto& o : stencil) {
            for (int i = 0; i < d; ++i) m[i] = c[i] + o[i];
            if (!g.in_range(m.data())) {
                out.clipped = true;
                continue;
            }
            out.set(g.index(m.data()));
        }
    }
    return out;
}

double set_distance(const CellSet& a, const CellSet& b, const NormSpec& n) {
    require_same_grid(a, b);
    if (a.empty() || b.empty()) throw std::invalid_argument("set_distance: empty operand");
    const GridSpec& g = a.grid();
    const int d = g.dim();
    const double diam = g.cell_diameter(n);
    for (size_t i = 0; i < a.raw().size(); ++i)
        if (a.raw()[i] && b.raw()[i]) return 0.0;
    // a closest center pair can always be slid onto boundary cells of both sets
    auto ba = a.boundary_cells();
    auto bb = b.boundary_cells();
    const int64_t B = 16;
    auto key = [&](const int64_t* k) {
        uint64_t h = 1469598103934665603ull;
        for (int i = 0; i < d; ++i) h = (h ^ static_cast<uint64_t>(k[i] / B + (1 << 20))) * 1099511628211ull;
        return h;
    };
    std::unordered_map<uint64_t, std::vector<int64_t>> buckets;
    std::vector<int64_t> k(d);
    for (int64_t idx : bb) {
        g.unravel(idx, k.data());
        buckets[key(k.data())].push_back(idx);
    }
    int64_t maxring = 0;
    for (int i = 0; i < d; ++i) maxring = std::max(maxring, g.counts[i] / B + 2);
    double dmin_axis = *std::min_element(g.delta.begin(), g.delta.end());
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> ca(d), cb(d), diff(d);
    std::vector<int64_t> kb(d), q(d), bk(d);
    for (int64_t ia : ba) {
        g.unravel(ia, k.data());
        g.center(ia, ca.data());
        for (int i = 0; i < d; ++i) bk[i] = k[i] / B;
        for (int64_t ring = 0; ring <= maxring; ++ring) {
            // everything in ring R is at least (R-1)*B cells away along some axis
            if (ring >= 2 && static_cast<double>((ring - 1) * B) * dmin_axis > best) break;
            // enumerate buckets on the Chebyshev shell of radius ring
            std::vector<int64_t> o(d, -ring);
            while (true) {
                int64_t cheb = 0;
                for (int i = 0; i < d; ++i) cheb = std::max(cheb, std::abs(o[i]));
                if (cheb == ring) {
                    for (int i = 0; i < d; ++i) q[i] = (bk[i] + o[i]) * B;
                    bool ok = true;
                    for (int i = 0; i < d; ++i)
                        if (q[i] < 0 || q[i] >= g.counts[i] + B) ok = false;
                    if (ok) {
                        auto it = buckets.find(key(q.data()));
                        if (it != buckets.end()) {
                            for (int64_t ib : it->second) {
                                g.center(ib, cb.data());
                                for (int i = 0; i < d; ++i) diff[i] = ca[i] - cb[i];
                                best = std::min(best, norm_raw(n.p, diff.data(), d));
                            }
                        }
                    }
                }
                int i = 0;
                for (; i < d; ++i) {
                    if (++o[i] <= ring) break;
                    o[i] = -ring;
                }
                if (i == d) break;
            }
        }
    }
    return std::max(0.0, best - diam);
}

bool contains(const CellSet& outer, const CellSet& inner) {
    require_same_grid(outer, inner);
    const auto& o = outer.raw();
    const auto& i = inner.raw();
    for (size_t j = 0; j < o.size(); ++j)
        if (i[j] && !o[j]) return false;
    return true;
}

std::string fmt_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::string fmt_vec(const Vec& v, char sep) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += fmt_double(v[i]);
    }
    return s;
}

void write_cellset_csv(std::ostream& os, const CellSet& s) {
    const GridSpec& g = s.grid();
    os << "# grid lo=" << fmt_vec(g.box.lo) << " hi=" << fmt_vec(g.box.hi) << " delta=" << fmt_vec(g.delta) << "\n";
    const int d = g.dim();
    std::vector<int64_t> k(d);
    Vec c(d);
    std::string line;
    for (size_t i = 0; i < s.raw().size(); ++i) {
        if (!s.raw()[i]) continue;
        g.unravel(static_cast<int64_t>(i), k.data());
        g.center(static_cast<int64_t>(i), c.data());
        line.clear();
        for (int j = 0; j < d; ++j) {
            line += std::to_string(k[j]);
            line += ',';
        }
        line += fmt_vec(c);
        line += '\n';
        os << line;
    }
}

static Vec parse_list(const std::string& s) {
    Vec out;
    size_t p = 0;
    while (p <= s.size()) {
        size_t q = s.find(',', p);
        if (q == std::string::npos) q = s.size();
        std::string tok = s.substr(p, q - p);
        double v = 0;
        auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
            throw std::runtime_error("cellset csv: bad number '" + tok + "'");
        out.push_back(v);
        p = q + 1;
    }
    return out;
}

CellSet read_cellset_csv(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("cellset csv: missing header");
    std::istringstream hs(header);
    std::string hash, word;
    hs >> hash >> word;
    if (hash != "#" || word != "grid") throw std::runtime_error("cellset csv: header must start with '# grid'");
    Vec lo, hi, delta;
    std::string kv;
    while (hs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::runtime_error("cellset csv: bad header field " + kv);
        std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "lo") lo = parse_list(v);
        else if (k == "hi") hi = parse_list(v);
        else if (k == "delta") delta = parse_list(v);
        else throw std::runtime_error("cellset csv: unknown header key " + k);
    }
    GridSpec g = GridSpec::make(Box{lo, hi}, delta);
    CellSet s(g);
    const int d = g.dim();
    std::string line;
    int lineno = 1;
    std::vector<int64_t> k(d);
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        size_t p = 0;
        for (int j = 0; j < d; ++j) {
            size_t q = line.find(',', p);
            if (q == std::string::npos) throw std::runtime_error("cellset csv: short line " + std::to_string(lineno));
            auto r = std::from_chars(line.data() + p, line.data() + q, k[j]);
            if (r.ec != std::errc()) throw std::runtime_error("cellset csv: bad index on line " + std::to_string(lineno));
            p = q + 1;
        }
        if (!g.in_range(k.data())) throw std::runtime_error("cellset csv: index out of grid on line " + std::to_string(lineno));
        s.set(g.index(k.data()));
    }
    return s;
}

void save_cellset(const std::string& path, const CellSet& s) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_cellset_csv(os, s);
}

CellSet load_cellset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    return read_cellset_csv(is);
}

}  // namespace rch
