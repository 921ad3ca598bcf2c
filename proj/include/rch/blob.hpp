#pragma once

// Outer cover of the set reachable from one grid cell over a macro step.
// 1D: exact interval from the extreme controls (flows on the line preserve order).
// nD: linearization about the uncontrolled center trajectory; support functions of
//     center image + Phi*cell + control set + remainder ball, tested on a fan of
//     separating directions.

#include <cstdint>
#include <vector>

#include "rch/field.hpp"
#include "rch/geometry.hpp"

namespace rch {

struct BlobParams {
    double H = 1.0;        // macro step
    double r = 0.0;        // control bound (in norm)
    NormSpec norm;
    int directions = 32;   // separating directions for dim >= 2
    double h_max = 0.1;    // integration substep cap
    double sub_scale = 0.25;  // substep <= sub_scale / |J|
    double tol = 0.0;      // extra absolute slack; 0 -> 1e-3 of the smallest cell width
};

// run of cells base + k for k in [lo, hi] along axis 0
struct Span {
    int64_t base, lo, hi;
};

struct CoverStatus {
    bool exited_domain = false;  // reference trajectory left the field domain or blew up
    bool clipped = false;        // cover reaches past the grid box
    int substeps = 0;
};

class BlobEngine {
public:
    BlobEngine(const VectorField& f, const GridSpec& g, const BlobParams& p);

    struct Work;
    // cover of the time-H image (or every time in [0,H] when sweep is set)
    CoverStatus cover(int64_t cell, std::vector<Span>& out, Work& w, bool sweep = false) const;
    // same, for an arbitrary box instead of a grid cell
    CoverStatus cover_box(const Vec& center, const Vec& half, std::vector<Span>& out, Work& w,
                          bool sweep = false) const;

    const BlobParams& params() const { return p_; }
    const GridSpec& grid() const { return g_; }

    struct Work {
        std::vector<double> xs, phis, inv, A, tmp, dir_h, J, Jp, Jm;
        Vec x, u, buf;
    };

private:
    const VectorField& f_;
    GridSpec g_;
    BlobParams p_;
    std::vector<Vec> dirs_;
    double tol_;

    CoverStatus cover1d(const Vec& c, const Vec& half, std::vector<Span>& out, Work& w, bool sweep) const;
    CoverStatus covernd(const Vec& c, const Vec& half, std::vector<Span>& out, Work& w, bool sweep) const;
    void emit_polygon(const double* hsup, std::vector<Span>& out, CoverStatus& st) const;
};

// rasterize a closed p-ball (used by the literal Euler scheme)
void cover_ball(const GridSpec& g, const NormSpec& n, const double* c, double radius, std::vector<Span>& out,
                bool& clipped);

}  // namespace rch
