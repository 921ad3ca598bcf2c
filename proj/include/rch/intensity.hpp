#pragma once

#include <limits>
#include <string>
#include <vector>

#include "rch/reach.hpp"

namespace rch {

constexpr double kInf = std::numeric_limits<double>::infinity();

// reachable interval of a 1D system from an equilibrium sink x_star
struct Interval1D {
    double a = 0, b = 0;
    bool a_open_end = false;  // no root in the bracket: a is the bracket edge
    bool b_open_end = false;
};
Interval1D reach_1d_analytic(const VectorField& f, double x_star, double r, const Box& bracket);

struct Intensity1D {
    double mu = 0;
    double left = 0, right = 0;  // barrier per side (kInf when unbounded)
    double argmax_left = 0, argmax_right = 0;
};
// basin (lo, hi), either end may be +-kInf
Intensity1D intensity_1d(const VectorField& f, double x_star, double basin_lo, double basin_hi);

enum class Verdict { Feasible, Infeasible, Indeterminate };
const char* verdict_name(Verdict v);

struct BisectProbe {
    double r;
    Verdict v;
    long over_cells;
    bool over_escaped, over_left_target, over_converged;
    long under_cells;
};

struct IntensityBracket {
    double lo = 0, hi = kInf;
    bool hi_verified = false;  // an under-approximation actually left the target at hi
    bool certified = false;    // both ends backed by evidence (conditional on L)
    bool has_band = false;
    double band_lo = 0, band_hi = 0;  // r values where neither verdict fired
    CellSet target;
    OverResult feasible_evidence;     // over-approximation at lo
    UnderResult infeasible_evidence;  // under-approximation at hi
    std::vector<BisectProbe> probes;
};

// attractor must be inside target; anchors are actual attractor points for the under side
IntensityBracket intensity_bisect(const VectorField& f, const CellSet& attractor, const CellSet& target, double r_max,
                                  double tol, const ReachConfig& base, const Anchors* anchors = nullptr);

Verdict classify_r(const VectorField& f, const CellSet& attractor, const CellSet& target, double r,
                   const ReachConfig& base, const Anchors* anchors, OverResult* over_out = nullptr,
                   UnderResult* under_out = nullptr, BisectProbe* probe = nullptr);

struct ScanPoint {
    double r = 0;
    long cell_count = 0;
    double diameter = 0;
    bool escaped = false;  // left the window or the supplied domain-of-attraction estimate
    bool jump = false;
};
struct ScanOptions {
    double jump_factor = 1.5;
    const CellSet* domain_estimate = nullptr;
};
std::vector<ScanPoint> discontinuity_scan(const VectorField& f, const CellSet& attractor,
                                          const std::vector<double>& r_values, const ReachConfig& base,
                                          const ScanOptions& opt = {});

double mu_pnorm_formula_check(double p);

// Newton on f(x) = 0 from x0; throws when it does not settle
Vec find_equilibrium(const VectorField& f, const Vec& x0, double tol = 1e-12, int max_iter = 100);

}  // namespace rch
