#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rch/blob.hpp"
#include "rch/field.hpp"
#include "rch/flow.hpp"
#include "rch/geometry.hpp"

namespace rch {

// fixpoint or iteration limit hit before settling
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReachConfig {
    NormSpec norm;
    double r = 0;
    std::string scheme = "blob";  // "blob" (default) or "euler" (literal one-step ball inflation)
    double H = 0;                 // macro step of the blob scheme; 0 -> macro_step()
    double h = 0;                 // euler step; 0 -> default_step(L)
    int directions = 32;
    double h_max = 0.1;
    double tol = 0;
    long max_layers = 200000;
    bool parallel = true;
    // seed is invariant under the uncontrolled flow (an attractor); skips the [0,H) sweep
    bool seed_invariant = false;
    double L = 0;  // 0 -> estimated on the grid box
    // under-approximation
    int under_directions = 32;
    double under_floor = 1e-3;  // controls are kept at norm <= r (1 - floor)
    long max_under_cells = 50000000;
};

struct OverResult {
    CellSet set;
    bool escaped = false;      // cover hit the window edge or left the field domain
    bool left_target = false;  // early stop: a cell outside the target was added
    bool converged = false;
    long layers = 0;
};

struct Witness {
    int64_t cell = -1;
    int64_t pred = -1;  // -1 for seed cells
    Vec u;              // constant control over [0, T]
    double T = 0;
    Vec point;          // replayed endpoint (the anchor used for later expansions)
};

struct UnderResult {
    CellSet set;
    std::vector<Witness> witnesses;  // one per occupied cell, in insertion order
    bool left_target = false;
    bool left_window = false;
    int64_t exit_cell = -1;  // under cell outside the target (when left_target)
    Witness exit_step;       // set when the escape landed off the grid: one more step from exit_step.pred
    long layers = 0;
};

struct ReachResult {
    double r = 0;
    OverResult over;
    UnderResult under;
    double L_used = 0;
    bool certified = false;  // over converged without escape; conditional on L
};

// anchors: actual points of the seed set; default is every seed cell center
struct Anchors {
    std::vector<Vec> points;
};

void check_config(const VectorField& f, const CellSet& seed, const ReachConfig& c);
// c.H when set, else a step balancing rasterization against the linearization remainder
double macro_step(const VectorField& f, const GridSpec& g, const ReachConfig& c);

// least fixpoint of Q -> Q u cover(Q); target != null stops as soon as Q leaves it
OverResult reach_over(const VectorField& f, const CellSet& seed, const ReachConfig& c,
                      const CellSet* target = nullptr);
// single-threaded worklist reference (same fixpoint)
OverResult reach_over_serial(const VectorField& f, const CellSet& seed, const ReachConfig& c,
                             const CellSet* target = nullptr);

// witness search; with a target it runs best-first toward the target edge and stops on exit
UnderResult reach_under(const VectorField& f, const CellSet& seed, const ReachConfig& c,
                        const Anchors* anchors = nullptr, const CellSet* target = nullptr);

ReachResult reach(const VectorField& f, const CellSet& seed, const ReachConfig& c,
                  const Anchors* anchors = nullptr);

// replays the chain ending in cell; returns the endpoint
Vec replay_witness(const VectorField& f, const UnderResult& u, int64_t cell, double h_max = 0.1);

// concatenated control signal of the chain ending in cell, plus the starting point
ControlSignal witness_signal(const UnderResult& u, int64_t cell, Vec& start);

struct OmegaResult {
    CellSet set;
    bool stabilized = false;
    bool exited = false;
    int iterations = 0;
};
OmegaResult omega_limit(const VectorField& f, const CellSet& s, double t_probe = 3.0, int max_iter = 200,
                        double h_max = 0.05);

struct BlockReport {
    CellSet block;
    bool is_block = false;
    double margin = 0;
    double probe_time = 0;
    bool exited = false;
};
BlockReport check_attractor_block(const VectorField& f, const CellSet& b, double t_probe, double h_max = 0.05);

struct BasinResult {
    CellSet basin;
    bool certified = false;  // always false: trajectory classification
};
BasinResult estimate_basin(const VectorField& f, const CellSet& attractor, const Box& window, const GridSpec& grid,
                           double T_max, double eps, double h = 0.01);

// cells visited by the orbit of x0 over [t_skip, t_skip + t_span]; samples spaced below a quarter cell.
// pts (optional) gets the sampled points.
CellSet orbit_cells(const VectorField& f, const Vec& x0, const GridSpec& g, double t_skip, double t_span,
                    Anchors* pts = nullptr);

double lipschitz_on_grid(const VectorField& f, const GridSpec& g, const NormSpec& n);

}  // namespace rch
