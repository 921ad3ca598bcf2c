#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rch/intensity.hpp"
#include "rch/reach.hpp"

namespace rch {

struct ContinuationOptions {
    double t_probe = 3.0;
    double h_max = 0.05;   // time-map integration cap
    int omega_max_iter = 200;
};

struct ContinuationReport {
    double r = 0;
    CellSet block;
    SupDistance f_distance;
    bool advisory = false;  // field distance upper bound not below r
    BlockReport under_f, under_fhat;
    bool block_ok_for_f = false, block_ok_for_fhat = false;
    CellSet A_hat;
    bool omega_stabilized = false;
    bool containment = false;  // A_hat inside the interior cells of the block
    std::string diagnostic;
};

// interior cells: occupied cells whose whole 3^n neighborhood is occupied
CellSet interior_cells(const CellSet& s);
// bounding box of the occupied closed cells, padded by pad cells, clipped to the grid
Box cell_bbox(const CellSet& s, int pad = 1);

ContinuationReport persistent_block(const VectorField& f, const VectorField& fhat, const CellSet& seed, double r,
                                    const ReachConfig& cfg, const ContinuationOptions& opt = {});

ContinuationReport continuation_from_intensity(const VectorField& f, const VectorField& fhat, const CellSet& attractor,
                                               const IntensityBracket& bracket, const ReachConfig& cfg,
                                               const ContinuationOptions& opt = {});

struct TrialResult {
    std::string kind;  // "offset" or "bump"
    double sup_upper = 0;
    bool pass = false;
    long ahat_cells = 0;
};

struct SemicontinuityReport {
    double r = 0;  // verified: over(A, r) inside the neighborhood
    CellSet block;
    int passed = 0, trials = 0;
    std::vector<TrialResult> results;
};

SemicontinuityReport semicontinuity_probe(const VectorField& f, const CellSet& attractor, const CellSet& neighborhood,
                                          int trials, const ReachConfig& cfg, uint64_t seed = 2024,
                                          double r_start = 1.0, const ContinuationOptions& opt = {});

}  // namespace rch
