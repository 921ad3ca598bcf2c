#include "rch/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rch {

CellSet interior_cells(const CellSet& s) {
    CellSet out = s;
    for (int64_t k : s.boundary_cells()) out.reset(k);
    out.clipped = false;
    return out;
}

Box cell_bbox(const CellSet& s, int pad) {
    const GridSpec& g = s.grid();
    Vec lo, hi;
    s.center_extent(lo, hi);
    if (lo.empty()) throw PreconditionError("cell_bbox: empty set");
    Box b{lo, hi};
    for (int i = 0; i < g.dim(); ++i) {
        double w = (0.5 + pad) * g.delta[i];
        b.lo[i] = std::max(g.box.lo[i], lo[i] - w);
        b.hi[i] = std::min(g.box.hi[i], hi[i] + w);
    }
    return b;
}

namespace {

Box clip_to(const Box& b, const Box& d) {
    Box o = b;
    for (int i = 0; i < b.dim(); ++i) {
        o.lo[i] = std::max(o.lo[i], d.lo[i]);
        o.hi[i] = std::min(o.hi[i], d.hi[i]);
    }
    return o;
}

}  // namespace

ContinuationReport persistent_block(const VectorField& f, const VectorField& fhat, const CellSet& seed, double r,
                                    const ReachConfig& cfg, const ContinuationOptions& opt) {
    if (f.dim != fhat.dim) throw PreconditionError("persistent_block: field dimensions differ");
    if (!(r > 0)) throw PreconditionError("persistent_block: r must be positive");
    ContinuationReport rep;
    rep.r = r;
    ReachConfig c = cfg;
    c.r = r;
    OverResult over = reach_over(f, seed, c);
    if (over.escaped) throw PreconditionError("persistent_block: reachable set escapes the window at r = " + fmt_double(r));
    if (!over.converged) throw NonConvergence("persistent_block: reachable set did not converge");
    rep.block = over.set;
    // distance on the block plus one cell layer
    Box region = clip_to(clip_to(cell_bbox(rep.block, 1), f.domain), fhat.domain);
    rep.f_distance = sup_norm_distance(f, fhat, region, cfg.norm, seed.grid());
    rep.advisory = !(rep.f_distance.upper < r);
    rep.under_f = check_attractor_block(f, rep.block, opt.t_probe, opt.h_max);
    rep.under_fhat = check_attractor_block(fhat, rep.block, opt.t_probe, opt.h_max);
    rep.block_ok_for_f = rep.under_f.is_block;
    rep.block_ok_for_fhat = rep.under_fhat.is_block;
    OmegaResult om = omega_limit(fhat, rep.block, opt.t_probe, opt.omega_max_iter, opt.h_max);
    rep.A_hat = om.set;
    rep.omega_stabilized = om.stabilized;
    rep.containment = !om.exited && !rep.A_hat.empty() && contains(interior_cells(rep.block), rep.A_hat);
    if (rep.advisory)
        rep.diagnostic = "field distance upper bound " + fmt_double(rep.f_distance.upper) + " is not below r = " +
                         fmt_double(r) + "; verdicts are advisory";
    return rep;
}

ContinuationReport continuation_from_intensity(const VectorField& f, const VectorField& fhat, const CellSet& A,
                                               const IntensityBracket& br, const ReachConfig& cfg,
                                               const ContinuationOptions& opt) {
    if (!(br.lo > 0)) throw PreconditionError("continuation_from_intensity: bracket lower end is not positive");
    const CellSet& ref = br.feasible_evidence.set.empty() ? A : br.feasible_evidence.set;
    Box region = clip_to(clip_to(cell_bbox(ref, 1), f.domain), fhat.domain);
    SupDistance d = sup_norm_distance(f, fhat, region, cfg.norm, A.grid());
    if (!(d.upper < br.lo))
        throw PreconditionError("continuation_from_intensity: field distance " + fmt_double(d.upper) +
                                " is not below the intensity lower bound " + fmt_double(br.lo));
    double r = 0.5 * (d.upper + br.lo);
    ContinuationReport rep = persistent_block(f, fhat, A, r, cfg, opt);
    if (!(rep.block_ok_for_f && rep.block_ok_for_fhat && rep.containment))
        rep.diagnostic = "certificate inconsistency: a block verdict failed although the field distance is below "
                         "the intensity bound; check the resolution and the Lipschitz estimates";
    return rep;
}

SemicontinuityReport semicontinuity_probe(const VectorField& f, const CellSet& A, const CellSet& nbhd, int trials,
                                          const ReachConfig& cfg, uint64_t seed, double r_start,
                                          const ContinuationOptions& opt) {
    if (!contains(interior_cells(nbhd), A))
        throw PreconditionError("semicontinuity_probe: attractor is not inside the neighborhood interior");
    if (trials < 0) throw PreconditionError("semicontinuity_probe: negative trial count");
    SemicontinuityReport rep;
    ReachConfig c = cfg;
    bool found = false;
    for (double r = r_start; r > 1e-4 * r_start; r *= 0.5) {
        c.r = r;
        OverResult o = reach_over(f, A, c, &nbhd);
        if (o.converged && !o.escaped && !o.left_target) {
            rep.r = r;
            rep.block = o.set;
            found = true;
            break;
        }
    }
    if (!found) throw PreconditionError("semicontinuity_probe: no feasible r at this resolution");
    rep.trials = trials;
    const int n = f.dim;
    const GridSpec& g = A.grid();
    Box region = clip_to(cell_bbox(rep.block, 1), f.domain);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N01(0.0, 1.0);
    const NormSpec nm{cfg.norm.p, 0};
    // draw all fields first so the results do not depend on how trials are scheduled
    std::vector<VectorField> fields;
    std::vector<std::string> kinds;
    for (int t = 0; t < trials; ++t) {
        Vec dir(n);
        double s = 0;
        while (s == 0) {
            for (int i = 0; i < n; ++i) dir[i] = N01(rng);
            s = norm_eval(nm, dir);
        }
        double amp = rep.r * (0.2 + 0.6 * U(rng));
        for (auto& v : dir) v *= amp / s;
        if (t % 2 == 0) {
            fields.push_back(offset_field(f, dir));
            kinds.push_back("offset");
        } else {
            Vec ctr(n);
            for (int i = 0; i < n; ++i) ctr[i] = region.lo[i] + U(rng) * (region.hi[i] - region.lo[i]);
            double wmin = 1e9;
            for (int i = 0; i < n; ++i) wmin = std::min(wmin, region.hi[i] - region.lo[i]);
            double width = std::max(4 * *std::max_element(g.delta.begin(), g.delta.end()), (0.1 + 0.4 * U(rng)) * wmin);
            fields.push_back(bump_field(f, ctr, width, dir));
            kinds.push_back("bump");
        }
    }
    rep.results.resize(static_cast<size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        TrialResult tr;
        tr.kind = kinds[static_cast<size_t>(t)];
        const VectorField& fh = fields[static_cast<size_t>(t)];
        SupDistance d = sup_norm_distance(f, fh, region, cfg.norm, g);
        tr.sup_upper = d.upper;
        OmegaResult om = omega_limit(fh, rep.block, opt.t_probe, opt.omega_max_iter, opt.h_max);
        tr.ahat_cells = om.set.count();
        tr.pass = d.upper < rep.r && !om.exited && !om.set.empty() && contains(nbhd, om.set);
        rep.results[static_cast<size_t>(t)] = tr;
        if (tr.pass) ++rep.passed;
    }
    return rep;
}

}  // namespace rch
