#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "rch/continuation.hpp"
#include "rch/expr.hpp"
#include "rch/fieldfile.hpp"
#include "rch/intensity.hpp"
#include "rch/suite.hpp"

#ifndef RCH_VERSION
#define RCH_VERSION "0.0.0"
#endif
#ifndef RCH_PROPS_BIN
#define RCH_PROPS_BIN ""
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rch;

namespace {

enum Exit { kOk = 0, kFail = 1, kRefused = 2, kNoConverge = 3 };

// flags shared by the subcommands; CLI11 fills whatever a subcommand registers
struct Opts {
    std::string field;
    std::vector<std::string> params;
    std::string norm = "2";
    std::string lo, hi;  // window corners, comma separated
    double delta = 1e-2;
    double h = 0, H = 0;
    long max_iters = 200000;
    int threads = 0;
    std::string out;
    std::string scheme = "blob";
    // seed
    std::string seed_point, seed_box, seed_csv, seed_orbit;
    bool seed_fill = false, not_invariant = false;
    double orbit_skip = 300, orbit_span = 40;
    // reach
    double r = 0;
    std::string replay;
    // intensity
    std::string target_box, target_csv;
    std::vector<std::string> exclude_balls;
    double r_max = 1, tol = 0.01;
    // intensity1d
    double attractor = 0;
    std::string basin_lo = "-inf", basin_hi = "inf";
    // scan
    double r_from = 0, r_to = 1, r_step = 0.1;
    double jump_factor = 1.5;
    std::string domain_box;
    // basin
    double t_max = 50, eps = 1e-2;
    // continue
    std::string fhat;
    std::vector<std::string> fhat_params;
    std::string offset, bracket;
    double t_probe = 3;
    // suite
    std::string criteria = "1,2,3,4,5,6,7,8,9";
    double pp_delta = 4e-3;
    std::string props_bin = RCH_PROPS_BIN;
};

Vec parse_vec(const std::string& s, const char* what) {
    Vec v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        size_t pos = 0;
        double x;
        try {
            x = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw PreconditionError(std::string("bad number in ") + what + ": '" + tok + "'");
        }
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) throw PreconditionError(std::string("bad number in ") + what + ": '" + tok + "'");
        v.push_back(x);
    }
    if (v.empty()) throw PreconditionError(std::string("empty vector for ") + what);
    return v;
}

double parse_ext(const std::string& s) {
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    return parse_vec(s, "bound")[0];
}

// "lo1,lo2:hi1,hi2"
Box parse_box(const std::string& s, const char* what) {
    auto c = s.find(':');
    if (c == std::string::npos) throw PreconditionError(std::string(what) + " must be lo:hi");
    Box b{parse_vec(s.substr(0, c), what), parse_vec(s.substr(c + 1), what)};
    b.validate();
    return b;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
    std::map<std::string, double> m;
    for (auto& s : kv) {
        auto e = s.find('=');
        if (e == std::string::npos) throw PreconditionError("param must be name=value: " + s);
        m[s.substr(0, e)] = parse_vec(s.substr(e + 1), "param")[0];
    }
    return m;
}

VectorField load_field(const std::string& spec, const std::vector<std::string>& params) {
    if (spec.empty()) throw PreconditionError("--field is required");
    return resolve_field(spec, parse_params(params));
}

GridSpec make_grid(const Opts& o, const VectorField& f) {
    Box b = f.domain;
    if (!o.lo.empty()) b.lo = parse_vec(o.lo, "--lo");
    if (!o.hi.empty()) b.hi = parse_vec(o.hi, "--hi");
    if (b.dim() != f.dim) throw PreconditionError("window dimension does not match the field");
    b.validate();
    if (!(o.delta > 0)) throw PreconditionError("--delta must be positive");
    return GridSpec::make(b, o.delta);
}

ReachConfig make_config(const Opts& o) {
    ReachConfig c;
    c.norm = NormSpec::parse(o.norm);
    c.r = o.r;
    c.h = o.h;
    c.H = o.H;
    c.scheme = o.scheme;
    c.max_layers = o.max_iters;
    c.seed_invariant = !o.not_invariant;
    return c;
}

struct Seed {
    CellSet cells;
    Anchors anchors;
    bool has_anchors = false;
};

Seed make_seed(const Opts& o, const VectorField& f, const GridSpec& g) {
    int given = !o.seed_point.empty() + !o.seed_box.empty() + !o.seed_csv.empty() + !o.seed_orbit.empty();
    if (given != 1) throw PreconditionError("give exactly one of --seed-point, --seed-box, --seed-csv, --seed-orbit");
    Seed s;
    if (!o.seed_point.empty()) {
        Vec x = parse_vec(o.seed_point, "--seed-point");
        s.cells = CellSet::from_point(g, x);
        s.anchors.points = {x};
        s.has_anchors = true;
    } else if (!o.seed_box.empty()) {
        s.cells = CellSet::from_box(g, parse_box(o.seed_box, "--seed-box"));
    } else if (!o.seed_csv.empty()) {
        std::ifstream in(o.seed_csv);
        if (!in) throw PreconditionError("cannot open " + o.seed_csv);
        s.cells = read_cellset_csv(in);
        if (!(s.cells.grid() == g)) throw PreconditionError("seed CSV grid differs from the run grid");
    } else {
        s.cells = orbit_cells(f, parse_vec(o.seed_orbit, "--seed-orbit"), g, o.orbit_skip, o.orbit_span, &s.anchors);
        s.has_anchors = true;
    }
    if (o.seed_fill) s.cells = fill_holes(s.cells);
    if (s.cells.empty()) throw PreconditionError("seed is empty on this grid");
    return s;
}

CellSet make_target(const Opts& o, const GridSpec& g) {
    CellSet t;
    if (!o.target_csv.empty()) {
        std::ifstream in(o.target_csv);
        if (!in) throw PreconditionError("cannot open " + o.target_csv);
        t = read_cellset_csv(in);
        if (!(t.grid() == g)) throw PreconditionError("target CSV grid differs from the run grid");
    } else if (!o.target_box.empty()) {
        t = CellSet::from_box(g, parse_box(o.target_box, "--target-box"));
    } else {
        t = CellSet::full(g);
    }
    for (auto& b : o.exclude_balls) {
        Vec v = parse_vec(b, "--exclude-ball");
        if (static_cast<int>(v.size()) != g.dim() + 1) throw PreconditionError("--exclude-ball wants center,...,radius");
        double rad = v.back();
        for (int64_t k : t.indices()) {
            Vec x = g.center(k);
            double s = 0;
            for (int i = 0; i < g.dim(); ++i) s += (x[i] - v[i]) * (x[i] - v[i]);
            if (std::sqrt(s) < rad) t.reset(k);
        }
    }
    return t;
}

std::string grid_json_str(const GridSpec& g) {
    std::ostringstream os;
    os << "lo=";
    for (int i = 0; i < g.dim(); ++i) os << (i ? "," : "") << fmt_double(g.box.lo[i]);
    os << " hi=";
    for (int i = 0; i < g.dim(); ++i) os << (i ? "," : "") << fmt_double(g.box.hi[i]);
    os << " delta=";
    for (int i = 0; i < g.dim(); ++i) os << (i ? "," : "") << fmt_double(g.delta[i]);
    return os.str();
}

// resolved run configuration, echoed into every manifest
json opts_json(const Opts& o) {
    return {{"field", o.field},         {"params", o.params},         {"norm", o.norm},
            {"lo", o.lo},               {"hi", o.hi},                 {"delta", o.delta},
            {"step", o.h},              {"macro_step", o.H},          {"scheme", o.scheme},
            {"max_iters", o.max_iters}, {"threads", o.threads},       {"seed_point", o.seed_point},
            {"seed_box", o.seed_box},   {"seed_csv", o.seed_csv},     {"seed_orbit", o.seed_orbit},
            {"seed_fill", o.seed_fill}, {"seed_invariant", !o.not_invariant},
            {"orbit_skip", o.orbit_skip}, {"orbit_span", o.orbit_span}, {"r", o.r},
            {"target_box", o.target_box}, {"target_csv", o.target_csv}, {"exclude_balls", o.exclude_balls},
            {"r_max", o.r_max},         {"tol", o.tol},               {"attractor", o.attractor},
            {"basin_lo", o.basin_lo},   {"basin_hi", o.basin_hi},     {"r_from", o.r_from},
            {"r_to", o.r_to},           {"r_step", o.r_step},         {"jump_factor", o.jump_factor},
            {"domain_box", o.domain_box}, {"t_max", o.t_max},         {"eps", o.eps},
            {"fhat", o.fhat},           {"fhat_params", o.fhat_params}, {"offset", o.offset},
            {"bracket", o.bracket},     {"t_probe", o.t_probe},       {"criteria", o.criteria},
            {"pp_delta", o.pp_delta}};
}

class Run {
public:
    Run(std::string cmd, const Opts& o, CLI::App& app) : cmd_(std::move(cmd)), o_(o) {
        t0_ = std::chrono::steady_clock::now();
        std::string base = o.out;
        if (base.empty()) {
            const char* e = std::getenv("RCH_OUT_DIR");
            base = e && *e ? e : "rch_out";
        }
        dir_ = fs::path(base) / cmd_;
        fs::create_directories(dir_);
        manifest_["subcommand"] = cmd_;
        manifest_["version"] = RCH_VERSION;
        manifest_["catalog"] = builtin_names();
        manifest_["config"] = opts_json(o);
        manifest_["argv"] = argv_;
        manifest_["threads"] = omp_get_max_threads();
        manifest_["certified"] = json::object();
    }
    fs::path path(const std::string& name) const { return dir_ / name; }
    json& manifest() { return manifest_; }
    void add_output(const std::string& name) { files_.push_back(name); }
    static inline std::vector<std::string> argv_;
    void write_set(const std::string& name, const CellSet& s) {
        std::ofstream os(path(name));
        write_cellset_csv(os, s);
        files_.push_back(name);
    }
    void write_json(const std::string& name, const json& j) {
        std::ofstream os(path(name));
        os << j.dump(2) << "\n";
        files_.push_back(name);
    }
    void finish(int status, const std::string& reason = "") {
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        manifest_["wall_seconds"] = dt;
        manifest_["exit_status"] = status;
        if (!reason.empty()) manifest_["reason"] = reason;
        manifest_["outputs"] = files_;
        std::ofstream os(path("manifest.json"));
        os << manifest_.dump(2) << "\n";
    }

private:
    std::string cmd_;
    const Opts& o_;
    fs::path dir_;
    json manifest_;
    std::vector<std::string> files_;
    std::chrono::steady_clock::time_point t0_;
};

json bracket_json(const IntensityBracket& br) {
    json j;
    j["lo"] = br.lo;
    j["hi"] = br.hi;
    j["hi_verified"] = br.hi_verified;
    j["certified"] = br.certified;
    j["indeterminate_band"] = br.has_band ? json::array({br.band_lo, br.band_hi}) : json(nullptr);
    json probes = json::array();
    for (auto& p : br.probes)
        probes.push_back({{"r", p.r},
                          {"verdict", verdict_name(p.v)},
                          {"over_cells", p.over_cells},
                          {"over_escaped", p.over_escaped},
                          {"over_left_target", p.over_left_target},
                          {"under_cells", p.under_cells}});
    j["probes"] = probes;
    return j;
}

int cmd_reach(const Opts& o, Run& run) {
    VectorField f = load_field(o.field, o.params);
    GridSpec g = make_grid(o, f);
    Seed s = make_seed(o, f, g);
    ReachConfig c = make_config(o);
    ReachResult rr = reach(f, s.cells, c, s.has_anchors ? &s.anchors : nullptr);
    run.write_set("over.csv", rr.over.set);
    run.write_set("under.csv", rr.under.set);
    json rep = {{"r", c.r},
                {"cells_over", rr.over.set.count()},
                {"cells_under", rr.under.set.count()},
                {"escaped_window", rr.over.escaped},
                {"steps_to_fixpoint", rr.over.layers},
                {"L_used", rr.L_used},
                {"certified", rr.certified},
                {"converged", rr.over.converged},
                {"grid", grid_json_str(g)}};
    if (!o.replay.empty()) {
        Vec x = parse_vec(o.replay, "--replay");
        if (static_cast<int>(x.size()) != g.dim()) throw PreconditionError("--replay dimension mismatch");
        CellSet pick = CellSet::from_point(g, x);
        int64_t cell = -1;
        for (int64_t k : pick.indices())
            if (rr.under.set.test(k)) cell = k;
        if (cell < 0) throw PreconditionError("--replay point is not in the under-approximation");
        Vec start;
        ControlSignal sig = witness_signal(rr.under, cell, start);
        Trajectory tr = integrate(f, start, sig, sig.duration(), 0.01);
        std::ofstream os(run.path("trajectory.csv"));
        write_trajectory_csv(os, tr);
        run.add_output("trajectory.csv");
        rep["replay"] = {{"cell", cell}, {"duration", sig.duration()}, {"sup_control", sig.sup_norm(c.norm)}};
    }
    run.write_json("report.json", rep);
    run.manifest()["L_estimates"] = {{"reach", rr.L_used}};
    run.manifest()["certified"]["over"] = rr.certified;
    std::printf("over %ld cells, under %ld cells, escaped=%d, certified=%d\n", rr.over.set.count(),
                rr.under.set.count(), rr.over.escaped, rr.certified);
    if (!rr.over.converged && !rr.over.escaped) return kNoConverge;
    return kOk;
}

int cmd_intensity(const Opts& o, Run& run) {
    VectorField f = load_field(o.field, o.params);
    GridSpec g = make_grid(o, f);
    Seed s = make_seed(o, f, g);
    CellSet target = make_target(o, g);
    ReachConfig c = make_config(o);
    IntensityBracket br = intensity_bisect(f, s.cells, target, o.r_max, o.tol, c, s.has_anchors ? &s.anchors : nullptr);
    json rep = bracket_json(br);
    run.write_set("target.csv", target);
    run.write_set("feasible_over.csv", br.feasible_evidence.set);
    rep["evidence"] = {{"feasible_over", run.path("feasible_over.csv").string()}};
    if (br.hi_verified) {
        run.write_set("infeasible_under.csv", br.infeasible_evidence.set);
        rep["evidence"]["infeasible_under"] = run.path("infeasible_under.csv").string();
    }
    run.write_json("report.json", rep);
    run.manifest()["certified"]["bracket"] = br.certified;
    std::printf("lo %s hi %s%s\n", fmt_double(br.lo).c_str(), fmt_double(br.hi).c_str(),
                br.hi_verified ? "" : " (hi not verified: r_max never left the target)");
    return kOk;
}

int cmd_intensity1d(const Opts& o, Run& run) {
    VectorField f = load_field(o.field, o.params);
    Intensity1D m = intensity_1d(f, o.attractor, parse_ext(o.basin_lo), parse_ext(o.basin_hi));
    json rep = {{"mu", m.mu},
                {"left", std::isinf(m.left) ? json("inf") : json(m.left)},
                {"right", std::isinf(m.right) ? json("inf") : json(m.right)},
                {"argmax_left", m.argmax_left},
                {"argmax_right", m.argmax_right}};
    if (std::isinf(m.mu)) rep["mu"] = "inf";
    run.write_json("report.json", rep);
    std::printf("%s\n", std::isinf(m.mu) ? "inf" : fmt_double(m.mu).c_str());
    return kOk;
}

int cmd_scan(const Opts& o, Run& run) {
    VectorField f = load_field(o.field, o.params);
    GridSpec g = make_grid(o, f);
    Seed s = make_seed(o, f, g);
    ReachConfig c = make_config(o);
    if (!(o.r_step > 0) || o.r_to < o.r_from) throw PreconditionError("scan needs r_from <= r_to and r_step > 0");
    std::vector<double> rs;
    for (long i = 0;; ++i) {
        double r = o.r_from + i * o.r_step;
        if (r > o.r_to + 1e-12 * std::max(1.0, std::abs(o.r_to))) break;
        rs.push_back(r);
    }
    ScanOptions so;
    so.jump_factor = o.jump_factor;
    CellSet dom;
    if (!o.domain_box.empty()) {
        dom = CellSet::from_box(g, parse_box(o.domain_box, "--domain-box"));
        so.domain_estimate = &dom;
    }
    auto pts = discontinuity_scan(f, s.cells, rs, c, so);
    std::ofstream os(run.path("scan.csv"));
    run.add_output("scan.csv");
    os << "r,cells,diameter,escaped,jump\n";
    json arr = json::array();
    for (auto& p : pts) {
        os << fmt_double(p.r) << "," << p.cell_count << "," << fmt_double(p.diameter) << "," << p.escaped << ","
           << p.jump << "\n";
        arr.push_back({{"r", p.r}, {"cells", p.cell_count}, {"diameter", p.diameter}, {"escaped", p.escaped},
                       {"jump", p.jump}});
        std::printf("r=%g cells=%ld diameter=%g%s%s\n", p.r, p.cell_count, p.diameter, p.jump ? " JUMP" : "",
                    p.escaped ? " ESCAPED" : "");
    }
    run.write_json("report.json", {{"points", arr}});
    return kOk;
}

int cmd_basin(const Opts& o, Run& run) {
    VectorField f = load_field(o.field, o.params);
    GridSpec g = make_grid(o, f);
    Seed s = make_seed(o, f, g);
    BasinResult b = estimate_basin(f, s.cells, g.box, g, o.t_max, o.eps);
    run.write_set("basin.csv", b.basin);
    run.write_json("report.json", {{"cells", b.basin.count()}, {"certified", b.certified}});
    run.manifest()["certified"]["basin"] = false;
    std::printf("basin estimate: %ld cells (trajectory classification, not certified)\n", b.basin.count());
    return kOk;
}

int cmd_continue(const Opts& o, Run& run) {
    VectorField f = load_field(o.field, o.params);
    VectorField fh = o.fhat.empty() ? f : load_field(o.fhat, o.fhat_params);
    if (!o.offset.empty()) fh = offset_field(fh, parse_vec(o.offset, "--offset"));
    if (fh.dim != f.dim) throw PreconditionError("f and fhat differ in dimension");
    GridSpec g = make_grid(o, f);
    Seed s = make_seed(o, f, g);
    ReachConfig c = make_config(o);
    ContinuationOptions co;
    co.t_probe = o.t_probe;
    ContinuationReport rep;
    if (!o.bracket.empty()) {
        std::ifstream in(o.bracket);
        if (!in) throw PreconditionError("cannot open " + o.bracket);
        json bj = json::parse(in);
        IntensityBracket br;
        br.lo = bj.at("lo").get<double>();
        br.hi = bj.at("hi").get<double>();
        rep = continuation_from_intensity(f, fh, s.cells, br, c, co);
    } else {
        if (!(o.r > 0)) throw PreconditionError("continue needs --r or --bracket");
        rep = persistent_block(f, fh, s.cells, o.r, c, co);
    }
    run.write_set("block.csv", rep.block);
    run.write_set("ahat.csv", rep.A_hat);
    json j = {{"r", rep.r},
              {"f_distance", {{"lower", rep.f_distance.lower}, {"upper", rep.f_distance.upper}}},
              {"advisory", rep.advisory},
              {"block_ok_for_f", rep.block_ok_for_f},
              {"block_ok_for_fhat", rep.block_ok_for_fhat},
              {"margin_f", rep.under_f.margin},
              {"margin_fhat", rep.under_fhat.margin},
              {"ahat_cells", rep.A_hat.count()},
              {"omega_stabilized", rep.omega_stabilized},
              {"containment", rep.containment},
              {"diagnostic", rep.diagnostic},
              {"conditional_on_lipschitz_estimates", true}};
    run.write_json("report.json", j);
    run.manifest()["L_estimates"] = {{"f", rep.f_distance.L_f}, {"fhat", rep.f_distance.L_g}};
    run.manifest()["certified"]["block_f"] = rep.block_ok_for_f;
    run.manifest()["certified"]["block_fhat"] = rep.block_ok_for_fhat;
    std::printf("r=%s block(f)=%d block(fhat)=%d A_hat inside=%d%s\n", fmt_double(rep.r).c_str(),
                rep.block_ok_for_f, rep.block_ok_for_fhat, rep.containment, rep.advisory ? " [advisory]" : "");
    return kOk;
}

int cmd_suite(const Opts& o, Run& run) {
    SuiteOptions so;
    so.pp_delta = o.pp_delta;
    so.log = [](const std::string& s) { std::printf("%s\n", s.c_str()); };
    std::string bin = o.props_bin;
    so.properties = [bin](std::string& msg) {
        if (bin.empty() || !fs::exists(bin)) {
            msg = "property test binary not found (" + bin + "); pass --props-bin";
            return false;
        }
        std::string filter;
        for (auto& n : property_test_names()) filter += (filter.empty() ? "" : ",") + n;
        std::string cmd = "'" + bin + "' --minimal --no-intro '--test-case=" + filter + "'";
        int rc = std::system(cmd.c_str());
        msg = std::to_string(property_test_names().size()) + " suites via " + fs::path(bin).filename().string() +
              (rc == 0 ? ", all green" : ", failures");
        return rc == 0;
    };
    json arr = json::array();
    int failed = 0;
    std::vector<std::string> lines;
    for (double id : parse_vec(o.criteria, "--criteria")) {
        CriterionResult r = run_criterion(static_cast<int>(id), so);
        lines.push_back(format_result(r));
        std::printf("%s\n", lines.back().c_str());
        std::fflush(stdout);
        arr.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail},
                       {"seconds", r.seconds}, {"budget_seconds", r.budget}});
        if (!r.pass) ++failed;
    }
    std::printf("\n%-10s %-6s %s\n", "criterion", "result", "seconds");
    for (auto& a : arr)
        std::printf("%-10d %-6s %.1f\n", a["id"].get<int>(), a["pass"].get<bool>() ? "PASS" : "FAIL",
                    a["seconds"].get<double>());
    run.write_json("suite.json", {{"criteria", arr}, {"failed", failed}, {"pp_delta", o.pp_delta}});
    return failed ? kFail : kOk;
}

void add_common(CLI::App* s, Opts& o, bool grid = true) {
    s->add_option("--field", o.field, "builtin name or field file")->required();
    s->add_option("--param", o.params, "parameter override name=value (repeatable)");
    if (!grid) return;
    s->add_option("--norm", o.norm, "control norm p: 1, 2, ..., inf");
    s->add_option("--lo", o.lo, "window lower corner, comma separated (default: field domain)");
    s->add_option("--hi", o.hi, "window upper corner");
    s->add_option("--delta", o.delta, "grid cell size");
    s->add_option("--step", o.h, "euler step (euler scheme; 0 = automatic)");
    s->add_option("--macro-step", o.H, "macro step of the blob scheme (0 = automatic)");
    s->add_option("--scheme", o.scheme, "blob or euler")->check(CLI::IsMember({"blob", "euler"}));
    s->add_option("--max-iters", o.max_iters, "layer limit of the fixpoint iteration");
    s->add_option("--seed-point", o.seed_point, "seed point x1,x2,...");
    s->add_option("--seed-box", o.seed_box, "seed box lo1,lo2:hi1,hi2");
    s->add_option("--seed-csv", o.seed_csv, "seed CellSet CSV");
    s->add_option("--seed-orbit", o.seed_orbit, "seed = cells of the orbit from this point (limit cycles)");
    s->add_option("--orbit-skip", o.orbit_skip, "transient time skipped before recording the orbit");
    s->add_option("--orbit-span", o.orbit_span, "recorded orbit time");
    s->add_flag("--seed-fill", o.seed_fill, "fill the holes of the seed");
    s->add_flag("--seed-not-invariant", o.not_invariant, "seed is not invariant under the flow");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reachable sets and intensity of attraction"};
    Run::argv_.assign(argv, argv + argc);
    app.set_config("--config", "", "key = value config file; [subcommand] sections; command line wins");
    app.require_subcommand(1);
    Opts o;
    app.add_option("--out", o.out, "output directory (default $RCH_OUT_DIR or ./rch_out)");
    app.add_option("--threads", o.threads, "worker count (0 = OpenMP default)");

    auto* s_reach = app.add_subcommand("reach", "over/under approximation of the reachable set");
    add_common(s_reach, o);
    s_reach->add_option("--r", o.r, "control bound")->required();
    s_reach->add_option("--replay", o.replay, "write trajectory.csv of the witness for the under cell at this point");

    auto* s_int = app.add_subcommand("intensity", "bisection bracket of the intensity of attraction");
    add_common(s_int, o);
    s_int->add_option("--target-box", o.target_box, "target box lo:hi (default: whole window)");
    s_int->add_option("--target-csv", o.target_csv, "target CellSet CSV");
    s_int->add_option("--exclude-ball", o.exclude_balls, "remove center,...,radius from the target (repeatable)");
    s_int->add_option("--r-max", o.r_max, "upper end of the search");
    s_int->add_option("--tol", o.tol, "bracket width");

    auto* s_1d = app.add_subcommand("intensity1d", "exact 1D intensity");
    add_common(s_1d, o, false);
    s_1d->add_option("--attractor", o.attractor, "sink location")->required();
    s_1d->add_option("--basin-lo", o.basin_lo, "basin left end (number or -inf)");
    s_1d->add_option("--basin-hi", o.basin_hi, "basin right end (number or inf)");

    auto* s_scan = app.add_subcommand("scan", "reachable set size against r");
    add_common(s_scan, o);
    s_scan->add_option("--r-from", o.r_from);
    s_scan->add_option("--r-to", o.r_to);
    s_scan->add_option("--r-step", o.r_step);
    s_scan->add_option("--jump-factor", o.jump_factor, "diameter ratio flagged as a jump");
    s_scan->add_option("--domain-box", o.domain_box, "domain-of-attraction estimate lo:hi for escape flags");

    auto* s_basin = app.add_subcommand("basin", "trajectory classification of the domain of attraction");
    add_common(s_basin, o);
    s_basin->add_option("--t-max", o.t_max, "integration horizon");
    s_basin->add_option("--eps", o.eps, "capture distance");

    auto* s_cont = app.add_subcommand("continue", "attractor block shared by f and a perturbed field");
    add_common(s_cont, o);
    s_cont->add_option("--fhat", o.fhat, "perturbed field (default: f)");
    s_cont->add_option("--fhat-param", o.fhat_params, "parameter override for fhat");
    s_cont->add_option("--offset", o.offset, "constant vector added to fhat");
    s_cont->add_option("--r", o.r, "control bound of the block");
    s_cont->add_option("--bracket", o.bracket, "intensity report.json; r is chosen below its lo");
    s_cont->add_option("--t-probe", o.t_probe, "probe time of the block check");

    auto* s_suite = app.add_subcommand("paper-suite", "run the acceptance criteria and print a table");
    s_suite->add_option("--criteria", o.criteria, "comma separated subset of 1..9");
    s_suite->add_option("--pp-delta", o.pp_delta, "grid step of the predator-prey criteria");
    s_suite->add_option("--props-bin", o.props_bin, "unit test binary used for criterion 8");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Error& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return kRefused;
    }
    if (o.threads > 0) omp_set_num_threads(o.threads);

    CLI::App* sub = app.get_subcommands().front();
    std::string name = sub->get_name();
    std::unique_ptr<Run> run;
    try {
        run = std::make_unique<Run>(name, o, app);
        int rc = kOk;
        if (name == "reach") rc = cmd_reach(o, *run);
        else if (name == "intensity") rc = cmd_intensity(o, *run);
        else if (name == "intensity1d") rc = cmd_intensity1d(o, *run);
        else if (name == "scan") rc = cmd_scan(o, *run);
        else if (name == "basin") rc = cmd_basin(o, *run);
        else if (name == "continue") rc = cmd_continue(o, *run);
        else if (name == "paper-suite") rc = cmd_suite(o, *run);
        run->finish(rc, rc == kNoConverge ? "nonconvergence" : "");
        if (rc == kNoConverge) std::fprintf(stderr, "error: nonconvergence: fixpoint not reached\n");
        return rc;
    } catch (const NonConvergence& e) {
        if (run) run->finish(kNoConverge, e.what());
        std::fprintf(stderr, "error: nonconvergence: %s\n", e.what());
        return kNoConverge;
    } catch (const PreconditionError& e) {
        if (run) run->finish(kRefused, e.what());
        std::fprintf(stderr, "error: precondition: %s\n", e.what());
        return kRefused;
    } catch (const ParseError& e) {
        if (run) run->finish(kRefused, e.what());
        std::fprintf(stderr, "error: parse: %s\n", e.what());
        return kRefused;
    } catch (const std::exception& e) {
        if (run) run->finish(kFail, e.what());
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return kFail;
    }
}
