#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "rch/field.hpp"
#include "rch/geometry.hpp"

namespace rch {

struct ControlSignal {
    std::vector<double> breaks;  // 0 = t0 < t1 < ... < tk
    std::vector<Vec> values;     // one per interval

    static ControlSignal constant(const Vec& u, double T);
    static ControlSignal zero(int dim, double T);
    double duration() const { return breaks.empty() ? 0.0 : breaks.back(); }
    int dim() const { return values.empty() ? 0 : static_cast<int>(values[0].size()); }
    const Vec& at(double t) const;
    double sup_norm(const NormSpec& n) const;
    // append another signal after this one
    void append(const ControlSignal& g);
    void validate() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    bool exited_domain = false;
};

struct FlowError : std::runtime_error {
    double time;
    FlowError(const std::string& m, double t) : std::runtime_error(m), time(t) {}
};

double default_step(double L);

// classical RK4 step with constant control u; work needs 5*dim doubles
void rk4_step(const VectorField& f, double* x, const double* u, double h, double* work);

// fixed-step RK4, steps aligned with the control breakpoints
Trajectory integrate(const VectorField& f, const Vec& x0, const ControlSignal& g, double T, double h,
                     bool record = true);
Vec integrate_endpoint(const VectorField& f, const Vec& x0, const ControlSignal& g, double T, double h,
                       bool* exited = nullptr);

double gronwall_bound(double L, double T, double control_gap);

struct TimeMapResult {
    CellSet image;
    bool exited = false;  // a cell image left the domain or the grid box
};
TimeMapResult time_t_map(const VectorField& f, const CellSet& s, double t, double h_max = 0.05);

void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

}  // namespace rch
