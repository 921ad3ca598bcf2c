#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rch/geometry.hpp"

namespace rch {

using EvalFn = std::function<void(const double* x, double* out)>;

struct VectorField {
    int dim = 0;
    std::string name;
    Box domain;
    std::optional<double> lipschitz_hint;
    std::map<std::string, double> params;
    EvalFn f;
    EvalFn jac;                      // row-major dim x dim; empty -> finite differences
    std::vector<std::string> exprs;  // component expressions when the field has a textual form

    void eval(const double* x, double* out) const { f(x, out); }
    Vec eval(const Vec& x) const;
    void jacobian(const double* x, double* J) const;
};

VectorField parse_field(const std::string& source, int dim, const std::map<std::string, double>& params,
                        const std::optional<Box>& domain = std::nullopt);

VectorField builtin(const std::string& name, const std::map<std::string, double>& params = {});
std::vector<std::string> builtin_names();

// f + c, with c constant
VectorField offset_field(const VectorField& f, const Vec& c);
// f + amp * exp(-|x-center|^2 / (2 w^2)) * dir (smooth bump, bounded by |amp| in norm of dir)
VectorField bump_field(const VectorField& f, const Vec& center, double width, const Vec& dir);

double estimate_lipschitz(const VectorField& f, const Box& region, const NormSpec& n, int samples = 4000,
                          uint64_t seed = 12345);
// operator norm of a dim x dim row-major matrix in the p-norm (exact for 1, 2, inf)
double operator_norm(const double* J, int dim, const NormSpec& n);

struct SupDistance {
    double lower = 0;  // sample max
    double upper = 0;  // sample max + (L_f + L_g) * cell radius
    double L_f = 0, L_g = 0;
};
SupDistance sup_norm_distance(const VectorField& f, const VectorField& g, const Box& region, const NormSpec& n,
                              const GridSpec& grid);

}  // namespace rch
