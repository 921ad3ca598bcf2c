#pragma once

#include <map>
#include <optional>
#include <string>

#include "rch/field.hpp"
#include "rch/flow.hpp"

namespace rch {

// Field definition file, sections in any order:
//
//   [field]
//   name = pp                 builtin catalog name, or
//   dim = 2                   expression form: dim plus one line per component
//   f1 = a*x*(1 - x/K) - k*y*(1 - exp(-c*x))
//   f2 = -b*y + beta*y*(1 - exp(-f0*x))
//   lipschitz = 3.5           optional hint
//   [params]
//   K = 4
//   [domain]
//   lo = -0.5, -0.5
//   hi = 8, 8
//   [control]                 optional piecewise-constant signal
//   breaks = 0, 1, 2
//   value = 0.5, 0            one line per interval, in order
//   value = 0, -0.5
//
// '#' starts a comment; keys are case-sensitive; blank lines ignored.
struct FieldFile {
    VectorField field;
    std::optional<ControlSignal> control;
};

struct ConfigError : PreconditionError {
    int line;
    ConfigError(const std::string& m, int l) : PreconditionError("line " + std::to_string(l) + ": " + m), line(l) {}
};

FieldFile parse_field_file(const std::string& text, const std::map<std::string, double>& overrides = {});
FieldFile load_field_file(const std::string& path, const std::map<std::string, double>& overrides = {});

// builtin name or path to a field file; overrides replace [params] entries
VectorField resolve_field(const std::string& spec, const std::map<std::string, double>& params = {});

}  // namespace rch
