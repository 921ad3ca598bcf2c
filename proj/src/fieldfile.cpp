#include "rch/fieldfile.hpp"

#include "rch/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rch {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double to_num(const std::string& s, int line) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (trim(s.substr(pos)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("expected a number, got '" + s + "'", line);
}

Vec to_list(const std::string& s, int line) {
    Vec out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(to_num(trim(tok), line));
    if (out.empty()) throw ConfigError("empty list", line);
    return out;
}

}  // namespace

FieldFile parse_field_file(const std::string& text, const std::map<std::string, double>& overrides) {
    std::string section;
    std::string name;
    int dim = 0, dim_line = 0;
    std::map<int, std::pair<std::string, int>> comps;  // component index -> (expression, line)
    std::map<std::string, double> params;
    std::optional<double> lip;
    std::optional<Vec> lo, hi;
    Vec breaks;
    std::vector<Vec> values;
    int ctrl_line = 0;
    std::istringstream in(text);
    std::string raw;
    int ln = 0;
    while (std::getline(in, raw)) {
        ++ln;
        std::string s = raw;
        auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("unterminated section header", ln);
            section = trim(s.substr(1, s.size() - 2));
            if (section != "field" && section != "params" && section != "domain" && section != "control")
                throw ConfigError("unknown section [" + section + "]", ln);
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", ln);
        std::string key = trim(s.substr(0, eq)), val = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", ln);
        if (section.empty()) throw ConfigError("key outside any section", ln);
        if (section == "field") {
            if (key == "name") name = val;
            else if (key == "dim") {
                double d = to_num(val, ln);
                if (d != std::floor(d) || d < 1 || d > 16) throw ConfigError("dim must be an integer in 1..16", ln);
                dim = static_cast<int>(d);
                dim_line = ln;
            } else if (key == "lipschitz") {
                lip = to_num(val, ln);
            } else if (key.size() > 1 && key[0] == 'f' &&
                       std::all_of(key.begin() + 1, key.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
                int i = std::stoi(key.substr(1));
                if (comps.count(i)) throw ConfigError("duplicate component " + key, ln);
                comps[i] = {val, ln};
            } else {
                throw ConfigError("unknown key '" + key + "' in [field]", ln);
            }
        } else if (section == "params") {
            params[key] = to_num(val, ln);
        } else if (section == "domain") {
            if (key == "lo") lo = to_list(val, ln);
            else if (key == "hi") hi = to_list(val, ln);
            else throw ConfigError("unknown key '" + key + "' in [domain]", ln);
        } else {
            ctrl_line = ctrl_line ? ctrl_line : ln;
            if (key == "breaks") breaks = to_list(val, ln);
            else if (key == "value") values.push_back(to_list(val, ln));
            else throw ConfigError("unknown key '" + key + "' in [control]", ln);
        }
    }
    for (auto& [k, v] : overrides) params[k] = v;

    std::optional<Box> dom;
    if (lo || hi) {
        if (!lo || !hi) throw ConfigError("[domain] needs both lo and hi", ln);
        if (lo->size() != hi->size()) throw ConfigError("[domain] lo/hi lengths differ", ln);
        for (size_t i = 0; i < lo->size(); ++i)
            if (!((*lo)[i] < (*hi)[i])) throw ConfigError("[domain] needs lo < hi on every axis", ln);
        dom = Box{*lo, *hi};
    }

    FieldFile out;
    if (!name.empty()) {
        if (!comps.empty()) throw ConfigError("[field] has both a builtin name and component expressions", ln);
        out.field = builtin(name, params);
        if (dom) {
            if (dom->dim() != out.field.dim) throw ConfigError("[domain] dimension does not match the field", ln);
            out.field.domain = *dom;
        }
    } else {
        if (!dim) throw ConfigError("[field] needs a builtin name or dim plus f1..fn", ln);
        std::string src;
        for (int i = 1; i <= dim; ++i) {
            auto it = comps.find(i);
            if (it == comps.end()) throw ConfigError("missing component f" + std::to_string(i), dim_line);
            src += it->second.first + "\n";
        }
        if (static_cast<int>(comps.size()) != dim)
            throw ConfigError("component count does not match dim " + std::to_string(dim), dim_line);
        try {
            out.field = parse_field(src, dim, params, dom);
        } catch (const ParseError& e) {
            // map the component line back to the file line
            int fl = comps.count(e.line) ? comps[e.line].second : ln;
            throw ConfigError(std::string("expression: ") + e.what(), fl);
        }
    }
    if (lip) out.field.lipschitz_hint = *lip;
    if (!breaks.empty() || !values.empty()) {
        ControlSignal g;
        g.breaks = breaks;
        g.values = values;
        try {
            g.validate();
        } catch (const PreconditionError& e) {
            throw ConfigError(e.what(), ctrl_line);
        }
        if (g.dim() != out.field.dim) throw ConfigError("[control] values do not match the field dimension", ctrl_line);
        out.control = g;
    }
    return out;
}

FieldFile load_field_file(const std::string& path, const std::map<std::string, double>& overrides) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open field file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_field_file(ss.str(), overrides);
}

VectorField resolve_field(const std::string& spec, const std::map<std::string, double>& params) {
    auto names = builtin_names();
    if (std::find(names.begin(), names.end(), spec) != names.end()) return builtin(spec, params);
    if (std::filesystem::exists(spec)) return load_field_file(spec, params).field;
    throw PreconditionError("'" + spec + "' is neither a builtin field nor an existing file");
}

}  // namespace rch
