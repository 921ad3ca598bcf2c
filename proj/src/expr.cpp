#include "rch/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>

#include "rch/geometry.hpp"

namespace rch {

namespace {

const std::set<std::string> kFunctions = {"sin", "cos", "exp", "tanh", "sqrt", "abs"};

enum class Tok { Num, Ident, Op, LParen, RParen, Comma, Sep, End };

struct Token {
    Tok kind;
    std::string text;
    double num = 0;
    int line = 1, col = 1;
};

std::vector<Token> tokenize(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n' || c == ';') {
            out.push_back({Tok::Sep, std::string(1, c), 0, line, col});
            ++i;
            if (c == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            continue;
        }
        if (c == '#') {  // comment to end of line
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            ++col;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t j = i;
            while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    j = k;
                    while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
                }
            }
            std::string t = src.substr(i, j - i);
            double v = 0;
            auto r = std::from_chars(t.data(), t.data() + t.size(), v);
            if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ParseError("malformed number", line, col, t);
            out.push_back({Tok::Num, t, v, line, col});
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            out.push_back({Tok::Ident, src.substr(i, j - i), 0, line, col});
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            out.push_back({Tok::Op, std::string(1, c), 0, line, col});
        } else if (c == '(') {
            out.push_back({Tok::LParen, "(", 0, line, col});
        } else if (c == ')') {
            out.push_back({Tok::RParen, ")", 0, line, col});
        } else if (c == ',') {
            out.push_back({Tok::Comma, ",", 0, line, col});
        } else {
            throw ParseError("unexpected character", line, col, std::string(1, c));
        }
        ++i;
        ++col;
    }
    out.push_back({Tok::End, "", 0, line, col});
    return out;
}

ExprPtr make(NodeKind k) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    return e;
}

ExprPtr make_bin(NodeKind k, ExprPtr a, ExprPtr b) {
    auto e = make(k);
    e->args.push_back(std::move(a));
    e->args.push_back(std::move(b));
    return e;
}

class Parser {
public:
    Parser(const std::vector<Token>& toks, size_t begin, size_t end, int dim,
           const std::map<std::string, double>& params)
        : t_(toks), pos_(begin), end_(end), dim_(dim), params_(params) {}

    ExprPtr parse() {
        auto e = expr();
        if (pos_ != end_) fail("unexpected token");
        return e;
    }

private:
    const std::vector<Token>& t_;
    size_t pos_, end_;
    int dim_;
    const std::map<std::string, double>& params_;

    const Token& peek() const { return pos_ < end_ ? t_[pos_] : t_[end_]; }
    [[noreturn]] void fail(const std::string& msg) const {
        const Token& k = peek();
        throw ParseError(msg, k.line, k.col, k.text);
    }
    bool at_op(char c) const { return pos_ < end_ && t_[pos_].kind == Tok::Op && t_[pos_].text[0] == c; }

    ExprPtr expr() {
        auto lhs = term();
        while (at_op('+') || at_op('-')) {
            NodeKind k = t_[pos_].text[0] == '+' ? NodeKind::Add : NodeKind::Sub;
            ++pos_;
            lhs = make_bin(k, std::move(lhs), term());
        }
        return lhs;
    }

    ExprPtr term() {
        auto lhs = unary();
        while (at_op('*') || at_op('/')) {
            NodeKind k = t_[pos_].text[0] == '*' ? NodeKind::Mul : NodeKind::Div;
            ++pos_;
            lhs = make_bin(k, std::move(lhs), unary());
        }
        return lhs;
    }

    ExprPtr unary() {
        if (at_op('-')) {
            ++pos_;
            auto e = make(NodeKind::Neg);
            e->args.push_back(unary());
            return e;
        }
        if (at_op('+')) {
            ++pos_;
            return unary();
        }
        return power();
    }

    ExprPtr power() {
        auto base = primary();
        if (at_op('^')) {
            ++pos_;
            // right-associative; the exponent may carry its own sign
            return make_bin(NodeKind::Pow, std::move(base), unary());
        }
        return base;
    }

    int state_index(const std::string& id) const {
        if (id.size() >= 2 && id[0] == 'x' && std::all_of(id.begin() + 1, id.end(), ::isdigit) && id[1] != '0') {
            int k = std::stoi(id.substr(1));
            if (k >= 1 && k <= dim_) return k - 1;
            return -2;
        }
        if (dim_ <= 3) {
            if (id == "x") return 0;
            if (id == "y" && dim_ >= 2) return 1;
            if (id == "z" && dim_ >= 3) return 2;
        }
        return -1;
    }

    ExprPtr primary() {
        if (pos_ >= end_) fail("unexpected end of expression");
        const Token& k = t_[pos_];
        if (k.kind == Tok::Num) {
            ++pos_;
            auto e = make(NodeKind::Num);
            e->value = k.num;
            return e;
        }
        if (k.kind == Tok::LParen) {
            ++pos_;
            auto e = expr();
            if (pos_ >= end_ || t_[pos_].kind != Tok::RParen) fail("expected ')'");
            ++pos_;
            return e;
        }
        if (k.kind == Tok::Ident) {
            ++pos_;
            if (kFunctions.count(k.text)) {
                if (pos_ >= end_ || t_[pos_].kind != Tok::LParen) {
                    --pos_;
                    fail("function needs exactly one parenthesized argument");
                }
                ++pos_;
                auto e = make(NodeKind::Call);
                e->name = k.text;
                e->args.push_back(expr());
                if (pos_ < end_ && t_[pos_].kind == Tok::Comma) fail("arity mismatch: functions take one argument");
                if (pos_ >= end_ || t_[pos_].kind != Tok::RParen) fail("arity mismatch: functions take one argument");
                ++pos_;
                return e;
            }
            if (params_.count(k.text)) {
                auto e = make(NodeKind::Param);
                e->name = k.text;
                return e;
            }
            int si = state_index(k.text);
            if (si >= 0) {
                auto e = make(NodeKind::State);
                e->index = si;
                return e;
            }
            if (k.text == "pi") {
                auto e = make(NodeKind::Param);
                e->name = "pi";
                return e;
            }
            --pos_;
            fail(si == -2 ? "state index out of range" : "unknown identifier");
        }
        fail("unexpected token");
    }
};

}  // namespace

bool Expr::same(const Expr& o) const {
    if (kind != o.kind || args.size() != o.args.size()) return false;
    switch (kind) {
        case NodeKind::Num:
            if (!(value == o.value)) return false;
            break;
        case NodeKind::State:
            if (index != o.index) return false;
            break;
        case NodeKind::Param:
        case NodeKind::Call:
            if (name != o.name) return false;
            break;
        default:
            break;
    }
    for (size_t i = 0; i < args.size(); ++i)
        if (!args[i]->same(*o.args[i])) return false;
    return true;
}

namespace {

std::vector<ExprPtr> split_parse(const std::string& source, int ncomp, int dim,
                                 const std::map<std::string, double>& params) {
    auto toks = tokenize(source);
    std::vector<ExprPtr> out;
    size_t start = 0;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind == Tok::Sep || toks[i].kind == Tok::End) {
            if (i > start) {
                if (static_cast<int>(out.size()) == ncomp)
                    throw ParseError("dimension count mismatch: more than " + std::to_string(ncomp) + " components",
                                     toks[start].line, toks[start].col, toks[start].text);
                Parser p(toks, start, i, dim, params);
                out.push_back(p.parse());
            }
            start = i + 1;
        }
    }
    if (static_cast<int>(out.size()) != ncomp) {
        const Token& e = toks.back();
        throw ParseError("dimension count mismatch: got " + std::to_string(out.size()) + " components, need " +
                             std::to_string(ncomp),
                         e.line, e.col, "");
    }
    return out;
}

}  // namespace

std::vector<ExprPtr> parse_components(const std::string& source, int dim,
                                      const std::map<std::string, double>& params) {
    return split_parse(source, dim, dim, params);
}

ExprPtr parse_expression(const std::string& text, int dim, const std::map<std::string, double>& params) {
    auto v = split_parse(text, 1, dim, params);
    return std::move(v[0]);
}

std::string print_expr(const Expr& e) {
    switch (e.kind) {
        case NodeKind::Num:
            return fmt_double(e.value);
        case NodeKind::State:
            return "x" + std::to_string(e.index + 1);
        case NodeKind::Param:
            return e.name;
        case NodeKind::Neg:
            return "(-" + print_expr(*e.args[0]) + ")";
        case NodeKind::Call:
            return e.name + "(" + print_expr(*e.args[0]) + ")";
        default:
            break;
    }
    const char* op = "+";
    switch (e.kind) {
        case NodeKind::Sub: op = "-"; break;
        case NodeKind::Mul: op = "*"; break;
        case NodeKind::Div: op = "/"; break;
        case NodeKind::Pow: op = "^"; break;
        default: break;
    }
    return "(" + print_expr(*e.args[0]) + " " + op + " " + print_expr(*e.args[1]) + ")";
}

ExprProgram::ExprProgram(const Expr& e, const std::map<std::string, double>& params) {
    int cur = 0;
    emit(e, params, cur);
}

void ExprProgram::emit(const Expr& e, const std::map<std::string, double>& params, int& cur) {
    auto push = [&](Ins i) {
        code_.push_back(i);
    };
    switch (e.kind) {
        case NodeKind::Num:
            push({PushC, 0, e.value});
            depth_ = std::max(depth_, ++cur);
            return;
        case NodeKind::State:
            push({PushX, e.index, 0});
            depth_ = std::max(depth_, ++cur);
            return;
        case NodeKind::Param: {
            auto it = params.find(e.name);
            double v = it != params.end() ? it->second : std::numbers::pi;
            push({PushC, 0, v});
            depth_ = std::max(depth_, ++cur);
            return;
        }
        case NodeKind::Neg:
            emit(*e.args[0], params, cur);
            push({Neg, 0, 0});
            return;
        case NodeKind::Call: {
            emit(*e.args[0], params, cur);
            Op op = Sin;
            if (e.name == "cos") op = Cos;
            else if (e.name == "exp") op = Exp;
            else if (e.name == "tanh") op = Tanh;
            else if (e.name == "sqrt") op = Sqrt;
            else if (e.name == "abs") op = Abs;
            push({op, 0, 0});
            return;
        }
        default:
            break;
    }
    emit(*e.args[0], params, cur);
    emit(*e.args[1], params, cur);
    Op op = Add;
    switch (e.kind) {
        case NodeKind::Sub: op = Sub; break;
        case NodeKind::Mul: op = Mul; break;
        case NodeKind::Div: op = Div; break;
        case NodeKind::Pow: op = Pow; break;
        default: break;
    }
    push({op, 0, 0});
    --cur;
}

double ExprProgram::eval(const double* x) const {
    double st[64] = {};
    std::vector<double> big;
    double* s = st;
    if (depth_ > 64) {
        big.resize(depth_);
        s = big.data();
    }
    int sp = 0;
    for (const Ins& i : code_) {
        switch (i.op) {
            case PushC: s[sp++] = i.val; break;
            case PushX: s[sp++] = x[i.idx]; break;
            case Neg: s[sp - 1] = -s[sp - 1]; break;
            case Add: s[sp - 2] += s[sp - 1]; --sp; break;
            case Sub: s[sp - 2] -= s[sp - 1]; --sp; break;
            case Mul: s[sp - 2] *= s[sp - 1]; --sp; break;
            case Div: s[sp - 2] /= s[sp - 1]; --sp; break;
            case Pow: {
                double b = s[sp - 2], p = s[sp - 1];
                // small integer powers are common (x^2, x^4); keep them exact and fast
                if (p == 2.0) s[sp - 2] = b * b;
                else if (p == 3.0) s[sp - 2] = b * b * b;
                else s[sp - 2] = std::pow(b, p);
                --sp;
                break;
            }
            case Sin: s[sp - 1] = std::sin(s[sp - 1]); break;
            case Cos: s[sp - 1] = std::cos(s[sp - 1]); break;
            case Exp: s[sp - 1] = std::exp(s[sp - 1]); break;
            case Tanh: s[sp - 1] = std::tanh(s[sp - 1]); break;
            case Sqrt: s[sp - 1] = std::sqrt(s[sp - 1]); break;
            case Abs: s[sp - 1] = std::abs(s[sp - 1]); break;
        }
    }
    return s[0];
}

}  // namespace rch
