#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace rch {

struct ParseError : std::runtime_error {
    int line, col;
    std::string token;
    ParseError(const std::string& msg, int line_, int col_, std::string tok)
        : std::runtime_error(msg + " at line " + std::to_string(line_) + ", column " + std::to_string(col_) +
                             (tok.empty() ? std::string() : " near '" + tok + "'")),
          line(line_), col(col_), token(std::move(tok)) {}
};

enum class NodeKind { Num, State, Param, Neg, Add, Sub, Mul, Div, Pow, Call };

struct Expr {
    NodeKind kind = NodeKind::Num;
    double value = 0;   // Num; Param value is looked up at compile time
    int index = 0;      // State: 0-based component
    std::string name;   // Param name or function name
    std::vector<std::unique_ptr<Expr>> args;

    bool same(const Expr& o) const;  // structural equality
};

using ExprPtr = std::unique_ptr<Expr>;

// one expression per component, separated by ';' or newlines
std::vector<ExprPtr> parse_components(const std::string& source, int dim,
                                      const std::map<std::string, double>& params);
ExprPtr parse_expression(const std::string& text, int dim, const std::map<std::string, double>& params);
std::string print_expr(const Expr& e);

// flat stack program, evaluated without allocation
class ExprProgram {
public:
    ExprProgram() = default;
    ExprProgram(const Expr& e, const std::map<std::string, double>& params);
    double eval(const double* x) const;

private:
    enum Op : unsigned char { PushC, PushX, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Tanh, Sqrt, Abs };
    struct Ins {
        Op op;
        int idx;
        double val;
    };
    std::vector<Ins> code_;
    int depth_ = 0;
    void emit(const Expr& e, const std::map<std::string, double>& params, int& cur);
};

}  // namespace rch
