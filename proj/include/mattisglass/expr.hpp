#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mattis {

struct ParseError : std::runtime_error {
    ParseError(std::size_t position, const std::string& what_happened)
        : std::runtime_error("parse error at position " + std::to_string(position) + ": " + what_happened),
          pos(position)
    {
    }
    std::size_t pos;
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Arithmetic expression over a declared variable set. Operators + - * / and
// ^ with a literal nonnegative integer exponent; functions exp, log, cosh,
// tanh, abs. Parsed ASTs are immutable and evaluation is reentrant.
class Expression {
public:
    Expression() = default;

    // precedence: ^ binds tighter than unary minus, then * /, then + -
    static Expression parse(std::string_view source, const std::vector<std::string>& variables);

    bool empty() const { return nodes_.empty(); }

    // positional evaluation; values[i] binds variables()[i]
    double eval(std::span<const double> values) const;

    // by-name evaluation; bindings must cover every declared variable
    double eval(const std::map<std::string, double>& bindings) const;

    // pretty-print; parse(str(), variables()) evaluates identically
    std::string str() const;

    const std::vector<std::string>& variables() const { return vars_; }
    const std::string& source() const { return source_; }

private:
    enum class Kind : std::uint8_t { number, variable, negate, add, sub, mul, div, ipow, call };
    enum class Fn : std::uint8_t { exp_fn, log_fn, cosh_fn, tanh_fn, abs_fn };

    struct Node {
        Kind kind;
        Fn fn = Fn::exp_fn;
        double number = 0.0;
        int var = -1;
        int a = -1, b = -1;
        int exponent = 0;
    };

    double eval_node(int idx, std::span<const double> values) const;
    void print_node(int idx, int parent_prec, std::string& out) const;

    std::vector<Node> nodes_;
    int root_ = -1;
    std::vector<std::string> vars_;
    std::string source_;

    friend class ExprParser;
};

}  // namespace mattis
