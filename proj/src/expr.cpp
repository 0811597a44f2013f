#include "mattisglass/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace mattis {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

class ExprParser {
public:
    ExprParser(std::string_view src, const std::vector<std::string>& vars, Expression& out)
        : src_(src), out_(out)
    {
        out_.vars_ = vars;
        out_.source_.assign(src.begin(), src.end());
    }

    void run()
    {
        out_.root_ = parse_sum();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError(pos_, "unexpected trailing input");
    }

private:
    std::string_view src_;
    Expression& out_;
    std::size_t pos_ = 0;

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek()
    {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    int add_node(Expression::Node n)
    {
        out_.nodes_.push_back(n);
        return static_cast<int>(out_.nodes_.size()) - 1;
    }

    int parse_sum()
    {
        int lhs = parse_product();
        while (true) {
            if (accept('+')) {
                int rhs = parse_product();
                lhs = add_node({Expression::Kind::add, {}, 0.0, -1, lhs, rhs, 0});
            } else if (accept('-')) {
                int rhs = parse_product();
                lhs = add_node({Expression::Kind::sub, {}, 0.0, -1, lhs, rhs, 0});
            } else {
                return lhs;
            }
        }
    }

    int parse_product()
    {
        int lhs = parse_unary();
        while (true) {
            if (accept('*')) {
                int rhs = parse_unary();
                lhs = add_node({Expression::Kind::mul, {}, 0.0, -1, lhs, rhs, 0});
            } else if (accept('/')) {
                int rhs = parse_unary();
                lhs = add_node({Expression::Kind::div, {}, 0.0, -1, lhs, rhs, 0});
            } else {
                return lhs;
            }
        }
    }

    int parse_unary()
    {
        if (accept('-')) {
            int inner = parse_unary();
            return add_node({Expression::Kind::negate, {}, 0.0, -1, inner, -1, 0});
        }
        return parse_power();
    }

    int parse_power()
    {
        int base = parse_atom();
        if (accept('^')) {
            long long e = parse_exponent();
            // a literal chain n^m folds at parse time, so x^2^3 means x^(2^3)
            while (accept('^')) {
                long long f = parse_exponent();
                double folded = std::pow(static_cast<double>(e), static_cast<double>(f));
                if (folded > 1e9) throw ParseError(pos_, "exponent too large");
                e = static_cast<long long>(folded);
            }
            return add_node({Expression::Kind::ipow, {}, 0.0, -1, base, -1, static_cast<int>(e)});
        }
        return base;
    }

    long long parse_exponent()
    {
        skip_ws();
        const std::size_t at = pos_;
        if (pos_ >= src_.size()) throw ParseError(at, "expected integer exponent");
        if (src_[pos_] == '-') throw ParseError(at, "exponent must be a nonnegative integer");
        if (!std::isdigit(static_cast<unsigned char>(src_[pos_]))) throw ParseError(at, "exponent must be a nonnegative integer literal");
        long long value = 0;
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        auto [next, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc()) throw ParseError(at, "bad integer exponent");
        pos_ = static_cast<std::size_t>(next - src_.data());
        if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
            throw ParseError(at, "exponent must be an integer");
        return value;
    }

    int parse_atom()
    {
        skip_ws();
        const std::size_t at = pos_;
        if (pos_ >= src_.size()) throw ParseError(at, "unexpected end of input");
        const char c = src_[pos_];

        if (c == '(') {
            ++pos_;
            int inner = parse_sum();
            if (!accept(')')) throw ParseError(pos_, "expected ')'");
            return inner;
        }

        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double value = 0.0;
            const char* begin = src_.data() + pos_;
            const char* end = src_.data() + src_.size();
            auto [next, ec] = std::from_chars(begin, end, value);
            if (ec != std::errc() || next == begin) throw ParseError(at, "bad number");
            pos_ = static_cast<std::size_t>(next - src_.data());
            return add_node({Expression::Kind::number, {}, value, -1, -1, -1, 0});
        }

        if (ident_start(c)) {
            std::size_t e = pos_;
            while (e < src_.size() && ident_char(src_[e])) ++e;
            std::string name(src_.substr(pos_, e - pos_));
            pos_ = e;

            static const std::pair<const char*, Expression::Fn> fns[] = {
                {"exp", Expression::Fn::exp_fn},   {"log", Expression::Fn::log_fn},
                {"cosh", Expression::Fn::cosh_fn}, {"tanh", Expression::Fn::tanh_fn},
                {"abs", Expression::Fn::abs_fn},
            };
            if (peek() == '(') {
                for (const auto& [fname, fn] : fns) {
                    if (name == fname) {
                        accept('(');
                        int arg = parse_sum();
                        if (!accept(')')) throw ParseError(pos_, "expected ')' after function argument");
                        return add_node({Expression::Kind::call, fn, 0.0, -1, arg, -1, 0});
                    }
                }
            }

            auto it = std::find(out_.vars_.begin(), out_.vars_.end(), name);
            if (it == out_.vars_.end()) throw ParseError(at, "unknown identifier '" + name + "'");
            return add_node({Expression::Kind::variable, {}, 0.0, static_cast<int>(it - out_.vars_.begin()), -1, -1, 0});
        }

        throw ParseError(at, std::string("unexpected character '") + c + "'");
    }
};

Expression Expression::parse(std::string_view source, const std::vector<std::string>& variables)
{
    Expression e;
    ExprParser p(source, variables, e);
    p.run();
    return e;
}

double Expression::eval_node(int idx, std::span<const double> values) const
{
    const Node& n = nodes_[static_cast<size_t>(idx)];
    switch (n.kind) {
        case Kind::number: return n.number;
        case Kind::variable: return values[static_cast<size_t>(n.var)];
        case Kind::negate: return -eval_node(n.a, values);
        case Kind::add: return eval_node(n.a, values) + eval_node(n.b, values);
        case Kind::sub: return eval_node(n.a, values) - eval_node(n.b, values);
        case Kind::mul: return eval_node(n.a, values) * eval_node(n.b, values);
        case Kind::div: {
            const double den = eval_node(n.b, values);
            if (den == 0.0) throw EvalError("domain error: division by zero");
            return eval_node(n.a, values) / den;
        }
        case Kind::ipow: {
            double base = eval_node(n.a, values);
            double r = 1.0;
            int e = n.exponent;
            while (e > 0) {
                if (e & 1) r *= base;
                base *= base;
                e >>= 1;
            }
            return r;
        }
        case Kind::call: {
            const double v = eval_node(n.a, values);
            switch (n.fn) {
                case Fn::exp_fn: return std::exp(v);
                case Fn::log_fn:
                    if (v <= 0.0) throw EvalError("domain error: log of nonpositive argument");
                    return std::log(v);
                case Fn::cosh_fn: return std::cosh(v);
                case Fn::tanh_fn: return std::tanh(v);
                case Fn::abs_fn: return std::abs(v);
            }
        }
    }
    throw EvalError("corrupt expression node");
}

double Expression::eval(std::span<const double> values) const
{
    if (root_ < 0) throw EvalError("empty expression");
    return eval_node(root_, values);
}

double Expression::eval(const std::map<std::string, double>& bindings) const
{
    std::vector<double> values(vars_.size());
    for (size_t i = 0; i < vars_.size(); ++i) {
        auto it = bindings.find(vars_[i]);
        if (it == bindings.end()) throw EvalError("missing binding for variable '" + vars_[i] + "'");
        values[i] = it->second;
    }
    return eval(values);
}

namespace {
// precedence ranks used by the printer; larger binds tighter
constexpr int prec_add = 1, prec_mul = 2, prec_unary = 3, prec_pow = 4, prec_atom = 5;
}

void Expression::print_node(int idx, int parent_prec, std::string& out) const
{
    const Node& n = nodes_[static_cast<size_t>(idx)];
    auto wrap = [&](int my_prec, auto&& body) {
        const bool parens = my_prec < parent_prec;
        if (parens) out += '(';
        body();
        if (parens) out += ')';
    };

    switch (n.kind) {
        case Kind::number: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.number);
            out += buf;
            return;
        }
        case Kind::variable: out += vars_[static_cast<size_t>(n.var)]; return;
        case Kind::negate:
            wrap(prec_unary, [&] {
                out += '-';
                print_node(n.a, prec_unary, out);
            });
            return;
        case Kind::add:
            wrap(prec_add, [&] {
                print_node(n.a, prec_add, out);
                out += " + ";
                print_node(n.b, prec_add + 1, out);
            });
            return;
        case Kind::sub:
            wrap(prec_add, [&] {
                print_node(n.a, prec_add, out);
                out += " - ";
                print_node(n.b, prec_add + 1, out);
            });
            return;
        case Kind::mul:
            wrap(prec_mul, [&] {
                print_node(n.a, prec_mul, out);
                out += "*";
                print_node(n.b, prec_mul + 1, out);
            });
            return;
        case Kind::div:
            wrap(prec_mul, [&] {
                print_node(n.a, prec_mul, out);
                out += "/";
                print_node(n.b, prec_mul + 1, out);
            });
            return;
        case Kind::ipow:
            wrap(prec_pow, [&] {
                print_node(n.a, prec_atom, out);
                out += '^';
                out += std::to_string(n.exponent);
            });
            return;
        case Kind::call: {
            static const char* names[] = {"exp", "log", "cosh", "tanh", "abs"};
            out += names[static_cast<int>(n.fn)];
            out += '(';
            print_node(n.a, 0, out);
            out += ')';
            return;
        }
    }
}

std::string Expression::str() const
{
    if (root_ < 0) return "";
    std::string out;
    print_node(root_, 0, out);
    return out;
}

}  // namespace mattis
