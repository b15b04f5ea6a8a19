#pragma once

/// Lagrangian expressions L(t, u1, ..., u{r+1}): recursive-descent parser,
/// evaluation, symbolic partial differentiation and printing.
///
/// Grammar (EBNF):
///   expr    := term (('+'|'-') term)*
///   term    := unary (('*'|'/') unary)*
///   unary   := '-' unary | power
///   power   := atom ('^' unary)?          (right-associative)
///   atom    := number | 't' | 'u' digits | name '(' expr ')' | '(' expr ')'
///   name    := 'exp' | 'ln' | 'sin' | 'cos' | 'sqrt'
///
/// Argument numbering: argument 1 is t, argument i+1 is u_i.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qvar/errors.hpp"

namespace qvar {

enum class BinOp { Add, Sub, Mul, Div, Pow };
enum class UnOp { Neg, Exp, Ln, Sin, Cos, Sqrt };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { Number, Time, Arg, Unary, Binary };
    Kind kind;
    double number = 0.0;  // Kind::Number
    int u_index = 0;      // Kind::Arg: the i of u_i, 1-based
    UnOp un{};            // Kind::Unary
    BinOp bin{};          // Kind::Binary
    ExprPtr a, b;
};

namespace detail {

inline ExprPtr num(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Number;
    n->number = v;
    return n;
}

inline ExprPtr time_var() {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Time;
    return n;
}

inline ExprPtr u_var(int i) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Arg;
    n->u_index = i;
    return n;
}

inline bool is_const(const ExprPtr& e, double v) {
    return e->kind == ExprNode::Kind::Number && e->number == v;
}

inline ExprPtr unary(UnOp op, ExprPtr a);

inline ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b) {
    using K = ExprNode::Kind;
    if (a->kind == K::Number && b->kind == K::Number) {
        switch (op) {
            case BinOp::Add: return num(a->number + b->number);
            case BinOp::Sub: return num(a->number - b->number);
            case BinOp::Mul: return num(a->number * b->number);
            case BinOp::Div:
                if (b->number != 0.0) return num(a->number / b->number);
                break;
            case BinOp::Pow: {
                double v = std::pow(a->number, b->number);
                if (std::isfinite(v)) return num(v);
                break;
            }
        }
    }
    switch (op) {
        case BinOp::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case BinOp::Sub:
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return unary(UnOp::Neg, b);
            break;
        case BinOp::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return num(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case BinOp::Div:
            if (is_const(a, 0.0)) return num(0.0);
            if (is_const(b, 1.0)) return a;
            break;
        case BinOp::Pow:
            if (is_const(b, 1.0)) return a;
            if (is_const(b, 0.0)) return num(1.0);
            break;
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Binary;
    n->bin = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline ExprPtr unary(UnOp op, ExprPtr a) {
    if (a->kind == ExprNode::Kind::Number) {
        double v = a->number;
        switch (op) {
            case UnOp::Neg: return num(-v);
            case UnOp::Exp: return num(std::exp(v));
            case UnOp::Ln:
                if (v > 0) return num(std::log(v));
                break;
            case UnOp::Sin: return num(std::sin(v));
            case UnOp::Cos: return num(std::cos(v));
            case UnOp::Sqrt:
                if (v >= 0) return num(std::sqrt(v));
                break;
        }
    }
    if (op == UnOp::Neg && a->kind == ExprNode::Kind::Unary &&
        a->un == UnOp::Neg)
        return a->a;
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Unary;
    n->un = op;
    n->a = std::move(a);
    return n;
}

} // namespace detail

/// Parsed Lagrangian of order r: variables t, u1..u{r+1} admissible.
class ExprAst {
public:
    ExprAst(ExprPtr root, int order) : root_(std::move(root)), order_(order) {}

    const ExprPtr& root() const { return root_; }
    int order() const { return order_; }

    /// Number of arguments: t plus u1..u{r+1}.
    int n_args() const { return order_ + 2; }

private:
    ExprPtr root_;
    int order_;
};

namespace detail {

class Parser {
public:
    Parser(const std::string& text, int order) : text_(text), order_(order) {}

    ExprPtr parse() {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("empty expression", pos_);
        ExprPtr e = expr();
        skip_ws();
        if (pos_ < text_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    ExprPtr expr() {
        ExprPtr e = term();
        for (;;) {
            skip_ws();
            if (accept('+'))
                e = binary(BinOp::Add, e, term());
            else if (accept('-'))
                e = binary(BinOp::Sub, e, term());
            else
                return e;
        }
    }

    ExprPtr term() {
        ExprPtr e = unary_expr();
        for (;;) {
            skip_ws();
            if (accept('*'))
                e = binary(BinOp::Mul, e, unary_expr());
            else if (accept('/'))
                e = binary(BinOp::Div, e, unary_expr());
            else
                return e;
        }
    }

    ExprPtr unary_expr() {
        skip_ws();
        if (accept('-')) return unary(UnOp::Neg, unary_expr());
        return power();
    }

    ExprPtr power() {
        ExprPtr base = atom();
        skip_ws();
        if (accept('^')) return binary(BinOp::Pow, base, unary_expr());
        return base;
    }

    ExprPtr atom() {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of expression", pos_);
        char c = text_[pos_];
        if (accept('(')) {
            ExprPtr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)))
            return name();
        throw ParseError(std::string("unexpected character '") + c + "'",
                         pos_);
    }

    ExprPtr number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < text_.size() &&
                (text_[pos_] == '+' || text_[pos_] == '-'))
                ++pos_;
            if (pos_ < text_.size() &&
                std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() &&
                       std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;
            }
        }
        try {
            std::size_t used = 0;
            double v = std::stod(text_.substr(start, pos_ - start), &used);
            if (used != pos_ - start)
                throw ParseError("malformed number", start);
            return num(v);
        } catch (const std::exception&) {
            throw ParseError("malformed number", start);
        }
    }

    ExprPtr name() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               std::isalnum(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        std::string id = text_.substr(start, pos_ - start);
        if (id == "t") return time_var();
        if (id.size() >= 2 && id[0] == 'u') {
            for (std::size_t i = 1; i < id.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(id[i])))
                    throw ParseError("unknown identifier '" + id + "'", start);
            int idx = std::stoi(id.substr(1));
            if (idx < 1 || idx > order_ + 1)
                throw ArityError("variable " + id + " exceeds u" +
                                 std::to_string(order_ + 1) +
                                 " admissible for order " +
                                 std::to_string(order_));
            return u_var(idx);
        }
        UnOp fn;
        if (id == "exp") fn = UnOp::Exp;
        else if (id == "ln") fn = UnOp::Ln;
        else if (id == "sin") fn = UnOp::Sin;
        else if (id == "cos") fn = UnOp::Cos;
        else if (id == "sqrt") fn = UnOp::Sqrt;
        else throw ParseError("unknown identifier '" + id + "'", start);
        skip_ws();
        expect('(');
        ExprPtr arg = expr();
        expect(')');
        return unary(fn, arg);
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    const std::string& text_;
    int order_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline ExprAst parse_expression(const std::string& text, int order) {
    if (order < 1) throw ArityError("expression order must be >= 1");
    return ExprAst(detail::Parser(text, order).parse(), order);
}

namespace detail {

inline double eval_node(const ExprNode& n, std::span<const double> args) {
    using K = ExprNode::Kind;
    switch (n.kind) {
        case K::Number: return n.number;
        case K::Time: return args[0];
        case K::Arg: return args[std::size_t(n.u_index)];
        case K::Unary: {
            double a = eval_node(*n.a, args);
            switch (n.un) {
                case UnOp::Neg: return -a;
                case UnOp::Exp: return std::exp(a);
                case UnOp::Ln:
                    if (!(a > 0.0))
                        throw EvalDomain("ln of nonpositive value");
                    return std::log(a);
                case UnOp::Sin: return std::sin(a);
                case UnOp::Cos: return std::cos(a);
                case UnOp::Sqrt:
                    if (a < 0.0) throw EvalDomain("sqrt of negative value");
                    return std::sqrt(a);
            }
            break;
        }
        case K::Binary: {
            double a = eval_node(*n.a, args);
            double b = eval_node(*n.b, args);
            switch (n.bin) {
                case BinOp::Add: return a + b;
                case BinOp::Sub: return a - b;
                case BinOp::Mul: return a * b;
                case BinOp::Div:
                    if (b == 0.0) throw EvalDomain("division by zero");
                    return a / b;
                case BinOp::Pow: {
                    double v = std::pow(a, b);
                    if (std::isnan(v))
                        throw EvalDomain("pow outside real domain");
                    return v;
                }
            }
            break;
        }
    }
    throw Error("corrupt expression node");
}

} // namespace detail

/// Evaluate at args = (t, u1, ..., u{r+1}); args.size() must be r+2.
inline double eval_expression(const ExprAst& ast,
                              std::span<const double> args) {
    if (args.size() != std::size_t(ast.n_args()))
        throw Error("argument vector has length " +
                    std::to_string(args.size()) + ", expected " +
                    std::to_string(ast.n_args()));
    return detail::eval_node(*ast.root(), args);
}

namespace detail {

/// d/d(arg) where arg_index is 1-based over (t, u1, ..., u{r+1}).
inline ExprPtr diff_node(const ExprPtr& n, int arg_index) {
    using K = ExprNode::Kind;
    switch (n->kind) {
        case K::Number: return num(0.0);
        case K::Time: return num(arg_index == 1 ? 1.0 : 0.0);
        case K::Arg: return num(n->u_index + 1 == arg_index ? 1.0 : 0.0);
        case K::Unary: {
            ExprPtr da = diff_node(n->a, arg_index);
            switch (n->un) {
                case UnOp::Neg: return unary(UnOp::Neg, da);
                case UnOp::Exp:
                    return binary(BinOp::Mul, unary(UnOp::Exp, n->a), da);
                case UnOp::Ln: return binary(BinOp::Div, da, n->a);
                case UnOp::Sin:
                    return binary(BinOp::Mul, unary(UnOp::Cos, n->a), da);
                case UnOp::Cos:
                    return unary(UnOp::Neg, binary(BinOp::Mul,
                                                   unary(UnOp::Sin, n->a), da));
                case UnOp::Sqrt:
                    return binary(BinOp::Div, da,
                                  binary(BinOp::Mul, num(2.0),
                                         unary(UnOp::Sqrt, n->a)));
            }
            break;
        }
        case K::Binary: {
            switch (n->bin) {
                case BinOp::Add:
                    return binary(BinOp::Add, diff_node(n->a, arg_index),
                                  diff_node(n->b, arg_index));
                case BinOp::Sub:
                    return binary(BinOp::Sub, diff_node(n->a, arg_index),
                                  diff_node(n->b, arg_index));
                case BinOp::Mul:
                    return binary(
                        BinOp::Add,
                        binary(BinOp::Mul, diff_node(n->a, arg_index), n->b),
                        binary(BinOp::Mul, n->a, diff_node(n->b, arg_index)));
                case BinOp::Div:
                    return binary(
                        BinOp::Div,
                        binary(BinOp::Sub,
                               binary(BinOp::Mul, diff_node(n->a, arg_index),
                                      n->b),
                               binary(BinOp::Mul, n->a,
                                      diff_node(n->b, arg_index))),
                        binary(BinOp::Pow, n->b, num(2.0)));
                case BinOp::Pow: {
                    if (n->b->kind == K::Number) {
                        // c * f^(c-1) * f'
                        double c = n->b->number;
                        return binary(
                            BinOp::Mul,
                            binary(BinOp::Mul, num(c),
                                   binary(BinOp::Pow, n->a, num(c - 1.0))),
                            diff_node(n->a, arg_index));
                    }
                    // f^g * (g' ln f + g f'/f)
                    ExprPtr part = binary(
                        BinOp::Add,
                        binary(BinOp::Mul, diff_node(n->b, arg_index),
                               unary(UnOp::Ln, n->a)),
                        binary(BinOp::Div,
                               binary(BinOp::Mul, n->b,
                                      diff_node(n->a, arg_index)),
                               n->a));
                    return binary(BinOp::Mul,
                                  binary(BinOp::Pow, n->a, n->b), part);
                }
            }
            break;
        }
    }
    throw Error("corrupt expression node");
}

inline void print_node(const ExprPtr& n, std::string& out) {
    using K = ExprNode::Kind;
    switch (n->kind) {
        case K::Number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n->number);
            if (n->number < 0) {
                out += '(';
                out += buf;
                out += ')';
            } else {
                out += buf;
            }
            return;
        }
        case K::Time: out += 't'; return;
        case K::Arg: out += 'u'; out += std::to_string(n->u_index); return;
        case K::Unary: {
            switch (n->un) {
                case UnOp::Neg: out += "(-"; break;
                case UnOp::Exp: out += "exp("; break;
                case UnOp::Ln: out += "ln("; break;
                case UnOp::Sin: out += "sin("; break;
                case UnOp::Cos: out += "cos("; break;
                case UnOp::Sqrt: out += "sqrt("; break;
            }
            print_node(n->a, out);
            out += ')';
            return;
        }
        case K::Binary: {
            out += '(';
            print_node(n->a, out);
            switch (n->bin) {
                case BinOp::Add: out += '+'; break;
                case BinOp::Sub: out += '-'; break;
                case BinOp::Mul: out += '*'; break;
                case BinOp::Div: out += '/'; break;
                case BinOp::Pow: out += '^'; break;
            }
            print_node(n->b, out);
            out += ')';
            return;
        }
    }
}

} // namespace detail

/// Symbolic partial derivative with respect to argument arg_index
/// (1 = t, i+1 = u_i).  Lightly simplified.
inline ExprAst differentiate(const ExprAst& ast, int arg_index) {
    if (arg_index < 1 || arg_index > ast.n_args())
        throw Error("differentiation argument index " +
                    std::to_string(arg_index) + " out of range 1.." +
                    std::to_string(ast.n_args()));
    return ExprAst(detail::diff_node(ast.root(), arg_index), ast.order());
}

/// Fully parenthesized text form; parses back to an equivalent AST.
inline std::string to_string(const ExprAst& ast) {
    std::string out;
    detail::print_node(ast.root(), out);
    return out;
}

} // namespace qvar
