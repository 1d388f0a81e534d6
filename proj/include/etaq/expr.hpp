#pragma once

// Expression language for psi(x, z) and u(x). Grammar in docs/grammar.md.

#include "etaq/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace etaq {

/// Error in psi/u text, with the byte offset it refers to.
class ExprError : public ArgumentError {
public:
    ExprError(const std::string& what, std::size_t position)
        : ArgumentError(what + " at offset " + std::to_string(position)), position_(position) {}
    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class LexError : public ExprError {
public:
    using ExprError::ExprError;
};
class ParseError : public ExprError {
public:
    using ExprError::ExprError;
};
/// Domain fault during evaluation (log of <= 0, sqrt of < 0, division by 0, overflow).
class EvalError : public ExprError {
public:
    using ExprError::ExprError;
};

enum class TokenKind { number, ident, op, lparen, rparen };

struct Token {
    TokenKind kind;
    std::string lexeme;
    std::size_t position;
};

[[nodiscard]] inline std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto digit = [&](std::size_t j) { return j < src.size() && src[j] >= '0' && src[j] <= '9'; };
    while (i < src.size()) {
        const char c = src[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (digit(i) || (c == '.' && digit(i + 1))) {
            while (digit(i)) ++i;
            if (i < src.size() && src[i] == '.') {
                ++i;
                while (digit(i)) ++i;
            }
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
                if (!digit(j)) throw LexError("malformed number exponent", j);
                i = j;
                while (digit(i)) ++i;
            }
            if (i < src.size() && src[i] == '.') throw LexError("malformed number", i);
            out.push_back({TokenKind::number, std::string(src.substr(start, i - start)), start});
        } else if (c >= 'a' && c <= 'z') {
            while (i < src.size() && ((src[i] >= 'a' && src[i] <= 'z') || digit(i))) ++i;
            out.push_back({TokenKind::ident, std::string(src.substr(start, i - start)), start});
        } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            out.push_back({TokenKind::op, std::string(1, c), start});
            ++i;
        } else if (c == '(') {
            out.push_back({TokenKind::lparen, "(", start});
            ++i;
        } else if (c == ')') {
            out.push_back({TokenKind::rparen, ")", start});
            ++i;
        } else {
            throw LexError(std::string("illegal character '") + c + "'", start);
        }
    }
    return out;
}

enum class NodeKind { constant, var_x, var_z, neg, exp, log, sqrt, sin, cos, add, sub, mul, div, pow };

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    NodeKind kind = NodeKind::constant;
    double value = 0.0;  ///< constant
    int index = 0;       ///< var_x: zero-based coordinate
    NodePtr lhs, rhs;    ///< unary nodes use lhs only
    std::size_t position = 0;
};

namespace detail {

inline bool is_unary(NodeKind k) {
    return k == NodeKind::neg || k == NodeKind::exp || k == NodeKind::log || k == NodeKind::sqrt ||
           k == NodeKind::sin || k == NodeKind::cos;
}
inline bool is_binary(NodeKind k) {
    return k == NodeKind::add || k == NodeKind::sub || k == NodeKind::mul || k == NodeKind::div ||
           k == NodeKind::pow;
}

inline NodePtr make_const(double v, std::size_t pos = 0) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::constant;
    n->value = v;
    n->position = pos;
    return n;
}
inline NodePtr make_node(NodeKind k, NodePtr a, NodePtr b, std::size_t pos) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    n->position = pos;
    return n;
}

inline bool depends_on_variables(const ExprNode& e) {
    if (e.kind == NodeKind::var_x || e.kind == NodeKind::var_z) return true;
    if (e.lhs && depends_on_variables(*e.lhs)) return true;
    return e.rhs && depends_on_variables(*e.rhs);
}

inline bool depends_on_z(const ExprNode& e) {
    if (e.kind == NodeKind::var_z) return true;
    if (e.lhs && depends_on_z(*e.lhs)) return true;
    return e.rhs && depends_on_z(*e.rhs);
}

inline double checked(double v, const char* what, std::size_t pos) {
    if (!std::isfinite(v)) throw EvalError(std::string(what) + " is not finite", pos);
    return v;
}

inline double eval_node(const ExprNode& e, const double* x, int nx, double z) {
    switch (e.kind) {
    case NodeKind::constant: return e.value;
    case NodeKind::var_x:
        if (e.index >= nx) throw EvalError("x" + std::to_string(e.index + 1) + " not supplied", e.position);
        return x[e.index];
    case NodeKind::var_z: return z;
    default: break;
    }
    const double a = eval_node(*e.lhs, x, nx, z);
    switch (e.kind) {
    case NodeKind::neg: return -a;
    case NodeKind::exp: return checked(std::exp(a), "exp result", e.position);
    case NodeKind::log:
        if (!(a > 0.0)) throw EvalError("log of non-positive value", e.position);
        return std::log(a);
    case NodeKind::sqrt:
        if (a < 0.0) throw EvalError("sqrt of negative value", e.position);
        return std::sqrt(a);
    case NodeKind::sin: return std::sin(a);
    case NodeKind::cos: return std::cos(a);
    default: break;
    }
    const double b = eval_node(*e.rhs, x, nx, z);
    switch (e.kind) {
    case NodeKind::add: return checked(a + b, "sum", e.position);
    case NodeKind::sub: return checked(a - b, "difference", e.position);
    case NodeKind::mul: return checked(a * b, "product", e.position);
    case NodeKind::div:
        if (b == 0.0) throw EvalError("division by zero", e.position);
        return checked(a / b, "quotient", e.position);
    case NodeKind::pow: {
        if (a < 0.0 && b != std::floor(b)) throw EvalError("negative base with fractional exponent", e.position);
        if (a == 0.0 && b < 0.0) throw EvalError("zero base with negative exponent", e.position);
        return checked(std::pow(a, b), "power", e.position);
    }
    default: break;
    }
    throw EvalError("corrupt expression node", e.position);
}

class Parser {
public:
    Parser(const std::vector<Token>& toks, int n, std::size_t end) : toks_(toks), n_(n), end_(end) {}

    NodePtr parse_all() {
        if (toks_.empty()) throw ParseError("empty expression", 0);
        NodePtr e = expression();
        if (pos_ < toks_.size()) throw ParseError("unexpected '" + toks_[pos_].lexeme + "'", toks_[pos_].position);
        return e;
    }

private:
    const std::vector<Token>& toks_;
    int n_;
    std::size_t end_;
    std::size_t pos_ = 0;

    [[nodiscard]] bool at_op(char c) const {
        return pos_ < toks_.size() && toks_[pos_].kind == TokenKind::op && toks_[pos_].lexeme[0] == c;
    }
    [[nodiscard]] std::size_t here() const { return pos_ < toks_.size() ? toks_[pos_].position : end_; }

    NodePtr expression() {
        NodePtr lhs = term();
        while (at_op('+') || at_op('-')) {
            const NodeKind k = at_op('+') ? NodeKind::add : NodeKind::sub;
            const std::size_t p = toks_[pos_++].position;
            lhs = make_node(k, lhs, term(), p);
        }
        return lhs;
    }

    NodePtr term() {
        NodePtr lhs = unary();
        while (at_op('*') || at_op('/')) {
            const NodeKind k = at_op('*') ? NodeKind::mul : NodeKind::div;
            const std::size_t p = toks_[pos_++].position;
            lhs = make_node(k, lhs, unary(), p);
        }
        return lhs;
    }

    NodePtr unary() {
        if (at_op('-')) {
            const std::size_t p = toks_[pos_++].position;
            return make_node(NodeKind::neg, unary(), nullptr, p);
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (at_op('^')) {
            const std::size_t p = toks_[pos_++].position;
            const std::size_t exp_pos = here();
            NodePtr ex = exponent();
            if (depends_on_variables(*ex)) throw ParseError("exponent must be constant", exp_pos);
            return make_node(NodeKind::pow, base, ex, p);
        }
        return base;
    }

    // exponent = [ "-" ] exponent | primary [ "^" exponent ]
    NodePtr exponent() {
        if (at_op('-')) {
            const std::size_t p = toks_[pos_++].position;
            return make_node(NodeKind::neg, exponent(), nullptr, p);
        }
        return power();
    }

    NodePtr primary() {
        if (pos_ >= toks_.size()) throw ParseError("unexpected end of input", end_);
        const Token& t = toks_[pos_];
        switch (t.kind) {
        case TokenKind::number: {
            ++pos_;
            double v = 0.0;
            const char* first = t.lexeme.data();
            const char* last = first + t.lexeme.size();
            const auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
                throw ParseError("number out of range", t.position);
            }
            return make_const(v, t.position);
        }
        case TokenKind::lparen: {
            ++pos_;
            NodePtr e = expression();
            if (pos_ >= toks_.size() || toks_[pos_].kind != TokenKind::rparen) {
                throw ParseError("expected ')'", here());
            }
            ++pos_;
            return e;
        }
        case TokenKind::ident: return identifier();
        case TokenKind::rparen:
        case TokenKind::op: break;
        }
        throw ParseError("unexpected '" + t.lexeme + "'", t.position);
    }

    NodePtr identifier() {
        const Token& t = toks_[pos_++];
        const std::string& s = t.lexeme;
        static const std::pair<const char*, NodeKind> functions[] = {
            {"exp", NodeKind::exp}, {"log", NodeKind::log}, {"sqrt", NodeKind::sqrt},
            {"sin", NodeKind::sin}, {"cos", NodeKind::cos}};
        for (const auto& [name, kind] : functions) {
            if (s != name) continue;
            if (pos_ >= toks_.size() || toks_[pos_].kind != TokenKind::lparen) {
                throw ParseError("function '" + s + "' takes one parenthesized argument", here());
            }
            ++pos_;
            NodePtr arg = expression();
            if (pos_ >= toks_.size() || toks_[pos_].kind != TokenKind::rparen) {
                throw ParseError("function '" + s + "' takes exactly one argument", here());
            }
            ++pos_;
            return make_node(kind, arg, nullptr, t.position);
        }
        auto n = std::make_shared<ExprNode>();
        n->position = t.position;
        if (s == "z") {
            n->kind = NodeKind::var_z;
            return n;
        }
        if (s.size() >= 2 && s[0] == 'x' && s[1] >= '1' && s[1] <= '9' &&
            s.find_first_not_of("0123456789", 1) == std::string::npos && s.size() <= 4) {
            const int idx = std::stoi(s.substr(1));
            if (idx > n_) {
                throw ParseError("variable '" + s + "' out of range (n = " + std::to_string(n_) + ")", t.position);
            }
            n->kind = NodeKind::var_x;
            n->index = idx - 1;
            return n;
        }
        throw ParseError("unknown identifier '" + s + "'", t.position);
    }
};

inline int precedence(const ExprNode& e) {
    switch (e.kind) {
    case NodeKind::add:
    case NodeKind::sub: return 1;
    case NodeKind::mul:
    case NodeKind::div: return 2;
    case NodeKind::neg: return 3;
    case NodeKind::pow: return 4;
    case NodeKind::constant: return e.value < 0.0 || std::signbit(e.value) ? 3 : 5;
    default: return 5;
    }
}

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void print_node(const ExprNode& e, std::string& out) {
    auto child = [&out](const ExprNode& c, bool paren) {
        if (paren) out += '(';
        print_node(c, out);
        if (paren) out += ')';
    };
    const int p = precedence(e);
    switch (e.kind) {
    case NodeKind::constant: out += format_number(e.value); return;
    case NodeKind::var_x: out += "x" + std::to_string(e.index + 1); return;
    case NodeKind::var_z: out += "z"; return;
    case NodeKind::neg:
        out += '-';
        child(*e.lhs, precedence(*e.lhs) < 3);
        return;
    case NodeKind::exp: out += "exp"; child(*e.lhs, true); return;
    case NodeKind::log: out += "log"; child(*e.lhs, true); return;
    case NodeKind::sqrt: out += "sqrt"; child(*e.lhs, true); return;
    case NodeKind::sin: out += "sin"; child(*e.lhs, true); return;
    case NodeKind::cos: out += "cos"; child(*e.lhs, true); return;
    case NodeKind::pow:
        child(*e.lhs, precedence(*e.lhs) <= p);
        out += '^';
        child(*e.rhs, precedence(*e.rhs) < p);
        return;
    default: break;
    }
    static const char* sym[] = {" + ", " - ", "*", "/"};
    const int s = e.kind == NodeKind::add ? 0 : e.kind == NodeKind::sub ? 1 : e.kind == NodeKind::mul ? 2 : 3;
    child(*e.lhs, precedence(*e.lhs) < p);
    out += sym[s];
    child(*e.rhs, precedence(*e.rhs) <= p);
}

inline bool is_const(const NodePtr& e, double v) { return e->kind == NodeKind::constant && e->value == v; }

// Builders used by diff_z: fold when every operand is constant, drop 0 and 1 terms.
inline NodePtr fold(NodeKind k, NodePtr a, NodePtr b = nullptr) {
    if (a->kind == NodeKind::constant && (!b || b->kind == NodeKind::constant)) {
        const NodePtr trial = make_node(k, a, b, 0);
        try {
            const double v = eval_node(*trial, nullptr, 0, 0.0);
            return make_const(v);
        } catch (const EvalError&) {
            return trial;
        }
    }
    switch (k) {
    case NodeKind::add:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
    case NodeKind::sub:
        if (is_const(b, 0.0)) return a;
        if (is_const(a, 0.0)) return fold(NodeKind::neg, b);
        break;
    case NodeKind::mul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        break;
    case NodeKind::div:
        if (is_const(a, 0.0)) return make_const(0.0);
        if (is_const(b, 1.0)) return a;
        break;
    default: break;
    }
    return make_node(k, std::move(a), std::move(b), 0);
}

inline NodePtr derivative_z(const NodePtr& e) {
    if (!depends_on_z(*e)) return make_const(0.0);
    const NodePtr& a = e->lhs;
    const NodePtr& b = e->rhs;
    switch (e->kind) {
    case NodeKind::var_z: return make_const(1.0);
    case NodeKind::neg: return fold(NodeKind::neg, derivative_z(a));
    case NodeKind::exp: return fold(NodeKind::mul, e, derivative_z(a));
    case NodeKind::log: return fold(NodeKind::div, derivative_z(a), a);
    case NodeKind::sqrt: return fold(NodeKind::div, derivative_z(a), fold(NodeKind::mul, make_const(2.0), e));
    case NodeKind::sin: return fold(NodeKind::mul, make_node(NodeKind::cos, a, nullptr, e->position), derivative_z(a));
    case NodeKind::cos:
        return fold(NodeKind::neg,
                    fold(NodeKind::mul, make_node(NodeKind::sin, a, nullptr, e->position), derivative_z(a)));
    case NodeKind::add: return fold(NodeKind::add, derivative_z(a), derivative_z(b));
    case NodeKind::sub: return fold(NodeKind::sub, derivative_z(a), derivative_z(b));
    case NodeKind::mul:
        return fold(NodeKind::add, fold(NodeKind::mul, derivative_z(a), b), fold(NodeKind::mul, a, derivative_z(b)));
    case NodeKind::div:
        return fold(NodeKind::div,
                    fold(NodeKind::sub, fold(NodeKind::mul, derivative_z(a), b), fold(NodeKind::mul, a, derivative_z(b))),
                    fold(NodeKind::mul, b, b));
    case NodeKind::pow: {
        // Exponent is constant: d(a^c) = c a^(c-1) a'.
        const NodePtr c_minus_1 = fold(NodeKind::sub, b, make_const(1.0));
        NodePtr powered = is_const(c_minus_1, 1.0) ? a : fold(NodeKind::pow, a, c_minus_1);
        return fold(NodeKind::mul, fold(NodeKind::mul, b, powered), derivative_z(a));
    }
    default: break;
    }
    return make_const(0.0);
}

} // namespace detail

/// Immutable parsed expression in variables x1..xn and z.
class Expr {
public:
    Expr() : root_(detail::make_const(0.0)) {}
    Expr(NodePtr root, int n) : root_(std::move(root)), n_(n) {}

    [[nodiscard]] const ExprNode& root() const { return *root_; }
    [[nodiscard]] const NodePtr& root_ptr() const { return root_; }
    [[nodiscard]] int dimension() const noexcept { return n_; }
    [[nodiscard]] bool depends_on_z() const { return detail::depends_on_z(*root_); }

    [[nodiscard]] double eval(const Eigen::VectorXd& x, double z) const {
        return detail::eval_node(*root_, x.data(), static_cast<int>(x.size()), z);
    }
    [[nodiscard]] double eval(const std::vector<double>& x, double z) const {
        return detail::eval_node(*root_, x.data(), static_cast<int>(x.size()), z);
    }

    [[nodiscard]] std::string to_string() const {
        std::string s;
        detail::print_node(*root_, s);
        return s;
    }

private:
    NodePtr root_;
    int n_ = 0;
};

[[nodiscard]] inline Expr parse(const std::vector<Token>& tokens, int n, std::size_t source_length = 0) {
    std::size_t end = source_length;
    if (!tokens.empty()) end = std::max(end, tokens.back().position + tokens.back().lexeme.size());
    detail::Parser p(tokens, n, end);
    return Expr(p.parse_all(), n);
}

[[nodiscard]] inline Expr parse(std::string_view src, int n) { return parse(tokenize(src), n, src.size()); }

[[nodiscard]] inline double eval(const Expr& e, const Eigen::VectorXd& x, double z) { return e.eval(x, z); }

[[nodiscard]] inline Expr diff_z(const Expr& e) { return Expr(detail::derivative_z(e.root_ptr()), e.dimension()); }

[[nodiscard]] inline std::string to_string(const Expr& e) { return e.to_string(); }

} // namespace etaq
