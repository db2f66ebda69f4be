#ifndef SANWEAVE_EXPR_HPP
#define SANWEAVE_EXPR_HPP

#include <cctype>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sanweave/diagnostics.hpp"
#include "sanweave/rational.hpp"

namespace sanweave {

/// Arithmetic over rational constants, named parameters and state-indicator
/// atoms `st(Automaton == state)`. One representation serves both the
/// statechart DSL (no indicators) and SAN rate/probability expressions.
///
/// Stored as a postfix program; exprs are small immutable values.
class Expr {
public:
    enum class Op { Const, Param, Indicator, Add, Sub, Mul, Div };

    struct Node {
        Op op;
        Rational value;          // Const
        std::string name;        // Param name / Indicator automaton name
        std::string state;       // Indicator state name
        int automaton = -1;      // Indicator, filled by bind()
        int local_state = -1;
    };

    Expr() { nodes_.push_back({Op::Const, Rational(0), "", ""}); }

    static Expr constant(Rational v) {
        Expr e;
        e.nodes_ = {{Op::Const, v, "", ""}};
        return e;
    }
    static Expr param(std::string name) {
        Expr e;
        e.nodes_ = {{Op::Param, Rational(0), std::move(name), ""}};
        return e;
    }
    static Expr indicator(std::string automaton, std::string state) {
        Expr e;
        e.nodes_ = {{Op::Indicator, Rational(0), std::move(automaton), std::move(state)}};
        return e;
    }
    static Expr binary(Op op, const Expr& lhs, const Expr& rhs) {
        Expr e;
        e.nodes_ = lhs.nodes_;
        e.nodes_.insert(e.nodes_.end(), rhs.nodes_.begin(), rhs.nodes_.end());
        e.nodes_.push_back({op, Rational(0), "", ""});
        return e;
    }

    const std::vector<Node>& nodes() const { return nodes_; }

    bool is_constant() const {
        return nodes_.size() == 1 && nodes_[0].op == Op::Const;
    }
    Rational constant_value() const {
        if (!is_constant()) throw ModelError("expression is not constant", "expr");
        return nodes_[0].value;
    }
    bool has_indicator() const {
        for (const auto& n : nodes_)
            if (n.op == Op::Indicator) return true;
        return false;
    }
    bool has_param() const {
        for (const auto& n : nodes_)
            if (n.op == Op::Param) return true;
        return false;
    }
    void collect_params(std::set<std::string>& out) const {
        for (const auto& n : nodes_)
            if (n.op == Op::Param) out.insert(n.name);
    }

    /// Exact evaluation; requires all parameters present and no indicators.
    Rational eval_rational(const std::map<std::string, Rational>& params) const {
        std::vector<Rational> stack;
        for (const auto& n : nodes_) {
            switch (n.op) {
                case Op::Const: stack.push_back(n.value); break;
                case Op::Param: {
                    auto it = params.find(n.name);
                    if (it == params.end())
                        throw ModelError("unbound parameter '" + n.name + "'", "unbound-parameter");
                    stack.push_back(it->second);
                    break;
                }
                case Op::Indicator:
                    throw ModelError("state indicator not allowed here: st(" + n.name + " == " +
                                         n.state + ")",
                                     "expr-context");
                default: {
                    Rational b = stack.back(); stack.pop_back();
                    Rational a = stack.back(); stack.pop_back();
                    switch (n.op) {
                        case Op::Add: stack.push_back(a + b); break;
                        case Op::Sub: stack.push_back(a - b); break;
                        case Op::Mul: stack.push_back(a * b); break;
                        default:
                            if (b == Rational(0))
                                throw ModelError("division by zero", "expr-div-zero");
                            stack.push_back(a / b);
                    }
                }
            }
        }
        return stack.back();
    }

    /// Replace parameters by their exact values and fold constant subtrees.
    /// Throws on a parameter missing from `params`.
    Expr substitute_params(const std::map<std::string, Rational>& params) const {
        Expr out;
        out.nodes_.clear();
        for (const auto& n : nodes_) {
            if (n.op == Op::Param) {
                auto it = params.find(n.name);
                if (it == params.end())
                    throw ModelError("unbound parameter '" + n.name + "'", "unbound-parameter");
                out.nodes_.push_back({Op::Const, it->second, "", ""});
            } else {
                out.nodes_.push_back(n);
            }
        }
        return out.fold_constants();
    }

    /// Fold every operator whose operands are constants; exact arithmetic.
    Expr fold_constants() const {
        // stack of postfix fragments with a constness mark
        std::vector<std::pair<std::vector<Node>, bool>> stack;
        for (const auto& n : nodes_) {
            switch (n.op) {
                case Op::Const: stack.push_back({{n}, true}); break;
                case Op::Param:
                case Op::Indicator: stack.push_back({{n}, false}); break;
                default: {
                    auto rhs = std::move(stack.back()); stack.pop_back();
                    auto lhs = std::move(stack.back()); stack.pop_back();
                    if (lhs.second && rhs.second) {
                        Rational a = lhs.first[0].value, b = rhs.first[0].value;
                        Rational v;
                        switch (n.op) {
                            case Op::Add: v = a + b; break;
                            case Op::Sub: v = a - b; break;
                            case Op::Mul: v = a * b; break;
                            default:
                                if (b == Rational(0))
                                    throw ModelError("division by zero in constant expression",
                                                     "expr-div-zero");
                                v = a / b;
                        }
                        stack.push_back({{{Op::Const, v, "", ""}}, true});
                    } else {
                        auto frag = std::move(lhs.first);
                        frag.insert(frag.end(), rhs.first.begin(), rhs.first.end());
                        frag.push_back(n);
                        stack.push_back({std::move(frag), false});
                    }
                }
            }
        }
        Expr out;
        out.nodes_ = std::move(stack.back().first);
        return out;
    }

    bool has_division() const {
        for (const auto& n : nodes_)
            if (n.op == Op::Div) return true;
        return false;
    }

    /// Resolve indicator atoms to (automaton, local state) indices via
    /// `resolve(automaton_name, state_name) -> pair<int,int>`.
    template <typename Resolver>
    Expr bind_indicators(Resolver&& resolve) const {
        Expr out = *this;
        for (auto& n : out.nodes_) {
            if (n.op == Op::Indicator) {
                auto [ai, si] = resolve(n.name, n.state);
                n.automaton = ai;
                n.local_state = si;
            }
        }
        return out;
    }

    /// Evaluate against a global state vector. Indicators must have been
    /// bound (automaton/local_state indices set) and parameters substituted.
    double eval(std::span<const std::int32_t> global_state) const {
        double stack[kMaxDepth];
        int top = 0;
        for (const auto& n : nodes_) {
            switch (n.op) {
                case Op::Const: stack[top++] = n.value.to_double(); break;
                case Op::Indicator:
                    stack[top++] = (global_state[static_cast<std::size_t>(n.automaton)] ==
                                    n.local_state)
                                       ? 1.0
                                       : 0.0;
                    break;
                case Op::Param:
                    throw ModelError("unsubstituted parameter '" + n.name + "' in rate expression",
                                     "unbound-parameter");
                default: {
                    double b = stack[--top];
                    double a = stack[--top];
                    switch (n.op) {
                        case Op::Add: stack[top++] = a + b; break;
                        case Op::Sub: stack[top++] = a - b; break;
                        case Op::Mul: stack[top++] = a * b; break;
                        default: stack[top++] = a / b;
                    }
                }
            }
        }
        return stack[0];
    }

    /// Max operand-stack depth an expression may need in eval().
    static constexpr int kMaxDepth = 128;

    bool exceeds_eval_depth() const {
        int depth = 0, max_depth = 0;
        for (const auto& n : nodes_) {
            if (n.op == Op::Const || n.op == Op::Param || n.op == Op::Indicator)
                ++depth;
            else
                --depth;
            if (depth > max_depth) max_depth = depth;
        }
        return max_depth > kMaxDepth;
    }

    /// Canonical text form; parsing the result yields an equal expression.
    std::string str() const {
        struct Frag { std::string text; int prec; };
        std::vector<Frag> stack;
        for (const auto& n : nodes_) {
            switch (n.op) {
                case Op::Const:
                    if (n.value < Rational(0))
                        stack.push_back({"(0 - " + (Rational(0) - n.value).str() + ")", 9});
                    else
                        stack.push_back({n.value.str(), n.value.is_integer() ? 9 : 2});
                    break;
                case Op::Param: stack.push_back({n.name, 9}); break;
                case Op::Indicator:
                    stack.push_back({"st(" + n.name + " == " + n.state + ")", 9});
                    break;
                default: {
                    Frag rhs = stack.back(); stack.pop_back();
                    Frag lhs = stack.back(); stack.pop_back();
                    int prec = (n.op == Op::Add || n.op == Op::Sub) ? 1 : 2;
                    const char* sym = n.op == Op::Add ? " + "
                                      : n.op == Op::Sub ? " - "
                                      : n.op == Op::Mul ? " * " : " / ";
                    std::string l = lhs.prec < prec ? "(" + lhs.text + ")" : lhs.text;
                    bool rparen = rhs.prec < prec ||
                                  (rhs.prec == prec && (n.op == Op::Sub || n.op == Op::Div));
                    std::string r = rparen ? "(" + rhs.text + ")" : rhs.text;
                    stack.push_back({l + sym + r, prec});
                }
            }
        }
        return stack.back().text;
    }

    /// Parse the canonical text form. `allow_indicators` is off for
    /// statechart value expressions.
    static Expr parse(const std::string& text, bool allow_indicators = true) {
        Parser p{text, 0, allow_indicators};
        Expr e = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size())
            throw ModelError("unexpected trailing input in expression at offset " +
                                 std::to_string(p.pos) + ": " + text,
                             "expr-syntax");
        if (e.exceeds_eval_depth())
            throw ModelError("expression too deeply nested", "expr-syntax");
        return e;
    }

private:
    struct Parser {
        const std::string& s;
        std::size_t pos;
        bool allow_indicators;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) { ++pos; return true; }
            return false;
        }
        [[noreturn]] void fail(const std::string& what) {
            throw ModelError(what + " at offset " + std::to_string(pos) + " in expression: " + s,
                             "expr-syntax");
        }

        Expr parse_expr() {
            Expr lhs = parse_term();
            for (;;) {
                skip_ws();
                if (eat('+')) lhs = binary(Op::Add, lhs, parse_term());
                else if (eat('-')) lhs = binary(Op::Sub, lhs, parse_term());
                else return lhs;
            }
        }
        Expr parse_term() {
            Expr lhs = parse_factor();
            for (;;) {
                skip_ws();
                if (eat('*')) lhs = binary(Op::Mul, lhs, parse_factor());
                else if (eat('/')) lhs = binary(Op::Div, lhs, parse_factor());
                else return lhs;
            }
        }
        Expr parse_factor() {
            skip_ws();
            if (pos >= s.size()) fail("expected expression");
            if (eat('(')) {
                Expr e = parse_expr();
                if (!eat(')')) fail("expected ')'");
                return e;
            }
            char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c))) return constant(parse_number());
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::string id = parse_ident();
                if (id == "st") {
                    if (!allow_indicators) fail("state indicators are not allowed here");
                    if (!eat('(')) fail("expected '(' after st");
                    skip_ws();
                    std::string automaton = parse_name();
                    skip_ws();
                    if (pos + 1 >= s.size() || s[pos] != '=' || s[pos + 1] != '=')
                        fail("expected '==' in state indicator");
                    pos += 2;
                    skip_ws();
                    std::string state = parse_name();
                    if (!eat(')')) fail("expected ')' after state indicator");
                    return indicator(automaton, state);
                }
                return param(id);
            }
            fail("unexpected character '" + std::string(1, c) + "'");
        }
        Rational parse_number() {
            std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.'))
                ++pos;
            return Rational::from_decimal(s.substr(start, pos - start));
        }
        std::string parse_ident() {
            std::size_t start = pos;
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                                      s[pos] == '_'))
                ++pos;
            return s.substr(start, pos - start);
        }
        // local state names may be plain digits ("0", "1")
        std::string parse_name() {
            skip_ws();
            if (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                                   s[pos] == '_'))
                return parse_ident();
            fail("expected a name");
        }
    };

    std::vector<Node> nodes_;
};

} // namespace sanweave

#endif
