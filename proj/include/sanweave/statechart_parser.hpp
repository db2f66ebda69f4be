#ifndef SANWEAVE_STATECHART_PARSER_HPP
#define SANWEAVE_STATECHART_PARSER_HPP

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "sanweave/statechart.hpp"

namespace sanweave {

struct ParseResult {
    std::optional<StateChartModel> model;
    std::vector<Diagnostic> diagnostics;  // syntax first, then validation

    bool ok() const { return model.has_value() && diagnostics.empty(); }
};

namespace detail {

struct Token {
    enum class Kind { Ident, Number, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    int line = 1, col = 1;
};

class ChartLexer {
public:
    explicit ChartLexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_ws_and_comments();
        Token t;
        t.line = line_;
        t.col = col_;
        if (pos_ >= src_.size()) return t;
        char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            t.kind = Token::Kind::Ident;
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                          src_[pos_] == '_'))
                t.text += advance();
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            t.kind = Token::Kind::Number;
            while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                                          src_[pos_] == '.'))
                t.text += advance();
            return t;
        }
        t.kind = Token::Kind::Punct;
        if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
            t.text = "->";
            advance();
            advance();
            return t;
        }
        t.text = std::string(1, advance());
        return t;
    }

private:
    char advance() {
        char c = src_[pos_++];
        if (c == '\n') { ++line_; col_ = 1; } else { ++col_; }
        return c;
    }
    void skip_ws_and_comments() {
        for (;;) {
            while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
                advance();
            if (pos_ < src_.size() && src_[pos_] == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                continue;
            }
            return;
        }
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

class ChartParser {
public:
    explicit ChartParser(const std::string& src) : lexer_(src) { shift(); }

    StateChartModel parse_model() {
        StateChartModel model;
        while (cur_.kind != Token::Kind::End) {
            if (is_kw("param")) model.params.push_back(parse_param());
            else if (is_kw("object")) model.objects.push_back(parse_object());
            else fail("expected 'param' or 'object'");
        }
        return model;
    }

private:
    static bool is_keyword(const std::string& s) {
        static const char* kws[] = {"param", "object", "state", "initial", "instant",
                                    "transition", "on", "after", "message", "immediate",
                                    "do", "branch", "prob", "send", "alias"};
        for (const char* k : kws)
            if (s == k) return true;
        return false;
    }

    void shift() { cur_ = lexer_.next(); }
    bool is_kw(const char* kw) const {
        return cur_.kind == Token::Kind::Ident && cur_.text == kw;
    }
    bool is_punct(const char* p) const {
        return cur_.kind == Token::Kind::Punct && cur_.text == p;
    }
    void expect_kw(const char* kw) {
        if (!is_kw(kw)) fail(std::string("expected '") + kw + "'");
        shift();
    }
    void expect_punct(const char* p) {
        if (!is_punct(p)) fail(std::string("expected '") + p + "'");
        shift();
    }
    std::string expect_ident(const char* what) {
        if (cur_.kind != Token::Kind::Ident) fail(std::string("expected ") + what);
        if (is_keyword(cur_.text))
            fail("keyword '" + cur_.text + "' cannot be used as " + what);
        std::string s = cur_.text;
        shift();
        return s;
    }
    [[noreturn]] void fail(const std::string& what) {
        std::string got = cur_.kind == Token::Kind::End ? "end of input"
                                                        : "'" + cur_.text + "'";
        throw ModelError(Diagnostic{what + ", got " + got, cur_.line, cur_.col, "", "syntax"});
    }

    ParamDecl parse_param() {
        ParamDecl p;
        p.line = cur_.line;
        p.col = cur_.col;
        shift();  // param
        p.name = expect_ident("a parameter name");
        if (is_punct("=")) {
            shift();
            p.default_value = parse_expr();
        }
        expect_punct(";");
        return p;
    }

    ObjectChart parse_object() {
        ObjectChart object;
        object.line = cur_.line;
        object.col = cur_.col;
        shift();  // object
        object.name = expect_ident("an object name");
        expect_punct("{");
        while (!is_punct("}")) {
            if (is_kw("state")) parse_state(object);
            else if (is_kw("transition")) object.transitions.push_back(parse_transition());
            else fail("expected 'state', 'transition' or '}'");
        }
        shift();  // }
        return object;
    }

    void parse_state(ObjectChart& object) {
        ChartState s;
        s.line = cur_.line;
        s.col = cur_.col;
        shift();  // state
        s.name = expect_ident("a state name");
        bool initial = false;
        for (;;) {
            if (is_kw("initial")) { initial = true; shift(); }
            else if (is_kw("instant")) { s.kind = StateKind::Instant; shift(); }
            else break;
        }
        expect_punct(";");
        if (initial) {
            if (!object.initial.empty())
                throw ModelError(Diagnostic{"object '" + object.name +
                                                "' declares more than one initial state",
                                            s.line, s.col, object.name, "initial-state"});
            object.initial = s.name;
        }
        object.states.push_back(std::move(s));
    }

    ChartTransition parse_transition() {
        ChartTransition t;
        t.line = cur_.line;
        t.col = cur_.col;
        shift();  // transition
        t.source = expect_ident("a source state");
        expect_punct("->");
        t.target = expect_ident("a target state");
        expect_kw("on");
        if (is_kw("after")) {
            shift();
            expect_punct("(");
            t.trigger.kind = Trigger::Kind::After;
            t.trigger.duration = parse_expr();
            t.trigger.duration_text = t.trigger.duration.str();
            expect_punct(")");
        } else if (is_kw("message")) {
            shift();
            t.trigger.kind = Trigger::Kind::Message;
            t.trigger.message = expect_ident("a message name");
        } else if (is_kw("immediate")) {
            shift();
            t.trigger.kind = Trigger::Kind::Immediate;
        } else {
            fail("expected 'after', 'message' or 'immediate'");
        }
        if (is_kw("alias")) {
            shift();
            t.alias = expect_ident("an alias name");
        }
        bool was_branch = false;
        if (is_kw("do")) {
            shift();
            t.body.branched = false;
            t.body.arms.push_back({Expr::constant(Rational(1)), std::nullopt, parse_actions()});
        } else if (is_kw("branch")) {
            shift();
            was_branch = true;
            t.body.branched = true;
            expect_punct("{");
            while (is_kw("prob")) {
                BranchArm arm;
                shift();  // prob
                arm.probability = parse_expr();
                if (is_kw("alias")) {
                    shift();
                    arm.alias = expect_ident("an alias name");
                }
                expect_punct(":");
                arm.actions = parse_actions();
                expect_punct(";");
                t.body.arms.push_back(std::move(arm));
            }
            if (t.body.arms.empty()) fail("expected at least one 'prob' branch");
            expect_punct("}");
        } else {
            t.body.branched = false;
            t.body.arms.push_back({Expr::constant(Rational(1)), std::nullopt, {}});
        }
        // tolerate a missing ';' right after a branch body's closing brace
        if (is_punct(";")) shift();
        else if (!was_branch) expect_punct(";");
        return t;
    }

    std::vector<SendAction> parse_actions() {
        std::vector<SendAction> actions;
        for (;;) {
            expect_kw("send");
            SendAction a;
            a.target = expect_ident("a target object");
            expect_punct(".");
            a.message = expect_ident("a message name");
            expect_punct("(");
            expect_punct(")");
            actions.push_back(std::move(a));
            if (is_punct(",")) { shift(); continue; }
            return actions;
        }
    }

    // expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)*
    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (is_punct("+")) { shift(); lhs = Expr::binary(Expr::Op::Add, lhs, parse_term()); }
            else if (is_punct("-")) { shift(); lhs = Expr::binary(Expr::Op::Sub, lhs, parse_term()); }
            else return lhs;
        }
    }
    Expr parse_term() {
        Expr lhs = parse_factor();
        for (;;) {
            if (is_punct("*")) { shift(); lhs = Expr::binary(Expr::Op::Mul, lhs, parse_factor()); }
            else if (is_punct("/")) { shift(); lhs = Expr::binary(Expr::Op::Div, lhs, parse_factor()); }
            else return lhs;
        }
    }
    Expr parse_factor() {
        if (is_punct("(")) {
            shift();
            Expr e = parse_expr();
            expect_punct(")");
            return e;
        }
        if (cur_.kind == Token::Kind::Number) {
            Rational v;
            try {
                v = Rational::from_decimal(cur_.text);
            } catch (const std::exception& ex) {
                fail(ex.what());
            }
            shift();
            return Expr::constant(v);
        }
        if (cur_.kind == Token::Kind::Ident && !is_keyword(cur_.text)) {
            std::string name = cur_.text;
            shift();
            return Expr::param(name);
        }
        fail("expected a number, parameter name or '('");
    }

    ChartLexer lexer_;
    Token cur_;
};

} // namespace detail

/// Parses the `.scx` statechart DSL. Syntax problems yield a diagnostic and
/// no model; a syntactically valid model is additionally run through
/// validate() and returned together with any semantic diagnostics.
inline ParseResult parse_statechart(const std::string& source) {
    ParseResult result;
    try {
        detail::ChartParser parser(source);
        result.model = parser.parse_model();
    } catch (const ModelError& e) {
        result.diagnostics = e.diagnostics();
        return result;
    }
    result.diagnostics = validate(*result.model);
    return result;
}

/// Canonical source form; parse(pretty_print(parse(s))) is a fixed point.
inline std::string pretty_print(const StateChartModel& model) {
    std::string out;
    for (const auto& p : model.params) {
        out += "param " + p.name;
        if (p.default_value) out += " = " + p.default_value->str();
        out += ";\n";
    }
    for (const auto& object : model.objects) {
        if (!out.empty()) out += "\n";
        out += "object " + object.name + " {\n";
        for (const auto& s : object.states) {
            out += "    state " + s.name;
            if (s.name == object.initial) out += " initial";
            if (s.kind == StateKind::Instant) out += " instant";
            out += ";\n";
        }
        for (const auto& t : object.transitions) {
            out += "    transition " + t.source + " -> " + t.target + " on ";
            switch (t.trigger.kind) {
                case Trigger::Kind::After:
                    out += "after(" + t.trigger.duration.str() + ")";
                    break;
                case Trigger::Kind::Message: out += "message " + t.trigger.message; break;
                case Trigger::Kind::Immediate: out += "immediate"; break;
            }
            if (t.alias) out += " alias " + *t.alias;
            auto actions_text = [](const std::vector<SendAction>& actions) {
                std::string s;
                for (const auto& a : actions) {
                    if (!s.empty()) s += ", ";
                    s += "send " + a.target + "." + a.message + "()";
                }
                return s;
            };
            if (t.body.branched) {
                out += " branch {\n";
                for (const auto& arm : t.body.arms) {
                    out += "        prob " + arm.probability.str();
                    if (arm.alias) out += " alias " + *arm.alias;
                    out += ": " + actions_text(arm.actions) + ";\n";
                }
                out += "    };\n";
            } else if (!t.body.arms.empty() && !t.body.arms[0].actions.empty()) {
                out += " do " + actions_text(t.body.arms[0].actions) + ";\n";
            } else {
                out += ";\n";
            }
        }
        out += "}\n";
    }
    return out;
}

} // namespace sanweave

#endif
