#ifndef SANWEAVE_STATECHART_HPP
#define SANWEAVE_STATECHART_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sanweave/diagnostics.hpp"
#include "sanweave/expr.hpp"
#include "sanweave/rational.hpp"

namespace sanweave {

/// A state is `timed` (exponentially distributed sojourn) or `instant`
/// (left immediately; folded away before SAN emission).
enum class StateKind { Timed, Instant };

struct ChartState {
    std::string name;
    StateKind kind = StateKind::Timed;
    int line = 0, col = 0;
};

struct SendAction {
    std::string target;   // receiving object
    std::string message;

    friend bool operator==(const SendAction& a, const SendAction& b) {
        return a.target == b.target && a.message == b.message;
    }
};

/// One probabilistic alternative of an action body. An unbranched body is
/// represented as a single arm with probability 1.
struct BranchArm {
    Expr probability = Expr::constant(Rational(1));
    std::optional<std::string> alias;
    std::vector<SendAction> actions;
};

struct ActionBody {
    bool branched = false;
    std::vector<BranchArm> arms;  // exactly one arm when !branched

    bool empty() const {
        return !branched && (arms.empty() || arms[0].actions.empty());
    }
};

struct Trigger {
    enum class Kind { After, Message, Immediate };
    Kind kind = Kind::Immediate;
    Expr duration;             // After
    std::string duration_text; // original spelling, used in event ids
    std::string message;       // Message
};

struct ChartTransition {
    std::string source;
    std::string target;
    Trigger trigger;
    std::optional<std::string> alias;  // for unbranched After transitions
    ActionBody body;
    int line = 0, col = 0;
};

struct ParamDecl {
    std::string name;
    std::optional<Expr> default_value;
    int line = 0, col = 0;
};

struct ObjectChart {
    std::string name;
    std::vector<ChartState> states;
    std::vector<ChartTransition> transitions;
    std::string initial;
    int line = 0, col = 0;

    const ChartState* find_state(const std::string& n) const {
        for (const auto& s : states)
            if (s.name == n) return &s;
        return nullptr;
    }
};

struct StateChartModel {
    std::vector<ParamDecl> params;
    std::vector<ObjectChart> objects;

    const ObjectChart* find_object(const std::string& n) const {
        for (const auto& o : objects)
            if (o.name == n) return &o;
        return nullptr;
    }
};

namespace detail {

inline void check_branch_sums(const ObjectChart& object, const ChartTransition& t,
                              const std::map<std::string, Rational>& params, bool params_complete,
                              std::vector<Diagnostic>& out) {
    if (!t.body.branched) return;
    Rational sum(0);
    for (const auto& arm : t.body.arms) {
        Rational p;
        try {
            p = arm.probability.eval_rational(params);
        } catch (const ModelError&) {
            if (params_complete) throw;
            return;  // not decidable yet; resolve_params re-checks
        }
        if (p < Rational(0) || p > Rational(1))
            out.push_back({"branch probability " + arm.probability.str() + " = " + p.str() +
                               " outside (0,1] on transition " + t.source + " -> " + t.target,
                           t.line, t.col, object.name, "branch-probability"});
        sum += p;
    }
    if (sum != Rational(1))
        out.push_back({"branch probabilities on transition " + t.source + " -> " + t.target +
                           " sum to " + sum.str() + ", expected 1",
                       t.line, t.col, object.name, "branch-sum"});
}

} // namespace detail

/// Structural validation. Empty result iff the model is well-formed:
/// unique names, resolvable references, instant-state discipline,
/// deterministic message dispatch, branch sums (where already decidable).
inline std::vector<Diagnostic> validate(const StateChartModel& model) {
    std::vector<Diagnostic> out;

    std::map<std::string, Rational> defaults;
    std::set<std::string> param_names;
    for (const auto& p : model.params) {
        if (!param_names.insert(p.name).second)
            out.push_back({"duplicate parameter '" + p.name + "'", p.line, p.col, "",
                           "duplicate-name"});
        else if (p.default_value && !p.default_value->has_param() &&
                 !p.default_value->has_indicator())
            defaults.emplace(p.name, p.default_value->eval_rational({}));
    }

    std::set<std::string> object_names;
    for (const auto& object : model.objects) {
        if (!object_names.insert(object.name).second)
            out.push_back({"duplicate object '" + object.name + "'", object.line, object.col,
                           object.name, "duplicate-name"});

        std::set<std::string> state_names;
        int initial_count = 0;
        for (const auto& s : object.states) {
            if (!state_names.insert(s.name).second)
                out.push_back({"duplicate state '" + s.name + "'", s.line, s.col, object.name,
                               "duplicate-name"});
            if (s.name == object.initial) ++initial_count;
        }
        if (object.initial.empty())
            out.push_back({"object has no initial state", object.line, object.col, object.name,
                           "initial-state"});
        else if (!object.find_state(object.initial))
            out.push_back({"initial state '" + object.initial + "' is not declared", object.line,
                           object.col, object.name, "initial-state"});
        else if (object.find_state(object.initial)->kind == StateKind::Instant)
            out.push_back({"initial state '" + object.initial + "' must be a timed state",
                           object.line, object.col, object.name, "initial-state"});

        std::set<std::pair<std::string, std::string>> message_dispatch;
        std::set<std::pair<std::string, std::string>> timed_dispatch;
        std::map<std::string, int> immediate_exits;
        for (const auto& t : object.transitions) {
            const ChartState* src = object.find_state(t.source);
            const ChartState* dst = object.find_state(t.target);
            if (!src)
                out.push_back({"transition source '" + t.source + "' is not a declared state",
                               t.line, t.col, object.name, "unknown-state"});
            if (!dst)
                out.push_back({"transition target '" + t.target + "' is not a declared state",
                               t.line, t.col, object.name, "unknown-state"});
            if (!src || !dst) continue;

            switch (t.trigger.kind) {
                case Trigger::Kind::Immediate:
                    if (src->kind != StateKind::Instant)
                        out.push_back({"immediate trigger on transition leaving timed state '" +
                                           t.source + "'",
                                       t.line, t.col, object.name, "immediate-from-timed"});
                    break;
                case Trigger::Kind::Message:
                    if (src->kind == StateKind::Instant)
                        out.push_back({"instant state '" + t.source + "' must exit immediately",
                                       t.line, t.col, object.name, "instant-exit"});
                    if (!message_dispatch.insert({t.source, t.trigger.message}).second)
                        out.push_back({"state '" + t.source +
                                           "' has more than one transition on message '" +
                                           t.trigger.message + "'",
                                       t.line, t.col, object.name, "message-dispatch"});
                    break;
                case Trigger::Kind::After:
                    if (src->kind == StateKind::Instant)
                        out.push_back({"instant state '" + t.source + "' must exit immediately",
                                       t.line, t.col, object.name, "instant-exit"});
                    if (!timed_dispatch.insert({t.source, t.trigger.duration_text}).second)
                        out.push_back({"state '" + t.source +
                                           "' has duplicate after(" + t.trigger.duration_text +
                                           ") transitions",
                                       t.line, t.col, object.name, "timed-dispatch"});
                    break;
            }
            if (src->kind == StateKind::Instant) {
                ++immediate_exits[t.source];
                if (t.source == t.target)
                    out.push_back({"instant state '" + t.source + "' has a self-loop", t.line,
                                   t.col, object.name, "instant-self-loop"});
            }
            if (t.alias && t.body.branched)
                out.push_back({"alias on a branched transition; attach aliases to branches",
                               t.line, t.col, object.name, "alias-placement"});

            for (const auto& arm : t.body.arms) {
                for (const auto& send : arm.actions) {
                    const ObjectChart* receiver = model.find_object(send.target);
                    if (!receiver) {
                        out.push_back({"send target '" + send.target +
                                           "' is not a declared object",
                                       t.line, t.col, object.name, "unknown-object"});
                        continue;
                    }
                    bool handled = std::any_of(
                        receiver->transitions.begin(), receiver->transitions.end(),
                        [&](const ChartTransition& rt) {
                            return rt.trigger.kind == Trigger::Kind::Message &&
                                   rt.trigger.message == send.message;
                        });
                    if (!handled)
                        out.push_back({"object '" + send.target + "' has no transition on message '" +
                                           send.message + "'",
                                       t.line, t.col, object.name, "unhandled-message"});
                }
            }
            detail::check_branch_sums(object, t, defaults, false, out);
        }

        for (const auto& s : object.states) {
            if (s.kind != StateKind::Instant) continue;
            int exits = immediate_exits.count(s.name) ? immediate_exits[s.name] : 0;
            if (exits == 0)
                out.push_back({"instant state '" + s.name + "' has no immediate exit", s.line,
                               s.col, object.name, "instant-exit"});
            else if (exits > 1)
                out.push_back({"instant state '" + s.name + "' has multiple immediate exits",
                               s.line, s.col, object.name, "instant-exit"});
        }

        // no cycle among instant states connected by immediate transitions
        std::map<std::string, std::vector<std::string>> instant_edges;
        for (const auto& t : object.transitions) {
            const ChartState* src = object.find_state(t.source);
            const ChartState* dst = object.find_state(t.target);
            if (src && dst && src->kind == StateKind::Instant && dst->kind == StateKind::Instant)
                instant_edges[t.source].push_back(t.target);
        }
        std::set<std::string> done, on_path;
        std::vector<Diagnostic> cycle_diag;
        auto dfs = [&](auto&& self, const std::string& s) -> bool {
            if (on_path.count(s)) return true;
            if (done.count(s)) return false;
            on_path.insert(s);
            for (const auto& next : instant_edges[s])
                if (self(self, next)) return true;
            on_path.erase(s);
            done.insert(s);
            return false;
        };
        for (const auto& [s, _] : instant_edges) {
            if (dfs(dfs, s)) {
                out.push_back({"cycle among instant states reachable from '" + s + "'", 0, 0,
                               object.name, "instant-cycle"});
                break;
            }
        }
    }
    return out;
}

/// Binds every referenced parameter (explicit bindings override declared
/// defaults), grounds all duration/probability expressions to rationals and
/// re-checks value ranges and exact branch sums.
inline StateChartModel resolve_params(const StateChartModel& model,
                                      const std::map<std::string, Rational>& bindings) {
    std::map<std::string, Rational> values;
    for (const auto& p : model.params)
        if (p.default_value) values[p.name] = p.default_value->eval_rational(bindings);
    for (const auto& [name, value] : bindings) values[name] = value;

    StateChartModel out = model;
    out.params.clear();
    std::set<std::string> referenced;
    std::vector<Diagnostic> problems;

    for (auto& object : out.objects) {
        for (auto& t : object.transitions) {
            if (t.trigger.kind == Trigger::Kind::After) {
                t.trigger.duration.collect_params(referenced);
                Rational d = t.trigger.duration.eval_rational(values);
                if (!(d > Rational(0)))
                    problems.push_back({"nonpositive duration after(" + t.trigger.duration_text +
                                            ") = " + d.str() + " on transition " + t.source +
                                            " -> " + t.target,
                                        t.line, t.col, object.name, "nonpositive-duration"});
                t.trigger.duration = Expr::constant(d);
            }
            for (auto& arm : t.body.arms) {
                arm.probability.collect_params(referenced);
                Rational p = arm.probability.eval_rational(values);
                if (t.body.branched && (p < Rational(0) || p > Rational(1)))
                    problems.push_back({"probability " + arm.probability.str() + " = " + p.str() +
                                            " outside (0,1] on transition " + t.source + " -> " +
                                            t.target,
                                        t.line, t.col, object.name, "branch-probability"});
                arm.probability = Expr::constant(p);
            }
            detail::check_branch_sums(object, t, values, true, problems);
        }
    }
    if (!problems.empty()) throw ModelError(std::move(problems));

    // keep exactly the referenced parameters, ground, in name order
    for (const auto& name : referenced)
        out.params.push_back({name, Expr::constant(values.at(name)), 0, 0});
    return out;
}

} // namespace sanweave

#endif
