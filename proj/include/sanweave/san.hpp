#ifndef SANWEAVE_SAN_HPP
#define SANWEAVE_SAN_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sanweave/diagnostics.hpp"
#include "sanweave/expr.hpp"
#include "sanweave/rational.hpp"

namespace sanweave {

/// One local state index per automaton, in SanModel automaton order.
using GlobalState = std::vector<std::int32_t>;

constexpr double kProbabilitySumTolerance = 1e-12;

struct Automaton {
    std::string name;
    std::vector<std::string> states;
    std::int32_t initial = 0;

    std::int32_t state_index(const std::string& state) const {
        for (std::size_t i = 0; i < states.size(); ++i)
            if (states[i] == state) return static_cast<std::int32_t>(i);
        return -1;
    }
};

struct RoutingDest {
    std::string state;
    Expr probability = Expr::constant(Rational(1));
    bool explicit_probability = false;  // single destinations may omit it
    // filled by prepare():
    std::int32_t state_index = -1;
    Expr bound_probability;
};

/// Routing choice for one source local state of one participating automaton.
struct SourceRouting {
    std::string source;
    std::vector<RoutingDest> destinations;
    std::int32_t source_index = -1;
};

struct Participant {
    std::string automaton;
    std::vector<SourceRouting> transitions;
    std::int32_t automaton_index = -1;

    const SourceRouting* routing_for(std::int32_t local_state) const {
        for (const auto& t : transitions)
            if (t.source_index == local_state) return &t;
        return nullptr;
    }
};

enum class EventKind { Local, Synchronizing };

struct Event {
    std::string id;
    std::optional<std::string> alias;
    Expr rate;
    std::vector<Participant> participants;
    std::optional<EventKind> declared_kind;  // optional cross-check in the file format
    // filled by prepare():
    Expr bound_rate;
    bool prepared = false;

    EventKind kind() const {
        return participants.size() > 1 ? EventKind::Synchronizing : EventKind::Local;
    }
};

struct SanModel {
    std::vector<Automaton> automata;
    std::vector<Event> events;
    std::map<std::string, Rational> params;

    std::int32_t automaton_index(const std::string& name) const {
        for (std::size_t i = 0; i < automata.size(); ++i)
            if (automata[i].name == name) return static_cast<std::int32_t>(i);
        return -1;
    }

    GlobalState initial_state() const {
        GlobalState g(automata.size());
        for (std::size_t i = 0; i < automata.size(); ++i) g[i] = automata[i].initial;
        return g;
    }

    std::string state_label(const GlobalState& g) const {
        std::string out;
        for (std::size_t i = 0; i < automata.size(); ++i) {
            if (i) out += ",";
            out += automata[i].name + "=" + automata[i].states[static_cast<std::size_t>(g[i])];
        }
        return out;
    }

    /// Product of all local state-space sizes, as a double (may be huge).
    double product_size() const {
        double p = 1.0;
        for (const auto& a : automata) p *= static_cast<double>(a.states.size());
        return p;
    }
};

/// Resolves parameters and state names inside an expression against a
/// model, leaving only constants and index-bound indicators.
inline Expr bind_expr(const Expr& expr, const SanModel& model) {
    Expr out = expr.substitute_params(model.params);
    if (out.has_division())
        throw ModelError("division with non-constant operands in expression: " + expr.str(),
                         "expr-division");
    return out.bind_indicators([&](const std::string& automaton, const std::string& state) {
        std::int32_t ai = model.automaton_index(automaton);
        if (ai < 0)
            throw ModelError("unknown automaton '" + automaton + "' in st(" + automaton +
                                 " == " + state + ")",
                             "unknown-automaton");
        std::int32_t si = model.automata[static_cast<std::size_t>(ai)].state_index(state);
        if (si < 0)
            throw ModelError("unknown state '" + state + "' of automaton '" + automaton + "'",
                             "unknown-state");
        return std::pair<int, int>{ai, si};
    });
}

/// Checks every SanModel invariant; empty result iff the model is valid.
inline std::vector<Diagnostic> validate_san(const SanModel& model) {
    std::vector<Diagnostic> out;

    std::set<std::string> automaton_names;
    for (const auto& a : model.automata) {
        if (!automaton_names.insert(a.name).second)
            out.push_back({"duplicate automaton '" + a.name + "'", 0, 0, a.name, "duplicate-name"});
        if (a.states.empty())
            out.push_back({"automaton '" + a.name + "' has no local states", 0, 0, a.name,
                           "empty-automaton"});
        std::set<std::string> state_names(a.states.begin(), a.states.end());
        if (state_names.size() != a.states.size())
            out.push_back({"automaton '" + a.name + "' has duplicate local state names", 0, 0,
                           a.name, "duplicate-name"});
        if (a.initial < 0 || a.initial >= static_cast<std::int32_t>(a.states.size()))
            out.push_back({"automaton '" + a.name + "' has an invalid initial state", 0, 0,
                           a.name, "initial-state"});
    }

    std::set<std::string> event_ids;
    for (const auto& e : model.events) {
        if (!event_ids.insert(e.id).second)
            out.push_back({"duplicate event id '" + e.id + "'", 0, 0, "", "duplicate-name"});
        if (e.participants.empty()) {
            out.push_back({"event '" + e.id + "' has no participating automaton", 0, 0, "",
                           "participants"});
            continue;
        }
        if (e.declared_kind) {
            bool sync = e.participants.size() > 1;
            if (*e.declared_kind == EventKind::Synchronizing && !sync)
                out.push_back({"event '" + e.id +
                                   "' is declared synchronizing but participates in one automaton",
                               0, 0, "", "event-kind"});
            if (*e.declared_kind == EventKind::Local && sync)
                out.push_back({"event '" + e.id +
                                   "' is declared local but participates in several automata",
                               0, 0, "", "event-kind"});
        }
        try {
            bind_expr(e.rate, model);
        } catch (const ModelError& err) {
            out.push_back({"event '" + e.id + "': " + err.what(), 0, 0, "", "rate-expr"});
        }

        std::set<std::string> seen_automata;
        for (const auto& p : e.participants) {
            if (!seen_automata.insert(p.automaton).second)
                out.push_back({"event '" + e.id + "' lists automaton '" + p.automaton +
                                   "' more than once",
                               0, 0, p.automaton, "participants"});
            std::int32_t ai = model.automaton_index(p.automaton);
            if (ai < 0) {
                out.push_back({"event '" + e.id + "' references unknown automaton '" +
                                   p.automaton + "'",
                               0, 0, p.automaton, "unknown-automaton"});
                continue;
            }
            const Automaton& a = model.automata[static_cast<std::size_t>(ai)];
            if (p.transitions.empty())
                out.push_back({"event '" + e.id + "' has no source states in automaton '" +
                                   p.automaton + "'",
                               0, 0, p.automaton, "participants"});
            std::set<std::string> sources;
            for (const auto& t : p.transitions) {
                if (a.state_index(t.source) < 0)
                    out.push_back({"event '" + e.id + "': unknown source state '" + t.source +
                                       "' in automaton '" + p.automaton + "'",
                                   0, 0, p.automaton, "unknown-state"});
                if (!sources.insert(t.source).second)
                    out.push_back({"event '" + e.id + "' lists source state '" + t.source +
                                       "' twice in automaton '" + p.automaton + "'",
                                   0, 0, p.automaton, "participants"});
                if (t.destinations.empty()) {
                    out.push_back({"event '" + e.id + "': no destination for source '" + t.source +
                                       "' in automaton '" + p.automaton + "'",
                                   0, 0, p.automaton, "routing"});
                    continue;
                }
                std::set<std::string> dests;
                bool all_const = true;
                Rational sum(0);
                for (const auto& d : t.destinations) {
                    if (a.state_index(d.state) < 0)
                        out.push_back({"event '" + e.id + "': unknown destination state '" +
                                           d.state + "' in automaton '" + p.automaton + "'",
                                       0, 0, p.automaton, "unknown-state"});
                    if (!dests.insert(d.state).second)
                        out.push_back({"event '" + e.id + "' routes source '" + t.source +
                                           "' to destination '" + d.state + "' twice",
                                       0, 0, p.automaton, "routing"});
                    Expr ground;
                    try {
                        ground = bind_expr(d.probability, model);
                    } catch (const ModelError& err) {
                        out.push_back({"event '" + e.id + "': " + err.what(), 0, 0, p.automaton,
                                       "routing"});
                        all_const = false;
                        continue;
                    }
                    if (!ground.is_constant()) {
                        all_const = false;  // functional: checked per reachable state
                        continue;
                    }
                    Rational pr = ground.constant_value();
                    if (pr <= Rational(0) || pr > Rational(1))
                        out.push_back({"event '" + e.id + "': routing probability " + pr.str() +
                                           " outside (0,1] for source '" + t.source + "'",
                                       0, 0, p.automaton, "routing-probability"});
                    sum += pr;
                }
                if (all_const && std::fabs(sum.to_double() - 1.0) > kProbabilitySumTolerance)
                    out.push_back({"event '" + e.id + "': routing probabilities for source '" +
                                       t.source + "' in automaton '" + p.automaton + "' sum to " +
                                       sum.str() + ", expected 1",
                                   0, 0, p.automaton, "routing-sum"});
            }
        }
    }
    return out;
}

/// Returns a copy with every name resolved to indices and every expression
/// ground (parameters substituted). Semantics operations require a prepared
/// model. Throws ModelError when the model does not validate.
inline SanModel prepare(const SanModel& model) {
    auto problems = validate_san(model);
    if (!problems.empty()) throw ModelError(std::move(problems));

    SanModel out = model;
    for (auto& e : out.events) {
        e.bound_rate = bind_expr(e.rate, out);
        for (auto& p : e.participants) {
            p.automaton_index = out.automaton_index(p.automaton);
            const Automaton& a = out.automata[static_cast<std::size_t>(p.automaton_index)];
            for (auto& t : p.transitions) {
                t.source_index = a.state_index(t.source);
                for (auto& d : t.destinations) {
                    d.state_index = a.state_index(d.state);
                    d.bound_probability = bind_expr(d.probability, out);
                }
            }
        }
        e.prepared = true;
    }
    return out;
}

namespace detail {
inline void require_prepared(const Event& e) {
    if (!e.prepared)
        throw ModelError("event '" + e.id + "' used before prepare()", "not-prepared");
}
} // namespace detail

/// Evaluates a rate expression in a global state; indicator atoms become
/// 0/1. Negative values indicate a broken model and throw.
inline double eval_rate(const Expr& bound, const GlobalState& g, const SanModel& model) {
    (void)model;
    double v = bound.eval(g);
    if (v < 0.0 || !std::isfinite(v))
        throw ModelError("rate expression negative or non-finite in reachable state: " +
                             bound.str() + " = " + std::to_string(v),
                         "negative-rate");
    return v;
}

/// True iff every participating automaton currently sits in one of the
/// event's source states for that automaton.
inline bool structurally_enabled(const Event& e, const GlobalState& g) {
    detail::require_prepared(e);
    for (const auto& p : e.participants)
        if (!p.routing_for(g[static_cast<std::size_t>(p.automaton_index)])) return false;
    return true;
}

/// Events eligible to fire in `g`: structurally enabled and rate > 0,
/// with the evaluated rate.
inline std::vector<std::pair<const Event*, double>> enabled_events(const SanModel& model,
                                                                   const GlobalState& g) {
    std::vector<std::pair<const Event*, double>> out;
    for (const auto& e : model.events) {
        if (!structurally_enabled(e, g)) continue;
        double r = eval_rate(e.bound_rate, g, model);
        if (r > 0.0) out.emplace_back(&e, r);
    }
    return out;
}

/// All destination global states of firing `e` in `g`, with probabilities.
/// The Cartesian combination of per-automaton routing choices; probabilities
/// multiply across automata and sum to 1 over the outcomes.
inline std::vector<std::pair<GlobalState, double>> apply_event(const SanModel& model,
                                                               const Event& e,
                                                               const GlobalState& g) {
    detail::require_prepared(e);
    if (!structurally_enabled(e, g))
        throw ModelError("event '" + e.id + "' is not enabled in state " + model.state_label(g),
                         "event-not-enabled");

    std::vector<std::pair<GlobalState, double>> outcomes{{g, 1.0}};
    for (const auto& p : e.participants) {
        const SourceRouting* r = p.routing_for(g[static_cast<std::size_t>(p.automaton_index)]);
        double sum = 0.0;
        std::vector<std::pair<std::int32_t, double>> dests;
        for (const auto& d : r->destinations) {
            double pr = d.bound_probability.eval(g);
            if (pr < -kProbabilitySumTolerance || pr > 1.0 + kProbabilitySumTolerance)
                throw ModelError("event '" + e.id + "': routing probability " +
                                     std::to_string(pr) + " outside [0,1] in state " +
                                     model.state_label(g),
                                 "routing-probability");
            sum += pr;
            if (pr > 0.0) dests.emplace_back(d.state_index, pr);
        }
        if (std::fabs(sum - 1.0) > kProbabilitySumTolerance)
            throw ModelError("event '" + e.id + "': routing probabilities sum to " +
                                 std::to_string(sum) + " in state " + model.state_label(g),
                             "routing-sum");
        std::vector<std::pair<GlobalState, double>> next;
        next.reserve(outcomes.size() * dests.size());
        for (const auto& [state, prob] : outcomes) {
            for (const auto& [dest, pr] : dests) {
                GlobalState s = state;
                s[static_cast<std::size_t>(p.automaton_index)] = dest;
                next.emplace_back(std::move(s), prob * pr);
            }
        }
        outcomes = std::move(next);
    }

    // merge outcomes reaching the same global state
    std::map<GlobalState, double> merged;
    for (auto& [state, prob] : outcomes) merged[state] += prob;
    return {merged.begin(), merged.end()};
}

} // namespace sanweave

#endif
