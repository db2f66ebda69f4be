#ifndef SANWEAVE_TRANSLATE_HPP
#define SANWEAVE_TRANSLATE_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sanweave/san.hpp"
#include "sanweave/statechart.hpp"

namespace sanweave {

/// The transitions of one object consumed by a single event: the initiator's
/// timed transition, or every transition of a receiving object that accepts
/// the chain's message (one per possible source state).
struct ChainEntry {
    int object = -1;
    std::vector<int> transitions;  // indices into the folded chart, ascending
    std::string message;           // empty for the initiator
};

/// The automata affected by one trigger firing, found by following Send
/// actions transitively.
struct ActionChain {
    ChainEntry initiator;
    std::vector<ChainEntry> consequents;  // in discovery order
};

/// One fully resolved (trigger, branch choices) combination.
struct ResolvedChainSeed {
    std::vector<int> branch_path;  // chosen arm index at each branching body met
    Rational probability = Rational(1);
    std::optional<std::string> alias;
    ActionChain chain;
};

struct GeneratedEvent {
    std::string id;
    std::optional<std::string> alias;
    Rational base_rate;       // 1 / duration
    Rational probability;     // product of chosen branch probabilities
    Rational effective_rate;  // base_rate * probability
    ActionChain chain;
};

namespace detail {

inline bool bodies_equal(const ActionBody& a, const ActionBody& b) {
    if (a.branched != b.branched || a.arms.size() != b.arms.size()) return false;
    for (std::size_t i = 0; i < a.arms.size(); ++i) {
        if (!(a.arms[i].probability.is_constant() && b.arms[i].probability.is_constant() &&
              a.arms[i].probability.constant_value() == b.arms[i].probability.constant_value()))
            return false;
        if (a.arms[i].actions != b.arms[i].actions) return false;
    }
    return true;
}

inline ActionBody compose_bodies(const ActionBody& first, const ActionBody& then) {
    ActionBody out;
    out.branched = first.branched || then.branched;
    for (const auto& a : first.arms) {
        for (const auto& b : then.arms) {
            BranchArm arm;
            arm.probability =
                Expr::binary(Expr::Op::Mul, a.probability, b.probability).fold_constants();
            if (!then.branched) arm.alias = a.alias;
            else if (!first.branched) arm.alias = b.alias;
            arm.actions = a.actions;
            arm.actions.insert(arm.actions.end(), b.actions.begin(), b.actions.end());
            out.arms.push_back(std::move(arm));
        }
    }
    return out;
}

inline void require_ground(const ObjectChart& chart) {
    for (const auto& t : chart.transitions) {
        if (t.trigger.kind == Trigger::Kind::After && !t.trigger.duration.is_constant())
            throw ModelError(Diagnostic{"duration after(" + t.trigger.duration_text +
                                            ") is not ground; resolve parameters first",
                                        t.line, t.col, chart.name, "not-ground"});
        for (const auto& arm : t.body.arms)
            if (!arm.probability.is_constant())
                throw ModelError(Diagnostic{"branch probability " + arm.probability.str() +
                                                " is not ground; resolve parameters first",
                                            t.line, t.col, chart.name, "not-ground"});
    }
}

} // namespace detail

/// Removes every instant state from a chart: a transition entering an
/// instant state is redirected to that state's immediate-exit target and
/// its action body extended with the exit's actions, transitively. The
/// timed states and their transitions survive unchanged.
inline ObjectChart eliminate_instant_states(const ObjectChart& chart) {
    std::map<std::string, const ChartTransition*> immediate_exit;
    std::size_t instant_count = 0;
    for (const auto& s : chart.states) {
        if (s.kind != StateKind::Instant) continue;
        ++instant_count;
        const ChartTransition* exit = nullptr;
        for (const auto& t : chart.transitions) {
            if (t.source != s.name) continue;
            if (t.trigger.kind != Trigger::Kind::Immediate || exit)
                throw ModelError(Diagnostic{"instant state '" + s.name +
                                                "' must have exactly one immediate exit",
                                            t.line, t.col, chart.name, "instant-exit"});
            exit = &t;
        }
        if (!exit)
            throw ModelError(Diagnostic{"instant state '" + s.name + "' has no immediate exit",
                                        s.line, s.col, chart.name, "instant-exit"});
        immediate_exit[s.name] = exit;
    }
    if (instant_count == 0) return chart;

    ObjectChart out;
    out.name = chart.name;
    out.initial = chart.initial;
    out.line = chart.line;
    out.col = chart.col;
    for (const auto& s : chart.states)
        if (s.kind != StateKind::Instant) out.states.push_back(s);
    if (!out.find_state(out.initial))
        throw ModelError(Diagnostic{"initial state '" + chart.initial + "' must be a timed state",
                                    chart.line, chart.col, chart.name, "initial-state"});

    for (const auto& t : chart.transitions) {
        if (immediate_exit.count(t.source)) continue;  // folded away
        ChartTransition folded = t;
        std::size_t hops = 0;
        while (immediate_exit.count(folded.target)) {
            if (++hops > instant_count)
                throw ModelError(Diagnostic{"cycle among instant states behind transition " +
                                                t.source + " -> " + t.target,
                                            t.line, t.col, chart.name, "instant-cycle"});
            const ChartTransition* exit = immediate_exit.at(folded.target);
            folded.body = detail::compose_bodies(folded.body, exit->body);
            folded.target = exit->target;
        }
        out.transitions.push_back(std::move(folded));
    }
    return out;
}

/// Elimination applied to every chart of a ground model.
inline StateChartModel eliminate_instant_states(const StateChartModel& model) {
    StateChartModel out = model;
    for (auto& chart : out.objects) chart = eliminate_instant_states(chart);
    return out;
}

/// Enumerates the resolved chains of one initiating transition of a folded
/// model: one seed per combination of branch choices met along the chain
/// (the initiating transition's own branches first). Chains follow Send
/// actions breadth-first; each object may be reached once.
inline std::vector<ResolvedChainSeed> trace_action_chains(const StateChartModel& folded,
                                                          int object_index,
                                                          int transition_index) {
    const ObjectChart& origin = folded.objects[static_cast<std::size_t>(object_index)];
    const ChartTransition& initiator =
        origin.transitions[static_cast<std::size_t>(transition_index)];

    struct PendingSend {
        std::string target;
        std::string message;
    };
    struct Work {
        ResolvedChainSeed seed;
        std::deque<PendingSend> pending;
        std::map<int, std::size_t> entry_of_object;  // object -> index in chain entries
    };

    std::vector<ResolvedChainSeed> out;

    auto expand = [&](auto&& self, Work work) -> void {
        while (!work.pending.empty()) {
            PendingSend send = work.pending.front();
            work.pending.pop_front();

            const ObjectChart* receiver = folded.find_object(send.target);
            if (!receiver)
                throw ModelError(Diagnostic{"send target '" + send.target +
                                                "' is not a declared object",
                                            initiator.line, initiator.col, origin.name,
                                            "unknown-object"});
            int receiver_index = -1;
            for (std::size_t i = 0; i < folded.objects.size(); ++i)
                if (&folded.objects[i] == receiver) receiver_index = static_cast<int>(i);

            std::vector<int> receiving;
            for (std::size_t i = 0; i < receiver->transitions.size(); ++i) {
                const auto& rt = receiver->transitions[i];
                if (rt.trigger.kind == Trigger::Kind::Message &&
                    rt.trigger.message == send.message)
                    receiving.push_back(static_cast<int>(i));
            }
            if (receiving.empty())
                throw ModelError(Diagnostic{"object '" + send.target +
                                                "' has no transition on message '" + send.message +
                                                "'",
                                            initiator.line, initiator.col, origin.name,
                                            "unhandled-message"});

            if (auto it = work.entry_of_object.find(receiver_index);
                it != work.entry_of_object.end()) {
                const ChainEntry& existing = it->second == 0
                                                 ? work.seed.chain.initiator
                                                 : work.seed.chain.consequents[it->second - 1];
                if (existing.message == send.message && existing.transitions == receiving)
                    continue;  // this reception is already part of the event
                throw ModelError(Diagnostic{"object '" + send.target +
                                                "' is reached twice with conflicting transitions" +
                                                " in the chain of " + origin.name + "." +
                                                initiator.source,
                                            initiator.line, initiator.col, origin.name,
                                            "chain-conflict"});
            }

            // all receiving transitions must behave identically, otherwise the
            // consequences would depend on the receiver's current state
            const ActionBody& body =
                receiver->transitions[static_cast<std::size_t>(receiving[0])].body;
            for (std::size_t i = 1; i < receiving.size(); ++i)
                if (!detail::bodies_equal(
                        body, receiver->transitions[static_cast<std::size_t>(receiving[i])].body))
                    throw ModelError(Diagnostic{
                        "object '" + send.target + "' receives message '" + send.message +
                            "' in several states with different actions",
                        initiator.line, initiator.col, origin.name, "chain-conflict"});

            work.seed.chain.consequents.push_back({receiver_index, receiving, send.message});
            work.entry_of_object[receiver_index] = work.seed.chain.consequents.size();

            if (body.branched) {
                for (std::size_t a = 0; a < body.arms.size(); ++a) {
                    Rational p = body.arms[a].probability.constant_value();
                    if (p == Rational(0)) continue;
                    Work forked = work;
                    forked.seed.branch_path.push_back(static_cast<int>(a));
                    forked.seed.probability *= p;
                    for (const auto& action : body.arms[a].actions)
                        forked.pending.push_back({action.target, action.message});
                    self(self, std::move(forked));
                }
                return;  // forks own the continuation
            }
            for (const auto& action : body.arms[0].actions)
                work.pending.push_back({action.target, action.message});
        }
        out.push_back(std::move(work.seed));
    };

    // seed one expansion per initiator arm with positive probability
    for (std::size_t a = 0; a < initiator.body.arms.size(); ++a) {
        const BranchArm& arm = initiator.body.arms[a];
        Rational p = arm.probability.constant_value();
        if (p == Rational(0)) continue;
        Work work;
        work.seed.chain.initiator = {object_index, {transition_index}, ""};
        work.entry_of_object[object_index] = 0;
        work.seed.probability = p;
        if (initiator.body.branched) {
            work.seed.branch_path.push_back(static_cast<int>(a));
            work.seed.alias = arm.alias;
        } else {
            work.seed.alias = initiator.alias;
        }
        for (const auto& action : arm.actions)
            work.pending.push_back({action.target, action.message});
        expand(expand, std::move(work));
    }
    if (out.empty())
        throw ModelError(Diagnostic{"every branch of transition " + initiator.source + " -> " +
                                        initiator.target + " has probability 0",
                                    initiator.line, initiator.col, origin.name, "branch-sum"});

    // an alias is only meaningful when it names a unique event; drop it on
    // seeds that were split further by downstream branching
    std::size_t initiator_choices = initiator.body.branched ? 1 : 0;
    for (auto& seed : out)
        if (seed.branch_path.size() > initiator_choices) seed.alias.reset();
    return out;
}

/// The single chain of an unbranched, conflict-free initiating transition.
inline ActionChain trace_action_chain(const StateChartModel& folded, int object_index,
                                      int transition_index) {
    auto seeds = trace_action_chains(folded, object_index, transition_index);
    return seeds.front().chain;
}

/// One event per (timed transition, branch combination): the trigger
/// `after(d)` contributes base rate 1/d; each resolved branch combination
/// scales it by its probability. Message-triggered transitions are consumed
/// into chains and never generate events of their own.
inline std::vector<GeneratedEvent> generate_events(const StateChartModel& folded) {
    std::vector<GeneratedEvent> out;
    for (std::size_t oi = 0; oi < folded.objects.size(); ++oi) {
        const ObjectChart& chart = folded.objects[oi];
        detail::require_ground(chart);
        for (std::size_t ti = 0; ti < chart.transitions.size(); ++ti) {
            const ChartTransition& t = chart.transitions[ti];
            if (t.trigger.kind != Trigger::Kind::After) continue;
            Rational duration = t.trigger.duration.constant_value();
            if (!(duration > Rational(0)))
                throw ModelError(Diagnostic{"nonpositive duration on transition " + t.source +
                                                " -> " + t.target,
                                            t.line, t.col, chart.name, "nonpositive-duration"});
            Rational base = Rational(1) / duration;
            auto seeds = trace_action_chains(folded, static_cast<int>(oi), static_cast<int>(ti));
            for (auto& seed : seeds) {
                GeneratedEvent e;
                e.id = chart.name + "." + t.source + ".after(" + t.trigger.duration_text + ")";
                for (int b : seed.branch_path) e.id += ".b" + std::to_string(b);
                e.alias = seed.alias;
                e.base_rate = base;
                e.probability = seed.probability;
                e.effective_rate = base * seed.probability;
                e.chain = std::move(seed.chain);
                out.push_back(std::move(e));
            }
        }
    }
    return out;
}

/// Maps each chart onto a SAN automaton (timed states only) and each
/// generated event onto a SAN event whose participants are the chain's
/// transitions. The result always validates.
inline SanModel classify_and_emit(const StateChartModel& folded,
                                  const std::vector<GeneratedEvent>& events) {
    SanModel san;
    for (const auto& chart : folded.objects) {
        Automaton a;
        a.name = chart.name;
        for (const auto& s : chart.states) a.states.push_back(s.name);
        a.initial = a.state_index(chart.initial);
        san.automata.push_back(std::move(a));
    }
    for (const auto& p : folded.params)
        if (p.default_value) san.params[p.name] = p.default_value->constant_value();

    for (const auto& e : events) {
        Event event;
        event.id = e.id;
        event.alias = e.alias;
        event.rate = Expr::constant(e.effective_rate);

        std::vector<const ChainEntry*> entries{&e.chain.initiator};
        for (const auto& c : e.chain.consequents) entries.push_back(&c);
        std::sort(entries.begin(), entries.end(),
                  [](const ChainEntry* a, const ChainEntry* b) { return a->object < b->object; });

        for (const ChainEntry* entry : entries) {
            const ObjectChart& chart = folded.objects[static_cast<std::size_t>(entry->object)];
            Participant p;
            p.automaton = chart.name;
            for (int ti : entry->transitions) {
                const ChartTransition& t = chart.transitions[static_cast<std::size_t>(ti)];
                SourceRouting r;
                r.source = t.source;
                r.destinations.push_back({t.target, Expr::constant(Rational(1)), false, -1, {}});
                p.transitions.push_back(std::move(r));
            }
            event.participants.push_back(std::move(p));
        }
        san.events.push_back(std::move(event));
    }
    return prepare(san);
}

struct TranslationResult {
    StateChartModel folded;
    std::vector<GeneratedEvent> events;
    SanModel san;  // prepared
};

/// Full generation procedure over a validated, ground statechart model.
inline TranslationResult translate(const StateChartModel& ground) {
    auto problems = validate(ground);
    if (!problems.empty()) throw ModelError(std::move(problems));
    TranslationResult result;
    result.folded = eliminate_instant_states(ground);
    result.events = generate_events(result.folded);
    result.san = classify_and_emit(result.folded, result.events);
    return result;
}

} // namespace sanweave

#endif
