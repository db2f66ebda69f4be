#ifndef SANWEAVE_SAN_JSON_HPP
#define SANWEAVE_SAN_JSON_HPP

#include <string>

#include <json.hpp>

#include "sanweave/san.hpp"

namespace sanweave {

/// Canonical JSON form. Top-level keys: automata, events, params.
/// All rates, probabilities and parameter values are expression strings
/// ("1/2", "st(A == 0) * 5 + st(A == 2) * 6") so exact values survive
/// round trips. Key order is fixed for reproducible diffs.
inline nlohmann::ordered_json san_to_json(const SanModel& model) {
    nlohmann::ordered_json doc;
    doc["automata"] = nlohmann::ordered_json::array();
    for (const auto& a : model.automata) {
        nlohmann::ordered_json ja;
        ja["name"] = a.name;
        ja["states"] = a.states;
        ja["initial"] = a.states[static_cast<std::size_t>(a.initial)];
        doc["automata"].push_back(std::move(ja));
    }
    doc["events"] = nlohmann::ordered_json::array();
    for (const auto& e : model.events) {
        nlohmann::ordered_json je;
        je["id"] = e.id;
        if (e.alias) je["alias"] = *e.alias;
        je["type"] = e.kind() == EventKind::Synchronizing ? "synchronizing" : "local";
        je["rate"] = e.rate.str();
        je["participants"] = nlohmann::ordered_json::array();
        for (const auto& p : e.participants) {
            nlohmann::ordered_json jp;
            jp["automaton"] = p.automaton;
            jp["transitions"] = nlohmann::ordered_json::array();
            for (const auto& t : p.transitions) {
                nlohmann::ordered_json jt;
                jt["from"] = t.source;
                jt["to"] = nlohmann::ordered_json::array();
                for (const auto& d : t.destinations) {
                    nlohmann::ordered_json jd;
                    jd["state"] = d.state;
                    bool unit = d.probability.is_constant() &&
                                d.probability.constant_value() == Rational(1);
                    if (t.destinations.size() > 1 || !unit) jd["prob"] = d.probability.str();
                    jt["to"].push_back(std::move(jd));
                }
                jp["transitions"].push_back(std::move(jt));
            }
            je["participants"].push_back(std::move(jp));
        }
        doc["events"].push_back(std::move(je));
    }
    doc["params"] = nlohmann::ordered_json::object();
    for (const auto& [name, value] : model.params) doc["params"][name] = value.str();
    return doc;
}

inline std::string san_to_string(const SanModel& model) {
    return san_to_json(model).dump(2) + "\n";
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const std::string& where) {
    auto it = j.find(key);
    if (it == j.end())
        throw ModelError("missing '" + std::string(key) + "' in " + where, "schema");
    return *it;
}

inline std::string require_string(const nlohmann::json& j, const char* key,
                                  const std::string& where) {
    const auto& f = require_field(j, key, where);
    if (!f.is_string())
        throw ModelError("'" + std::string(key) + "' in " + where + " must be a string", "schema");
    return f.get<std::string>();
}

} // namespace detail

/// Parses the canonical JSON form and returns a prepared model.
/// Malformed documents and invalid models raise ModelError.
inline SanModel san_from_json(const nlohmann::json& doc) {
    using detail::require_field;
    using detail::require_string;
    if (!doc.is_object()) throw ModelError("SAN document must be a JSON object", "schema");

    SanModel model;
    for (const auto& ja : require_field(doc, "automata", "SAN document")) {
        Automaton a;
        a.name = require_string(ja, "name", "automaton");
        for (const auto& s : require_field(ja, "states", "automaton '" + a.name + "'")) {
            if (!s.is_string())
                throw ModelError("states of automaton '" + a.name + "' must be strings", "schema");
            a.states.push_back(s.get<std::string>());
        }
        std::string initial = require_string(ja, "initial", "automaton '" + a.name + "'");
        a.initial = a.state_index(initial);
        if (a.initial < 0)
            throw ModelError("initial state '" + initial + "' of automaton '" + a.name +
                                 "' is not among its states",
                             "schema");
        model.automata.push_back(std::move(a));
    }

    if (auto it = doc.find("params"); it != doc.end()) {
        for (const auto& [name, value] : it->items()) {
            if (!value.is_string())
                throw ModelError("param '" + name + "' must be an expression string", "schema");
            Expr e = Expr::parse(value.get<std::string>(), false).fold_constants();
            if (!e.is_constant())
                throw ModelError("param '" + name + "' must be a constant expression", "schema");
            model.params[name] = e.constant_value();
        }
    }

    for (const auto& je : require_field(doc, "events", "SAN document")) {
        Event e;
        e.id = require_string(je, "id", "event");
        if (auto it = je.find("alias"); it != je.end()) e.alias = it->get<std::string>();
        if (auto it = je.find("type"); it != je.end()) {
            std::string kind = it->get<std::string>();
            if (kind == "local") e.declared_kind = EventKind::Local;
            else if (kind == "synchronizing") e.declared_kind = EventKind::Synchronizing;
            else throw ModelError("event '" + e.id + "': unknown type '" + kind + "'", "schema");
        }
        e.rate = Expr::parse(require_string(je, "rate", "event '" + e.id + "'"));
        for (const auto& jp : require_field(je, "participants", "event '" + e.id + "'")) {
            Participant p;
            p.automaton = require_string(jp, "automaton", "participant of event '" + e.id + "'");
            for (const auto& jt : require_field(jp, "transitions",
                                                "participant '" + p.automaton + "'")) {
                SourceRouting t;
                t.source = require_string(jt, "from", "transition of event '" + e.id + "'");
                for (const auto& jd : require_field(jt, "to", "transition of event '" + e.id + "'")) {
                    RoutingDest d;
                    d.state = require_string(jd, "state", "destination of event '" + e.id + "'");
                    if (auto it = jd.find("prob"); it != jd.end()) {
                        if (!it->is_string())
                            throw ModelError("event '" + e.id +
                                                 "': 'prob' must be an expression string",
                                             "schema");
                        d.probability = Expr::parse(it->get<std::string>());
                        d.explicit_probability = true;
                    }
                    t.destinations.push_back(std::move(d));
                }
                p.transitions.push_back(std::move(t));
            }
            e.participants.push_back(std::move(p));
        }
        model.events.push_back(std::move(e));
    }
    return prepare(model);
}

inline SanModel san_from_string(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("invalid JSON: ") + e.what(), "schema");
    }
    return san_from_json(doc);
}

} // namespace sanweave

#endif
