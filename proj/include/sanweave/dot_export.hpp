#ifndef SANWEAVE_DOT_EXPORT_HPP
#define SANWEAVE_DOT_EXPORT_HPP

#include <string>
#include <vector>

#include "sanweave/san.hpp"

namespace sanweave {

namespace detail {
inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}
} // namespace detail

/// One digraph per automaton; every edge carries `eventId(rate)`.
/// The initial local state is drawn with a double border.
inline std::string automaton_to_dot(const SanModel& model, std::size_t automaton_index) {
    const Automaton& a = model.automata[automaton_index];
    std::string out = "digraph \"" + detail::dot_escape(a.name) + "\" {\n";
    out += "    rankdir=LR;\n";
    out += "    node [shape=ellipse];\n";
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        out += "    \"" + detail::dot_escape(a.states[i]) + "\"";
        if (static_cast<std::int32_t>(i) == a.initial) out += " [peripheries=2]";
        out += ";\n";
    }
    for (const auto& e : model.events) {
        for (const auto& p : e.participants) {
            if (p.automaton != a.name) continue;
            for (const auto& t : p.transitions) {
                for (const auto& d : t.destinations) {
                    std::string label = e.id + "(" + e.rate.str() + ")";
                    out += "    \"" + detail::dot_escape(t.source) + "\" -> \"" +
                           detail::dot_escape(d.state) + "\" [label=\"" +
                           detail::dot_escape(label) + "\"];\n";
                }
            }
        }
    }
    out += "}\n";
    return out;
}

} // namespace sanweave

#endif
