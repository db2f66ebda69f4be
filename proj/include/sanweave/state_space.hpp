#ifndef SANWEAVE_STATE_SPACE_HPP
#define SANWEAVE_STATE_SPACE_HPP

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "sanweave/san.hpp"

namespace sanweave {

namespace detail {
struct GlobalStateHash {
    std::size_t operator()(const GlobalState& g) const {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (std::int32_t v : g) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};
} // namespace detail

/// The reachable global states, in breadth-first discovery order from the
/// initial state (events explored in model order, routing outcomes in
/// declaration order), plus the reachability arcs between them.
struct StateSpace {
    std::vector<GlobalState> states;
    std::unordered_map<GlobalState, std::int32_t, detail::GlobalStateHash> index;
    std::vector<std::vector<std::int32_t>> successors;  // unique, ascending
    double product_size = 0;

    std::size_t size() const { return states.size(); }

    std::int32_t index_of(const GlobalState& g) const {
        auto it = index.find(g);
        return it == index.end() ? -1 : it->second;
    }
};

struct ReachabilityOptions {
    std::size_t state_cap = 10'000'000;
};

/// Reads SANWEAVE_STATE_CAP, falling back to the built-in default.
inline ReachabilityOptions reachability_options_from_env() {
    ReachabilityOptions opts;
    if (const char* cap = std::getenv("SANWEAVE_STATE_CAP")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(cap, &end, 10);
        if (end && *end == '\0' && v > 0) opts.state_cap = static_cast<std::size_t>(v);
    }
    return opts;
}

/// Breadth-first closure of apply_event over enabled_events, starting from
/// the initial global state. Deterministic ordering. Throws when the cap is
/// exceeded.
inline StateSpace reachable_states(const SanModel& model,
                                   const ReachabilityOptions& opts = {}) {
    StateSpace space;
    space.product_size = model.product_size();

    GlobalState initial = model.initial_state();
    space.index.emplace(initial, 0);
    space.states.push_back(initial);

    std::deque<std::int32_t> frontier{0};
    while (!frontier.empty()) {
        std::int32_t i = frontier.front();
        frontier.pop_front();
        GlobalState g = space.states[static_cast<std::size_t>(i)];

        std::vector<std::int32_t> succ;
        for (const auto& [event, rate] : enabled_events(model, g)) {
            (void)rate;
            for (const auto& [dest, prob] : apply_event(model, *event, g)) {
                (void)prob;
                auto [it, inserted] =
                    space.index.emplace(dest, static_cast<std::int32_t>(space.states.size()));
                if (inserted) {
                    if (space.states.size() >= opts.state_cap)
                        throw ModelError("state-space cap exceeded (cap " +
                                             std::to_string(opts.state_cap) + " states)",
                                         "state-cap");
                    space.states.push_back(dest);
                    frontier.push_back(it->second);
                }
                if (it->second != i) succ.push_back(it->second);
            }
        }
        std::sort(succ.begin(), succ.end());
        succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
        if (space.successors.size() <= static_cast<std::size_t>(i))
            space.successors.resize(static_cast<std::size_t>(i) + 1);
        space.successors[static_cast<std::size_t>(i)] = std::move(succ);
    }
    space.successors.resize(space.states.size());
    return space;
}

} // namespace sanweave

#endif
