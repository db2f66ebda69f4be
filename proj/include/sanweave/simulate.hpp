#ifndef SANWEAVE_SIMULATE_HPP
#define SANWEAVE_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sanweave/san.hpp"

namespace sanweave {

/// splitmix64 (Vigna's public-domain reference): a portable 64-bit
/// generator; identical sequences on every platform and language, which is
/// what makes simulation results reproducible across implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1): the top 53 bits scaled by 2^-53.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

struct SimConfig {
    std::uint64_t seed = 0;
    std::uint64_t event_budget = 1'000'000;  // measured events, after warmup
    double warmup_fraction = 0.1;            // warmup events = fraction * budget
};

struct SimResult {
    std::vector<GlobalState> visited;        // discovery order
    std::vector<double> time_fraction;       // per visited state, sums to 1
    double total_time = 0.0;                 // measured (post-warmup) time
    std::uint64_t events_fired = 0;          // measured events
    std::map<std::string, std::uint64_t> fired_per_event;
};

/// Seeded discrete-event simulation of the SAN: repeatedly enumerate the
/// enabled events, draw the exponential holding time from the total rate,
/// pick the firing event proportionally to its rate, pick a routing outcome
/// by its probabilities, and accrue the holding time to the pre-transition
/// state. The first warmup events are excluded from the estimates.
inline SimResult simulate(const SanModel& model, const SimConfig& cfg) {
    if (cfg.event_budget < 1)
        throw ModelError("event budget must be at least 1", "sim-config");
    if (!(cfg.warmup_fraction >= 0.0) || cfg.warmup_fraction >= 1.0)
        throw ModelError("warmup fraction must lie in [0, 1)", "sim-config");

    SplitMix64 rng(cfg.seed);
    GlobalState g = model.initial_state();

    SimResult result;
    std::map<GlobalState, std::size_t> state_index;
    std::vector<double> time_in_state;
    auto index_of = [&](const GlobalState& s) {
        auto [it, inserted] = state_index.emplace(s, result.visited.size());
        if (inserted) {
            result.visited.push_back(s);
            time_in_state.push_back(0.0);
        }
        return it->second;
    };

    std::uint64_t warmup =
        static_cast<std::uint64_t>(cfg.warmup_fraction * static_cast<double>(cfg.event_budget));
    std::uint64_t total_events = warmup + cfg.event_budget;

    std::vector<std::pair<const Event*, double>> enabled;
    for (std::uint64_t step = 0; step < total_events; ++step) {
        enabled = enabled_events(model, g);
        if (enabled.empty())
            throw ModelError("deadlock: no event is enabled in state " + model.state_label(g),
                             "deadlock");
        double total_rate = 0.0;
        for (const auto& [event, rate] : enabled) total_rate += rate;

        double u = rng.next_double();
        double holding = -std::log(1.0 - u) / total_rate;

        const Event* firing = enabled.back().first;
        double pick = rng.next_double() * total_rate;
        double acc = 0.0;
        for (const auto& [event, rate] : enabled) {
            acc += rate;
            if (pick < acc) { firing = event; break; }
        }

        auto outcomes = apply_event(model, *firing, g);
        const GlobalState* dest = &outcomes.back().first;
        double po = rng.next_double();
        acc = 0.0;
        for (const auto& [state, prob] : outcomes) {
            acc += prob;
            if (po < acc) { dest = &state; break; }
        }

        if (step >= warmup) {
            time_in_state[index_of(g)] += holding;
            result.total_time += holding;
            ++result.events_fired;
            ++result.fired_per_event[firing->id];
        }
        g = *dest;
    }

    result.time_fraction.resize(time_in_state.size());
    for (std::size_t i = 0; i < time_in_state.size(); ++i)
        result.time_fraction[i] = result.total_time > 0.0 ? time_in_state[i] / result.total_time
                                                          : 0.0;
    return result;
}

} // namespace sanweave

#endif
