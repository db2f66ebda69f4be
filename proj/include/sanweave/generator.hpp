#ifndef SANWEAVE_GENERATOR_HPP
#define SANWEAVE_GENERATOR_HPP

#include <cmath>
#include <map>
#include <vector>

#include "sanweave/san.hpp"
#include "sanweave/state_space.hpp"

namespace sanweave {

/// Sparse CTMC generator over the reachable state space. Off-diagonal
/// entries are event rates times routing probabilities; the diagonal is the
/// negated off-diagonal row sum (self-loop outcomes cancel and appear in
/// neither).
struct FlatGenerator {
    std::vector<std::vector<std::pair<std::int32_t, double>>> rows;  // ascending column
    std::vector<double> diagonal;

    std::size_t size() const { return rows.size(); }

    double entry(std::int32_t from, std::int32_t to) const {
        if (from == to) return diagonal[static_cast<std::size_t>(from)];
        for (const auto& [col, value] : rows[static_cast<std::size_t>(from)])
            if (col == to) return value;
        return 0.0;
    }

    /// w = v * Q (row vector times matrix).
    std::vector<double> multiply_left(const std::vector<double>& v) const {
        std::vector<double> w(size(), 0.0);
        for (std::size_t i = 0; i < size(); ++i) {
            double vi = v[i];
            if (vi == 0.0) continue;
            w[i] += vi * diagonal[i];
            for (const auto& [col, value] : rows[i])
                w[static_cast<std::size_t>(col)] += vi * value;
        }
        return w;
    }

    double max_exit_rate() const {
        double m = 0.0;
        for (double d : diagonal) m = std::max(m, -d);
        return m;
    }
};

inline FlatGenerator build_flat_generator(const SanModel& model, const StateSpace& space) {
    FlatGenerator q;
    q.rows.resize(space.size());
    q.diagonal.assign(space.size(), 0.0);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const GlobalState& g = space.states[i];
        std::map<std::int32_t, double> row;
        for (const auto& [event, rate] : enabled_events(model, g)) {
            for (const auto& [dest, prob] : apply_event(model, *event, g)) {
                std::int32_t j = space.index_of(dest);
                if (j < 0)
                    throw ModelError("destination state " + model.state_label(dest) +
                                         " missing from the state space",
                                     "state-space");
                if (j == static_cast<std::int32_t>(i)) continue;  // self-loop cancels
                row[j] += rate * prob;
                q.diagonal[i] -= rate * prob;
            }
        }
        q.rows[i].assign(row.begin(), row.end());
    }
    return q;
}

} // namespace sanweave

#endif
