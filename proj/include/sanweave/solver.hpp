#ifndef SANWEAVE_SOLVER_HPP
#define SANWEAVE_SOLVER_HPP

#include <cmath>
#include <string>
#include <vector>

#include "sanweave/descriptor.hpp"
#include "sanweave/generator.hpp"
#include "sanweave/san.hpp"
#include "sanweave/state_space.hpp"

namespace sanweave {

struct SteadyStateOptions {
    double tolerance = 1e-12;
    std::size_t max_iterations = 1'000'000;
};

struct StationaryDistribution {
    std::vector<double> pi;  // over the reachable space, sums to 1
    double residual = 0.0;   // ||pi * Q||_inf at termination
    std::size_t iterations = 0;
};

namespace detail {

/// Iterative Tarjan SCC count over the reachability arcs; on a reducible
/// chain returns representatives of two distinct components.
inline std::size_t strongly_connected_components(const StateSpace& space,
                                                 std::int32_t representatives[2]) {
    std::size_t n = space.size();
    std::vector<std::int32_t> idx(n, -1), low(n, 0), comp(n, -1);
    std::vector<std::int32_t> stack, call_state, call_edge;
    std::vector<bool> on_stack(n, false);
    std::int32_t counter = 0, components = 0;

    for (std::size_t root = 0; root < n; ++root) {
        if (idx[root] >= 0) continue;
        call_state.assign(1, static_cast<std::int32_t>(root));
        call_edge.assign(1, 0);
        idx[root] = low[root] = counter++;
        stack.push_back(static_cast<std::int32_t>(root));
        on_stack[root] = true;
        while (!call_state.empty()) {
            std::int32_t v = call_state.back();
            auto& edge = call_edge.back();
            const auto& succ = space.successors[static_cast<std::size_t>(v)];
            if (edge < static_cast<std::int32_t>(succ.size())) {
                std::int32_t w = succ[static_cast<std::size_t>(edge++)];
                if (idx[static_cast<std::size_t>(w)] < 0) {
                    idx[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] =
                        counter++;
                    stack.push_back(w);
                    on_stack[static_cast<std::size_t>(w)] = true;
                    call_state.push_back(w);
                    call_edge.push_back(0);
                } else if (on_stack[static_cast<std::size_t>(w)]) {
                    low[static_cast<std::size_t>(v)] =
                        std::min(low[static_cast<std::size_t>(v)],
                                 idx[static_cast<std::size_t>(w)]);
                }
                continue;
            }
            if (low[static_cast<std::size_t>(v)] == idx[static_cast<std::size_t>(v)]) {
                for (;;) {
                    std::int32_t w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = false;
                    comp[static_cast<std::size_t>(w)] = components;
                    if (w == v) break;
                }
                ++components;
            }
            call_state.pop_back();
            call_edge.pop_back();
            if (!call_state.empty()) {
                std::int32_t parent = call_state.back();
                low[static_cast<std::size_t>(parent)] =
                    std::min(low[static_cast<std::size_t>(parent)],
                             low[static_cast<std::size_t>(v)]);
            }
        }
    }
    if (components > 1) {
        representatives[0] = representatives[1] = -1;
        for (std::size_t i = 0; i < n && representatives[1] < 0; ++i) {
            if (comp[i] == comp[0] && representatives[0] < 0)
                representatives[0] = static_cast<std::int32_t>(i);
            else if (comp[i] != comp[0])
                representatives[1] = static_cast<std::int32_t>(i);
        }
        if (representatives[0] < 0) representatives[0] = 0;
    }
    return static_cast<std::size_t>(components);
}

inline void require_irreducible(const SanModel& model, const StateSpace& space) {
    std::int32_t reps[2] = {0, 0};
    if (strongly_connected_components(space, reps) > 1)
        throw ModelError("reducible chain: states " +
                             model.state_label(space.states[static_cast<std::size_t>(reps[0])]) +
                             " and " +
                             model.state_label(space.states[static_cast<std::size_t>(reps[1])]) +
                             " do not communicate",
                         "reducible");
}

/// Uniformized power iteration pi <- pi (I + Q/Lambda), shared by both
/// engines via the multiply callback.
template <typename Multiply>
StationaryDistribution power_iterate(std::size_t n, double max_exit_rate, Multiply&& multiply,
                                     const SteadyStateOptions& opts) {
    StationaryDistribution result;
    result.pi.assign(n, 1.0 / static_cast<double>(n));
    if (n == 1 || max_exit_rate == 0.0) {
        result.residual = 0.0;
        return result;
    }
    double lambda = 1.001 * max_exit_rate;  // margin avoids a periodic P
    for (std::size_t iter = 1; iter <= opts.max_iterations; ++iter) {
        std::vector<double> y = multiply(result.pi);
        double residual = 0.0;
        for (double v : y) residual = std::max(residual, std::fabs(v));

        double delta = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double next = result.pi[i] + y[i] / lambda;
            delta = std::max(delta, std::fabs(next - result.pi[i]));
            result.pi[i] = next;
            sum += next;
        }
        for (double& v : result.pi) v /= sum;

        result.iterations = iter;
        if (delta < opts.tolerance && residual < 10.0 * opts.tolerance) {
            std::vector<double> final_y = multiply(result.pi);
            result.residual = 0.0;
            for (double v : final_y) result.residual = std::max(result.residual, std::fabs(v));
            return result;
        }
    }
    throw ModelError("no convergence within " + std::to_string(opts.max_iterations) +
                         " iterations (tolerance " + std::to_string(opts.tolerance) + ")",
                     "no-convergence");
}

} // namespace detail

/// Stationary distribution from the flat sparse generator.
inline StationaryDistribution steady_state(const SanModel& model, const StateSpace& space,
                                           const FlatGenerator& q,
                                           const SteadyStateOptions& opts = {}) {
    detail::require_irreducible(model, space);
    return detail::power_iterate(
        space.size(), q.max_exit_rate(),
        [&](const std::vector<double>& v) { return q.multiply_left(v); }, opts);
}

/// Stationary distribution from the Kronecker descriptor. Iterates over
/// the reachable space; vectors are padded to the product space for the
/// structured multiply and projected back.
inline StationaryDistribution steady_state(const SanModel& model, const StateSpace& space,
                                           const Descriptor& d,
                                           const SteadyStateOptions& opts = {}) {
    detail::require_irreducible(model, space);

    std::vector<std::size_t> flat_of(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) flat_of[i] = d.flat_index(space.states[i]);

    std::vector<double> diag = d.diagonal();
    double max_exit = 0.0;
    for (double v : diag) max_exit = std::max(max_exit, -v);

    std::vector<double> padded(d.product_n, 0.0);
    return detail::power_iterate(
        space.size(), max_exit,
        [&](const std::vector<double>& v) {
            std::fill(padded.begin(), padded.end(), 0.0);
            for (std::size_t i = 0; i < v.size(); ++i) padded[flat_of[i]] = v[i];
            std::vector<double> w = d.multiply_left(padded);
            std::vector<double> projected(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) projected[i] = w[flat_of[i]];
            return projected;
        },
        opts);
}

/// Expected value of a reward expression under the stationary distribution:
/// sum over reachable states of pi(g) * r(g).
inline double expected_reward(const StationaryDistribution& dist, const Expr& reward,
                              const SanModel& model, const StateSpace& space) {
    Expr bound = bind_expr(reward, model);
    double sum = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i)
        sum += dist.pi[i] * bound.eval(space.states[i]);
    return sum;
}

} // namespace sanweave

#endif
