#ifndef SANWEAVE_DESCRIPTOR_HPP
#define SANWEAVE_DESCRIPTOR_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sanweave/san.hpp"

namespace sanweave {

/// Kronecker-structured CTMC generator: per-automaton local matrices plus,
/// per synchronizing event, per-automaton firing factors and their diagonal
/// normalization. The full matrix is never stored; multiplication sweeps the
/// small factors over the product space. Functional entries are evaluated
/// lazily against the source global-state coordinate.
class Descriptor {
public:
    struct RoutingEntry {
        std::int32_t dst = -1;
        bool const_prob = true;
        double prob = 1.0;
        Expr prob_expr;  // bound; used when !const_prob
    };
    struct FactorRow {
        std::int32_t src = -1;
        std::vector<RoutingEntry> dests;
    };
    /// Firing matrix of one synchronizing event in one automaton; rows exist
    /// only for source states (the normalization mask is the row set).
    struct Factor {
        std::int32_t automaton = -1;
        std::vector<FactorRow> rows;
    };
    struct SyncTerm {
        std::string event_id;
        bool const_rate = true;
        double rate = 0.0;
        Expr rate_expr;  // bound; used when !const_rate
        bool all_const = true;
        std::vector<Factor> factors;  // ascending automaton index
    };
    /// One (src -> dst) contribution of a local event; its implicit diagonal
    /// correction -value at (src, src) is part of the local matrix.
    struct LocalTerm {
        std::int32_t src = -1, dst = -1;
        bool const_value = true;
        double value = 0.0;  // rate * prob when constant
        bool const_rate = true;
        double rate = 0.0;
        Expr rate_expr;
        bool const_prob = true;
        double prob = 1.0;
        Expr prob_expr;
    };

    std::vector<std::int32_t> sizes;
    std::vector<std::size_t> strides;  // last automaton varies fastest
    std::size_t product_n = 0;
    std::vector<std::vector<LocalTerm>> locals;  // per automaton
    std::vector<SyncTerm> syncs;

    std::size_t flat_index(const GlobalState& g) const {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < strides.size(); ++k)
            idx += static_cast<std::size_t>(g[k]) * strides[k];
        return idx;
    }

    GlobalState unflatten(std::size_t idx) const {
        GlobalState g(sizes.size());
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            g[k] = static_cast<std::int32_t>(idx / strides[k]);
            idx %= strides[k];
        }
        return g;
    }

    /// w = v * Q over the full product space.
    std::vector<double> multiply_left(const std::vector<double>& v) const {
        if (v.size() != product_n)
            throw ModelError("descriptor-vector dimension mismatch: vector has " +
                                 std::to_string(v.size()) + " entries, product space has " +
                                 std::to_string(product_n),
                             "dimension");
        std::vector<double> out(product_n, 0.0);
        std::vector<double> scratch_a, scratch_b;

        for (std::size_t k = 0; k < locals.size(); ++k) {
            for (const auto& term : locals[k]) {
                if (term.const_value) {
                    apply_const_local(k, term, v, out);
                } else {
                    std::ptrdiff_t shift = (static_cast<std::ptrdiff_t>(term.dst) -
                                            static_cast<std::ptrdiff_t>(term.src)) *
                                           static_cast<std::ptrdiff_t>(strides[k]);
                    for_each_with_digit(k, term.src, [&](const GlobalState& g, std::size_t flat) {
                        double x = v[flat];
                        if (x == 0.0) return;
                        double value = term_value(term, g);
                        out[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(flat) + shift)] +=
                            value * x;
                        out[flat] -= value * x;
                    });
                }
            }
        }
        for (const auto& term : syncs) {
            if (term.all_const)
                apply_const_sync(term, v, out, scratch_a, scratch_b);
            else
                apply_functional_sync(term, v, out);
        }
        return out;
    }

    /// diag(Q) over the product space; every entry is <= 0.
    std::vector<double> diagonal() const {
        std::vector<double> diag(product_n, 0.0);
        for (std::size_t k = 0; k < locals.size(); ++k) {
            for (const auto& term : locals[k]) {
                if (term.dst == term.src) continue;  // self-loop cancels exactly
                if (term.const_value) {
                    for_each_with_digit(k, term.src,
                                        [&](const GlobalState&, std::size_t flat) {
                                            diag[flat] -= term.value;
                                        });
                } else {
                    for_each_with_digit(k, term.src,
                                        [&](const GlobalState& g, std::size_t flat) {
                                            diag[flat] -= term_value(term, g);
                                        });
                }
            }
        }
        for (const auto& term : syncs) {
            for_each_enabled(term, [&](const GlobalState& g, std::size_t flat,
                                       const std::vector<const FactorRow*>& rows) {
                double r = term.const_rate ? term.rate : term.rate_expr.eval(g);
                if (r == 0.0) return;
                double self_prob = 1.0, sum_used = 1.0;
                if (!term.all_const) {
                    sum_used = 1.0;
                    // mirror the functional multiply: subtract the evaluated sum
                    double s = 1.0;
                    for (const auto* row : rows) {
                        double row_sum = 0.0;
                        for (const auto& d : row->dests) row_sum += entry_prob(d, g);
                        s *= row_sum;
                    }
                    sum_used = s;
                }
                for (const auto* row : rows) {
                    double p = 0.0;
                    for (const auto& d : row->dests)
                        if (d.dst == row->src) p = entry_prob(d, g);
                    self_prob *= p;
                    if (self_prob == 0.0) break;
                }
                diag[flat] += r * (self_prob - sum_used);
            });
        }
        return diag;
    }

    /// Row `flat` of the materialized generator (basis-vector multiply).
    std::vector<double> row(std::size_t flat) const {
        std::vector<double> e(product_n, 0.0);
        e[flat] = 1.0;
        return multiply_left(e);
    }

private:
    static double entry_prob(const RoutingEntry& d, const GlobalState& g) {
        return d.const_prob ? d.prob : d.prob_expr.eval(g);
    }
    static double term_value(const LocalTerm& t, const GlobalState& g) {
        double r = t.const_rate ? t.rate : t.rate_expr.eval(g);
        double p = t.const_prob ? t.prob : t.prob_expr.eval(g);
        double v = r * p;
        if (v < 0.0)
            throw ModelError("negative rate contribution in descriptor multiply", "negative-rate");
        return v;
    }

    void apply_const_local(std::size_t k, const LocalTerm& term, const std::vector<double>& v,
                           std::vector<double>& out) const {
        std::size_t sk = strides[k];
        std::size_t nk = static_cast<std::size_t>(sizes[k]);
        std::size_t block = nk * sk;
        std::ptrdiff_t shift = (static_cast<std::ptrdiff_t>(term.dst) -
                                static_cast<std::ptrdiff_t>(term.src)) *
                               static_cast<std::ptrdiff_t>(sk);
        for (std::size_t base = static_cast<std::size_t>(term.src) * sk; base < product_n;
             base += block) {
            for (std::size_t right = 0; right < sk; ++right) {
                double x = v[base + right];
                if (x == 0.0) continue;
                out[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(base + right) + shift)] +=
                    term.value * x;
                out[base + right] -= term.value * x;
            }
        }
    }

    /// z := v * (I (x) ... (x) F_k (x) ... (x) I), one factor per sweep; then
    /// out += rate * z and out -= rate * (v masked to the source slice).
    void apply_const_sync(const SyncTerm& term, const std::vector<double>& v,
                          std::vector<double>& out, std::vector<double>& z,
                          std::vector<double>& z2) const {
        z = v;
        for (const auto& factor : term.factors) {
            std::size_t k = static_cast<std::size_t>(factor.automaton);
            std::size_t sk = strides[k];
            std::size_t nk = static_cast<std::size_t>(sizes[k]);
            std::size_t block = nk * sk;
            z2.assign(product_n, 0.0);
            for (const auto& row : factor.rows) {
                for (std::size_t base = static_cast<std::size_t>(row.src) * sk; base < product_n;
                     base += block) {
                    for (std::size_t right = 0; right < sk; ++right) {
                        double x = z[base + right];
                        if (x == 0.0) continue;
                        std::size_t slice_start = base - static_cast<std::size_t>(row.src) * sk;
                        for (const auto& d : row.dests)
                            z2[slice_start + static_cast<std::size_t>(d.dst) * sk + right] +=
                                d.prob * x;
                    }
                }
            }
            z.swap(z2);
        }
        for (std::size_t i = 0; i < product_n; ++i)
            if (z[i] != 0.0) out[i] += term.rate * z[i];

        // normalization: subtract rate on the source slice (mask product)
        z = v;
        for (const auto& factor : term.factors) {
            std::size_t k = static_cast<std::size_t>(factor.automaton);
            std::size_t sk = strides[k];
            std::size_t block = static_cast<std::size_t>(sizes[k]) * sk;
            z2.assign(product_n, 0.0);
            for (const auto& row : factor.rows) {
                for (std::size_t base = static_cast<std::size_t>(row.src) * sk; base < product_n;
                     base += block)
                    for (std::size_t right = 0; right < sk; ++right)
                        z2[base + right] = z[base + right];
            }
            z.swap(z2);
        }
        for (std::size_t i = 0; i < product_n; ++i)
            if (z[i] != 0.0) out[i] -= term.rate * z[i];
    }

    void apply_functional_sync(const SyncTerm& term, const std::vector<double>& v,
                               std::vector<double>& out) const {
        for_each_enabled(term, [&](const GlobalState& g, std::size_t flat,
                                   const std::vector<const FactorRow*>& rows) {
            double x = v[flat];
            if (x == 0.0) return;
            double r = term.const_rate ? term.rate : term.rate_expr.eval(g);
            if (r == 0.0) return;
            if (r < 0.0)
                throw ModelError("negative rate for event '" + term.event_id +
                                     "' in descriptor multiply",
                                 "negative-rate");
            double sum = 0.0;
            // Cartesian routing outcomes across the participating automata
            auto rec = [&](auto&& self, std::size_t fi, std::ptrdiff_t shift, double p) -> void {
                if (fi == rows.size()) {
                    out[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(flat) + shift)] +=
                        r * p * x;
                    sum += p;
                    return;
                }
                std::size_t k = static_cast<std::size_t>(term.factors[fi].automaton);
                const FactorRow* row = rows[fi];
                for (const auto& d : row->dests) {
                    double dp = entry_prob(d, g);
                    if (dp == 0.0) continue;
                    self(self, fi + 1,
                         shift + (static_cast<std::ptrdiff_t>(d.dst) -
                                  static_cast<std::ptrdiff_t>(row->src)) *
                                     static_cast<std::ptrdiff_t>(strides[k]),
                         p * dp);
                }
            };
            rec(rec, 0, 0, 1.0);
            out[flat] -= r * sum * x;
        });
    }

    /// Every product state with the digit of automaton `k` fixed to `digit`.
    template <typename Fn>
    void for_each_with_digit(std::size_t k, std::int32_t digit, Fn&& fn) const {
        GlobalState g(sizes.size(), 0);
        g[k] = digit;
        auto rec = [&](auto&& self, std::size_t pos, std::size_t flat) -> void {
            if (pos == sizes.size()) {
                fn(const_cast<const GlobalState&>(g), flat);
                return;
            }
            if (pos == k) {
                self(self, pos + 1, flat + static_cast<std::size_t>(digit) * strides[pos]);
                return;
            }
            for (std::int32_t s = 0; s < sizes[pos]; ++s) {
                g[pos] = s;
                self(self, pos + 1, flat + static_cast<std::size_t>(s) * strides[pos]);
            }
        };
        rec(rec, 0, 0);
    }

    /// Every product state in a sync event's enabled slice (each participant
    /// sitting in one of its source states), with the chosen factor rows.
    template <typename Fn>
    void for_each_enabled(const SyncTerm& term, Fn&& fn) const {
        GlobalState g(sizes.size(), 0);
        std::vector<const FactorRow*> rows(term.factors.size(), nullptr);
        std::vector<std::size_t> owner(sizes.size(), SIZE_MAX);
        for (std::size_t fi = 0; fi < term.factors.size(); ++fi)
            owner[static_cast<std::size_t>(term.factors[fi].automaton)] = fi;

        auto rec = [&](auto&& self, std::size_t pos, std::size_t flat) -> void {
            if (pos == sizes.size()) {
                fn(const_cast<const GlobalState&>(g), flat, rows);
                return;
            }
            if (owner[pos] != SIZE_MAX) {
                for (const auto& row : term.factors[owner[pos]].rows) {
                    g[pos] = row.src;
                    rows[owner[pos]] = &row;
                    self(self, pos + 1, flat + static_cast<std::size_t>(row.src) * strides[pos]);
                }
                return;
            }
            for (std::int32_t s = 0; s < sizes[pos]; ++s) {
                g[pos] = s;
                self(self, pos + 1, flat + static_cast<std::size_t>(s) * strides[pos]);
            }
        };
        rec(rec, 0, 0);
    }
};

/// Builds the descriptor of a prepared model. The product space must fit
/// below `product_cap` since descriptor vectors span it.
inline Descriptor build_descriptor(const SanModel& model,
                                   std::size_t product_cap = 10'000'000) {
    Descriptor d;
    double product = model.product_size();
    if (product > static_cast<double>(product_cap))
        throw ModelError("product state space (" + std::to_string(product) +
                             ") exceeds the descriptor cap (" + std::to_string(product_cap) + ")",
                         "state-cap");
    d.product_n = 1;
    for (const auto& a : model.automata) {
        d.sizes.push_back(static_cast<std::int32_t>(a.states.size()));
        d.product_n *= a.states.size();
    }
    d.strides.assign(d.sizes.size(), 1);
    for (std::size_t k = d.sizes.size(); k-- > 1;)
        d.strides[k - 1] = d.strides[k] * static_cast<std::size_t>(d.sizes[k]);
    d.locals.resize(d.sizes.size());

    for (const auto& e : model.events) {
        detail::require_prepared(e);
        if (e.kind() == EventKind::Local) {
            const Participant& p = e.participants[0];
            for (const auto& t : p.transitions) {
                for (const auto& dest : t.destinations) {
                    Descriptor::LocalTerm term;
                    term.src = t.source_index;
                    term.dst = dest.state_index;
                    term.const_rate = e.bound_rate.is_constant();
                    if (term.const_rate) term.rate = e.bound_rate.constant_value().to_double();
                    else term.rate_expr = e.bound_rate;
                    term.const_prob = dest.bound_probability.is_constant();
                    if (term.const_prob)
                        term.prob = dest.bound_probability.constant_value().to_double();
                    else term.prob_expr = dest.bound_probability;
                    term.const_value = term.const_rate && term.const_prob;
                    if (term.const_value) term.value = term.rate * term.prob;
                    d.locals[static_cast<std::size_t>(p.automaton_index)].push_back(
                        std::move(term));
                }
            }
            continue;
        }
        Descriptor::SyncTerm term;
        term.event_id = e.id;
        term.const_rate = e.bound_rate.is_constant();
        if (term.const_rate) term.rate = e.bound_rate.constant_value().to_double();
        else term.rate_expr = e.bound_rate;
        term.all_const = term.const_rate;
        for (const auto& p : e.participants) {
            Descriptor::Factor factor;
            factor.automaton = p.automaton_index;
            for (const auto& t : p.transitions) {
                Descriptor::FactorRow row;
                row.src = t.source_index;
                for (const auto& dest : t.destinations) {
                    Descriptor::RoutingEntry entry;
                    entry.dst = dest.state_index;
                    entry.const_prob = dest.bound_probability.is_constant();
                    if (entry.const_prob)
                        entry.prob = dest.bound_probability.constant_value().to_double();
                    else {
                        entry.prob_expr = dest.bound_probability;
                        term.all_const = false;
                    }
                    row.dests.push_back(std::move(entry));
                }
                factor.rows.push_back(std::move(row));
            }
            term.factors.push_back(std::move(factor));
        }
        std::sort(term.factors.begin(), term.factors.end(),
                  [](const Descriptor::Factor& a, const Descriptor::Factor& b) {
                      return a.automaton < b.automaton;
                  });
        d.syncs.push_back(std::move(term));
    }
    return d;
}

/// w = v * Q computed from the descriptor; `v` spans the product space.
inline std::vector<double> descriptor_vector_multiply(const Descriptor& d,
                                                      const std::vector<double>& v) {
    return d.multiply_left(v);
}

} // namespace sanweave

#endif
