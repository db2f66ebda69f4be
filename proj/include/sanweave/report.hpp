#ifndef SANWEAVE_REPORT_HPP
#define SANWEAVE_REPORT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sanweave/san.hpp"
#include "sanweave/simulate.hpp"
#include "sanweave/solver.hpp"
#include "sanweave/state_space.hpp"

namespace sanweave {

/// FNV-1a 64-bit content digest, hex encoded; good enough to tell inputs
/// apart in reports (not cryptographic).
inline std::string fnv1a64_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

/// A named performance metric: either a reward expression evaluated under
/// the stationary distribution, or the ratio of two previously defined
/// metrics.
struct MetricDef {
    std::string name;
    bool is_ratio = false;
    Expr expr;                           // reward expression
    std::string numerator, denominator;  // ratio operands (metric names)

    std::string source() const {
        return is_ratio ? numerator + " / " + denominator : expr.str();
    }
};

inline MetricDef parse_metric_definition(const std::string& name, const std::string& text) {
    MetricDef m;
    m.name = name;
    m.expr = Expr::parse(text);
    return m;
}

/// Metrics file: a JSON array of {"name": ..., "expr": ...} or
/// {"name": ..., "ratio": [numerator, denominator]} entries.
inline std::vector<MetricDef> parse_metrics_json(const nlohmann::json& doc) {
    if (!doc.is_array())
        throw ModelError("metrics file must contain a JSON array", "metrics-schema");
    std::vector<MetricDef> out;
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string())
            throw ModelError("each metric needs a string 'name'", "metrics-schema");
        MetricDef m;
        m.name = entry["name"].get<std::string>();
        if (entry.contains("expr")) {
            m.expr = Expr::parse(entry["expr"].get<std::string>());
        } else if (entry.contains("ratio")) {
            const auto& r = entry["ratio"];
            if (!r.is_array() || r.size() != 2)
                throw ModelError("metric '" + m.name + "': 'ratio' must list two metric names",
                                 "metrics-schema");
            m.is_ratio = true;
            m.numerator = r[0].get<std::string>();
            m.denominator = r[1].get<std::string>();
        } else {
            throw ModelError("metric '" + m.name + "' needs 'expr' or 'ratio'", "metrics-schema");
        }
        out.push_back(std::move(m));
    }
    return out;
}

/// Evaluates metrics against a distribution over `states` (stationary or
/// empirical). Ratio metrics may only reference metrics defined before them.
inline std::vector<std::pair<MetricDef, double>> evaluate_metrics(
    const SanModel& model, const std::vector<GlobalState>& states,
    const std::vector<double>& weights, const std::vector<MetricDef>& metrics) {
    std::vector<std::pair<MetricDef, double>> out;
    std::map<std::string, double> by_name;
    for (const auto& m : metrics) {
        double value = 0.0;
        if (m.is_ratio) {
            auto num = by_name.find(m.numerator);
            auto den = by_name.find(m.denominator);
            if (num == by_name.end() || den == by_name.end())
                throw ModelError("ratio metric '" + m.name +
                                     "' references an undefined metric; define operands first",
                                 "metrics-schema");
            if (den->second == 0.0)
                throw ModelError("ratio metric '" + m.name + "': denominator '" + m.denominator +
                                     "' is zero",
                                 "metrics-value");
            value = num->second / den->second;
        } else {
            Expr bound = bind_expr(m.expr, model);
            for (std::size_t i = 0; i < states.size(); ++i)
                value += weights[i] * bound.eval(states[i]);
        }
        by_name[m.name] = value;
        out.emplace_back(m, value);
    }
    return out;
}

namespace detail {
inline nlohmann::ordered_json product_size_json(double product) {
    if (product <= 9.0e15 && product == std::floor(product))
        return static_cast<std::uint64_t>(product);
    return product;
}

inline void append_metrics(nlohmann::ordered_json& doc,
                           const std::vector<std::pair<MetricDef, double>>& metrics) {
    doc["rewards"] = nlohmann::ordered_json::object();
    doc["metrics"] = nlohmann::ordered_json::array();
    for (const auto& [m, value] : metrics) {
        doc["rewards"][m.name] = value;
        nlohmann::ordered_json row;
        row["name"] = m.name;
        row["source"] = m.source();
        row["value"] = value;
        doc["metrics"].push_back(std::move(row));
    }
}
} // namespace detail

inline nlohmann::ordered_json solve_report(const SanModel& model, const StateSpace& space,
                                           const StationaryDistribution& dist,
                                           const std::vector<std::pair<MetricDef, double>>& metrics,
                                           const std::string& engine) {
    nlohmann::ordered_json doc;
    doc["method"] = "solver";
    doc["engine"] = engine;
    doc["stateSpaceSize"] = space.size();
    doc["productSize"] = detail::product_size_json(space.product_size);
    doc["iterations"] = dist.iterations;
    doc["residual"] = dist.residual;
    doc["pi"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < space.size(); ++i)
        doc["pi"][model.state_label(space.states[i])] = dist.pi[i];
    detail::append_metrics(doc, metrics);
    return doc;
}

inline nlohmann::ordered_json simulate_report(
    const SanModel& model, const SimResult& result, const SimConfig& cfg,
    const std::vector<std::pair<MetricDef, double>>& metrics) {
    nlohmann::ordered_json doc;
    doc["method"] = "simulation";
    doc["seed"] = cfg.seed;
    doc["events"] = result.events_fired;
    doc["warmup"] = cfg.warmup_fraction;
    doc["stateSpaceSize"] = result.visited.size();  // states visited
    doc["productSize"] = detail::product_size_json(model.product_size());
    doc["totalTime"] = result.total_time;
    doc["pi"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < result.visited.size(); ++i)
        doc["pi"][model.state_label(result.visited[i])] = result.time_fraction[i];
    doc["firedPerEvent"] = nlohmann::ordered_json::object();
    for (const auto& [id, count] : result.fired_per_event) doc["firedPerEvent"][id] = count;
    detail::append_metrics(doc, metrics);
    return doc;
}

} // namespace sanweave

#endif
