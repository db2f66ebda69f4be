// sanweave: timed statecharts -> stochastic automata networks -> stationary
// metrics, with an independent discrete-event simulation for cross-checks.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sanweave/dot_export.hpp"
#include "sanweave/report.hpp"
#include "sanweave/san_json.hpp"
#include "sanweave/simulate.hpp"
#include "sanweave/solver.hpp"
#include "sanweave/statechart_parser.hpp"
#include "sanweave/translate.hpp"

namespace {

using namespace sanweave;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path + "'");
    return ss.str();
}

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    out << content;
    if (!out) throw IoError("failed writing '" + out_path + "'");
}

std::map<std::string, Rational> parse_bindings(const std::vector<std::string>& args) {
    std::map<std::string, Rational> bindings;
    for (const auto& arg : args) {
        auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0)
            throw CLI::ValidationError("--param", "expected NAME=VALUE, got '" + arg + "'");
        std::string name = arg.substr(0, eq);
        Expr value = Expr::parse(arg.substr(eq + 1), false).fold_constants();
        if (!value.is_constant())
            throw ModelError("parameter '" + name + "' must be bound to a constant",
                             "unbound-parameter");
        bindings[name] = value.constant_value();
    }
    return bindings;
}

void print_diagnostics(const std::string& path, const std::vector<Diagnostic>& diagnostics) {
    for (const auto& d : diagnostics) std::cerr << path << ":" << d.str() << "\n";
}

StateChartModel parse_or_fail(const std::string& path, const std::string& source) {
    ParseResult parsed = parse_statechart(source);
    if (!parsed.ok()) {
        print_diagnostics(path, parsed.diagnostics);
        throw ModelError("model '" + path + "' has " +
                             std::to_string(parsed.diagnostics.size()) + " diagnostic(s)",
                         "diagnostics");
    }
    return *parsed.model;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(),
                                                  suffix) == 0;
}

struct LoadedModel {
    SanModel san;  // prepared
    std::string source_text;
    std::optional<TranslationResult> translation;  // when loaded from .scx
};

LoadedModel load_model(const std::string& path, const std::map<std::string, Rational>& bindings) {
    LoadedModel loaded;
    loaded.source_text = read_file(path);
    if (has_suffix(path, ".scx")) {
        StateChartModel chart = parse_or_fail(path, loaded.source_text);
        StateChartModel ground = resolve_params(chart, bindings);
        loaded.translation = translate(ground);
        loaded.san = loaded.translation->san;
    } else {
        loaded.san = san_from_string(loaded.source_text);
    }
    return loaded;
}

struct MetricOptions {
    std::vector<std::string> metric_args;  // NAME=EXPR
    std::string metrics_file;
};

std::vector<MetricDef> collect_metrics(const MetricOptions& opts) {
    std::vector<MetricDef> metrics;
    if (!opts.metrics_file.empty()) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(read_file(opts.metrics_file));
        } catch (const nlohmann::json::parse_error& e) {
            throw ModelError("invalid metrics file: " + std::string(e.what()), "metrics-schema");
        }
        metrics = parse_metrics_json(doc);
    }
    for (const auto& arg : opts.metric_args) {
        auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0)
            throw CLI::ValidationError("--metric", "expected NAME=EXPR, got '" + arg + "'");
        metrics.push_back(parse_metric_definition(arg.substr(0, eq), arg.substr(eq + 1)));
    }
    return metrics;
}

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

nlohmann::ordered_json input_block(const std::string& path, const std::string& content) {
    nlohmann::ordered_json j;
    j["path"] = path;
    j["digest"] = fnv1a64_hex(content);
    return j;
}

// ---- subcommand bodies -------------------------------------------------

int cmd_check(const std::string& path) {
    std::string source = read_file(path);
    ParseResult parsed = parse_statechart(source);
    if (!parsed.ok()) {
        print_diagnostics(path, parsed.diagnostics);
        return 1;
    }
    std::cerr << path << ": ok (" << parsed.model->objects.size() << " objects)\n";
    return 0;
}

int cmd_translate(const std::string& path, const std::vector<std::string>& params,
                  const std::string& out_path, const std::string& dot_dir) {
    std::string source = read_file(path);
    StateChartModel chart = parse_or_fail(path, source);
    StateChartModel ground = resolve_params(chart, parse_bindings(params));
    TranslationResult result = translate(ground);
    write_output(out_path, san_to_string(result.san));
    if (!dot_dir.empty()) {
        std::filesystem::create_directories(dot_dir);
        for (std::size_t i = 0; i < result.san.automata.size(); ++i) {
            std::string file = dot_dir + "/" + result.san.automata[i].name + ".dot";
            write_output(file, automaton_to_dot(result.san, i));
        }
    }
    return 0;
}

struct SolveFlags {
    std::string engine = "flat";
    double tol = 1e-12;
    std::size_t max_iter = 1'000'000;
};

nlohmann::ordered_json run_solve(const SanModel& san, const StateSpace& space,
                                 const SolveFlags& flags, const std::vector<MetricDef>& metrics) {
    SteadyStateOptions opts;
    opts.tolerance = flags.tol;
    opts.max_iterations = flags.max_iter;

    StationaryDistribution dist;
    if (flags.engine == "descriptor") {
        Descriptor d = build_descriptor(san, reachability_options_from_env().state_cap);
        dist = steady_state(san, space, d, opts);
    } else {
        FlatGenerator q = build_flat_generator(san, space);
        dist = steady_state(san, space, q, opts);
    }
    auto values = evaluate_metrics(san, space.states, dist.pi, metrics);
    return solve_report(san, space, dist, values, flags.engine);
}

int cmd_solve(const std::string& path, const std::vector<std::string>& params,
              const SolveFlags& flags, const MetricOptions& metric_opts,
              const std::string& out_path) {
    auto start = std::chrono::steady_clock::now();
    LoadedModel loaded = load_model(path, parse_bindings(params));
    StateSpace space = reachable_states(loaded.san, reachability_options_from_env());
    nlohmann::ordered_json report =
        run_solve(loaded.san, space, flags, collect_metrics(metric_opts));
    report["input"] = input_block(path, loaded.source_text);
    report["timing"] = {{"totalMs", ms_since(start)}};
    write_output(out_path, report.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const std::string& path, const std::vector<std::string>& params,
                 const SimConfig& cfg, const MetricOptions& metric_opts,
                 const std::string& out_path) {
    auto start = std::chrono::steady_clock::now();
    LoadedModel loaded = load_model(path, parse_bindings(params));
    SimResult result = simulate(loaded.san, cfg);
    auto values =
        evaluate_metrics(loaded.san, result.visited, result.time_fraction,
                         collect_metrics(metric_opts));
    nlohmann::ordered_json report = simulate_report(loaded.san, result, cfg, values);
    report["input"] = input_block(path, loaded.source_text);
    report["timing"] = {{"totalMs", ms_since(start)}};
    write_output(out_path, report.dump(2) + "\n");
    return 0;
}

int cmd_pipeline(const std::string& path, const std::vector<std::string>& params,
                 const SolveFlags& flags, const SimConfig& cfg, const MetricOptions& metric_opts,
                 const std::string& out_path) {
    auto start = std::chrono::steady_clock::now();
    nlohmann::ordered_json report;
    std::string source = read_file(path);
    report["input"] = input_block(path, source);

    StateChartModel chart = parse_or_fail(path, source);
    report["check"] = {{"status", "ok"}, {"objects", chart.objects.size()}};

    StateChartModel ground = resolve_params(chart, parse_bindings(params));
    TranslationResult translation = translate(ground);
    const SanModel& san = translation.san;
    nlohmann::ordered_json aliases = nlohmann::ordered_json::object();
    for (const auto& e : san.events)
        if (e.alias) aliases[*e.alias] = e.id;
    report["translation"] = {{"automata", san.automata.size()},
                             {"events", san.events.size()},
                             {"aliases", aliases}};

    StateSpace space = reachable_states(san, reachability_options_from_env());
    std::vector<MetricDef> metrics = collect_metrics(metric_opts);

    SolveFlags flat_flags = flags, desc_flags = flags;
    flat_flags.engine = "flat";
    desc_flags.engine = "descriptor";
    nlohmann::ordered_json flat_report = run_solve(san, space, flat_flags, metrics);
    nlohmann::ordered_json desc_report = run_solve(san, space, desc_flags, metrics);
    report["solve"] = {{"flat", flat_report}, {"descriptor", desc_report}};

    SimResult sim = simulate(san, cfg);
    auto sim_values = evaluate_metrics(san, sim.visited, sim.time_fraction, metrics);
    report["simulation"] = simulate_report(san, sim, cfg, sim_values);

    // cross-checks: the two construction paths must agree; the simulation
    // should land near the solver on every state with visible mass
    double engine_delta = 0.0;
    for (const auto& [label, value] : flat_report["pi"].items())
        engine_delta = std::max(engine_delta,
                                std::fabs(value.get<double>() -
                                          desc_report["pi"][label].get<double>()));
    double sim_rel = 0.0;
    for (const auto& [label, value] : flat_report["pi"].items()) {
        double pi = value.get<double>();
        if (pi < 0.01) continue;
        double est = report["simulation"]["pi"].contains(label)
                         ? report["simulation"]["pi"][label].get<double>()
                         : 0.0;
        sim_rel = std::max(sim_rel, std::fabs(est - pi) / pi);
    }
    report["compare"] = {{"enginesMaxAbsDelta", engine_delta},
                         {"simulationMaxRelDeviation", sim_rel}};
    report["timing"] = {{"totalMs", ms_since(start)}};
    write_output(out_path, report.dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"timed statecharts -> stochastic automata networks -> stationary metrics"};
    app.require_subcommand(1);

    std::string path, out_path, dot_dir;
    std::vector<std::string> params;
    SolveFlags solve_flags;
    SimConfig sim_cfg;
    MetricOptions metric_opts;

    auto add_params = [&](CLI::App* cmd) {
        cmd->add_option("--param", params, "bind a model parameter, NAME=VALUE (repeatable)");
    };
    auto add_metrics = [&](CLI::App* cmd) {
        cmd->add_option("--metric", metric_opts.metric_args,
                        "reward metric, NAME=EXPR (repeatable)");
        cmd->add_option("--metrics-file", metric_opts.metrics_file,
                        "JSON file with metric definitions");
    };
    auto add_solver = [&](CLI::App* cmd) {
        cmd->add_option("--tol", solve_flags.tol, "convergence tolerance")
            ->default_val("1e-12");
        cmd->add_option("--max-iter", solve_flags.max_iter, "iteration cap")
            ->default_val("1000000");
    };
    auto add_sim = [&](CLI::App* cmd) {
        cmd->add_option("--seed", sim_cfg.seed, "simulation seed")->default_val("1");
        cmd->add_option("--events", sim_cfg.event_budget, "measured events after warmup")
            ->default_val("1000000");
        cmd->add_option("--warmup", sim_cfg.warmup_fraction,
                        "warmup events as a fraction of the budget")
            ->default_val("0.1");
    };

    CLI::App* check = app.add_subcommand("check", "parse and validate a statechart model");
    check->add_option("path", path, "model file (.scx)")->required();

    CLI::App* translate_cmd =
        app.add_subcommand("translate", "generate the SAN model from a statechart");
    translate_cmd->add_option("path", path, "model file (.scx)")->required();
    add_params(translate_cmd);
    translate_cmd->add_option("-o,--output", out_path, "output file (default: stdout)");
    translate_cmd->add_option("--dot", dot_dir, "write one DOT file per automaton here");

    CLI::App* solve = app.add_subcommand("solve", "compute the stationary distribution");
    solve->add_option("path", path, "model file (.scx or SAN JSON)")->required();
    add_params(solve);
    add_metrics(solve);
    add_solver(solve);
    solve->add_option("--engine", solve_flags.engine, "generator construction path")
        ->check(CLI::IsMember({"flat", "descriptor"}))
        ->default_val("flat");
    solve->add_option("-o,--output", out_path, "report file (default: stdout)");

    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "estimate occupancies by discrete-event simulation");
    simulate_cmd->add_option("path", path, "model file (.scx or SAN JSON)")->required();
    add_params(simulate_cmd);
    add_metrics(simulate_cmd);
    add_sim(simulate_cmd);
    simulate_cmd->add_option("-o,--output", out_path, "report file (default: stdout)");

    CLI::App* pipeline =
        app.add_subcommand("pipeline", "check + translate + solve (both engines) + simulate");
    pipeline->add_option("path", path, "model file (.scx)")->required();
    add_params(pipeline);
    add_metrics(pipeline);
    add_solver(pipeline);
    add_sim(pipeline);
    pipeline->add_option("-o,--output", out_path, "report file (default: stdout)");

    try {
        app.parse(argc, argv);
        if (check->parsed()) return cmd_check(path);
        if (translate_cmd->parsed()) return cmd_translate(path, params, out_path, dot_dir);
        if (solve->parsed())
            return cmd_solve(path, params, solve_flags, metric_opts, out_path);
        if (simulate_cmd->parsed()) return cmd_simulate(path, params, sim_cfg, metric_opts, out_path);
        if (pipeline->parsed())
            return cmd_pipeline(path, params, solve_flags, sim_cfg, metric_opts, out_path);
        return 2;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
