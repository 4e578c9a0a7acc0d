#ifndef PSO_TOOLS_CLI_HPP
#define PSO_TOOLS_CLI_HPP

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pso/config.hpp"
#include "pso/consensus.hpp"
#include "pso/io.hpp"
#include "pso/meanfield.hpp"
#include "pso/parallel.hpp"
#include "pso/rng.hpp"
#include "pso/runner.hpp"

namespace pso::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2 };

struct Invocation
{
    std::string command;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    int verbosity = 0;
};

inline std::filesystem::path output_dir(const Invocation& inv)
{
    if (!inv.output_dir.empty()) return inv.output_dir;
    if (const char* env = std::getenv("PSO_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

inline Config load_config(const Invocation& inv)
{
    Config cfg;
    if (!inv.config_path.empty()) cfg.load_file(inv.config_path);
    for (const auto& o : inv.overrides) cfg.apply_override(o);
    return cfg;
}

inline std::size_t workers_from(const Config& cfg)
{
    const auto w = cfg.integer("run.workers");
    return w == 0 ? default_workers() : static_cast<std::size_t>(w);
}

inline int cmd_run(const Config& cfg, const std::filesystem::path& out, std::ostream& log, int verbosity)
{
    const RunConfig rc = to_run_config(cfg);
    const RunReport report = run(rc);
    emit_series(report, out / "series.csv");
    atomic_write(out / "run_report.json", report_json(report).dump(2) + "\n");
    atomic_write(out / "config.effective.toml", cfg.serialize());
    if (verbosity > 0) {
        log << "run: " << report.steps << " steps, " << report.epochs_completed << " epochs, best value "
            << report.best_value << (report.diverged ? ", diverged" : "") << '\n';
    }
    return report.diverged ? kFailure : kOk;
}

inline int cmd_phase(const Config& cfg, const std::filesystem::path& out, std::ostream& log, int verbosity)
{
    const RunConfig rc = to_run_config(cfg);
    const auto m_grid = cfg.numbers("phase.m_grid");
    const auto s_grid = cfg.numbers("phase.sigma_grid");
    const auto cells = phase_diagram(rc, m_grid, s_grid, cfg.integer("phase.runs_per_cell"), workers_from(cfg));
    atomic_write(out / "phase.csv", phase_csv(cells));
    atomic_write(out / "config.effective.toml", cfg.serialize());
    if (verbosity > 0) {
        for (const auto& c : cells) {
            log << "m=" << c.m << " sigma2=" << c.sigma2 << " success=" << c.success_prob()
                << " diverged=" << c.divergences << '/' << c.runs << '\n';
        }
    }
    return kOk;
}

inline int cmd_mfa(const Config& cfg, const std::filesystem::path& out, std::ostream& log, int verbosity)
{
    const RunConfig rc = to_run_config(cfg);
    if (rc.params.has_memory()) throw ConfigError("mfa-scaling needs swarm.memory = off");
    const auto obj = resolve_objective(rc);
    InitSpec init = rc.init;
    const auto ns = cfg.integers("mfa.ns");
    const auto curve = mfa_error_curve(*obj, rc.params, init, ns, cfg.integer("mfa.n_ref"), cfg.number("mfa.horizon"),
                                       cfg.integer("mfa.reps"), rc.seed, workers_from(cfg));
    atomic_write(out / "mfa.csv", mfa_csv(curve));
    atomic_write(out / "mfa.json", mfa_json(curve).dump(2) + "\n");
    atomic_write(out / "config.effective.toml", cfg.serialize());
    if (verbosity > 0) log << "mfa: slope " << curve.fit.slope << " +- " << curve.fit.half_width << '\n';
    return kOk;
}

inline int cmd_laplace(const Config& cfg, const std::filesystem::path& out, std::ostream& log, int verbosity)
{
    const std::size_t n = cfg.integer("laplace.n");
    if (n == 0) throw ConfigError("laplace.n must be positive");
    const std::string dist = cfg.text("laplace.distribution");
    std::vector<double> values(n);
    const CounterStream stream(cfg.integer("run.seed"), StreamTag::InitPosition, 0, 0);
    if (dist == "uniform") {
        stream.uniforms(values);
    } else if (dist == "gaussian") {
        stream.gaussians(values);
    } else {
        throw ConfigError("config key \"laplace.distribution\" expects uniform or gaussian, got \"" + dist + "\"");
    }
    const double vmin = *std::min_element(values.begin(), values.end());
    bool all_within = true;
    std::string csv = "alpha,estimate,min,upper,within\n";
    for (std::uint64_t e = 0; e <= cfg.integer("laplace.alpha_max_exp"); ++e) {
        const double alpha = std::ldexp(1.0, static_cast<int>(e));
        const double est = laplace_estimate(values, alpha);
        const double upper = vmin + std::log(static_cast<double>(n)) / alpha;
        const bool within = est >= vmin && est <= upper;
        all_within = all_within && within;
        csv += detail::format_double(alpha) + ',' + detail::format_double(est) + ',' + detail::format_double(vmin) +
               ',' + detail::format_double(upper) + ',' + (within ? "1" : "0") + '\n';
    }
    atomic_write(out / "laplace.csv", csv);
    if (verbosity > 0) log << "laplace-check: " << (all_within ? "all estimates inside the envelope" : "envelope violated") << '\n';
    return all_within ? kOk : kFailure;
}

inline int cmd_bench(const Config& cfg, const std::filesystem::path& out, std::ostream& log, int)
{
    const RunConfig rc = to_run_config(cfg);
    const auto repeats = cfg.integer("bench.repeats");
    nlohmann::json j;
    j["runs"] = nlohmann::json::array();
    for (std::uint64_t r = 0; r < repeats; ++r) {
        const RunReport rep = run(rc);
        const double rate = rep.wall_seconds > 0.0 ? static_cast<double>(rep.steps) / rep.wall_seconds : 0.0;
        j["runs"].push_back({{"steps", rep.steps}, {"wall_seconds", rep.wall_seconds}, {"steps_per_second", rate}});
        log << "bench: run " << r << ": " << rep.steps << " steps in " << rep.wall_seconds << " s\n";
    }
    atomic_write(out / "bench.json", j.dump(2) + "\n");
    return kOk;
}

/// Entry point of the command-line tool; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Particle swarm optimization experiments"};
    app.require_subcommand(1);
    Invocation inv;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"run", "Run one optimization and write run_report.json and series.csv"},
        {"phase-diagram", "Success probability over an (m, sigma2) grid, written to phase.csv"},
        {"mfa-scaling", "Mean-field coupling error against N, written to mfa.csv"},
        {"laplace-check", "Laplace estimate against its envelope for growing alpha"},
        {"bench", "Time repeated runs of one configuration"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", inv.config_path, "Config file (key = value lines, [section] headers)");
        sub->add_option("-o,--out", inv.output_dir, "Output directory (default: $PSO_OUTPUT_DIR or .)");
        sub->add_flag("-v,--verbose", inv.verbosity, "Log progress to stderr");
        sub->add_option("overrides", inv.overrides, "key=value overrides applied after the config file");
        sub->callback([&inv, n = name] { inv.command = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    Config cfg;
    try {
        cfg = load_config(inv);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    const auto dir = output_dir(inv);
    try {
        if (inv.command == "run") return cmd_run(cfg, dir, err, inv.verbosity);
        if (inv.command == "phase-diagram") return cmd_phase(cfg, dir, err, inv.verbosity);
        if (inv.command == "mfa-scaling") return cmd_mfa(cfg, dir, err, inv.verbosity);
        if (inv.command == "laplace-check") return cmd_laplace(cfg, dir, err, inv.verbosity);
        return cmd_bench(cfg, dir, err, inv.verbosity);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kFailure;
    }
}

} // namespace pso::cli

#endif // PSO_TOOLS_CLI_HPP
