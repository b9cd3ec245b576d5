// ambc: command-line front end for the joint time/reflection/power design.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ambc/ambc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

// Stable process exit codes; documented in the README.
enum ExitCode : int
{
    exit_ok = 0,
    exit_usage = 1,
    exit_config = 2, ///< config, override or state file could not be parsed
    exit_io = 3,
    exit_infeasible = 4,
    exit_iteration_cap = 5,
    exit_solver_failure = 6 ///< numerical failure or monotonicity violation
};

struct IoError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct Common
{
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    int verbosity = 0;
};

int verbosity = 0;

void log(int level, const std::string& msg)
{
    if (verbosity >= level) std::cerr << msg << '\n';
}

ambc::ConfigFile load(const Common& c)
{
    ambc::ConfigFile file = ambc::load_config(c.config);
    for (const auto& o : c.overrides)
        ambc::apply_override(file, o);
    return file;
}

fs::path output_dir(const Common& c, const std::string& run_name)
{
    fs::path dir;
    if (!c.out.empty()) {
        dir = c.out;
    } else {
        const char* root = std::getenv("AMBC_OUT_ROOT");
        dir = fs::path(root && *root ? root : "runs") / run_name;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn)
{
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    fn(os);
    os.flush();
    if (!os) throw IoError("write failed for " + path.string());
    log(2, "wrote " + path.string());
}

void write_json(const fs::path& path, const json& j)
{
    write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

int exit_for(ambc::Termination t)
{
    switch (t) {
    case ambc::Termination::converged: return exit_ok;
    case ambc::Termination::infeasible: return exit_infeasible;
    case ambc::Termination::iteration_cap: return exit_iteration_cap;
    case ambc::Termination::monotonicity_violation:
    case ambc::Termination::numerical_failure: return exit_solver_failure;
    }
    return exit_solver_failure;
}

ambc::ChannelGains draw_gains(const ambc::ScenarioConfig& cfg, std::uint64_t seed)
{
    return ambc::channel_gains(ambc::frequency_response(ambc::sample_taps(cfg, seed), cfg.num_subcarriers));
}

ambc::AllocationState initial_state(const std::string& init, const ambc::ChannelGains& gains,
                                    const ambc::ScenarioConfig& cfg)
{
    if (init == "default") return ambc::default_init(gains, cfg);
    if (init == "benchmark") return ambc::solve_benchmark(gains, cfg).state;
    return ambc::feasible_init(gains, cfg);
}

ambc::SolveTrace run_optimize(const ambc::ScenarioConfig& cfg, const ambc::ChannelGains& gains,
                              const std::string& init)
{
    ambc::OptimizeOptions opt;
    opt.on_iteration = [](const ambc::IterationRecord& it) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "iter %zu  Q=%.8f  after_time=%.8f  after_refl=%.8f  newton=%d  %.3fs",
                      it.index, it.objective, it.after_time, it.after_reflection, it.power_newton_steps, it.seconds);
        log(1, buf);
    };
    return ambc::optimize(gains, cfg, initial_state(init, gains, cfg), opt);
}

int run_solve(const Common& c, std::uint64_t seed, const std::string& init)
{
    const auto file = load(c);
    const auto cfg = ambc::scenario_from(file);
    const auto gains = draw_gains(cfg, seed);
    const auto trace = run_optimize(cfg, gains, init);

    const fs::path dir = output_dir(c, "solve-seed" + std::to_string(seed));
    json echo = ambc::to_json(cfg);
    echo["seed"] = seed;
    echo["init"] = init;
    write_json(dir / "config.json", echo);
    write_json(dir / "trace.json", ambc::to_json(trace));
    write_json(dir / "state.json", ambc::to_json(trace.final_state));
    write_file(dir / "state.csv", [&](std::ostream& os) { ambc::write_state_csv(os, trace.final_state); });
    if (c.verbosity > 0)
        write_file(dir / "iterations.csv", [&](std::ostream& os) { ambc::write_iterations_csv(os, trace); });
    for (const auto& w : trace.warnings)
        log(0, "warning: " + w);

    std::cout << json{{"termination", ambc::termination_name(trace.termination)},
                      {"converged", trace.converged},
                      {"objective", trace.final_state.objective},
                      {"iterations", trace.iterations.size()},
                      {"feasible", trace.final_report.feasible},
                      {"output", dir.string()}}
                     .dump()
              << '\n';
    return exit_for(trace.termination);
}

int run_bench(const Common& c, std::uint64_t seed, const std::string& init)
{
    const auto file = load(c);
    const auto cfg = ambc::scenario_from(file);
    const auto gains = draw_gains(cfg, seed);
    const auto trace = run_optimize(cfg, gains, init);
    const auto bench = ambc::solve_benchmark(gains, cfg);

    json out{{"seed", seed},
             {"joint", {{"termination", ambc::termination_name(trace.termination)},
                        {"objective", trace.final_state.objective},
                        {"feasible", trace.final_report.feasible},
                        {"iterations", trace.iterations.size()}}},
             {"benchmark", {{"status", ambc::status_name(bench.status)},
                            {"alpha", bench.alpha},
                            {"objective", bench.objective}}}};
    if (trace.final_report.feasible && bench.status == ambc::SolveStatus::optimal)
        out["gain"] = trace.final_state.objective - bench.objective;

    const fs::path dir = output_dir(c, "bench-seed" + std::to_string(seed));
    json echo = ambc::to_json(cfg);
    echo["seed"] = seed;
    write_json(dir / "config.json", echo);
    write_json(dir / "bench.json", out);
    write_json(dir / "benchmark_state.json", ambc::to_json(bench.state));
    std::cout << out.dump() << '\n';
    return exit_for(trace.termination);
}

int run_sweep(const Common& c, unsigned jobs)
{
    const auto file = load(c);
    const auto specs = ambc::sweeps_from(file);
    const std::string name = fs::path(c.config).stem().string();
    const fs::path dir = output_dir(c, "sweep-" + name);

    json summary = json::array();
    for (const auto& spec : specs) {
        log(1, "sweep " + spec.scenario + ": " + std::to_string(spec.values.size()) + " values x " +
                   std::to_string(spec.realizations) + " realizations");
        std::size_t done = 0;
        const std::size_t total = spec.values.size() * spec.realizations;
        const auto records = ambc::run_sweep(spec, jobs, [&](const ambc::ExperimentRecord&) {
            if (++done % 50 == 0 || done == total)
                log(2, spec.scenario + ": " + std::to_string(done) + "/" + std::to_string(total));
        });
        const auto points = ambc::aggregate(spec, records);

        const fs::path sub = specs.size() == 1 ? dir : dir / spec.scenario;
        std::error_code ec;
        fs::create_directories(sub, ec);
        if (ec) throw IoError("cannot create " + sub.string());
        write_json(sub / "spec.json", ambc::to_json(spec));
        write_file(sub / "runs.csv", [&](std::ostream& os) { ambc::write_records_csv(os, records); });
        write_file(sub / "aggregate.csv", [&](std::ostream& os) { ambc::write_aggregate_csv(os, points); });

        json pts = json::array();
        for (const auto& p : points)
            pts.push_back({{"value", p.value},
                           {"mean_joint_q", p.n_feasible ? json(p.mean_joint_q) : json()},
                           {"mean_bench_q", p.n_bench_feasible ? json(p.mean_bench_q) : json()},
                           {"n_feasible", p.n_feasible},
                           {"n_bench_feasible", p.n_bench_feasible},
                           {"runs", p.runs}});
        summary.push_back({{"scenario", spec.scenario},
                           {"sweep_var", ambc::sweep_variable_name(spec.variable)},
                           {"output", sub.string()},
                           {"points", pts}});
    }
    std::cout << summary.dump() << '\n';
    return exit_ok;
}

int run_validate(const Common& c, const std::string& state_path, std::uint64_t seed)
{
    const auto file = load(c);
    const auto cfg = ambc::scenario_from(file);
    std::ifstream in(state_path);
    if (!in) throw IoError("cannot open state file " + state_path);
    ambc::AllocationState state;
    try {
        state = ambc::state_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ambc::ConfigError(state_path, 0, "", std::string("malformed JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ambc::ConfigError(state_path, 0, "", e.what());
    }
    const auto M = static_cast<Eigen::Index>(cfg.num_bds);
    const auto N = static_cast<Eigen::Index>(cfg.num_subcarriers);
    if (state.tau.size() != M || state.alpha.size() != M || state.power.rows() != M || state.power.cols() != N)
        throw ambc::ConfigError(state_path, 0, "", "state dimensions do not match the scenario");

    const auto report = ambc::check_feasibility(state, draw_gains(cfg, seed), cfg);
    json out = ambc::to_json(report);
    out["seed"] = seed;
    out["objective"] = state.objective;
    std::cout << out.dump(2) << '\n';
    return report.feasible ? exit_ok : exit_infeasible;
}

int run_dump_channels(const Common& c, std::uint64_t seed)
{
    const auto file = load(c);
    const auto cfg = ambc::scenario_from(file);
    const auto taps = ambc::sample_taps(cfg, seed);
    const auto grid = ambc::frequency_response(taps, cfg.num_subcarriers);
    if (c.out.empty()) {
        ambc::write_channels_csv(std::cout, taps, grid);
    } else {
        const fs::path dir = output_dir(c, "");
        write_file(dir / "channels.csv", [&](std::ostream& os) { ambc::write_channels_csv(os, taps, grid); });
        std::cout << json{{"output", (dir / "channels.csv").string()}}.dump() << '\n';
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Max-min throughput design for full-duplex OFDM backscatter networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ambc 1.0");

    // one argument block per subcommand: CLI11 resets variables bound by subcommands that did not run
    struct Args
    {
        Common common;
        std::uint64_t seed = 1;
        unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
        std::string init = "feasible";
        std::string state_path;
    };
    Args solve_args, bench_args, sweep_args, validate_args, dump_args;

    auto add_common = [](CLI::App* sub, Args& a, bool with_out) {
        sub->add_option("-c,--config", a.common.config, "Scenario config file")->required();
        sub->add_option("--set", a.common.overrides, "Override a config key (key=value), repeatable");
        if (with_out)
            sub->add_option("-o,--out", a.common.out, "Output directory (default $AMBC_OUT_ROOT/<run> or runs/<run>)");
        sub->add_flag("-v,--verbose", a.common.verbosity, "Log to stderr; repeat for more");
    };
    auto add_seed = [](CLI::App* sub, Args& a, const char* what) {
        sub->add_option("-s,--seed", a.seed, what)->capture_default_str();
    };
    auto add_init = [](CLI::App* sub, Args& a) {
        sub->add_option("--init", a.init, "Starting point of the joint design")
            ->check(CLI::IsMember({"feasible", "default", "benchmark"}))
            ->capture_default_str();
    };

    auto* solve = app.add_subcommand("solve", "Solve one channel realization");
    add_common(solve, solve_args, true);
    add_seed(solve, solve_args, "Channel seed");
    add_init(solve, solve_args);

    auto* bench = app.add_subcommand("bench", "Joint design versus the equal-allocation benchmark on one realization");
    add_common(bench, bench_args, true);
    add_seed(bench, bench_args, "Channel seed");
    add_init(bench, bench_args);

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep described by the config's sweep.* and family.* keys");
    add_common(sweep, sweep_args, true);
    sweep->add_option("-j,--jobs", sweep_args.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Check a saved allocation against every constraint");
    add_common(validate, validate_args, false);
    validate->add_option("--state", validate_args.state_path, "AllocationState JSON")->required();
    add_seed(validate, validate_args, "Channel seed the state was solved for");

    auto* dump = app.add_subcommand("dump-channels", "Write taps and frequency responses of one realization as CSV");
    add_common(dump, dump_args, true);
    add_seed(dump, dump_args, "Channel seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        auto run = [&](Args& a, auto&& fn) {
            verbosity = a.common.verbosity;
            return fn(a);
        };
        if (solve->parsed()) return run(solve_args, [](Args& a) { return run_solve(a.common, a.seed, a.init); });
        if (bench->parsed()) return run(bench_args, [](Args& a) { return run_bench(a.common, a.seed, a.init); });
        if (sweep->parsed()) return run(sweep_args, [](Args& a) { return run_sweep(a.common, a.jobs); });
        if (validate->parsed())
            return run(validate_args, [](Args& a) { return run_validate(a.common, a.state_path, a.seed); });
        if (dump->parsed()) return run(dump_args, [](Args& a) { return run_dump_channels(a.common, a.seed); });
    } catch (const ambc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_usage;
}
