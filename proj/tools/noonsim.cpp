// Command-line driver: fidelity sweeps, figure presets, operator dumps and trajectory runs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "noonsim/noonsim.hpp"

namespace {

using namespace noonsim;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
    std::string out;
    std::string format = "csv";
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;
    std::string method;
    std::string dump_basis;
    std::string dump_amplitudes;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// `source` is a preset name or a path to a config/result file.
SweepSpec load_spec(const std::string& source) {
    for (const auto& n : preset_names())
        if (n == source) return preset(n);
    return spec_from_text(read_file(source));
}

unsigned env_threads() {
    if (const char* v = std::getenv("NOONSIM_THREADS")) {
        try {
            const int n = std::stoi(v);
            if (n >= 1) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
        throw ConfigError("NOONSIM_THREADS", "expected a positive integer");
    }
    return 0;
}

void apply_overrides(SweepSpec& spec, const CommonOptions& o) {
    if (unsigned t = env_threads()) spec.threads = t;
    if (o.threads > 0) spec.threads = o.threads;
    if (o.seed) spec.trajectories.seed = *o.seed;
    if (!o.method.empty()) spec.method = parse_method(o.method);
    spec.validate();
}

template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    fn(out);
    if (!out) throw Error("write failed for '" + path + "'");
}

void write_debug_dumps(const SweepSpec& spec, const CommonOptions& o) {
    if (o.dump_basis.empty() && o.dump_amplitudes.empty()) return;
    const auto space = make_space(spec.layout(), spec.excitations());
    if (!o.dump_basis.empty()) with_output(o.dump_basis, [&](std::ostream& os) { dump_basis_jsonl(*space, os); });
    if (!o.dump_amplitudes.empty()) {
        const auto ops = build_operators(scheme_config(spec, spec.sweep.start), space);
        const auto sol = propagate_nojump(ops, build_initial_state(spec.initial, space), spec.time_grid());
        with_output(o.dump_amplitudes, [&](std::ostream& os) { write_amplitudes_csv(sol.states, os); });
    }
}

int run_spec(SweepSpec spec, const CommonOptions& o) {
    apply_overrides(spec, o);
    if (o.format != "csv" && o.format != "json") throw ConfigError("--format", "expected csv or json");
    write_debug_dumps(spec, o);
    const auto grid = run_sweep(spec);
    with_output(o.out, [&](std::ostream& os) {
        if (o.format == "json")
            emit_json(grid, os);
        else
            emit_csv(grid, os);
    });
    for (const auto& r : grid.rows)
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    if (grid.failed_rows() > 0) {
        std::cerr << "error: " << grid.failed_rows() << " row(s) failed\n";
        return kExitNumerical;
    }
    try {
        const auto m = find_max(grid);
        std::cerr << "max fidelity " << format_number(m.value) << " at " << grid.parameter << "="
                  << format_number(m.parameter) << ", t=" << format_number(m.t) << '\n';
    } catch (const Error&) {
    }
    return 0;
}

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--out,-o", o.out, "Output file (default stdout)");
    app->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--threads", o.threads, "Worker threads (overrides NOONSIM_THREADS)");
    app->add_option("--seed", o.seed, "Trajectory seed");
    app->add_option("--method", o.method, "nojump, master or trajectories")
        ->check(CLI::IsMember({"nojump", "master", "trajectories"}));
    app->add_option("--dump-basis", o.dump_basis, "Write the basis as JSON lines to this file");
    app->add_option("--dump-amplitudes", o.dump_amplitudes,
                    "Write no-jump amplitudes (first sweep value) as CSV to this file");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dissipative N00N-state dynamics in cascaded cavity-QED networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    CommonOptions run_opts;
    std::string config_path;
    auto* run = app.add_subcommand("run", "Run a sweep from a config (or a previous result's manifest)");
    run->add_option("config", config_path, "Config or result file")->required();
    add_common(run, run_opts);

    CommonOptions preset_opts;
    std::string preset_name;
    bool list = false, print_config = false;
    auto* pre = app.add_subcommand("preset", "Run a built-in figure preset");
    pre->add_option("name", preset_name, "Preset name");
    pre->add_flag("--list", list, "List presets");
    pre->add_flag("--print-config", print_config, "Print the preset config instead of running it");
    add_common(pre, preset_opts);

    std::string ops_source, ops_out;
    std::optional<double> ops_param;
    auto* dump = app.add_subcommand("dump-ops", "Dump dense operators as JSON (re/im pairs)");
    dump->add_option("config", ops_source, "Config file or preset name")->required();
    dump->add_option("--param", ops_param, "Swept parameter value (default: sweep start)");
    dump->add_option("--out,-o", ops_out, "Output file (default stdout)");

    std::string traj_source, traj_out, traj_events;
    std::optional<double> traj_param;
    std::optional<std::size_t> n_traj;
    std::optional<double> traj_dt;
    CommonOptions traj_opts;
    auto* traj = app.add_subcommand("traj", "Quantum-trajectory ensemble at one parameter value");
    traj->add_option("config", traj_source, "Config file or preset name")->required();
    traj->add_option("--param", traj_param, "Swept parameter value (default: sweep start)");
    traj->add_option("--n-traj", n_traj, "Number of trajectories");
    traj->add_option("--dt", traj_dt, "Jump-decision step");
    traj->add_option("--events", traj_events, "Write jump events as JSON lines to this file");
    traj->add_option("--out,-o", traj_out, "Output CSV (default stdout)");
    traj->add_option("--threads", traj_opts.threads, "Worker threads");
    traj->add_option("--seed", traj_opts.seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (run->parsed()) return run_spec(load_spec(config_path), run_opts);

        if (pre->parsed()) {
            if (list) {
                for (const auto& n : preset_names()) std::cout << n << "  " << preset(n).description << '\n';
                return 0;
            }
            if (preset_name.empty()) throw ConfigError("preset", "missing preset name (see --list)");
            auto spec = preset(preset_name);
            if (print_config) {
                apply_overrides(spec, preset_opts);
                with_output(preset_opts.out, [&](std::ostream& os) { os << spec_to_json(spec).dump(2) << '\n'; });
                return 0;
            }
            return run_spec(spec, preset_opts);
        }

        if (dump->parsed()) {
            const auto spec = load_spec(ops_source);
            const auto space = make_space(spec.layout(), spec.excitations());
            const auto ops = build_operators(scheme_config(spec, ops_param.value_or(spec.sweep.start)), space);
            with_output(ops_out, [&](std::ostream& os) { os << operators_to_json(ops).dump() << '\n'; });
            return 0;
        }

        if (traj->parsed()) {
            auto spec = load_spec(traj_source);
            apply_overrides(spec, traj_opts);
            if (n_traj) spec.trajectories.n_traj = *n_traj;
            if (traj_dt) spec.trajectories.dt = *traj_dt;
            TrajectoryConfig tc = spec.trajectories;
            tc.threads = spec.threads;
            tc.keep_events = !traj_events.empty();
            const auto space = make_space(spec.layout(), spec.excitations());
            const auto ops = build_operators(scheme_config(spec, traj_param.value_or(spec.sweep.start)), space);
            for (const auto& w : tc.validate(ops)) std::cerr << "warning: " << w << '\n';
            std::vector<Observable> obs{Observable::fidelity("fidelity", build_noon_state(spec.target, space))};
            const auto& layout = space->layout();
            for (std::size_t s = 0; s < layout.size(); ++s)
                obs.push_back(Observable::occupation("n_" + layout.slot(s).label, *space, s));
            const auto res = run_trajectories(ops, build_initial_state(spec.initial, space), spec.time_grid(), tc, obs);
            with_output(traj_out, [&](std::ostream& os) { write_ensemble_csv(res, os); });
            if (!traj_events.empty())
                with_output(traj_events, [&](std::ostream& os) { write_events_jsonl(res, ops, os); });
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const BasisError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
