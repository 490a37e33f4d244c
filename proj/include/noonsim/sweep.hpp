#pragma once

// Parameter x time fidelity grids, built-in figure presets, and CSV/JSON output.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "noonsim/config.hpp"
#include "noonsim/dynamics.hpp"
#include "noonsim/fidelity.hpp"
#include "noonsim/model.hpp"
#include "noonsim/trajectories.hpp"

namespace noonsim {

inline constexpr const char* kVersion = "0.1.0";

/// Outcome of one parameter value (one row of the grid).
struct RowDiagnostics {
    bool ok = true;
    std::string message;
    std::vector<std::string> warnings;
    IntegrationStats stats;
    MasterDiagnostics master;          // method = master
    std::vector<double> std_error;     // method = trajectories, one per time
};

struct ResultGrid {
    std::string parameter;
    Unit reference = Unit::G;
    std::vector<double> parameter_values;
    std::vector<double> times;
    std::vector<std::vector<double>> fidelity;  // [row][time]; NaN in failed rows
    std::vector<RowDiagnostics> rows;
    Json manifest;

    std::size_t failed_rows() const {
        std::size_t n = 0;
        for (const auto& r : rows) n += r.ok ? 0 : 1;
        return n;
    }
};

struct MaxCell {
    double value = 0.0;
    std::size_t row = 0;
    std::size_t col = 0;
    double parameter = 0.0;
    double t = 0.0;
};

/// Global maximum over finite cells; ties go to the lowest (row, col).
inline MaxCell find_max(const ResultGrid& grid) {
    if (grid.fidelity.empty() || grid.fidelity.front().empty()) throw Error("find_max on an empty grid");
    MaxCell best;
    bool found = false;
    for (std::size_t r = 0; r < grid.fidelity.size(); ++r)
        for (std::size_t c = 0; c < grid.fidelity[r].size(); ++c) {
            const double v = grid.fidelity[r][c];
            if (std::isfinite(v) && (!found || v > best.value)) {
                best = {v, r, c, grid.parameter_values.at(r), grid.times.at(c)};
                found = true;
            }
        }
    if (!found) throw NumericalError("find_max: every cell failed");
    return best;
}

namespace detail {

struct PreparedRun {
    SpacePtr space;
    StateVector psi0;
    StateVector target;
};

inline PreparedRun prepare(const SweepSpec& spec) {
    PreparedRun p;
    p.space = make_space(spec.layout(), spec.excitations());
    p.psi0 = build_initial_state(spec.initial, p.space);
    p.target = build_noon_state(spec.target, p.space);
    return p;
}

inline void run_row(const SweepSpec& spec, const PreparedRun& prep, double value, unsigned traj_threads,
                    std::vector<double>& out, RowDiagnostics& diag) {
    const SchemeConfig cfg = scheme_config(spec, value);
    diag.warnings = std::visit([](const auto& c) { return c.validate(); }, cfg);
    const OperatorSet ops = build_operators(cfg, prep.space);
    const TimeGrid grid = spec.time_grid();
    out.assign(spec.time.points, std::numeric_limits<double>::quiet_NaN());
    switch (spec.method) {
        case Method::NoJump: {
            if (spec.initial.excitations() != spec.target.photon_number)
                throw ConfigError("method", "nojump needs the target in the initial excitation sector; use master");
            const auto sol = propagate_nojump(ops, prep.psi0, grid);
            diag.stats = sol.stats;
            for (std::size_t k = 0; k < sol.states.size(); ++k) out[k] = fidelity_pure(sol.states[k], prep.target);
            break;
        }
        case Method::Master: {
            const auto sol = master_solve(ops, pure_density(prep.psi0), grid);
            diag.stats = sol.stats;
            diag.master = sol.diagnostics;
            for (std::size_t k = 0; k < sol.states.size(); ++k) out[k] = fidelity_pure(sol.states[k], prep.target);
            break;
        }
        case Method::Trajectories: {
            TrajectoryConfig tc = spec.trajectories;
            tc.threads = traj_threads;
            tc.keep_events = false;
            for (auto& w : tc.validate(ops)) diag.warnings.push_back(std::move(w));
            const auto res = run_trajectories(ops, prep.psi0, grid, tc, {Observable::fidelity("fidelity", prep.target)});
            out = res.mean[0];
            diag.std_error = res.std_error[0];
            break;
        }
    }
}

}  // namespace detail

/// Evaluates every row of the grid. Rows run independently on `spec.threads`
/// workers; a failing row is recorded with its message and NaN fidelities.
inline ResultGrid run_sweep(const SweepSpec& spec) {
    spec.validate();
    ResultGrid grid;
    grid.parameter = spec.sweep_parameter;
    grid.reference = spec.reference;
    grid.parameter_values = spec.sweep.values();
    grid.times = spec.time.values();
    grid.manifest = Json{{"version", kVersion}, {"seed", spec.trajectories.seed}, {"config", spec_to_json(spec)}};

    const auto prep = detail::prepare(spec);
    const std::size_t rows = grid.parameter_values.size();
    grid.fidelity.resize(rows);
    grid.rows.resize(rows);
    const unsigned workers = std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(rows)));
    const unsigned traj_threads = rows == 1 ? spec.threads : 1;

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t r = next++; r < rows; r = next++) {
            auto& diag = grid.rows[r];
            try {
                detail::run_row(spec, prep, grid.parameter_values[r], traj_threads, grid.fidelity[r], diag);
            } catch (const std::exception& e) {
                diag.ok = false;
                diag.message = e.what();
                grid.fidelity[r].assign(grid.times.size(), std::numeric_limits<double>::quiet_NaN());
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < workers; ++k) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// `param_value,t,fidelity` rows after a `#` header carrying the manifest.
inline void emit_csv(const ResultGrid& grid, std::ostream& os) {
    const char* unit = detail::unit_name(grid.reference);
    os << "# noonsim " << grid.manifest.value("version", std::string(kVersion)) << '\n';
    os << "# config: " << grid.manifest.at("config").dump() << '\n';
    os << "# parameter: " << grid.parameter << " in units of " << unit << '\n';
    os << "# time: units of 1/" << unit << '\n';
    os << "# failed_rows: " << grid.failed_rows() << '\n';
    for (std::size_t r = 0; r < grid.rows.size(); ++r)
        if (!grid.rows[r].ok) os << "# row " << r << " failed: " << grid.rows[r].message << '\n';
    os << "param_value,t,fidelity\n";
    for (std::size_t r = 0; r < grid.parameter_values.size(); ++r)
        for (std::size_t c = 0; c < grid.times.size(); ++c)
            os << format_number(grid.parameter_values[r]) << ',' << format_number(grid.times[c]) << ','
               << format_number(grid.fidelity[r][c]) << '\n';
}

inline Json grid_to_json(const ResultGrid& grid) {
    Json rows = Json::array();
    for (const auto& d : grid.rows) {
        Json r{{"status", d.ok ? "ok" : "failed"},
               {"message", d.message},
               {"warnings", d.warnings},
               {"accepted_steps", d.stats.accepted},
               {"rejected_steps", d.stats.rejected},
               {"rhs_evals", d.stats.rhs_evals}};
        if (std::isfinite(d.master.min_eigenvalue))
            r["master"] = {{"max_trace_error", d.master.max_trace_error},
                           {"max_hermiticity_error", d.master.max_hermiticity_error},
                           {"min_eigenvalue", d.master.min_eigenvalue}};
        if (!d.std_error.empty()) r["std_error"] = d.std_error;
        rows.push_back(std::move(r));
    }
    Json fid = Json::array();
    for (const auto& row : grid.fidelity) {
        Json jr = Json::array();
        for (double v : row) jr.push_back(std::isnan(v) ? Json(nullptr) : Json(v));
        fid.push_back(std::move(jr));
    }
    return Json{{"manifest", grid.manifest},
                {"parameter", grid.parameter},
                {"reference", detail::unit_name(grid.reference)},
                {"parameter_values", grid.parameter_values},
                {"times", grid.times},
                {"fidelity", fid},
                {"rows", rows}};
}

inline void emit_json(const ResultGrid& grid, std::ostream& os) { os << grid_to_json(grid).dump(2) << '\n'; }

inline ResultGrid grid_from_json(const Json& j) {
    ResultGrid g;
    g.manifest = j.at("manifest");
    g.parameter = j.at("parameter").get<std::string>();
    g.reference = j.at("reference").get<std::string>() == "kappa" ? Unit::Kappa : Unit::G;
    g.parameter_values = j.at("parameter_values").get<std::vector<double>>();
    g.times = j.at("times").get<std::vector<double>>();
    for (const auto& row : j.at("fidelity")) {
        std::vector<double> v;
        for (const auto& x : row) v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
        g.fidelity.push_back(std::move(v));
    }
    for (const auto& r : j.at("rows")) {
        RowDiagnostics d;
        d.ok = r.at("status").get<std::string>() == "ok";
        d.message = r.value("message", std::string());
        d.warnings = r.value("warnings", std::vector<std::string>());
        d.stats.accepted = r.value("accepted_steps", std::size_t{0});
        d.stats.rejected = r.value("rejected_steps", std::size_t{0});
        d.stats.rhs_evals = r.value("rhs_evals", std::size_t{0});
        if (r.contains("master")) {
            d.master.max_trace_error = r["master"].at("max_trace_error").get<double>();
            d.master.max_hermiticity_error = r["master"].at("max_hermiticity_error").get<double>();
            d.master.min_eigenvalue = r["master"].at("min_eigenvalue").get<double>();
        }
        if (r.contains("std_error")) d.std_error = r["std_error"].get<std::vector<double>>();
        g.rows.push_back(std::move(d));
    }
    return g;
}

/// Reads a run specification from a config file, a JSON result, or a CSV result
/// (via its `# config:` header line).
inline SweepSpec spec_from_text(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '#') {
        std::istringstream in(text);
        std::string line;
        const std::string key = "# config: ";
        while (std::getline(in, line))
            if (line.rfind(key, 0) == 0) return spec_from_json(Json::parse(line.substr(key.size())));
        throw ConfigError("", "CSV result carries no '# config:' line");
    }
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("manifest")) return spec_from_json(j["manifest"].at("config"));
    return spec_from_json(j);
}

// ---------------------------------------------------------------------------
// Figure presets

namespace detail {

inline NoonTarget noon(int n, std::vector<std::string> left, std::vector<std::string> right) {
    NoonTarget t;
    t.photon_number = n;
    t.left_group = std::move(left);
    t.right_group = std::move(right);
    return t;
}

inline SweepSpec fig_base(const std::string& name) {
    SweepSpec s;
    s.name = name;
    s.scheme = SchemeKind::ArrayI;
    s.size = 2;
    s.reference = Unit::G;
    s.sweep_parameter = "kappa";
    s.sweep = {0.0, 1.5, 151};
    s.time = {0.0, 6.0, 301};
    s.detuning = {0.5, Unit::G, 0.0};
    s.initial.noon = noon(1, {"s1"}, {"s2"});
    s.target = noon(1, {"a1", "a2"}, {"a3", "a4"});
    return s;
}

inline SweepSpec coupling_sweep(SweepSpec s) {
    s.reference = Unit::Kappa;
    s.sweep_parameter = "g";
    s.sweep = {0.0, 10.0, 151};
    s.kappa = {1.0, Unit::Abs, 0.0};
    s.g = {1.0, Unit::Abs, 0.0};
    return s;
}

inline SweepSpec two_photon_array(const std::string& name) {
    SweepSpec s = fig_base(name);
    s.size = 4;
    s.initial.noon = noon(2, {"s1", "s2"}, {"s3", "s4"});
    s.target = noon(2, {"a1", "a2", "a3", "a4"}, {"a5", "a6", "a7", "a8"});
    return s;
}

inline SweepSpec two_photon_rings(const std::string& name) {
    SweepSpec s = fig_base(name);
    s.scheme = SchemeKind::DdiII;
    s.size = 2;
    s.initial.noon = noon(2, {"s1", "s2"}, {"s3", "s4"});
    s.target = noon(2, {"a1", "a2"}, {"a3", "a4"});
    s.xi = {0.5, Unit::G, 0.0};
    return s;
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c",
                                                "fig5a", "fig5b", "fig5c", "fig6a", "fig6b", "fig6c"};
    return names;
}

/// Built-in panel configurations. Every preset starts from the emitter N00N
/// state; `description` lists the parameters that had to be assumed.
inline SweepSpec preset(const std::string& name) {
    using detail::noon;
    if (name == "fig3a") {
        auto s = detail::fig_base(name);
        s.target = noon(1, {"s1"}, {"s2"});
        s.description = "single excitation, emitter target {s1}|{s2}; detuning 0.5g, kappa/g in [0,1.5]";
        return s;
    }
    if (name == "fig3b") {
        auto s = detail::fig_base(name);
        s.description = "single excitation, mode target {a1,a2}|{a3,a4}; detuning 0.5g, kappa/g in [0,1.5]";
        return s;
    }
    if (name == "fig3c") {
        auto s = detail::fig_base(name);
        s.target = noon(1, {"s1", "a1", "a2"}, {"s2", "a3", "a4"});
        s.description = "single excitation, hybrid target {s1,a1,a2}|{s2,a3,a4}; detuning 0.5g, kappa/g in [0,1.5]";
        return s;
    }
    if (name == "fig4a") {
        auto s = detail::coupling_sweep(detail::fig_base(name));
        s.description =
            "single excitation, mode target; g/kappa in [0,10] with time in units of 1/kappa (assumed), "
            "detuning 0.5g";
        return s;
    }
    if (name == "fig4b") {
        auto s = detail::fig_base(name);
        s.detuning = {5.0, Unit::G, 0.0};
        s.description = "single excitation, mode target; far detuned (5g), kappa/g in [0,1.5]";
        return s;
    }
    if (name == "fig4c") {
        auto s = detail::fig_base(name);
        s.eta = {1.5, Unit::G, 0.0};
        s.description = "single excitation, mode target; backscattering 1.5g, detuning 0.5g, kappa/g in [0,1.5]";
        return s;
    }
    if (name == "fig5a") {
        auto s = detail::two_photon_array(name);
        s.detuning = {5.0, Unit::G, 0.0};
        s.description = "two excitations, 4-cavity array, target {a1..a4}|{a5..a8}; detuning 5g, kappa/g in [0,1.5]";
        return s;
    }
    if (name == "fig5b") {
        auto s = detail::two_photon_array(name);
        s.eta = {1.5, Unit::G, 0.0};
        s.description =
            "two excitations, 4-cavity array; backscattering 1.5g, detuning 0.5g (assumed), kappa/g in [0,1.5]";
        return s;
    }
    if (name == "fig5c") {
        auto s = detail::coupling_sweep(detail::two_photon_array(name));
        s.description =
            "two excitations, 4-cavity array; g/kappa in [0,10] (assumed), time in units of 1/kappa, detuning 0.5g";
        return s;
    }
    if (name == "fig6a") {
        auto s = detail::two_photon_rings(name);
        s.detuning = {5.0, Unit::G, 0.0};
        s.description = "two excitations, two rings with 2 emitters each; detuning 5g, DDI 0.5g, kappa/g in [0,1.5]";
        return s;
    }
    if (name == "fig6b") {
        auto s = detail::two_photon_rings(name);
        s.eta = {1.5, Unit::G, 0.0};
        s.description =
            "two excitations, two rings; backscattering 1.5g, DDI 0.5g, detuning 0.5g (assumed), kappa/g in [0,1.5]";
        return s;
    }
    if (name == "fig6c") {
        auto s = detail::coupling_sweep(detail::two_photon_rings(name));
        s.xi = {0.5, Unit::Kappa, 0.0};
        s.description =
            "two excitations, two rings; DDI 0.5kappa, g/kappa in [0,10] (assumed), time in units of 1/kappa, "
            "detuning 0.5g";
        return s;
    }
    throw ConfigError("preset", "unknown preset '" + name + "'");
}

}  // namespace noonsim
