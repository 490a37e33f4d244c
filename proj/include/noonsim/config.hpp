#pragma once

// Run specification (one parameter axis times one time axis) and its JSON form.
//
// All quantities are expressed in units of a reference rate (g or kappa) whose
// value is fixed to 1; times are in units of 1/reference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "noonsim/core.hpp"
#include "noonsim/dynamics.hpp"
#include "noonsim/fidelity.hpp"
#include "noonsim/model.hpp"
#include "noonsim/trajectories.hpp"

namespace noonsim {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class SchemeKind { ArrayI, DdiII };
enum class Unit { Abs, G, Kappa };
enum class Method { NoJump, Master, Trajectories };

/// Sign convention of the emitter/cavity detuning parameter.
enum class DetuningConvention {
    CavityMinusEmitter,  // omega_c = omega_eg + detuning
    EmitterMinusCavity,  // omega_eg = omega_c + detuning
};

/// A fixed physical quantity: value, measured in absolute units or relative to g or kappa.
struct Quantity {
    double value = 0.0;
    Unit per = Unit::Abs;
    double phase = 0.0;  // only meaningful for g
};

struct Axis {
    double start = 0.0;
    double stop = 1.0;
    std::size_t points = 2;

    std::vector<double> values() const {
        std::vector<double> v(points);
        if (points == 1) {
            v[0] = start;
            return v;
        }
        const double step = (stop - start) / static_cast<double>(points - 1);
        for (std::size_t k = 0; k < points; ++k) v[k] = start + step * static_cast<double>(k);
        v.back() = stop;
        return v;
    }
};

/// Initial state: either an emitter/mode N00N state or one occupation configuration.
struct InitialState {
    std::optional<NoonTarget> noon;
    std::vector<std::pair<std::string, int>> occupations;

    int excitations() const {
        if (noon) return noon->photon_number;
        int m = 0;
        for (const auto& [label, n] : occupations) m += n;
        return m;
    }
};

struct SweepSpec {
    std::string name;
    SchemeKind scheme = SchemeKind::ArrayI;
    int size = 2;  // subsystems (scheme I) or emitters per cavity (scheme II)
    Unit reference = Unit::G;
    Quantity g{1.0, Unit::Abs, 0.0};
    Quantity kappa{0.0, Unit::Abs, 0.0};
    Quantity detuning{0.0, Unit::Abs, 0.0};
    Quantity eta{0.0, Unit::Abs, 0.0};
    Quantity xi{0.0, Unit::Abs, 0.0};
    Quantity gamma{0.0, Unit::Abs, 0.0};
    DetuningConvention convention = DetuningConvention::CavityMinusEmitter;
    std::string sweep_parameter = "kappa";
    Axis sweep{0.0, 1.5, 151};
    Axis time{0.0, 6.0, 301};
    InitialState initial;
    NoonTarget target;
    Method method = Method::NoJump;
    Tolerance tolerance{};
    Stepper stepper = Stepper::Dopri5;
    double rk4_step = 1e-3;
    TrajectoryConfig trajectories{};
    unsigned threads = 1;
    std::string description;

    void validate() const;
    int excitations() const { return std::max(initial.excitations(), target.photon_number); }
    SlotLayout layout() const { return scheme == SchemeKind::ArrayI ? SlotLayout::array(size) : SlotLayout::ddi(size); }
    TimeGrid time_grid() const {
        TimeGrid grid;
        grid.t_start = time.start;
        grid.t_end = time.stop;
        grid.n_points = time.points;
        grid.tol = tolerance;
        grid.stepper = stepper;
        grid.rk4_step = rk4_step;
        return grid;
    }
};

inline const std::vector<std::string>& sweepable_parameters() {
    static const std::vector<std::string> names{"g", "kappa", "detuning", "eta", "xi", "gamma"};
    return names;
}

namespace detail {

inline const char* unit_name(Unit u) {
    switch (u) {
        case Unit::G: return "g";
        case Unit::Kappa: return "kappa";
        default: return "abs";
    }
}

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Master: return "master";
        case Method::Trajectories: return "trajectories";
        default: return "nojump";
    }
}

inline Quantity& quantity(SweepSpec& s, const std::string& name) {
    if (name == "g") return s.g;
    if (name == "kappa") return s.kappa;
    if (name == "detuning") return s.detuning;
    if (name == "eta") return s.eta;
    if (name == "xi") return s.xi;
    if (name == "gamma") return s.gamma;
    throw ConfigError("sweep.parameter", "unknown parameter '" + name + "'");
}

inline const Quantity& quantity(const SweepSpec& s, const std::string& name) {
    return quantity(const_cast<SweepSpec&>(s), name);
}

}  // namespace detail

inline Method parse_method(const std::string& s) {
    if (s == "nojump") return Method::NoJump;
    if (s == "master") return Method::Master;
    if (s == "trajectories") return Method::Trajectories;
    throw ConfigError("method", "expected nojump, master or trajectories, got '" + s + "'");
}

inline std::string to_string(Method m) { return detail::method_name(m); }

inline void SweepSpec::validate() const {
    if (size < 1) throw ConfigError("scheme.size", "must be >= 1");
    if (reference == Unit::Abs) throw ConfigError("units.reference", "must be g or kappa");
    const auto& names = sweepable_parameters();
    if (std::find(names.begin(), names.end(), sweep_parameter) == names.end())
        throw ConfigError("sweep.parameter", "unknown parameter '" + sweep_parameter + "'");
    if (sweep_parameter == detail::unit_name(reference))
        throw ConfigError("sweep.parameter", "the reference unit cannot be swept");
    if (scheme == SchemeKind::ArrayI && sweep_parameter == "xi")
        throw ConfigError("sweep.parameter", "xi only exists in the ddi scheme");
    if (!std::isfinite(sweep.start) || !std::isfinite(sweep.stop)) throw ConfigError("sweep", "non-finite range");
    if (sweep.points < 1) throw ConfigError("sweep.points", "must be >= 1");
    if (sweep.points == 1 && sweep.start != sweep.stop)
        throw ConfigError("sweep.points", "a single point needs start == stop");
    if (!std::isfinite(time.start) || !std::isfinite(time.stop)) throw ConfigError("time", "non-finite range");
    if (time.points < 2) throw ConfigError("time.points", "must be >= 2");
    if (!(time.stop > time.start)) throw ConfigError("time", "stop must exceed start");
    if (time.start != 0.0) throw ConfigError("time.start", "evolution starts from the initial state at t = 0");
    for (const auto& n : names) {
        const auto& q = detail::quantity(*this, n);
        if (!std::isfinite(q.value)) throw ConfigError("parameters." + n, "non-finite value");
        if (q.per == Unit::G && n == "g") throw ConfigError("parameters.g", "cannot be given per g");
        if (q.per == Unit::Kappa && n == "kappa") throw ConfigError("parameters.kappa", "cannot be given per kappa");
    }
    const std::string other = reference == Unit::G ? "kappa" : "g";
    if (sweep_parameter != other && detail::quantity(*this, other).per != Unit::Abs &&
        detail::quantity(*this, other).per != reference)
        throw ConfigError("parameters." + other, "must be absolute or relative to the reference unit");
    if (!(tolerance.rtol > 0.0) || !(tolerance.atol > 0.0)) throw ConfigError("integrator", "tolerances must be positive");
    if (!(rk4_step > 0.0)) throw ConfigError("integrator.rk4_step", "must be positive");
    if (threads < 1) throw ConfigError("threads", "must be >= 1");

    const auto lay = layout();
    if (initial.noon) {
        try {
            initial.noon->validate(lay);
        } catch (const ConfigError& e) {
            throw ConfigError("initial.noon", e.what());
        }
    } else {
        if (initial.occupations.empty()) throw ConfigError("initial", "needs a noon state or occupations");
        for (const auto& [label, n] : initial.occupations) {
            auto idx = lay.find(label);
            if (!idx) throw ConfigError("initial.occupations", "unknown slot '" + label + "'");
            if (n < 0 || (lay.is_emitter(*idx) && n > 1))
                throw ConfigError("initial.occupations." + label, "invalid occupation");
        }
    }
    try {
        target.validate(lay);
    } catch (const ConfigError& e) {
        throw ConfigError("target", e.what());
    }
    if (initial.excitations() < 1) throw ConfigError("initial", "must carry at least one excitation");
}

/// Physical parameters at one value of the swept axis (reference rate = 1).
struct ResolvedParameters {
    Complex g;
    double kappa, detuning, eta, xi, gamma;
};

inline ResolvedParameters resolve_parameters(const SweepSpec& spec, double axis_value) {
    auto raw = [&](const std::string& name) -> std::optional<double> {
        if (name == spec.sweep_parameter) return axis_value;
        if (name == detail::unit_name(spec.reference)) return 1.0;
        return std::nullopt;
    };
    // g and kappa first: each is the reference, the swept value, or fixed
    // (relative to the reference, whose value is 1).
    const double g = raw("g").value_or(spec.g.value);
    const double kappa = raw("kappa").value_or(spec.kappa.value);
    auto derived = [&](const std::string& name, const Quantity& q) {
        if (auto v = raw(name)) return *v;
        switch (q.per) {
            case Unit::G: return q.value * g;
            case Unit::Kappa: return q.value * kappa;
            default: return q.value;
        }
    };
    ResolvedParameters p;
    p.g = std::polar(g, spec.g.phase);
    p.kappa = kappa;
    p.detuning = derived("detuning", spec.detuning);
    p.eta = derived("eta", spec.eta);
    p.xi = derived("xi", spec.xi);
    p.gamma = derived("gamma", spec.gamma);
    return p;
}

inline SchemeConfig scheme_config(const SweepSpec& spec, const ResolvedParameters& p) {
    const bool cavity_shift = spec.convention == DetuningConvention::CavityMinusEmitter;
    const double w_eg = cavity_shift ? 0.0 : p.detuning;
    const double w_c = cavity_shift ? p.detuning : 0.0;
    if (spec.scheme == SchemeKind::ArrayI) return SchemeIConfig::uniform(spec.size, w_eg, w_c, p.g, p.kappa, p.eta, p.gamma);
    return SchemeIIConfig::uniform(spec.size, w_eg, w_c, p.g, p.kappa, p.eta, p.xi, p.gamma);
}

inline SchemeConfig scheme_config(const SweepSpec& spec, double axis_value) {
    return scheme_config(spec, resolve_parameters(spec, axis_value));
}

inline StateVector build_initial_state(const InitialState& init, const SpacePtr& space) {
    if (init.noon) return build_noon_state(*init.noon, space);
    BasisState s;
    s.occupations.assign(space->layout().size(), 0);
    for (const auto& [label, n] : init.occupations) s.occupations[space->layout().require(label)] += n;
    return basis_vector(space, s);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline const Json& field(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(path.empty() ? key : path + "." + key, "missing field");
    return *it;
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline std::int64_t integer(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<std::int64_t>();
}

inline std::size_t count(const Json& j, const std::string& path) {
    const auto v = integer(j, path);
    if (v < 0) throw ConfigError(path, "must be non-negative");
    return static_cast<std::size_t>(v);
}

inline std::string text(const Json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

inline void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(join(path, it.key()), "unknown field");
    }
}

inline Unit parse_unit(const Json& j, const std::string& path, bool allow_abs) {
    const auto s = text(j, path);
    if (s == "g") return Unit::G;
    if (s == "kappa") return Unit::Kappa;
    if (s == "abs" && allow_abs) return Unit::Abs;
    throw ConfigError(path, allow_abs ? "expected abs, g or kappa" : "expected g or kappa");
}

inline Quantity parse_quantity(const Json& j, const std::string& path) {
    Quantity q;
    if (j.is_number()) {
        q.value = j.get<double>();
        return q;
    }
    check_keys(j, path, {"value", "per", "phase"});
    q.value = number(field(j, "value", path), join(path, "value"));
    if (j.contains("per")) q.per = parse_unit(j["per"], join(path, "per"), true);
    if (j.contains("phase")) q.phase = number(j["phase"], join(path, "phase"));
    return q;
}

inline Json quantity_json(const Quantity& q, bool with_phase) {
    Json j{{"value", q.value}, {"per", unit_name(q.per)}};
    if (with_phase) j["phase"] = q.phase;
    return j;
}

inline std::vector<std::string> labels(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of slot labels");
    std::vector<std::string> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(text(j[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

inline NoonTarget parse_noon(const Json& j, const std::string& path) {
    check_keys(j, path, {"photon_number", "phase", "left", "right", "arm"});
    NoonTarget t;
    t.photon_number = static_cast<int>(integer(field(j, "photon_number", path), join(path, "photon_number")));
    if (j.contains("phase")) t.phase = number(j["phase"], join(path, "phase"));
    t.left_group = labels(field(j, "left", path), join(path, "left"));
    t.right_group = labels(field(j, "right", path), join(path, "right"));
    if (j.contains("arm")) {
        const auto a = text(j["arm"], join(path, "arm"));
        if (a == "symmetric")
            t.arm = ArmState::Symmetric;
        else if (a == "single_slot")
            t.arm = ArmState::SingleSlot;
        else
            throw ConfigError(join(path, "arm"), "expected symmetric or single_slot");
    }
    return t;
}

inline Json noon_json(const NoonTarget& t) {
    return Json{{"photon_number", t.photon_number},
                {"phase", t.phase},
                {"left", t.left_group},
                {"right", t.right_group},
                {"arm", t.arm == ArmState::Symmetric ? "symmetric" : "single_slot"}};
}

inline Axis parse_axis(const Json& j, const std::string& path, std::initializer_list<const char*> extra = {}) {
    std::vector<const char*> keys{"start", "stop", "points"};
    keys.insert(keys.end(), extra.begin(), extra.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }) == keys.end())
            throw ConfigError(join(path, it.key()), "unknown field");
    Axis a;
    a.start = number(field(j, "start", path), join(path, "start"));
    a.stop = number(field(j, "stop", path), join(path, "stop"));
    a.points = count(field(j, "points", path), join(path, "points"));
    return a;
}

}  // namespace detail

/// Parses a schema-1 run configuration. Errors carry the dotted path of the offending field.
inline SweepSpec spec_from_json(const Json& j) {
    using namespace detail;
    check_keys(j, "", {"schema", "name", "description", "scheme", "units", "parameters", "detuning_convention", "sweep",
                       "time", "initial", "target", "method", "integrator", "trajectories", "threads"});
    const auto schema = integer(field(j, "schema", ""), "schema");
    if (schema != kSchemaVersion)
        throw ConfigError("schema", "unsupported version " + std::to_string(schema) + " (expected 1)");
    SweepSpec s;
    if (j.contains("name")) s.name = text(j["name"], "name");
    if (j.contains("description")) s.description = text(j["description"], "description");

    const auto& sch = field(j, "scheme", "");
    check_keys(sch, "scheme", {"type", "size"});
    const auto type = text(field(sch, "type", "scheme"), "scheme.type");
    if (type == "array")
        s.scheme = SchemeKind::ArrayI;
    else if (type == "ddi")
        s.scheme = SchemeKind::DdiII;
    else
        throw ConfigError("scheme.type", "expected array or ddi");
    s.size = static_cast<int>(integer(field(sch, "size", "scheme"), "scheme.size"));

    if (j.contains("units")) {
        check_keys(j["units"], "units", {"reference"});
        s.reference = parse_unit(field(j["units"], "reference", "units"), "units.reference", false);
    }
    if (j.contains("parameters")) {
        const auto& p = j["parameters"];
        check_keys(p, "parameters", {"g", "kappa", "detuning", "eta", "xi", "gamma"});
        for (const auto& name : sweepable_parameters())
            if (p.contains(name)) quantity(s, name) = parse_quantity(p[name], "parameters." + name);
    }
    if (j.contains("detuning_convention")) {
        const auto c = text(j["detuning_convention"], "detuning_convention");
        if (c == "cavity_minus_emitter")
            s.convention = DetuningConvention::CavityMinusEmitter;
        else if (c == "emitter_minus_cavity")
            s.convention = DetuningConvention::EmitterMinusCavity;
        else
            throw ConfigError("detuning_convention", "expected cavity_minus_emitter or emitter_minus_cavity");
    }
    const auto& sw = field(j, "sweep", "");
    s.sweep_parameter = text(field(sw, "parameter", "sweep"), "sweep.parameter");
    s.sweep = parse_axis(sw, "sweep", {"parameter"});
    s.time = parse_axis(field(j, "time", ""), "time");

    const auto& init = field(j, "initial", "");
    check_keys(init, "initial", {"noon", "occupations"});
    if (init.contains("noon") == init.contains("occupations"))
        throw ConfigError("initial", "give exactly one of noon or occupations");
    if (init.contains("noon")) {
        s.initial.noon = parse_noon(init["noon"], "initial.noon");
    } else {
        const auto& occ = init["occupations"];
        if (!occ.is_object()) throw ConfigError("initial.occupations", "expected an object of label: count");
        for (auto it = occ.begin(); it != occ.end(); ++it)
            s.initial.occupations.emplace_back(
                it.key(), static_cast<int>(integer(it.value(), "initial.occupations." + it.key())));
    }
    s.target = parse_noon(field(j, "target", ""), "target");
    if (j.contains("method")) s.method = parse_method(text(j["method"], "method"));

    if (j.contains("integrator")) {
        const auto& in = j["integrator"];
        check_keys(in, "integrator", {"rtol", "atol", "max_steps", "stepper", "rk4_step"});
        if (in.contains("rtol")) s.tolerance.rtol = number(in["rtol"], "integrator.rtol");
        if (in.contains("atol")) s.tolerance.atol = number(in["atol"], "integrator.atol");
        if (in.contains("max_steps")) s.tolerance.max_steps = count(in["max_steps"], "integrator.max_steps");
        if (in.contains("stepper")) {
            const auto st = text(in["stepper"], "integrator.stepper");
            if (st == "dopri5")
                s.stepper = Stepper::Dopri5;
            else if (st == "rk4")
                s.stepper = Stepper::Rk4;
            else
                throw ConfigError("integrator.stepper", "expected dopri5 or rk4");
        }
        if (in.contains("rk4_step")) s.rk4_step = number(in["rk4_step"], "integrator.rk4_step");
    }
    if (j.contains("trajectories")) {
        const auto& tr = j["trajectories"];
        check_keys(tr, "trajectories", {"n_traj", "dt", "seed", "channels"});
        if (tr.contains("n_traj")) s.trajectories.n_traj = count(tr["n_traj"], "trajectories.n_traj");
        if (tr.contains("dt")) s.trajectories.dt = number(tr["dt"], "trajectories.dt");
        if (tr.contains("seed")) {
            if (!tr["seed"].is_number_unsigned() && !tr["seed"].is_number_integer())
                throw ConfigError("trajectories.seed", "expected an integer");
            s.trajectories.seed = tr["seed"].get<std::uint64_t>();
        }
        if (tr.contains("channels") && !tr["channels"].is_null())
            s.trajectories.channels = labels(tr["channels"], "trajectories.channels");
    }
    if (j.contains("threads")) s.threads = static_cast<unsigned>(count(j["threads"], "threads"));
    s.validate();
    return s;
}

inline Json spec_to_json(const SweepSpec& s) {
    using namespace detail;
    Json params = Json::object();
    for (const auto& name : sweepable_parameters())
        params[name] = quantity_json(quantity(s, name), name == "g");
    Json init;
    if (s.initial.noon) {
        init["noon"] = noon_json(*s.initial.noon);
    } else {
        Json occ = Json::object();
        for (const auto& [label, n] : s.initial.occupations) occ[label] = n;
        init["occupations"] = occ;
    }
    Json traj{{"n_traj", s.trajectories.n_traj}, {"dt", s.trajectories.dt}, {"seed", s.trajectories.seed}};
    traj["channels"] = s.trajectories.channels ? Json(*s.trajectories.channels) : Json(nullptr);
    return Json{
        {"schema", kSchemaVersion},
        {"name", s.name},
        {"description", s.description},
        {"scheme", {{"type", s.scheme == SchemeKind::ArrayI ? "array" : "ddi"}, {"size", s.size}}},
        {"units", {{"reference", unit_name(s.reference)}}},
        {"parameters", params},
        {"detuning_convention",
         s.convention == DetuningConvention::CavityMinusEmitter ? "cavity_minus_emitter" : "emitter_minus_cavity"},
        {"sweep",
         {{"parameter", s.sweep_parameter}, {"start", s.sweep.start}, {"stop", s.sweep.stop}, {"points", s.sweep.points}}},
        {"time", {{"start", s.time.start}, {"stop", s.time.stop}, {"points", s.time.points}}},
        {"initial", init},
        {"target", noon_json(s.target)},
        {"method", method_name(s.method)},
        {"integrator",
         {{"rtol", s.tolerance.rtol},
          {"atol", s.tolerance.atol},
          {"max_steps", s.tolerance.max_steps},
          {"stepper", s.stepper == Stepper::Dopri5 ? "dopri5" : "rk4"},
          {"rk4_step", s.rk4_step}}},
        {"trajectories", traj},
    };
}

}  // namespace noonsim
