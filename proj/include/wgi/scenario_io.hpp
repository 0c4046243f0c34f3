#pragma once

// Scenario files (YAML), the built-in scenarios and the gain-bundle emitter.
//
// Every mapping is checked against its allowed keys; a stray or malformed key
// raises ScenarioError carrying the 1-based source line.

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "wgi/errors.hpp"
#include "wgi/simkit.hpp"

namespace wgi {

namespace detail {

inline int node_line(const YAML::Node& n) { return n.Mark().is_null() ? -1 : n.Mark().line + 1; }

inline void check_keys(const YAML::Node& map, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!map.IsMap()) throw ScenarioError("'" + where + "' must be a mapping", node_line(map));
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) {
            const std::string path = where.empty() ? key : where + "." + key;
            throw ScenarioError("unknown key '" + path + "'", node_line(kv.first));
        }
    }
}

inline double as_double(const YAML::Node& n, const std::string& key) {
    if (!n.IsScalar()) throw ScenarioError("'" + key + "' must be a number", node_line(n));
    const auto text = n.Scalar();
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) throw ScenarioError("'" + key + "' is not a number: " + text, node_line(n));
    return v;
}

inline int as_int(const YAML::Node& n, const std::string& key) {
    const double v = as_double(n, key);
    if (v != std::floor(v)) throw ScenarioError("'" + key + "' must be an integer", node_line(n));
    return static_cast<int>(v);
}

inline bool as_bool(const YAML::Node& n, const std::string& key) {
    try {
        return n.as<bool>();
    } catch (const YAML::Exception&) {
        throw ScenarioError("'" + key + "' must be true or false", node_line(n));
    }
}

inline std::string as_string(const YAML::Node& n, const std::string& key) {
    if (!n.IsScalar()) throw ScenarioError("'" + key + "' must be a scalar", node_line(n));
    return n.Scalar();
}

inline ComplexGain as_complex(const YAML::Node& n, const std::string& key) {
    if (n.IsScalar()) return {as_double(n, key), 0.0};
    if (!n.IsSequence() || n.size() != 2) throw ScenarioError("'" + key + "' must be [re, im]", node_line(n));
    return {as_double(n[0], key), as_double(n[1], key)};
}

template <std::size_t N>
std::array<double, N> as_array(const YAML::Node& n, const std::string& key) {
    if (!n.IsSequence() || n.size() != N)
        throw ScenarioError("'" + key + "' must be a list of " + std::to_string(N) + " numbers", node_line(n));
    std::array<double, N> a{};
    for (std::size_t k = 0; k < N; ++k) a[k] = as_double(n[k], key);
    return a;
}

inline void read_plant(const YAML::Node& n, PlantParams& p) {
    check_keys(n, "plant", {"L", "C", "R_ch", "omega", "frequency", "mu_max", "tau_pi"});
    if (n["L"]) p.L = as_double(n["L"], "plant.L");
    if (n["C"]) p.C = as_double(n["C"], "plant.C");
    if (n["R_ch"]) p.R_ch = as_double(n["R_ch"], "plant.R_ch");
    if (n["omega"] && n["frequency"]) throw ScenarioError("give either plant.omega or plant.frequency", node_line(n));
    if (n["omega"]) p.omega = as_double(n["omega"], "plant.omega");
    if (n["frequency"]) p.omega = 2.0 * std::numbers::pi * as_double(n["frequency"], "plant.frequency");
    if (n["mu_max"]) p.mu_max = as_double(n["mu_max"], "plant.mu_max");
    if (n["tau_pi"]) p.tau_pi = as_double(n["tau_pi"], "plant.tau_pi");
}

inline void read_grid(const YAML::Node& n, GridCondition& g, const Rating& r) {
    check_keys(n, "grid", {"v_g_magnitude", "v_g_pu", "X_g", "X_g_pu"});
    if (n["v_g_magnitude"] && n["v_g_pu"]) throw ScenarioError("give either grid.v_g_magnitude or grid.v_g_pu", node_line(n));
    if (n["X_g"] && n["X_g_pu"]) throw ScenarioError("give either grid.X_g or grid.X_g_pu", node_line(n));
    if (n["v_g_magnitude"]) g.v_g_magnitude = as_double(n["v_g_magnitude"], "grid.v_g_magnitude");
    if (n["v_g_pu"]) g.v_g_magnitude = as_double(n["v_g_pu"], "grid.v_g_pu") * r.V_b;
    if (n["X_g"]) g.X_g = as_double(n["X_g"], "grid.X_g");
    if (n["X_g_pu"]) g.X_g = as_double(n["X_g_pu"], "grid.X_g_pu") * r.Z_b();
}

inline void read_controller(const YAML::Node& n, ControllerSettings& c) {
    check_keys(n, "controller", {"v_c_ref", "V_p_ref", "i_max", "delta_p", "vp_filter_settling", "observer_start",
                                 "transitions", "use_dp_i"});
    if (n["v_c_ref"]) c.v_c_ref = as_double(n["v_c_ref"], "controller.v_c_ref");
    if (n["V_p_ref"]) c.V_p_ref = as_double(n["V_p_ref"], "controller.V_p_ref");
    if (n["i_max"]) c.i_max = as_double(n["i_max"], "controller.i_max");
    if (n["delta_p"]) c.delta_p = as_double(n["delta_p"], "controller.delta_p");
    if (n["vp_filter_settling"]) c.vp_filter_settling = as_double(n["vp_filter_settling"], "controller.vp_filter_settling");
    if (n["observer_start"]) {
        const auto s = as_string(n["observer_start"], "controller.observer_start");
        if (s == "precharge") c.observer_start = ObserverStart::AtPrecharge;
        else if (s == "startup") c.observer_start = ObserverStart::AtStartup;
        else throw ScenarioError("'controller.observer_start' must be precharge or startup", node_line(n["observer_start"]));
    }
    if (n["transitions"]) {
        const auto s = as_string(n["transitions"], "controller.transitions");
        if (s == "timed") c.transitions = TransitionPolicy::Timed;
        else if (s == "threshold") c.transitions = TransitionPolicy::Threshold;
        else throw ScenarioError("'controller.transitions' must be timed or threshold", node_line(n["transitions"]));
    }
    if (n["use_dp_i"]) c.use_dp_i = as_bool(n["use_dp_i"], "controller.use_dp_i");
}

inline void read_tuning(const YAML::Node& n, TuningSpec& t) {
    check_keys(n, "tuning", {"observer_taus", "current_taus", "energy_taus", "droop_tau", "g_p_ratio", "startup_tau"});
    if (n["observer_taus"]) t.observer_taus = as_array<2>(n["observer_taus"], "tuning.observer_taus");
    if (n["current_taus"]) t.current_taus = as_array<2>(n["current_taus"], "tuning.current_taus");
    if (n["energy_taus"]) t.energy_taus = as_array<3>(n["energy_taus"], "tuning.energy_taus");
    if (n["droop_tau"]) t.droop_tau = as_double(n["droop_tau"], "tuning.droop_tau");
    if (n["g_p_ratio"]) t.g_p_ratio = as_double(n["g_p_ratio"], "tuning.g_p_ratio");
    if (n["startup_tau"]) t.startup_tau = as_double(n["startup_tau"], "tuning.startup_tau");
}

inline WorstCaseGrid read_worst_case(const YAML::Node& n, const Rating& r) {
    check_keys(n, "worst_case", {"v_g_min", "v_g_min_pu", "X_g_max", "X_g_max_pu"});
    WorstCaseGrid w{0.8 * r.V_b, 0.8 * r.Z_b()};
    if (n["v_g_min"]) w.v_g_min = as_double(n["v_g_min"], "worst_case.v_g_min");
    if (n["v_g_min_pu"]) w.v_g_min = as_double(n["v_g_min_pu"], "worst_case.v_g_min_pu") * r.V_b;
    if (n["X_g_max"]) w.X_g_max = as_double(n["X_g_max"], "worst_case.X_g_max");
    if (n["X_g_max_pu"]) w.X_g_max = as_double(n["X_g_max_pu"], "worst_case.X_g_max_pu") * r.Z_b();
    return w;
}

/// A gains section must be complete; a partial override would silently mix with synthesized values.
inline GainBundle read_gains(const YAML::Node& n) {
    check_keys(n, "gains", {"observer", "current", "energy", "droop", "kappa"});
    auto need = [](const YAML::Node& parent, const char* key, const std::string& where) {
        const YAML::Node c = parent[key];
        if (!c) throw ScenarioError("missing key '" + where + "." + key + "'", node_line(parent));
        return c;
    };
    GainBundle b;
    const YAML::Node obs = need(n, "observer", "gains");
    check_keys(obs, "gains.observer", {"h1", "h2"});
    b.observer.h1 = as_complex(need(obs, "h1", "gains.observer"), "gains.observer.h1");
    b.observer.h2 = as_complex(need(obs, "h2", "gains.observer"), "gains.observer.h2");
    const YAML::Node cur = need(n, "current", "gains");
    check_keys(cur, "gains.current", {"k_p", "k_i"});
    b.current.k_p = as_complex(need(cur, "k_p", "gains.current"), "gains.current.k_p");
    b.current.k_i = as_complex(need(cur, "k_i", "gains.current"), "gains.current.k_i");
    const YAML::Node en = need(n, "energy", "gains");
    check_keys(en, "gains.energy", {"k1", "k2", "k3"});
    b.energy.k1 = as_complex(need(en, "k1", "gains.energy"), "gains.energy.k1");
    b.energy.k2 = as_complex(need(en, "k2", "gains.energy"), "gains.energy.k2");
    b.energy.k3 = as_complex(need(en, "k3", "gains.energy"), "gains.energy.k3");
    const YAML::Node dr = need(n, "droop", "gains");
    check_keys(dr, "gains.droop", {"g_p", "g_i"});
    b.droop.g_p = as_double(need(dr, "g_p", "gains.droop"), "gains.droop.g_p");
    b.droop.g_i = as_double(need(dr, "g_i", "gains.droop"), "gains.droop.g_i");
    b.kappa = as_double(need(n, "kappa", "gains"), "gains.kappa");
    return b;
}

inline Event read_event(const YAML::Node& n, const Rating& r, std::size_t index) {
    const std::string where = "events[" + std::to_string(index) + "]";
    check_keys(n, where, {"time", "kind", "value", "value_pu", "mode"});
    if (!n["time"]) throw ScenarioError("missing key '" + where + ".time'", node_line(n));
    if (!n["kind"]) throw ScenarioError("missing key '" + where + ".kind'", node_line(n));
    Event e;
    e.time = as_double(n["time"], where + ".time");
    const auto kind = as_string(n["kind"], where + ".kind");
    const auto k = parse_event_kind(kind);
    if (!k) throw ScenarioError("unknown event kind '" + kind + "' in '" + where + ".kind'", node_line(n["kind"]));
    e.kind = *k;
    const int given = (n["value"] ? 1 : 0) + (n["value_pu"] ? 1 : 0) + (n["mode"] ? 1 : 0);
    if (given != 1) throw ScenarioError("'" + where + "' needs exactly one of value, value_pu, mode", node_line(n));
    if (n["mode"]) {
        if (e.kind != EventKind::SetMode) throw ScenarioError("'" + where + ".mode' only applies to set_mode", node_line(n["mode"]));
        const auto name = as_string(n["mode"], where + ".mode");
        const auto m = parse_mode(name);
        if (!m) throw ScenarioError("unknown mode '" + name + "' in '" + where + ".mode'", node_line(n["mode"]));
        e.value = static_cast<int>(*m);
    } else if (n["value"]) {
        e.value = as_double(n["value"], where + ".value");
    } else {
        const double pu = as_double(n["value_pu"], where + ".value_pu");
        switch (e.kind) {
            case EventKind::SetPiCommand: e.value = pu * r.S_b; break;
            case EventKind::SetGridMagnitude:
            case EventKind::SetVpRef: e.value = pu * r.V_b; break;
            default: throw ScenarioError("'" + where + ".value_pu' has no base for " + kind, node_line(n["value_pu"]));
        }
    }
    if (e.kind == EventKind::SetMode && (e.value < 0 || e.value > 3 || e.value != std::floor(e.value)))
        throw ScenarioError("'" + where + "' mode value must be 0..3", node_line(n));
    return e;
}

}  // namespace detail

/// Parses scenario text. `origin` names the source in diagnostics.
inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>") {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(origin + ": " + e.msg, e.mark.is_null() ? -1 : e.mark.line + 1);
    }
    if (!root || root.IsNull()) throw ScenarioError(origin + ": empty scenario");
    try {
        detail::check_keys(root, "", {"name", "duration", "control_period", "plant_substeps", "decimate", "plant", "grid",
                                      "rating", "controller", "tuning", "worst_case", "gains", "events"});
        Scenario sc;
        if (root["name"]) sc.name = detail::as_string(root["name"], "name");
        if (root["duration"]) sc.duration = detail::as_double(root["duration"], "duration");
        if (root["control_period"]) sc.control_period = detail::as_double(root["control_period"], "control_period");
        if (root["plant_substeps"]) sc.plant_substeps = detail::as_int(root["plant_substeps"], "plant_substeps");
        if (root["decimate"]) sc.decimate = detail::as_int(root["decimate"], "decimate");
        if (root["rating"]) {
            const YAML::Node r = root["rating"];
            detail::check_keys(r, "rating", {"S_b", "V_b"});
            if (r["S_b"]) sc.rating.S_b = detail::as_double(r["S_b"], "rating.S_b");
            if (r["V_b"]) sc.rating.V_b = detail::as_double(r["V_b"], "rating.V_b");
        }
        sc.grid.v_g_magnitude = sc.rating.V_b;
        if (root["plant"]) detail::read_plant(root["plant"], sc.plant);
        if (root["grid"]) detail::read_grid(root["grid"], sc.grid, sc.rating);
        if (root["controller"]) detail::read_controller(root["controller"], sc.controller);
        if (root["tuning"]) detail::read_tuning(root["tuning"], sc.tuning);
        if (root["worst_case"]) sc.worst_case = detail::read_worst_case(root["worst_case"], sc.rating);
        if (root["gains"]) sc.gains = detail::read_gains(root["gains"]);
        if (root["events"]) {
            const YAML::Node ev = root["events"];
            if (!ev.IsSequence()) throw ScenarioError("'events' must be a list", detail::node_line(ev));
            for (std::size_t k = 0; k < ev.size(); ++k) sc.events.push_back(detail::read_event(ev[k], sc.rating, k));
        }
        if (sc.decimate < 1) throw ScenarioError("'decimate' must be >= 1", detail::node_line(root["decimate"]));
        try {
            validate(sc);
        } catch (const InvalidTarget& e) {
            throw ScenarioError(origin + ": " + e.what());
        }
        return sc;
    } catch (const YAML::Exception& e) {
        throw ScenarioError(origin + ": " + e.msg, e.mark.is_null() ? -1 : e.mark.line + 1);
    }
}

namespace builtin {

inline constexpr std::string_view startup_yaml = R"(name: paper-startup
duration: 0.1
rating: {S_b: 2000}  # V_b defaults to sqrt(3)*94
plant: {L: 2.1e-3, C: 48e-6, R_ch: 100, frequency: 50}
grid: {v_g_pu: 1.0, X_g_pu: 0.5}
controller: {v_c_ref: 300}
events:
  - {time: 0.0, kind: set_mode, mode: PRECHARGE}
  - {time: 0.05, kind: set_mode, mode: STARTUP}
)";

inline constexpr std::string_view normal_yaml = R"(name: paper-normal
duration: 0.4
rating: {S_b: 2000}  # V_b defaults to sqrt(3)*94
plant: {L: 2.1e-3, C: 48e-6, R_ch: 100, frequency: 50}
grid: {v_g_pu: 1.0, X_g_pu: 0.5}
controller: {v_c_ref: 300}
events:
  - {time: 0.0, kind: set_mode, mode: PRECHARGE}
  - {time: 0.05, kind: set_mode, mode: STARTUP}
  - {time: 0.1, kind: set_mode, mode: RUN}
  - {time: 0.15, kind: set_p_i_command, value_pu: 0.5}
  - {time: 0.225, kind: set_p_i_command, value_pu: 1.0}
  - {time: 0.3, kind: set_p_i_command, value_pu: 0.0}
)";

inline constexpr std::string_view sag_swell_yaml = R"(name: paper-sag-swell
duration: 0.8
rating: {S_b: 2000}  # V_b defaults to sqrt(3)*94
plant: {L: 2.1e-3, C: 48e-6, R_ch: 100, frequency: 50}
grid: {v_g_pu: 1.0, X_g_pu: 0.5}
controller: {v_c_ref: 300}
events:
  - {time: 0.0, kind: set_mode, mode: PRECHARGE}
  - {time: 0.05, kind: set_mode, mode: STARTUP}
  - {time: 0.1, kind: set_mode, mode: RUN}
  - {time: 0.15, kind: set_p_i_command, value_pu: 0.5}
  - {time: 0.225, kind: set_p_i_command, value_pu: 1.0}
  - {time: 0.3, kind: set_p_i_command, value_pu: 0.0}
  - {time: 0.4, kind: set_p_i_command, value_pu: 1.0}
  - {time: 0.45, kind: set_grid_magnitude, value_pu: 0.8}
  - {time: 0.55, kind: set_grid_magnitude, value_pu: 1.2}
  - {time: 0.65, kind: set_grid_magnitude, value_pu: 1.0}
)";

inline const std::vector<std::pair<std::string_view, std::string_view>>& all() {
    static const std::vector<std::pair<std::string_view, std::string_view>> table{
        {"paper-startup", startup_yaml}, {"paper-normal", normal_yaml}, {"paper-sag-swell", sag_swell_yaml}};
    return table;
}

}  // namespace builtin

inline std::optional<Scenario> builtin_scenario(std::string_view name) {
    for (const auto& [n, text] : builtin::all())
        if (n == name) return parse_scenario(std::string(text), std::string(n));
    return std::nullopt;
}

/// Resolves a built-in name first, then a file path.
inline Scenario load_scenario(const std::string& name_or_path) {
    if (auto sc = builtin_scenario(name_or_path)) return *sc;
    std::ifstream in(name_or_path);
    if (!in) throw ScenarioError("cannot open scenario '" + name_or_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), name_or_path);
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Fixed significant-digit rendering, used when a precision override is requested.
inline std::string format_double(double v, int precision) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision);
    return std::string(buf, res.ptr);
}

/// The gains section of a scenario file. Pasting it into a scenario reproduces the bundle exactly.
inline std::string emit_gains_yaml(const GainBundle& b) {
    auto c = [](ComplexGain g) { return "[" + format_double(g.real()) + ", " + format_double(g.imag()) + "]"; };
    std::ostringstream o;
    o << "gains:\n"
      << "  observer:\n"
      << "    h1: " << c(b.observer.h1) << "\n"
      << "    h2: " << c(b.observer.h2) << "\n"
      << "  current:\n"
      << "    k_p: " << c(b.current.k_p) << "\n"
      << "    k_i: " << c(b.current.k_i) << "\n"
      << "  energy:\n"
      << "    k1: " << c(b.energy.k1) << "\n"
      << "    k2: " << c(b.energy.k2) << "\n"
      << "    k3: " << c(b.energy.k3) << "\n"
      << "  droop:\n"
      << "    g_p: " << format_double(b.droop.g_p) << "\n"
      << "    g_i: " << format_double(b.droop.g_i) << "\n"
      << "  kappa: " << format_double(b.kappa) << "\n";
    return o.str();
}

}  // namespace wgi
