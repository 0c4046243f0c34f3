#pragma once

// Fixed-step closed-loop simulation: the controller runs at the control period
// while the plant is integrated with RK4 substeps and mu held in between.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "wgi/errors.hpp"
#include "wgi/plant.hpp"
#include "wgi/supervisor.hpp"
#include "wgi/tuning.hpp"

namespace wgi {

enum class EventKind { SetPiCommand, SetGridMagnitude, SetMode, SetVcRef, SetVpRef };

inline std::string_view event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::SetPiCommand: return "set_p_i_command";
        case EventKind::SetGridMagnitude: return "set_grid_magnitude";
        case EventKind::SetMode: return "set_mode";
        case EventKind::SetVcRef: return "set_v_c_ref";
        case EventKind::SetVpRef: return "set_V_p_ref";
    }
    return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
    for (EventKind k : {EventKind::SetPiCommand, EventKind::SetGridMagnitude, EventKind::SetMode,
                        EventKind::SetVcRef, EventKind::SetVpRef})
        if (s == event_kind_name(k)) return k;
    return std::nullopt;
}

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::SetPiCommand;
    double value = 0.0;  ///< for set_mode: the Mode as an integer
};

struct Rating {
    double S_b = 2000.0;
    double V_b = std::numbers::sqrt3 * 94.0;

    /// Base current S_b / (sqrt3 V_b), the per-phase rms value. It is also the
    /// default limit on the current space-vector magnitude.
    double I_b() const { return S_b / (std::numbers::sqrt3 * V_b); }
    /// Base impedance V_b^2 / S_b.
    double Z_b() const { return V_b * V_b / S_b; }
};

struct ControllerSettings {
    double v_c_ref = 300.0;
    double V_p_ref = 0.0;      ///< 0 means V_b
    double i_max = 0.0;        ///< 0 means I_b
    double delta_p = 0.0;      ///< 0 means 0.01 S_b
    double vp_filter_settling = 10e-3;
    ObserverStart observer_start = ObserverStart::AtPrecharge;
    TransitionPolicy transitions = TransitionPolicy::Timed;
    bool use_dp_i = false;
};

struct Scenario {
    std::string name = "unnamed";
    PlantParams plant{};
    GridCondition grid{};
    Rating rating{};
    ControllerSettings controller{};
    TuningSpec tuning{};
    std::optional<WorstCaseGrid> worst_case;  ///< default: 0.8 V_b and 0.8 Z_b
    std::optional<GainBundle> gains;          ///< overrides the synthesized gains
    double control_period = 100e-6;
    int plant_substeps = 10;
    double duration = 0.1;
    std::vector<Event> events;
    int decimate = 1;

    WorstCaseGrid worst() const {
        return worst_case.value_or(WorstCaseGrid{0.8 * rating.V_b, 0.8 * rating.Z_b()});
    }
};

inline GainBundle scenario_gains(const Scenario& sc) {
    if (sc.gains) return *sc.gains;
    return synthesize_all(sc.tuning, sc.plant, sc.worst(), sc.rating.V_b).gains;
}

inline ControllerConfig make_controller_config(const Scenario& sc) {
    ControllerConfig c;
    c.plant = sc.plant;
    c.gains = scenario_gains(sc);
    c.Ts = sc.control_period;
    c.V_b = sc.rating.V_b;
    c.i_max = sc.controller.i_max > 0 ? sc.controller.i_max : sc.rating.I_b();
    c.v_c_ref = sc.controller.v_c_ref;
    c.V_p_ref = sc.controller.V_p_ref > 0 ? sc.controller.V_p_ref : sc.rating.V_b;
    c.delta_p = sc.controller.delta_p > 0 ? sc.controller.delta_p : 0.01 * sc.rating.S_b;
    c.vp_filter_settling = sc.controller.vp_filter_settling;
    c.observer_settle = std::max(sc.tuning.observer_taus[0], sc.tuning.observer_taus[1]);
    c.observer_start = sc.controller.observer_start;
    c.transitions = sc.controller.transitions;
    c.use_dp_i = sc.controller.use_dp_i;
    return c;
}

struct TraceRow {
    double t = 0.0;
    SpaceVector i{};
    /// True PCC voltage referred to the sample instant: the rotating vector with
    /// the same volt-seconds as the actual PCC voltage over the coming control
    /// period. With mu held between samples the PCC voltage of a weak grid is a
    /// staircase; this is its rotating equivalent, which is what the observer
    /// estimates. Comparison only, never fed to the controller.
    SpaceVector v_p{};
    SpaceVector v_p_instant{};  ///< PCC voltage at t+ (after mu is applied)
    SpaceVector v_p_hat{};
    double v_c = 0.0;
    double p = 0.0;
    double q = 0.0;
    double q_ref = 0.0;
    double p_i = 0.0;
    double p_i_max = 0.0;   ///< +inf outside RUN
    bool sat_i = false;
    bool sat_mu = false;
    Mode mode = Mode::Idle;
    SpaceVector mu{};       ///< not part of the CSV schema
};

using Trace = std::vector<TraceRow>;

inline void validate(const Scenario& sc) {
    sc.plant.validate();
    if (!(sc.control_period > 0)) throw InvalidTarget("control period must be positive");
    if (sc.plant_substeps < 1) throw InvalidTarget("plant substeps must be >= 1");
    if (!(sc.duration > 0)) throw InvalidTarget("duration must be positive");
    if (sc.grid.v_g_magnitude < 0 || sc.grid.X_g < 0) throw InvalidTarget("grid magnitude and reactance must be >= 0");
    for (const Event& e : sc.events) {
        if (e.time < 0) throw InvalidTarget("event time must be >= 0");
        if (e.time >= sc.duration) throw InvalidTarget("event at or after end of run");
    }
}

inline Trace run(const Scenario& sc) {
    validate(sc);
    Controller ctrl(make_controller_config(sc));
    const double Ts = sc.control_period;
    const double h = Ts / sc.plant_substeps;
    const long n_steps = std::lround(sc.duration / Ts);
    // integral of exp(j omega t) over one period
    const SpaceVector rotation_area = sc.plant.omega > 0
        ? (std::exp(j * (sc.plant.omega * Ts)) - 1.0) / (j * sc.plant.omega)
        : SpaceVector(Ts);

    std::vector<std::pair<long, Event>> queue;
    for (const Event& e : sc.events) queue.emplace_back(std::lround(e.time / Ts), e);
    std::stable_sort(queue.begin(), queue.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t next_event = 0;

    GridCondition grid = sc.grid;
    PlantState plant{};
    PlantInputs inputs{};
    Trace trace;
    trace.reserve(static_cast<std::size_t>(n_steps));

    auto sync_switches = [&](Mode m) {
        ControllerOutputs sw;
        apply_switches(m, sw);
        plant.sw1 = sw.sw1;
        plant.sw2 = sw.sw2;
        plant.inverter_active = sw.inverter_active;
        if (!plant.sw1) plant.i = {};
        else if (!plant.inverter_active) plant.i = precharge_point(plant, sc.plant, grid).i;
    };

    for (long k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * Ts;
        try {
            while (next_event < queue.size() && queue[next_event].first <= k) {
                const Event& e = queue[next_event++].second;
                switch (e.kind) {
                    case EventKind::SetPiCommand: inputs.p_i_command = e.value; break;
                    case EventKind::SetGridMagnitude: grid.v_g_magnitude = e.value; break;
                    case EventKind::SetMode: ctrl.request(static_cast<Mode>(std::lround(e.value)), t); break;
                    case EventKind::SetVcRef: ctrl.config().v_c_ref = e.value; break;
                    case EventKind::SetVpRef: ctrl.config().V_p_ref = e.value; break;
                }
            }
            sync_switches(ctrl.state().mode.tag);

            Measurements m;
            m.t = t;
            m.i = plant.i;
            m.v_c = plant.v_c;
            m.p_i = plant.p_i_actual;
            m.dp_i = input_power_rate(plant.p_i_actual, inputs, sc.plant);
            const ControllerOutputs out = ctrl.step(m);
            sync_switches(ctrl.state().mode.tag);

            inputs.mu = out.mu;
            inputs.p_i_max = out.sw2 ? out.p_i_max : std::numeric_limits<double>::infinity();

            TraceRow row;
            row.t = t;
            row.i = plant.i;
            row.v_p_instant = plant_pcc_voltage(plant, out.mu, sc.plant, grid);
            row.v_p_hat = out.v_p_hat;
            row.v_c = plant.v_c;
            row.q_ref = out.q_ref;
            row.p_i = plant.p_i_actual;
            row.p_i_max = out.p_i_max;
            row.sat_i = out.sat_i;
            row.sat_mu = out.sat_mu;
            row.mode = ctrl.state().mode.tag;
            row.mu = out.mu;

            const SpaceVector v_g_start = grid_voltage(plant, grid);
            const SpaceVector i_start = plant.i;
            for (int sub = 0; sub < sc.plant_substeps; ++sub) plant = step_plant(plant, inputs, sc.plant, grid, h);
            // v_p = v_g + L_g di/dt integrates exactly over the period
            if (plant.sw1) row.v_p = v_g_start + grid.L_g(sc.plant.omega) * (plant.i - i_start) / rotation_area;
            else row.v_p = v_g_start;
            row.p = active_power(row.v_p, row.i);
            row.q = reactive_power(row.v_p, row.i);
            trace.push_back(row);
        } catch (const SimulationError&) {
            throw;
        } catch (const Error& err) {
            throw SimulationError(t, err.what());
        }
    }
    return trace;
}

struct RunSummary {
    double peak_i = 0.0;
    double peak_v_c = 0.0;
    double peak_v_c_deviation = 0.0;  ///< max |v_c - v_c*| while in RUN
    double sat_i_time = 0.0;
    double sat_mu_time = 0.0;
    bool finite = true;
};

inline RunSummary summarize(const Trace& tr, double Ts, double v_c_ref) {
    RunSummary s;
    for (const TraceRow& r : tr) {
        if (!std::isfinite(r.v_c) || !std::isfinite(r.i.real()) || !std::isfinite(r.i.imag())) s.finite = false;
        s.peak_i = std::max(s.peak_i, std::abs(r.i));
        s.peak_v_c = std::max(s.peak_v_c, r.v_c);
        if (r.mode == Mode::Run) s.peak_v_c_deviation = std::max(s.peak_v_c_deviation, std::abs(r.v_c - v_c_ref));
        if (r.sat_i) s.sat_i_time += Ts;
        if (r.sat_mu) s.sat_mu_time += Ts;
    }
    return s;
}

}  // namespace wgi
