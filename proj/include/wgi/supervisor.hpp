#pragma once

// Mode state machine IDLE -> PRECHARGE -> STARTUP -> RUN and the wiring of
// observer, start-up law, droop, energy control and current limiting.
//
// Controllers only ever see the measured current, the DC-link voltage, the
// input-power signal and the observer's PCC estimate. The true PCC voltage is
// not part of Measurements.

#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>

#include "wgi/current_loop.hpp"
#include "wgi/droop.hpp"
#include "wgi/energy_control.hpp"
#include "wgi/errors.hpp"
#include "wgi/observer.hpp"
#include "wgi/plant.hpp"
#include "wgi/startup.hpp"
#include "wgi/tuning.hpp"

namespace wgi {

enum class Mode : int { Idle = 0, Precharge = 1, Startup = 2, Run = 3 };

inline std::string_view mode_name(Mode m) {
    switch (m) {
        case Mode::Idle: return "IDLE";
        case Mode::Precharge: return "PRECHARGE";
        case Mode::Startup: return "STARTUP";
        case Mode::Run: return "RUN";
    }
    return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
    for (Mode m : {Mode::Idle, Mode::Precharge, Mode::Startup, Mode::Run})
        if (s == mode_name(m)) return m;
    return std::nullopt;
}

struct ControlMode {
    Mode tag = Mode::Idle;
    double entry_time = 0.0;
};

enum class ObserverStart { AtPrecharge, AtStartup };
enum class TransitionPolicy { Timed, Threshold };

struct ControllerConfig {
    PlantParams plant{};  ///< nominal model parameters known to the controller
    GainBundle gains{};
    double Ts = 100e-6;
    double i_max = 0.0;
    double V_b = 0.0;
    double v_c_ref = 300.0;
    double V_p_ref = 0.0;
    double delta_p = 20.0;
    double vp_filter_settling = 10e-3;    ///< 1% settling of the |v_p_hat| smoother
    double v_p_guard_ratio = 0.05;        ///< fraction of V_b below which mu is held
    double observer_settle = 50e-3;       ///< observer run time required before a threshold RUN entry
    ObserverStart observer_start = ObserverStart::AtPrecharge;
    TransitionPolicy transitions = TransitionPolicy::Timed;
    bool use_dp_i = false;                ///< feed the measured dp_i/dt instead of zero
};

struct Measurements {
    double t = 0.0;
    SpaceVector i{};
    double v_c = 0.0;
    double p_i = 0.0;
    double dp_i = 0.0;
};

struct ControllerOutputs {
    SpaceVector mu{};
    bool sat_i = false;
    bool sat_mu = false;
    double q_ref = 0.0;
    double p_i_max = std::numeric_limits<double>::infinity();
    SpaceVector v_p_hat{};
    double V_p = 0.0;  ///< smoothed |v_p_hat|
    SpaceVector i_ref{};
    bool sw1 = false;
    bool sw2 = false;
    bool inverter_active = false;
    bool guard_hold = false;  ///< mu held because the PCC estimate is below the guard
};

struct ControllerState {
    ControlMode mode{};
    ObserverState observer{};
    double observer_enabled_at = 0.0;
    double vp_filtered = 0.0;
    CurrentLoopState cla{};
    EnergyState energy{};
    DroopState droop{};
    StartupParams startup{};
    SpaceVector last_mu{};
    double last_q_ref = 0.0;
    double last_p_i_max = std::numeric_limits<double>::infinity();
};

/// Switch commands implied by a mode.
inline void apply_switches(Mode m, ControllerOutputs& out) {
    out.sw1 = m != Mode::Idle;
    out.sw2 = m == Mode::Run;
    out.inverter_active = m == Mode::Startup || m == Mode::Run;
}

/// Moves to the next mode. Only the immediate successor is accepted.
inline ControllerState request_mode(const ControllerState& s, Mode target, double t, const ControllerConfig& cfg) {
    if (static_cast<int>(target) != static_cast<int>(s.mode.tag) + 1)
        throw SequenceError("mode transition " + std::string(mode_name(s.mode.tag)) + " -> " +
                            std::string(mode_name(target)) + " is out of order");
    ControllerState n = s;
    n.mode = {target, t};
    if (target == Mode::Startup) {
        n.startup.kappa = cfg.gains.kappa;
        n.startup.E_c_ref = 0.5 * cfg.plant.C * cfg.v_c_ref * cfg.v_c_ref;
    }
    if (target == Mode::Run) {
        n.cla = {};
        n.energy = {};
        n.droop = {};
    }
    return n;
}

struct ControlStepResult {
    ControllerOutputs outputs{};
    ControllerState next{};
};

namespace detail {
/// Averaged diode bridge seen by the observer during pre-charge: v_c/sqrt(2) opposing the current.
inline SpaceVector bridge_equivalent_mu(SpaceVector i) {
    const double m = std::abs(i);
    if (m < 1e-9) return {};
    return -i / (std::numbers::sqrt2 * m);
}
}  // namespace detail

inline ControlStepResult control_step(const ControllerState& state, const Measurements& meas,
                                      const ControllerConfig& cfg, const DiscreteObserver& disc) {
    ControlStepResult res;
    ControllerState s = state;
    ControllerOutputs& out = res.outputs;
    const PlantParams& pp = cfg.plant;

    if (cfg.transitions == TransitionPolicy::Threshold) {
        if (s.mode.tag == Mode::Precharge) {
            const double V_est = (s.observer.enabled && s.vp_filtered > 0) ? s.vp_filtered : cfg.V_p_ref;
            if (meas.v_c >= 0.95 * std::numbers::sqrt2 * V_est) s = request_mode(s, Mode::Startup, meas.t, cfg);
        } else if (s.mode.tag == Mode::Startup) {
            const bool settled = std::abs(meas.v_c - cfg.v_c_ref) <= 0.01 * cfg.v_c_ref;
            const bool synced = s.observer.enabled && meas.t - s.observer_enabled_at >= cfg.observer_settle;
            if (settled && synced) s = request_mode(s, Mode::Run, meas.t, cfg);
        }
    }

    const Mode mode = s.mode.tag;
    apply_switches(mode, out);

    const bool start_observer =
        !s.observer.enabled && ((mode == Mode::Precharge && cfg.observer_start == ObserverStart::AtPrecharge) ||
                                mode == Mode::Startup || mode == Mode::Run);
    if (start_observer) {
        s.observer = enable_observer(meas.i);
        s.observer_enabled_at = meas.t;
        s.vp_filtered = 0.0;
    }
    if (s.observer.enabled) {
        const double a = 1.0 - std::exp(-4.6 * cfg.Ts / cfg.vp_filter_settling);
        s.vp_filtered += a * (std::abs(s.observer.v_p_hat) - s.vp_filtered);
    }
    out.v_p_hat = s.observer.v_p_hat;
    out.V_p = s.vp_filtered;

    SpaceVector mu_bridge{};  // voltage the bridge applies, as seen by the observer
    switch (mode) {
        case Mode::Idle:
            break;
        case Mode::Precharge:
            // the diode bridge voltage rotates with the grid during the period
            // instead of being held, so scale it to the same volt-seconds
            mu_bridge = detail::bridge_equivalent_mu(meas.i) * (disc.gamma / disc.Ts);
            break;
        case Mode::Startup:
            out.mu = startup_mu(meas.i, meas.v_c, pp.C, s.startup, pp.mu_max, pp.v_c_min_div);
            mu_bridge = out.mu;
            break;
        case Mode::Run: {
            const double guard = cfg.v_p_guard_ratio * cfg.V_b;
            const SpaceVector v_p_hat = s.observer.v_p_hat;
            if (std::abs(v_p_hat) < guard || s.vp_filtered < guard) {
                out.mu = s.last_mu;
                out.guard_hold = true;
                out.q_ref = s.last_q_ref;
                out.p_i_max = s.last_p_i_max;
            } else {
                const DroopResult dr =
                    droop_step(s.droop, s.vp_filtered, cfg.V_p_ref, cfg.i_max, cfg.gains.droop, cfg.Ts);
                s.droop = dr.next;
                out.q_ref = dr.q_ref;
                out.p_i_max = dr.p_i_max;

                EnergyReferences refs;
                refs.v_c_ref = cfg.v_c_ref;
                refs.q_ref = dr.q_ref;
                refs.delta_p = cfg.delta_p;

                FlInputs in;
                in.i = meas.i;
                in.v_c = meas.v_c;
                in.v_p = v_p_hat;
                in.V_p = s.vp_filtered;
                in.p_i = meas.p_i;
                in.dp_i = cfg.use_dp_i ? meas.dp_i : 0.0;

                FlConfig fc;
                fc.L = pp.L;
                fc.C = pp.C;
                fc.omega = pp.omega;
                fc.i_max = cfg.i_max;
                fc.mu_max = pp.mu_max;
                fc.dt = cfg.Ts;
                fc.v_c_min_div = pp.v_c_min_div;
                fc.v_p_guard = guard;

                const FlResult fl = fl_step(s.energy, s.cla, in, refs, cfg.gains.energy, cfg.gains.current, fc);
                s.energy = fl.next;
                s.cla = fl.next_cla;
                out.mu = fl.mu;
                out.sat_i = fl.sat_i;
                out.sat_mu = fl.sat_mu;
                out.i_ref = fl.i_ref;
            }
            mu_bridge = out.mu;
            break;
        }
    }

    if (s.observer.enabled)
        s.observer = observer_step(s.observer, meas.i, meas.v_c, mu_bridge, out.sw2, pp.R_ch, disc);

    s.last_mu = out.mu;
    s.last_q_ref = out.q_ref;
    s.last_p_i_max = out.p_i_max;
    res.next = s;
    return res;
}

/// Convenience owner of a controller configuration and its evolving state.
class Controller {
public:
    explicit Controller(ControllerConfig cfg)
        : cfg_(std::move(cfg)),
          disc_(discretize_observer(cfg_.gains.observer, cfg_.plant.L, cfg_.plant.omega, cfg_.Ts)) {}

    ControllerOutputs step(const Measurements& m) {
        ControlStepResult r = control_step(state_, m, cfg_, disc_);
        state_ = r.next;
        return r.outputs;
    }

    void request(Mode target, double t) { state_ = request_mode(state_, target, t, cfg_); }

    const ControllerState& state() const { return state_; }
    const ControllerConfig& config() const { return cfg_; }
    ControllerConfig& config() { return cfg_; }
    const DiscreteObserver& discrete_observer() const { return disc_; }

private:
    ControllerConfig cfg_;
    DiscreteObserver disc_;
    ControllerState state_{};
};

}  // namespace wgi
