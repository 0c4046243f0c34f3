#pragma once

// Slow PI loop on the PCC voltage magnitude. It sets the reactive power
// reference, gives reactive power priority inside the apparent-power budget
// i_max * V_p, and exports the remaining active-power budget to the source.

#include <cmath>

#include "wgi/errors.hpp"

namespace wgi {

struct DroopGains {
    double g_p = 0.0;  ///< [VAr/V]
    double g_i = 0.0;  ///< [VAr/(V s)]
};

struct DroopState {
    double x_vp = 0.0;  ///< integral of V_p - V_p* [V s]
    double q_ref_out = 0.0;
    double p_i_max_out = 0.0;
    bool clamped = false;
};

struct DroopResult {
    double q_ref = 0.0;
    double p_i_max = 0.0;
    double e = 0.0;  ///< error used for integration (back-calculated when clamped)
    bool clamped = false;
    DroopState next{};
};

inline DroopResult droop_step(const DroopState& state, double V_p, double V_p_ref, double i_max,
                              const DroopGains& g, double dt) {
    if (V_p < 0) throw InvalidReference("PCC voltage magnitude must be non-negative");
    DroopResult r;
    r.e = V_p - V_p_ref;
    r.q_ref = -g.g_p * r.e - g.g_i * state.x_vp;
    const double s_max = i_max * V_p;
    if (std::abs(r.q_ref) > s_max) {
        r.q_ref = std::copysign(s_max, r.q_ref);
        r.clamped = true;
        r.e = (r.q_ref + g.g_i * state.x_vp) / (-g.g_p);
    }
    r.p_i_max = std::sqrt(std::max(0.0, s_max * s_max - r.q_ref * r.q_ref));
    r.next.x_vp = state.x_vp + dt * r.e;
    r.next.q_ref_out = r.q_ref;
    r.next.p_i_max_out = r.p_i_max;
    r.next.clamped = r.clamped;
    return r;
}

/// Integral gain for a 1% settling time of at least tau at the worst-case
/// (largest) PCC sensitivity X_g_max/v_g_min; g_p is a small fraction of that sensitivity's inverse.
inline DroopGains design_droop_gains(double tau, double v_g_min, double X_g_max, double g_p_ratio) {
    if (!(tau > 0 && v_g_min > 0 && X_g_max > 0 && g_p_ratio > 0))
        throw InvalidTarget("droop design inputs must be positive");
    return {g_p_ratio * v_g_min / X_g_max, 4.6 / tau * v_g_min / X_g_max};
}

/// Steady-state V_p^2 for power (p, q) injected through reactance X_g from an EMF of magnitude v_g.
inline double steady_state_vp_squared(double p, double q, double v_g, double X_g) {
    const double vg2 = v_g * v_g;
    if (vg2 == 0.0) throw NoOperatingPoint("zero grid voltage");
    const double disc = vg2 - 4.0 * X_g * (X_g * p * p / vg2 - q);
    if (disc < 0) throw NoOperatingPoint("no real operating point (voltage collapse region)");
    return X_g * q + 0.5 * v_g * (v_g + std::sqrt(disc));
}

}  // namespace wgi
