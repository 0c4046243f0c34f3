#pragma once

// Averaged model of the grid-tied inverter: L filter, weak grid (L_g),
// DC-link capacitor fed by a lag-limited power source, and the AC-side
// pre-charge resistor bypassed by sw2.

#include <cmath>
#include <limits>
#include <numbers>

#include "wgi/core.hpp"
#include "wgi/errors.hpp"

namespace wgi {

struct PlantParams {
    double L = 2.1e-3;                      ///< inverter filter inductance [H]
    double C = 48e-6;                       ///< DC-link capacitance [F]
    double R_ch = 100.0;                    ///< pre-charge resistance [ohm]
    double omega = 2.0 * std::numbers::pi * 50.0;
    double mu_max = 1.0 / std::numbers::sqrt2;
    double tau_pi = 15e-3;                  ///< 1% settling time of the input-power lag [s]
    double v_c_min_div = 1.0;               ///< division guard on p_i / v_c [V]

    void validate() const {
        if (!(L > 0 && C > 0 && R_ch > 0 && omega > 0 && mu_max > 0 && tau_pi > 0 && v_c_min_div > 0))
            throw InvalidTarget("plant parameters must be strictly positive");
        if (mu_max > 1.0 / std::numbers::sqrt2 + 1e-12)
            throw InvalidTarget("mu_max exceeds the space-vector modulation limit 1/sqrt(2)");
    }
};

struct GridCondition {
    double v_g_magnitude = std::numbers::sqrt3 * 94.0;  ///< |v_g| [V]
    double X_g = 0.0;                                  ///< grid reactance omega*L_g [ohm]

    double L_g(double omega) const { return X_g / omega; }
};

struct PlantState {
    SpaceVector i{};          ///< injected current [A]
    double v_c = 0.0;         ///< DC-link voltage [V]
    double p_i_actual = 0.0;  ///< power delivered by the primary source [W]
    double grid_phase = 0.0;  ///< integrated omega*t [rad]
    bool sw1 = false;         ///< grid breaker closed
    bool sw2 = false;         ///< pre-charge resistor bypassed
    bool inverter_active = false;
};

struct PlantInputs {
    SpaceVector mu{};
    double p_i_command = 0.0;
    double p_i_max = std::numeric_limits<double>::infinity();  ///< limit exported by the controller
};

struct PlantDerivatives {
    SpaceVector di{};
    double dv_c = 0.0;
    double dp_i = 0.0;
    double dphase = 0.0;
};

inline SpaceVector grid_voltage(const PlantState& s, const GridCondition& g) {
    return std::polar(g.v_g_magnitude, s.grid_phase);
}

/// First-order lag of the source toward min(command, limit).
inline double input_power_rate(double p_i_actual, const PlantInputs& in, const PlantParams& p) {
    const double target = std::min(in.p_i_command, in.p_i_max);
    return (target - p_i_actual) * 4.6 / p.tau_pi;
}

/// Derivatives with the inverter switching (STARTUP or RUN). The R_ch term is present while sw2 is open.
inline PlantDerivatives plant_derivatives(const PlantState& s, const PlantInputs& in, const PlantParams& p,
                                          const GridCondition& g) {
    if (s.v_c < p.v_c_min_div && s.p_i_actual != 0.0)
        throw NonPhysicalState("v_c below division guard while input power is nonzero");
    const double L_total = p.L + g.L_g(p.omega);
    const double r_series = s.sw2 ? 0.0 : p.R_ch;
    PlantDerivatives d;
    d.di = (s.v_c * in.mu - r_series * s.i - grid_voltage(s, g)) / L_total;
    const double source_current = (s.p_i_actual == 0.0) ? 0.0 : s.p_i_actual / s.v_c;
    d.dv_c = (source_current - (in.mu * std::conj(s.i)).real()) / p.C;
    d.dp_i = input_power_rate(s.p_i_actual, in, p);
    d.dphase = p.omega;
    return d;
}

/// PCC voltage v_g + L_g di/dt for an active inverter. With sw2 closed this is
/// (L_g v_c mu + L v_g) / (L + L_g).
inline SpaceVector pcc_voltage(const PlantState& s, SpaceVector mu, const PlantParams& p, const GridCondition& g) {
    const double L_g = g.L_g(p.omega);
    const double r_series = s.sw2 ? 0.0 : p.R_ch;
    const SpaceVector v_g = grid_voltage(s, g);
    return v_g + L_g * ((s.v_c * mu - r_series * s.i - v_g) / (p.L + L_g));
}

/// Quasi-static operating point of the diode bridge during pre-charge.
struct PrechargePoint {
    SpaceVector i{};    ///< AC current (flows into the bridge, so opposite to v_p)
    SpaceVector v_p{};
    double i_ch = 0.0;  ///< |i|
};

/// The bridge presents v_c/sqrt(2) in phase with v_p while conducting; R_ch
/// carries the difference. Solves |v_g|^2 = (R m + v_c/sqrt2)^2 + (X_g m)^2 for m = |i|.
inline PrechargePoint precharge_point(const PlantState& s, const PlantParams& p, const GridCondition& g) {
    PrechargePoint out;
    const SpaceVector v_g = grid_voltage(s, g);
    const double vg = g.v_g_magnitude;
    const double a = s.v_c / std::numbers::sqrt2;
    if (!s.sw1 || a >= vg) {
        out.v_p = s.sw1 ? v_g : SpaceVector{};
        return out;
    }
    const double R = p.R_ch;
    const double X = g.X_g;
    const double k = R * R + X * X;
    const double m = (-a * R + std::sqrt(a * a * R * R - k * (a * a - vg * vg))) / k;
    // v_g = e^{j phi} (R m + a + j X m), i = -m e^{j phi}
    const SpaceVector dir = v_g / SpaceVector(R * m + a, X * m);
    const SpaceVector unit = dir / std::abs(dir);
    out.i = -m * unit;
    out.v_p = (R * m + a) * unit;
    out.i_ch = m;
    return out;
}

/// Pre-charge through R_ch and the flywheel diodes (inverter in high impedance).
/// DC-side current is i_ch/sqrt(2), so v_c approaches sqrt(2)|v_p| with time constant 2 R_ch C.
inline PlantDerivatives precharge_derivatives(const PlantState& s, const PlantParams& p, const GridCondition& g,
                                              const PlantInputs& in = {}) {
    const PrechargePoint op = precharge_point(s, p, g);
    PlantDerivatives d;
    d.dv_c = op.i_ch / std::numbers::sqrt2 / p.C;
    d.dp_i = input_power_rate(s.p_i_actual, in, p);
    d.dphase = p.omega;
    return d;
}

namespace detail {
inline PlantState advance(const PlantState& s, const PlantDerivatives& d, double h) {
    PlantState out = s;
    out.i += h * d.di;
    out.v_c += h * d.dv_c;
    out.p_i_actual += h * d.dp_i;
    out.grid_phase += h * d.dphase;
    return out;
}

inline PlantDerivatives evaluate(const PlantState& s, const PlantInputs& in, const PlantParams& p,
                                 const GridCondition& g) {
    if (!s.sw1) {
        PlantDerivatives d;
        d.dp_i = input_power_rate(s.p_i_actual, in, p);
        d.dphase = p.omega;
        return d;
    }
    if (!s.inverter_active) return precharge_derivatives(s, p, g, in);
    return plant_derivatives(s, in, p, g);
}
}  // namespace detail

/// One classic fourth-order Runge-Kutta step with mu held constant.
inline PlantState step_plant(const PlantState& s, const PlantInputs& in, const PlantParams& p,
                             const GridCondition& g, double dt) {
    if (!(dt > 0)) throw InvalidTarget("integration step must be positive");
    const PlantDerivatives k1 = detail::evaluate(s, in, p, g);
    const PlantDerivatives k2 = detail::evaluate(detail::advance(s, k1, dt / 2), in, p, g);
    const PlantDerivatives k3 = detail::evaluate(detail::advance(s, k2, dt / 2), in, p, g);
    const PlantDerivatives k4 = detail::evaluate(detail::advance(s, k3, dt), in, p, g);
    PlantDerivatives sum;
    sum.di = (k1.di + 2.0 * k2.di + 2.0 * k3.di + k4.di) / 6.0;
    sum.dv_c = (k1.dv_c + 2.0 * k2.dv_c + 2.0 * k3.dv_c + k4.dv_c) / 6.0;
    sum.dp_i = (k1.dp_i + 2.0 * k2.dp_i + 2.0 * k3.dp_i + k4.dp_i) / 6.0;
    sum.dphase = (k1.dphase + 2.0 * k2.dphase + 2.0 * k3.dphase + k4.dphase) / 6.0;
    PlantState out = detail::advance(s, sum, dt);
    if (!out.sw1) {
        out.i = SpaceVector{};
    } else if (!out.inverter_active) {
        out.i = precharge_point(out, p, g).i;
    }
    return out;
}

/// Truth PCC voltage for whatever configuration the plant is in.
inline SpaceVector plant_pcc_voltage(const PlantState& s, SpaceVector mu, const PlantParams& p,
                                     const GridCondition& g) {
    if (!s.sw1) return grid_voltage(s, g);
    if (!s.inverter_active) return precharge_point(s, p, g).v_p;
    return pcc_voltage(s, mu, p, g);
}

}  // namespace wgi
