#pragma once

// Feedback-linearizing control of the DC-link energy and the injected
// reactive power. The change of variables
//
//   xi1 = (L|i|^2 + C v_c^2)/2 + j eta,    xi2 = d(xi1)/dt = p_i - p + j q,
//
// turns the error dynamics into a linear third-order chain closed by a
// full-state feedback with integral action (k1, k2, k3). The current limiting
// loop sits inside; saturation of i* or mu is fed back through a recomputed
// auxiliary action so the integral state x_fl does not wind up.

#include <cmath>

#include "wgi/core.hpp"
#include "wgi/current_loop.hpp"
#include "wgi/errors.hpp"
#include "wgi/poly.hpp"

namespace wgi {

struct EnergyGains {
    ComplexGain k1{};
    ComplexGain k2{};
    ComplexGain k3{};
};

struct EnergyState {
    SpaceVector x_fl{};
    double e_eta = 0.0;  ///< integral of q - q* [VAr s]
    double p_ref = 0.0;  ///< p*, integrated internally [W]
    bool sat_i = false;
};

struct EnergyReferences {
    double v_c_ref = 300.0;
    double dv_c_ref = 0.0;
    double q_ref = 0.0;
    double dq_ref = 0.0;
    double delta_p = 20.0;  ///< keeps the p* rate finite near p* = 0 [W]
};

struct ComplexEnergy {
    SpaceVector xi1{};
    SpaceVector xi2{};
};

inline ComplexEnergy xi_transform(SpaceVector i, double v_c, SpaceVector v_p, double p_i, double eta, double L,
                                  double C) {
    const double p = active_power(v_p, i);
    const double q = reactive_power(v_p, i);
    return {SpaceVector(0.5 * (L * std::norm(i) + C * v_c * v_c), eta), SpaceVector(p_i - p, q)};
}

/// Rate of p* that keeps the inductor+capacitor energy reference consistent with the power balance.
inline double p_ref_rate(const EnergyReferences& refs, double p_ref, double p_i, double V_p, double L, double C) {
    if (!(V_p > 0)) throw InvalidReference("PCC voltage magnitude must be positive");
    if (!(refs.delta_p > 0)) throw InvalidReference("delta_p must be positive");
    const double num =
        V_p * V_p * (p_i - p_ref - C * refs.dv_c_ref * refs.v_c_ref) - L * refs.dq_ref * refs.q_ref;
    return num / (L * (std::abs(p_ref) + refs.delta_p));
}

/// Advances p* over dt by backward Euler. The p* dynamics has a time constant
/// L(|p*| + delta_p)/V_p^2 of a few microseconds, far below any control period,
/// so an explicit update would be unstable. The solution is bracketed between
/// p* and its equilibrium and found by bisection.
inline double advance_p_ref(const EnergyReferences& refs, double p_ref, double p_i, double V_p, double L, double C,
                            double dt) {
    if (!(V_p > 0)) throw InvalidReference("PCC voltage magnitude must be positive");
    const double a = V_p * V_p / L;
    const double target = p_i - C * refs.dv_c_ref * refs.v_c_ref - L * refs.dq_ref * refs.q_ref / (V_p * V_p);
    if (target == p_ref) return p_ref;
    auto residual = [&](double x) { return x - p_ref - dt * a * (target - x) / (std::abs(x) + refs.delta_p); };
    double lo = std::min(p_ref, target);
    double hi = std::max(p_ref, target);
    double f_lo = residual(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = residual(mid);
        if ((f_mid < 0) == (f_lo < 0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct ReferenceSignals {
    SpaceVector xi1_ref{};
    SpaceVector xi2_ref{};
    SpaceVector dxi2_ref{};
    double p_ref_next = 0.0;
    double dp_ref = 0.0;     ///< rate of p* over the coming period
    double i_ref_sq = 0.0;   ///< |i*|^2 = (p*^2 + q*^2)/V_p^2
};

/// References for one control period. eta* is never materialized (only e_eta
/// is integrated), so xi1_ref carries zero imaginary part.
inline ReferenceSignals reference_generator(const EnergyReferences& refs, double p_i, double V_p, double p_ref,
                                            double L, double C, double dt, double dp_i = 0.0) {
    if (!(V_p > 0)) throw InvalidReference("PCC voltage magnitude must be positive");
    ReferenceSignals s;
    s.p_ref_next = advance_p_ref(refs, p_ref, p_i, V_p, L, C, dt);
    s.dp_ref = (s.p_ref_next - p_ref) / dt;
    s.i_ref_sq = (p_ref * p_ref + refs.q_ref * refs.q_ref) / (V_p * V_p);
    s.xi1_ref = SpaceVector(0.5 * (L * s.i_ref_sq + C * refs.v_c_ref * refs.v_c_ref), 0.0);
    s.xi2_ref = SpaceVector(p_i - p_ref, refs.q_ref);
    s.dxi2_ref = SpaceVector(dp_i - s.dp_ref, refs.dq_ref);
    return s;
}

struct EnergyErrors {
    SpaceVector e_xi1{};
    SpaceVector e_xi2{};
};

inline EnergyErrors error_signals(SpaceVector i, double v_c, const EnergyReferences& refs, double p_ref, double p,
                                  double q, double e_eta, double L, double C, double V_p) {
    if (!(V_p > 0)) throw InvalidReference("PCC voltage magnitude must be positive");
    EnergyErrors e;
    const double i_ref_sq = (p_ref * p_ref + refs.q_ref * refs.q_ref) / (V_p * V_p);
    e.e_xi1 = SpaceVector(0.5 * L * (std::norm(i) - i_ref_sq) + 0.5 * C * (v_c * v_c - refs.v_c_ref * refs.v_c_ref),
                          e_eta);
    e.e_xi2 = SpaceVector(-(p - p_ref), q - refs.q_ref);
    return e;
}

/// Error chain [[0, 1, 0], [-k1, -k2, -k3], [1, 0, 0]] on (e_xi1, e_xi2, x_fl).
inline poly::Mat3 energy_error_matrix(const EnergyGains& g) {
    const SpaceVector o{};
    const SpaceVector one{1.0};
    return {{{o, one, o}, {-g.k1, -g.k2, -g.k3}, {one, o, o}}};
}

inline EnergyGains place_energy_eigenvalues(SpaceVector l1, SpaceVector l2, SpaceVector l3) {
    // s^3 + k2 s^2 + k1 s + k3 = (s - l1)(s - l2)(s - l3)
    return {l1 * l2 + l1 * l3 + l2 * l3, -(l1 + l2 + l3), -(l1 * l2 * l3)};
}

inline EnergyGains place_energy_poles(double tau1, double tau2, double tau3) {
    if (!(tau1 > 0 && tau2 > 0 && tau3 > 0)) throw InvalidTarget("energy-loop settling times must be positive");
    return place_energy_eigenvalues(settling_pole(tau1), settling_pole(tau2), settling_pole(tau3));
}

struct FlInputs {
    SpaceVector i{};       ///< measured current
    double v_c = 0.0;      ///< measured DC-link voltage
    SpaceVector v_p{};     ///< PCC voltage (the observer estimate at run time)
    double V_p = 0.0;      ///< slowly varying PCC magnitude used by the references
    double p_i = 0.0;      ///< input power signal
    double dp_i = 0.0;     ///< its derivative; zero in normal use
};

struct FlConfig {
    double L = 2.1e-3;
    double C = 48e-6;
    double omega = 0.0;
    double i_max = 0.0;
    double mu_max = 0.0;
    double dt = 1e-4;
    double v_c_min_div = 1.0;
    double v_p_guard = 1.0;  ///< minimum |v_p| the law may divide by
};

struct FlResult {
    SpaceVector mu{};
    SpaceVector u{};
    SpaceVector i_ref{};
    SpaceVector r{};
    SpaceVector alpha{};
    EnergyErrors errors{};  ///< e_xi1 after the anti-windup recompute
    double p = 0.0;
    double q = 0.0;
    bool sat_i = false;
    bool sat_mu = false;
    EnergyState next{};
    CurrentLoopState next_cla{};
};

inline FlResult fl_step(const EnergyState& state, const CurrentLoopState& cla_state, const FlInputs& in,
                        const EnergyReferences& refs, const EnergyGains& g, const CurrentLoopGains& cg,
                        const FlConfig& cfg) {
    if (in.v_c < cfg.v_c_min_div) throw NonPhysicalState("v_c below division guard in energy control");
    if (std::abs(in.v_p) < cfg.v_p_guard || in.V_p < cfg.v_p_guard)
        throw DivisionGuard("PCC voltage estimate below guard: synchronization lost");

    FlResult out;
    out.p = active_power(in.v_p, in.i);
    out.q = reactive_power(in.v_p, in.i);
    const ReferenceSignals ref = reference_generator(refs, in.p_i, in.V_p, state.p_ref, cfg.L, cfg.C, cfg.dt, in.dp_i);
    EnergyErrors e = error_signals(in.i, in.v_c, refs, state.p_ref, out.p, out.q, state.e_eta, cfg.L, cfg.C, in.V_p);

    const SpaceVector vp_conj = std::conj(in.v_p);
    const SpaceVector rotation = j * cfg.omega * vp_conj * in.i;
    out.alpha = ref.dxi2_ref - g.k2 * e.e_xi2 - g.k3 * state.x_fl;
    out.r = out.alpha - g.k1 * e.e_xi1;
    const SpaceVector u_fl = (in.dp_i - out.r + rotation) / vp_conj;

    out.i_ref = (u_fl + cg.k_i * cla_state.x_i) / cg.k_p + in.i;
    out.sat_i = clamp_magnitude(out.i_ref, cfg.i_max);

    const ClaResult cla =
        cla_step(cla_state, in.i, out.i_ref, in.v_p, in.v_c, cg, cfg.L, cfg.mu_max, cfg.dt, cfg.v_c_min_div);
    out.mu = cla.mu;
    out.u = cla.u;
    out.sat_mu = cla.sat_mu;
    out.next_cla = cla.next;

    if (out.sat_i || out.sat_mu) {
        // u was modified by the CLA: recompute r and back-calculate e_xi1
        out.r = in.dp_i - vp_conj * cla.u + rotation;
        e.e_xi1 = (out.r - out.alpha) / (-g.k1);
    }
    out.errors = e;

    out.next.x_fl = state.x_fl + cfg.dt * e.e_xi1;
    out.next.e_eta = (out.sat_i || out.sat_mu) ? 0.0 : state.e_eta + cfg.dt * (out.q - refs.q_ref);
    out.next.p_ref = ref.p_ref_next;
    out.next.sat_i = out.sat_i;
    return out;
}

}  // namespace wgi
