#pragma once

// PI current controller used as a current limiting algorithm (CLA). When fed
// the reference produced by the energy controller its output equals that
// controller's auxiliary action, so it only acts when mu saturates.

#include "wgi/core.hpp"
#include "wgi/errors.hpp"
#include "wgi/poly.hpp"

namespace wgi {

struct CurrentLoopGains {
    ComplexGain k_p{};  ///< [1/s]
    ComplexGain k_i{};  ///< [1/s^2]
};

struct CurrentLoopState {
    SpaceVector x_i{};  ///< integral of the current error [A s]
    bool sat_mu = false;
};

struct ClaResult {
    SpaceVector mu{};
    SpaceVector u{};    ///< di/dt commanded, after saturation
    SpaceVector e_i{};  ///< error used to integrate x_i (back-calculated when saturated)
    bool sat_mu = false;
    CurrentLoopState next{};
};

inline ClaResult cla_step(const CurrentLoopState& state, SpaceVector i_meas, SpaceVector i_ref, SpaceVector v_p,
                          double v_c, const CurrentLoopGains& g, double L, double mu_max, double dt,
                          double v_c_min_div = 1.0) {
    if (v_c < v_c_min_div) throw NonPhysicalState("v_c below division guard in current loop");
    ClaResult r;
    r.e_i = i_meas - i_ref;
    r.u = -g.k_p * r.e_i - g.k_i * state.x_i;
    r.mu = (L * r.u + v_p) / v_c;
    if (clamp_magnitude(r.mu, mu_max)) {
        r.sat_mu = true;
        // back-calculation: keep x_i where |mu| = mu_max
        r.u = (v_c * r.mu - v_p) / L;
        r.e_i = (r.u + g.k_i * state.x_i) / (-g.k_p);
    }
    r.next.x_i = state.x_i + dt * r.e_i;
    r.next.sat_mu = r.sat_mu;
    return r;
}

/// Error dynamics matrix [[-k_p, -k_i], [1, 0]].
inline poly::Mat2 current_error_matrix(const CurrentLoopGains& g) {
    return {{{-g.k_p, -g.k_i}, {SpaceVector(1.0), SpaceVector{}}}};
}

inline CurrentLoopGains place_current_eigenvalues(SpaceVector lambda1, SpaceVector lambda2) {
    return {-(lambda1 + lambda2), lambda1 * lambda2};
}

inline CurrentLoopGains place_current_poles(double tau1, double tau2) {
    if (!(tau1 > 0 && tau2 > 0)) throw InvalidTarget("current-loop settling times must be positive");
    return place_current_eigenvalues(settling_pole(tau1), settling_pole(tau2));
}

}  // namespace wgi
