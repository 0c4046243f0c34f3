#pragma once

#include "wgi/core.hpp"
#include "wgi/errors.hpp"

namespace wgi {

struct StartupParams {
    double kappa = 0.0;
    double E_c_ref = 0.0;  ///< 0.5 C v_c*^2, latched at STARTUP entry [J]
};

/// Drives the bridge as a resistor kappa (E_c* - E_c) in series with R_ch, so
/// the DC link charges with a current bounded by the pre-charge resistor.
inline SpaceVector startup_mu(SpaceVector i, double v_c, double C, const StartupParams& params, double mu_max,
                              double v_c_min_div = 1.0) {
    if (v_c < v_c_min_div) throw NonPhysicalState("v_c below division guard in start-up control");
    const double E_c = 0.5 * C * v_c * v_c;
    SpaceVector mu = -params.kappa * (params.E_c_ref - E_c) * i / v_c;
    clamp_magnitude(mu, mu_max);
    return mu;
}

/// kappa = 4.6 R_ch^2 / (tau_ch V_b^2): the energy rises no faster than a
/// first-order response with 1% settling time tau_ch.
inline double design_kappa(double tau_ch, double R_ch, double V_b) {
    if (!(tau_ch > 0 && R_ch > 0 && V_b > 0)) throw InvalidTarget("start-up design inputs must be positive");
    return 4.6 * R_ch * R_ch / (tau_ch * V_b * V_b);
}

}  // namespace wgi
