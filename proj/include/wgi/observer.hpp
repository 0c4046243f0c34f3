#pragma once

// Full-order observer of the PCC voltage built from the inductor current only.
//
//   L d(i_hat)/dt = v_c mu - v_p_hat + L h1 (i - i_hat) - (1 - sw2) R_ch i
//   d(v_p_hat)/dt = j omega v_p_hat + h2 (i - i_hat)
//
// The runtime update is the exact sampled-data counterpart: the plant model is
// discretized for a held mu and a v_p rotating at omega, and the discrete gains
// place the error eigenvalues at exp(lambda Ts) for the same continuous
// eigenvalues lambda as (h1, h2).

#include <array>

#include "wgi/core.hpp"
#include "wgi/errors.hpp"
#include "wgi/poly.hpp"

namespace wgi {

struct ObserverGains {
    ComplexGain h1{};  ///< [1/s]
    ComplexGain h2{};  ///< [V/(A s)]
};

struct ObserverState {
    SpaceVector i_hat{};
    SpaceVector v_p_hat{};
    bool enabled = false;
};

struct ObserverDerivatives {
    SpaceVector di_hat{};
    SpaceVector dv_p_hat{};
};

inline ObserverDerivatives observer_derivatives(const ObserverState& obs, SpaceVector i_meas, double v_c,
                                                SpaceVector mu, bool sw2, const ObserverGains& gains, double L,
                                                double R_ch, double omega) {
    if (!obs.enabled) throw ObserverDisabled("observer evaluated while disabled");
    const SpaceVector eps = i_meas - obs.i_hat;
    const double r_series = sw2 ? 0.0 : R_ch;
    ObserverDerivatives d;
    d.di_hat = (v_c * mu - obs.v_p_hat + L * gains.h1 * eps - r_series * i_meas) / L;
    d.dv_p_hat = j * omega * obs.v_p_hat + gains.h2 * eps;
    return d;
}

/// Estimation-error matrix [[-h1, -1/L], [-h2, j omega]].
inline poly::Mat2 observer_error_matrix(const ObserverGains& g, double L, double omega) {
    return {{{-g.h1, SpaceVector(-1.0 / L)}, {-g.h2, j * omega}}};
}

/// Places the error eigenvalues at {lambda1, lambda2} by matching
/// s^2 + (h1 - j omega) s - j omega h1 - h2/L = (s - lambda1)(s - lambda2).
inline ObserverGains place_observer_eigenvalues(SpaceVector lambda1, SpaceVector lambda2, double L, double omega) {
    ObserverGains g;
    g.h1 = j * omega - (lambda1 + lambda2);
    g.h2 = -L * (lambda1 * lambda2 + j * omega * g.h1);
    return g;
}

/// Two real poles with 1% settling times tau1 and tau2.
inline ObserverGains place_observer_poles(double tau1, double tau2, double L, double omega) {
    if (!(tau1 > 0 && tau2 > 0)) throw InvalidTarget("observer settling times must be positive");
    if (!(L > 0)) throw InvalidTarget("inductance must be positive");
    return place_observer_eigenvalues(settling_pole(tau1), settling_pole(tau2), L, omega);
}

inline std::array<SpaceVector, 2> observer_eigenvalues(const ObserverGains& g, double L, double omega) {
    const auto c = poly::char_poly(observer_error_matrix(g, L, omega));
    return poly::quadratic_roots(c[0], c[1]);
}

/// Sampled-data observer coefficients for control period Ts.
struct DiscreteObserver {
    double Ts = 0.0;
    double L = 0.0;
    SpaceVector rot{};    ///< exp(j omega Ts)
    SpaceVector gamma{};  ///< integral of exp(j omega s) over one period
    SpaceVector g1{};
    SpaceVector g2{};
};

inline DiscreteObserver discretize_observer(const ObserverGains& gains, double L, double omega, double Ts) {
    if (!(Ts > 0)) throw InvalidTarget("control period must be positive");
    DiscreteObserver d;
    d.Ts = Ts;
    d.L = L;
    d.rot = std::polar(1.0, omega * Ts);
    d.gamma = (omega == 0.0) ? SpaceVector(Ts) : (d.rot - 1.0) / (j * omega);
    const auto lam = observer_eigenvalues(gains, L, omega);
    const SpaceVector z1 = std::exp(lam[0] * Ts);
    const SpaceVector z2 = std::exp(lam[1] * Ts);
    // error matrix [[1 - g1, -gamma/L], [-g2, rot]]
    d.g1 = 1.0 + d.rot - (z1 + z2);
    d.g2 = ((1.0 - d.g1) * d.rot - z1 * z2) * L / d.gamma;
    return d;
}

inline poly::Mat2 discrete_error_matrix(const DiscreteObserver& d) {
    return {{{1.0 - d.g1, -d.gamma / d.L}, {-d.g2, d.rot}}};
}

/// Starts estimation: i_hat takes the measured current, v_p_hat starts at zero.
inline ObserverState enable_observer(SpaceVector i_meas) { return {i_meas, SpaceVector{}, true}; }

/// One control-period update. mu is the modulation applied over the coming period.
inline ObserverState observer_step(const ObserverState& obs, SpaceVector i_meas, double v_c, SpaceVector mu,
                                   bool sw2, double R_ch, const DiscreteObserver& d) {
    if (!obs.enabled) throw ObserverDisabled("observer stepped while disabled");
    const SpaceVector eps = i_meas - obs.i_hat;
    const double r_series = sw2 ? 0.0 : R_ch;
    ObserverState next = obs;
    next.i_hat = obs.i_hat + (d.Ts * v_c * mu - d.gamma * (obs.v_p_hat + r_series * i_meas)) / d.L + d.g1 * eps;
    next.v_p_hat = d.rot * obs.v_p_hat + d.g2 * eps;
    return next;
}

}  // namespace wgi
