#pragma once

// Gain synthesis from settling-time targets, with an eigenvalue report for
// every assembled closed-loop matrix.

#include <array>
#include <string>
#include <vector>

#include "wgi/current_loop.hpp"
#include "wgi/droop.hpp"
#include "wgi/energy_control.hpp"
#include "wgi/observer.hpp"
#include "wgi/plant.hpp"
#include "wgi/poly.hpp"
#include "wgi/startup.hpp"

namespace wgi {

struct TuningSpec {
    std::array<double, 2> observer_taus{5e-3, 50e-3};
    std::array<double, 2> current_taus{1.5e-3, 1e-3};
    std::array<double, 3> energy_taus{20e-3, 1.5e-3, 1e-3};
    double droop_tau = 50e-3;
    double g_p_ratio = 0.01;
    double startup_tau = 25e-3;

    void validate() const {
        for (double t : observer_taus)
            if (!(t > 0)) throw InvalidTarget("observer settling time must be positive");
        for (double t : current_taus)
            if (!(t > 0)) throw InvalidTarget("current-loop settling time must be positive");
        for (double t : energy_taus)
            if (!(t > 0)) throw InvalidTarget("energy-loop settling time must be positive");
        if (!(droop_tau > 0)) throw InvalidTarget("droop settling time must be positive");
        if (!(g_p_ratio > 0)) throw InvalidTarget("g_p ratio must be positive");
        if (!(startup_tau > 0)) throw InvalidTarget("start-up settling time must be positive");
    }
};

/// Worst-case grid used for the droop design.
struct WorstCaseGrid {
    double v_g_min = 0.0;
    double X_g_max = 0.0;
};

struct GainBundle {
    ObserverGains observer{};
    CurrentLoopGains current{};
    EnergyGains energy{};
    DroopGains droop{};
    double kappa = 0.0;
};

struct EigenCheck {
    std::string matrix;
    std::vector<SpaceVector> targets;
    std::vector<SpaceVector> computed;
    double max_rel_error = 0.0;
};

struct TuningReport {
    GainBundle gains{};
    std::vector<EigenCheck> checks;
    double ki_over_kp_real = 0.0;  ///< Re{k_i/k_p}; > 0 keeps x_i a stable low-pass filter

    bool ok(double tol = 1e-9) const {
        for (const auto& c : checks)
            if (c.max_rel_error > tol) return false;
        return ki_over_kp_real > 0.0;
    }
};

inline EigenCheck check_observer(const ObserverGains& g, double L, double omega, std::array<SpaceVector, 2> targets) {
    const auto c = poly::char_poly(observer_error_matrix(g, L, omega));
    const auto roots = poly::quadratic_roots(c[0], c[1]);
    return {"A_o", {targets.begin(), targets.end()}, {roots.begin(), roots.end()},
            poly::max_relative_mismatch(roots, targets)};
}

inline EigenCheck check_current(const CurrentLoopGains& g, std::array<SpaceVector, 2> targets) {
    const auto c = poly::char_poly(current_error_matrix(g));
    const auto roots = poly::quadratic_roots(c[0], c[1]);
    return {"A_i", {targets.begin(), targets.end()}, {roots.begin(), roots.end()},
            poly::max_relative_mismatch(roots, targets)};
}

inline EigenCheck check_energy(const EnergyGains& g, std::array<SpaceVector, 3> targets) {
    const auto c = poly::char_poly(energy_error_matrix(g));
    const auto roots = poly::cubic_roots(c[0], c[1], c[2]);
    return {"A_fl", {targets.begin(), targets.end()}, {roots.begin(), roots.end()},
            poly::max_relative_mismatch(roots, targets)};
}

/// Eigenvalue report for an arbitrary (e.g. user-overridden) bundle against a tuning spec.
inline std::vector<EigenCheck> verify_gains(const GainBundle& b, const TuningSpec& spec, const PlantParams& params) {
    const auto& to = spec.observer_taus;
    const auto& tc = spec.current_taus;
    const auto& te = spec.energy_taus;
    return {check_observer(b.observer, params.L, params.omega,
                           {SpaceVector(settling_pole(to[0])), SpaceVector(settling_pole(to[1]))}),
            check_current(b.current, {SpaceVector(settling_pole(tc[0])), SpaceVector(settling_pole(tc[1]))}),
            check_energy(b.energy, {SpaceVector(settling_pole(te[0])), SpaceVector(settling_pole(te[1])),
                                    SpaceVector(settling_pole(te[2]))})};
}

inline TuningReport synthesize_all(const TuningSpec& spec, const PlantParams& params, const WorstCaseGrid& worst,
                                   double V_b) {
    spec.validate();
    TuningReport rep;
    GainBundle& b = rep.gains;
    b.observer = place_observer_poles(spec.observer_taus[0], spec.observer_taus[1], params.L, params.omega);
    b.current = place_current_poles(spec.current_taus[0], spec.current_taus[1]);
    b.energy = place_energy_poles(spec.energy_taus[0], spec.energy_taus[1], spec.energy_taus[2]);
    b.droop = design_droop_gains(spec.droop_tau, worst.v_g_min, worst.X_g_max, spec.g_p_ratio);
    b.kappa = design_kappa(spec.startup_tau, params.R_ch, V_b);
    rep.checks = verify_gains(b, spec, params);
    rep.ki_over_kp_real = (b.current.k_i / b.current.k_p).real();
    return rep;
}

}  // namespace wgi
