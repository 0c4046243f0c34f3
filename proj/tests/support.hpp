#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "wgi/poly.hpp"
#include "wgi/scenario_io.hpp"

namespace wgi::test {

using cplx = std::complex<double>;

template <std::size_t N>
std::vector<cplx> eigenvalues(const std::array<std::array<cplx, N>, N>& m) {
    Eigen::Matrix<cplx, N, N> a;
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t c = 0; c < N; ++c) a(r, c) = m[r][c];
    Eigen::ComplexEigenSolver<Eigen::Matrix<cplx, N, N>> es(a, false);
    std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + N);
    return ev;
}

/// Worst relative distance after greedily pairing each target with its nearest computed value.
inline double match_error(std::vector<cplx> computed, const std::vector<cplx>& targets) {
    double worst = 0.0;
    for (const cplx& t : targets) {
        auto it = std::min_element(computed.begin(), computed.end(),
                                   [&](cplx a, cplx b) { return std::abs(a - t) < std::abs(b - t); });
        worst = std::max(worst, std::abs(*it - t) / std::max(std::abs(t), 1e-300));
        computed.erase(it);
    }
    return worst;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Built-in scenario with events after `keep_until` removed and the run cut to `duration`.
inline Scenario truncated(const std::string& builtin, double keep_until, double duration) {
    Scenario sc = *builtin_scenario(builtin);
    std::erase_if(sc.events, [&](const Event& e) { return e.time > keep_until; });
    sc.duration = duration;
    return sc;
}

/// V_p^2 from the phasor power flow v_p = v_g + j X i, p + j q = v_p conj(i), by bisection on W = V_p^2.
/// |v_g|^2 W = (W - X q)^2 + X^2 p^2; the upper root is the stable operating point.
inline double power_flow_vp_squared(double p, double q, double v_g, double X) {
    const double vg2 = v_g * v_g;
    auto f = [&](double W) { return (W - X * q) * (W - X * q) + X * X * p * p - vg2 * W; };
    double lo = X * q + 0.5 * vg2;  // vertex
    double hi = lo + vg2 + std::abs(X * q) + X * std::abs(p) + 1.0;
    if (f(lo) > 0) throw NoOperatingPoint("oracle: no root");
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Observed convergence order of the plant integrator between successive halvings of
/// h = 200, 100, 50, 25 us. Running converter with held mu over a short interval.
inline std::array<double, 3> integrator_order_slopes() {
    const PlantParams p;
    const GridCondition g{162.8, 6.625};
    PlantState s0;
    s0.i = {0.5, -0.2};
    s0.v_c = 300.0;
    s0.sw1 = s0.sw2 = s0.inverter_active = true;
    PlantInputs in;
    in.mu = {0.545, 0.02};
    in.p_i_command = 200.0;
    auto integrate = [&](double h) {
        PlantState s = s0;
        const long n = std::lround(4e-3 / h);
        for (long k = 0; k < n; ++k) s = step_plant(s, in, p, g, h);
        return s;
    };
    const PlantState ref = integrate(1e-6);
    auto error = [&](double h) {
        const PlantState s = integrate(h);
        return std::abs(s.i - ref.i) / std::abs(ref.i) + std::abs(s.v_c - ref.v_c) / ref.v_c;
    };
    const std::array<double, 4> hs{200e-6, 100e-6, 50e-6, 25e-6};
    std::array<double, 3> slopes{};
    double prev = error(hs[0]);
    for (std::size_t k = 1; k < hs.size(); ++k) {
        const double e = error(hs[k]);
        slopes[k - 1] = std::log2(prev / e);
        prev = e;
    }
    return slopes;
}

inline std::mt19937_64& rng() {
    static std::mt19937_64 g(20240611);
    return g;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline cplx random_vector(double scale) { return {uniform(-scale, scale), uniform(-scale, scale)}; }

}  // namespace wgi::test
