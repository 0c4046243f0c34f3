#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace wgi {

/// alpha + j*beta representation of a balanced three-phase quantity (power-invariant scaling).
using SpaceVector = std::complex<double>;

/// Complex controller/observer gain.
using ComplexGain = std::complex<double>;

inline constexpr SpaceVector j{0.0, 1.0};

struct PhaseValues {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

namespace detail {
inline constexpr double sqrt_2_3 = 0.81649658092772603273;  // sqrt(2/3)
inline constexpr double sqrt3_2 = 0.86602540378443864676;   // sqrt(3)/2
}  // namespace detail

/// Power-invariant Clarke transformation. The zero-sequence component is discarded.
inline SpaceVector clarke(double a, double b, double c) {
    return {detail::sqrt_2_3 * (a - 0.5 * b - 0.5 * c),
            detail::sqrt_2_3 * detail::sqrt3_2 * (b - c)};
}

inline SpaceVector clarke(const PhaseValues& x) { return clarke(x.a, x.b, x.c); }

/// Zero-sequence-free reconstruction of the phase quantities.
inline PhaseValues inverse_clarke(SpaceVector v) {
    const double al = v.real();
    const double be = v.imag();
    return {detail::sqrt_2_3 * al,
            detail::sqrt_2_3 * (-0.5 * al + detail::sqrt3_2 * be),
            detail::sqrt_2_3 * (-0.5 * al - detail::sqrt3_2 * be)};
}

inline SpaceVector rotate(SpaceVector v, double angle) { return v * std::polar(1.0, angle); }

/// Active power Re{v conj(i)} carried by a voltage/current pair.
inline double active_power(SpaceVector v, SpaceVector i) { return (v * std::conj(i)).real(); }

/// Reactive power Im{v conj(i)}.
inline double reactive_power(SpaceVector v, SpaceVector i) { return (v * std::conj(i)).imag(); }

/// Scales v onto the disc of radius limit. Returns true when scaling happened.
inline bool clamp_magnitude(SpaceVector& v, double limit) {
    const double m = std::abs(v);
    if (m > limit) {
        v *= limit / m;
        return true;
    }
    return false;
}

/// Pole location giving a 1% settling time tau for a first-order mode.
inline double settling_pole(double tau) { return -4.6 / tau; }

}  // namespace wgi
