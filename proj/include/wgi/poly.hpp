#pragma once

// Characteristic polynomials and roots of the small complex matrices that
// describe the closed-loop error dynamics.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace wgi::poly {

using cplx = std::complex<double>;
using Mat2 = std::array<std::array<cplx, 2>, 2>;
using Mat3 = std::array<std::array<cplx, 3>, 3>;

/// Coefficients {c1, c0} of s^2 + c1 s + c0 = det(sI - A).
inline std::array<cplx, 2> char_poly(const Mat2& a) {
    return {-(a[0][0] + a[1][1]), a[0][0] * a[1][1] - a[0][1] * a[1][0]};
}

/// Coefficients {c2, c1, c0} of s^3 + c2 s^2 + c1 s + c0 = det(sI - A).
inline std::array<cplx, 3> char_poly(const Mat3& a) {
    const cplx tr = a[0][0] + a[1][1] + a[2][2];
    const cplx minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] -
                        a[0][2] * a[2][0] + a[1][1] * a[2][2] - a[1][2] * a[2][1];
    const cplx det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    return {-tr, minors, -det};
}

/// Roots of s^2 + b s + c, computed without cancellation.
inline std::array<cplx, 2> quadratic_roots(cplx b, cplx c) {
    const cplx disc = std::sqrt(b * b - 4.0 * c);
    // pick the sign that adds magnitudes
    const cplx q = (std::real(std::conj(b) * disc) >= 0.0) ? -0.5 * (b + disc) : -0.5 * (b - disc);
    if (q == cplx{}) return {cplx{}, cplx{}};
    return {q, c / q};
}

namespace detail {
inline cplx eval_cubic(cplx b, cplx c, cplx d, cplx s) { return ((s + b) * s + c) * s + d; }

inline cplx polish_cubic(cplx b, cplx c, cplx d, cplx s) {
    for (int it = 0; it < 8; ++it) {
        const cplx f = eval_cubic(b, c, d, s);
        const cplx df = (3.0 * s + 2.0 * b) * s + c;
        if (df == cplx{}) break;
        const cplx step = f / df;
        s -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(s)) break;
    }
    return s;
}
}  // namespace detail

/// Roots of s^3 + b s^2 + c s + d by Cardano's formula over C, Newton-polished and deflated.
inline std::array<cplx, 3> cubic_roots(cplx b, cplx c, cplx d) {
    // depressed cubic t^3 + p t + q with s = t - b/3
    const cplx shift = b / 3.0;
    const cplx p = c - b * b / 3.0;
    const cplx q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const cplx disc = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    cplx u3 = -q / 2.0 + disc;
    if (std::abs(-q / 2.0 - disc) > std::abs(u3)) u3 = -q / 2.0 - disc;
    cplx t0;
    if (u3 == cplx{}) {
        t0 = cplx{};
    } else {
        const cplx u = std::pow(u3, 1.0 / 3.0);
        t0 = u - p / (3.0 * u);
    }
    cplx s0 = detail::polish_cubic(b, c, d, t0 - shift);
    // deflate: s^3 + b s^2 + c s + d = (s - s0)(s^2 + b1 s + c1)
    const cplx b1 = b + s0;
    const cplx c1 = c + s0 * b1;
    auto [s1, s2] = quadratic_roots(b1, c1);
    s1 = detail::polish_cubic(b, c, d, s1);
    s2 = detail::polish_cubic(b, c, d, s2);
    return {s0, s1, s2};
}

/// Largest relative distance between two root sets after pairing each target
/// with its nearest unused computed root. Relative to max(|target|, 1).
template <std::size_t N>
double max_relative_mismatch(std::array<cplx, N> computed, const std::array<cplx, N>& targets) {
    double worst = 0.0;
    std::array<bool, N> used{};
    for (const cplx& t : targets) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < N; ++k) {
            if (used[k]) continue;
            const double dist = std::abs(computed[k] - t);
            if (dist < best_d) {
                best_d = dist;
                best = k;
            }
        }
        used[best] = true;
        worst = std::max(worst, best_d / std::max(std::abs(t), 1.0));
    }
    return worst;
}

}  // namespace wgi::poly
