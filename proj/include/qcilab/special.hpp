#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "qcilab/error.hpp"

namespace qcilab {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

/// Physicists' Hermite polynomial H_n(x) by the three-term recurrence
/// H_{n+1} = 2x H_n - 2n H_{n-1}.
inline double hermite_poly(int n, double x) {
    if (n < 0 || n > 200) throw RangeError("hermite_poly: order must lie in [0, 200]");
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * x * cur - 2.0 * k * prev;
        prev = cur;
        cur = next;
        if (!std::isfinite(cur)) {
            throw RangeError("hermite_poly: H_" + std::to_string(n) + "(" + std::to_string(x) +
                             ") overflows double precision");
        }
    }
    return cur;
}

/// H_n(x) / sqrt(2^n n!) computed by the rescaled recurrence, so that large
/// orders do not overflow before the Gaussian factor is applied.
inline double hermite_scaled(int n, double x) {
    if (n < 0 || n > 200) throw RangeError("hermite_scaled: order must lie in [0, 200]");
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = std::sqrt(2.0) * x;
    for (int k = 1; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Hermite function e^{-t^2/2} H_n(t) / sqrt(2^n n!), evaluated with the
/// Gaussian folded into the recurrence to stay finite for |t| large.
inline double hermite_function(int n, double t) {
    if (n < 0 || n > 200) throw RangeError("hermite_function: order must lie in [0, 200]");
    double prev = std::exp(-0.5 * t * t);
    if (n == 0) return prev;
    double cur = std::sqrt(2.0) * t * prev;
    for (int k = 1; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * t * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Complex log-gamma (Lanczos, g = 7, 9 terms) with reflection.

inline cplx log_gamma(cplx z) {
    static constexpr std::array<double, 9> p = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    constexpr double g = 7.0;
    if (z.real() < 0.5) {
        // log Gamma(z) = log pi - log sin(pi z) - log Gamma(1 - z)
        return std::log(kPi) - std::log(std::sin(kPi * z)) - log_gamma(1.0 - z);
    }
    z -= 1.0;
    cplx x = p[0];
    for (std::size_t i = 1; i < p.size(); ++i) x += p[i] / (z + static_cast<double>(i));
    const cplx t = z + g + 0.5;
    return 0.5 * std::log(2.0 * kPi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

inline cplx gamma(cplx z) { return std::exp(log_gamma(z)); }

/// |Gamma(1/2 + i s)|^2 = pi / cosh(pi s).
inline double gamma_modulus_sq_critical(double s) {
    if (std::abs(s) > 50.0) throw RangeError("gamma_modulus_sq_critical: |s| must not exceed 50");
    return kPi / std::cosh(kPi * std::abs(s));
}

// ---------------------------------------------------------------------------
// Bessel functions of the first kind, integer order.

namespace detail {

// Hankel asymptotic expansion for J_nu, nu in {0, 1}; x >= 25.
inline double bessel_j_hankel(int nu, double x) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0, q = 0.0;
    double term = 1.0;
    double last = 1.0;
    for (int k = 1; k < 80; ++k) {
        term *= (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
        if (std::abs(term) > std::abs(last)) break;
        if (k % 2 == 1) {
            q += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * term;
        } else {
            p += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * term;
        }
        last = term;
        if (std::abs(term) < 1e-17) break;
    }
    const double w = x - nu * kPi / 2.0 - kPi / 4.0;
    return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(w) - q * std::sin(w));
}

// Miller's backward recurrence normalised by J_0 + 2 sum J_{2k} = 1.
inline double bessel_j_miller(int n, double x) {
    const double top = std::max<double>(n, x);
    int start = static_cast<int>(top + 20.0 + 6.0 * std::sqrt(top + 1.0));
    start += start % 2;
    double jp1 = 0.0, j = 1e-300, result = 0.0, norm = 0.0;
    for (int k = start; k > 0; --k) {
        const double jm1 = 2.0 * k / x * j - jp1;
        jp1 = j;
        j = jm1;
        if (std::abs(j) > 1e250) {
            j *= 1e-250;
            jp1 *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
        if (k - 1 == n) result = j;
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * j;
    }
    norm += j;
    return result / norm;
}

}  // namespace detail

/// J_n(x) for integer n, accurate to about 1e-13 absolute for |x| <= 1e5.
/// Forward recurrence above the turning point, Miller's algorithm below it.
inline double bessel_j(int n, double x) {
    if (n < 0) return (n % 2 == 0 ? 1.0 : -1.0) * bessel_j(-n, x);
    if (x < 0.0) return (n % 2 == 0 ? 1.0 : -1.0) * bessel_j(n, -x);
    if (std::abs(x) > 1e5) throw RangeError("bessel_j: argument beyond 1e5");
    if (x == 0.0) return n == 0 ? 1.0 : 0.0;
    if (x >= 25.0 && n < x) {
        double j0 = detail::bessel_j_hankel(0, x);
        if (n == 0) return j0;
        double j1 = detail::bessel_j_hankel(1, x);
        for (int k = 1; k < n; ++k) {
            const double j2 = 2.0 * k / x * j1 - j0;
            j0 = j1;
            j1 = j2;
        }
        return j1;
    }
    return detail::bessel_j_miller(n, x);
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rule on [-1, 1].

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes ascending. Newton iteration on the Legendre recurrence.
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw RangeError("gauss_legendre: need at least one node");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

/// Fixed 20-point rule, shared by the panel quadratures.
inline const QuadratureRule& gauss_legendre_20() {
    static const QuadratureRule rule = gauss_legendre(20);
    return rule;
}

}  // namespace qcilab
