#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qcilab/cutoff.hpp"
#include "qcilab/error.hpp"
#include "qcilab/fft.hpp"
#include "qcilab/grid.hpp"
#include "qcilab/oscillatory.hpp"
#include "qcilab/quantization.hpp"
#include "qcilab/quasimodes.hpp"
#include "qcilab/special.hpp"

namespace qcilab {

struct MassReport {
    BlockKind block_kind = BlockKind::Regular;
    double hbar = 0.0;
    double delta = 0.0;
    double value = 0.0;
    /// Leading-order prediction; for the hyperbolic block this is
    /// |Gamma(1/2 + is)|^2 (1 - 2 delta).
    double asymptote = 0.0;
    /// |lim_{a -> inf} F(a)|^2 (1 - 2 delta): the limit the value actually
    /// approaches for the inner integral as written.
    double mellin_asymptote = 0.0;
    /// value - asymptote.
    double log_deficit = 0.0;
    /// Quadrature error estimate of the value.
    double error_estimate = 0.0;
};

namespace detail {

inline void check_mass_delta(double delta) {
    if (!(delta >= 0.0 && delta <= 0.5)) throw RangeError("mass: delta must lie in [0, 1/2]");
}

/// |log hbar|^{-1} int_1^A |P(a)|^2 da / a for a partial integral P with a
/// known large-a expansion P = L - tail. Panels of unit length with a
/// 21-point Gauss-Kronrod estimate up to the switch point, term-by-term
/// integration of the expansion beyond.
template <class Partial>
std::pair<double, double> log_mass(const Partial& partial, const OscExpansion& tail, cplx limit, double hbar,
                                   double delta, double tol) {
    const double upper = std::pow(hbar, 2.0 * delta - 1.0);
    const double near_hi = std::min(upper, partial.switch_point());
    double value = 0.0;
    double error = 0.0;
    if (near_hi > 1.0) {
        const auto n = static_cast<std::size_t>(std::ceil(near_hi - 1.0));
        const double h = (near_hi - 1.0) / static_cast<double>(n);
        cplx start = partial(1.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double lo = 1.0 + k * h;
            const double hi = lo + h;
            const auto integrand = [&](double a) {
                const cplx v = start + detail::composite_integral(
                                           [&](double x) { return partial.integrand(x); }, lo, a, 2.0 * h);
                return std::norm(v) / a;
            };
            double err = 0.0;
            value += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(integrand, lo, hi, 0, 0.0, &err);
            error += err;
            start += detail::panel_integral([&](double x) { return partial.integrand(x); }, lo, hi);
        }
    }
    if (upper > near_hi) {
        OscExpansion full = prune(tail, near_hi);
        for (auto& t : full) t.coeff = -t.coeff;
        full.push_back({limit, 0.0, 0.0});
        value += osc_modulus_sq_log_integral(full, near_hi, upper);
    }
    const double log_h = std::abs(std::log(hbar));
    if (error > tol) throw ConvergenceError("mass outer quadrature did not converge", error / log_h);
    return {value / log_h, error / log_h};
}

struct OscillatoryIntegrand {
    const OscillatoryPartial& f;
    double switch_point() const { return f.switch_point(); }
    cplx operator()(double a) const { return f(a); }
    cplx integrand(double x) const { return std::polar(1.0, f.sigma() * x + f.s() * std::log(x)) / std::sqrt(x); }
};

struct BesselIntegrand {
    const BesselMellinPartial& g;
    int k;
    double t;
    double switch_point() const { return g.switch_point(); }
    cplx operator()(double b) const { return g(b); }
    cplx integrand(double r) const { return bessel_j(k, r) * std::polar(1.0, t * std::log(r)); }
};

}  // namespace detail

/// M_e: mass of the cut-off, normalized elliptic block inside the small-scale
/// momentum cutoff, int chi^delta(eta) |F_hbar(chi^delta u_e)(eta)|^2 d eta.
inline MassReport mass_elliptic(int n, double hbar, double delta, double epsilon = kSmallScaleEpsilon) {
    if (n < 0 || n > 50) throw RangeError("mass_elliptic: n must lie in [0, 50]");
    detail::check_mass_delta(delta);
    if (!(hbar > 0.0)) throw RangeError("mass_elliptic: hbar must be positive");
    const double root = std::sqrt(hbar);
    const double reach = (std::sqrt(2.0 * n + 1.0) + 10.0) * root;
    const double r = epsilon * std::pow(hbar, delta);
    // The y grid resolves the cutoff and the oscillation; its length puts at
    // least 64 momentum samples inside the eta cutoff.
    const double length = std::max(2.0 * std::min(reach, r), 128.0 * kPi * hbar / r);
    const double dx_max = std::min({kPi * hbar / reach, r / 64.0, 2.0 * reach / 2048.0});
    const auto points = std::max<std::size_t>(2048, std::bit_ceil(static_cast<std::size_t>(std::ceil(length / dx_max))));
    if (points > (std::size_t{1} << 22)) throw ResolutionError("mass_elliptic: grid would exceed 2^22 points");
    const double dx = std::min(dx_max, length / static_cast<double>(points));
    if (nyquist_momentum(dx, hbar) < std::min(reach, r)) throw ResolutionError("mass_elliptic: momentum grid too coarse");
    Axis axis = Axis::centered(0.0, dx, points / 2);
    std::vector<cplx> samples(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double y = axis.nodes[i];
        samples[i] = bump(y / r) * std::pow(kPi * hbar, -0.25) * hermite_function(n, y / root);
    }
    const GridFunction u(axis, std::move(samples), hbar);
    const GridFunction uhat = hbar_fourier_transform(u);
    double value = 0.0;
    for (std::size_t k = 0; k < uhat.size(); ++k) {
        value += uhat.weight(k) * bump(uhat.axis().nodes[k] / r) * std::norm(uhat[k]);
    }
    MassReport rep;
    rep.block_kind = BlockKind::Elliptic;
    rep.hbar = hbar;
    rep.delta = delta;
    rep.value = value;
    rep.asymptote = 1.0;
    rep.mellin_asymptote = 1.0;
    rep.log_deficit = value - 1.0;
    return rep;
}

/// M_h = |log hbar|^{-1} int_{hbar^{-delta}}^{hbar^{delta-1}} |F(hbar^delta xi)|^2 dxi / xi
/// with F(a) = int_0^a e^{-ix} x^{-1/2+is} dx.
inline MassReport mass_hyperbolic(double s, double hbar, double delta, double tol = 1e-8) {
    if (std::abs(s) > 10.0) throw RangeError("mass_hyperbolic: |s| must not exceed 10");
    detail::check_mass_delta(delta);
    if (!(hbar > 0.0 && hbar <= 0.1)) throw RangeError("mass_hyperbolic: hbar must lie in (0, 0.1]");
    const OscillatoryPartial f(s);
    const auto [value, err] =
        detail::log_mass(detail::OscillatoryIntegrand{f}, f.tail(), f.limit(), hbar, delta, tol);
    MassReport rep;
    rep.block_kind = BlockKind::Hyperbolic;
    rep.hbar = hbar;
    rep.delta = delta;
    rep.value = value;
    rep.asymptote = gamma_modulus_sq_critical(s) * (1.0 - 2.0 * delta);
    rep.mellin_asymptote = std::norm(f.limit()) * (1.0 - 2.0 * delta);
    rep.log_deficit = value - rep.asymptote;
    rep.error_estimate = err;
    return rep;
}

/// M_ch = |log hbar|^{-1} int_{hbar^{-delta}}^{hbar^{delta-1}} |G(hbar^delta alpha)|^2 dalpha / alpha
/// with G(b) = int_0^b J_k(rho) rho^{it} drho.
inline MassReport mass_complex_hyperbolic(int k, double t, double hbar, double delta, double tol = 1e-8) {
    if (std::abs(k) > 20) throw RangeError("mass_complex_hyperbolic: |k| must not exceed 20");
    if (std::abs(t) > 10.0) throw RangeError("mass_complex_hyperbolic: |t| must not exceed 10");
    detail::check_mass_delta(delta);
    if (!(hbar > 0.0 && hbar < 1.0)) throw RangeError("mass_complex_hyperbolic: hbar must lie in (0, 1)");
    const BesselMellinPartial g(k, t);
    const auto [value, err] =
        detail::log_mass(detail::BesselIntegrand{g, k, t}, g.tail(), g.limit(), hbar, delta, tol);
    MassReport rep;
    rep.block_kind = BlockKind::ComplexHyperbolic;
    rep.hbar = hbar;
    rep.delta = delta;
    rep.value = value;
    rep.asymptote = 1.0 - 2.0 * delta;
    rep.mellin_asymptote = std::norm(g.limit()) * (1.0 - 2.0 * delta);
    rep.log_deficit = value - rep.asymptote;
    rep.error_estimate = err;
    return rep;
}

/// <Op_hbar(chi^delta(I)) e^{im theta}, e^{im theta}> on the circle with I = hbar D_theta.
inline MassReport mass_regular(int m, double hbar, double delta, double epsilon = kSmallScaleEpsilon) {
    detail::check_mass_delta(delta);
    if (!(hbar > 0.0)) throw RangeError("mass_regular: hbar must be positive");
    const double d = std::min(delta, 0.4999999);
    const double r = epsilon * std::pow(hbar, d);
    Symbol a = Symbol::product({[](double) { return cplx(1.0); }}, {[r](double xi) { return cplx(bump(xi / r)); }});
    a.delta = d;
    a.xi_support = {Interval{-r, r}};
    const double limit = quantization_spacing_limit(a, hbar);
    std::size_t n = 64;
    while (2.0 * kPi / static_cast<double>(n) > limit || static_cast<double>(n) < 4.0 * std::abs(m) + 8.0 ||
           nyquist_momentum(2.0 * kPi / static_cast<double>(n), hbar) < r) {
        n *= 2;
        if (n > (std::size_t{1} << 24)) throw ResolutionError("mass_regular: circle grid would exceed 2^24 points");
    }
    Axis axis = Axis::uniform_grid(0.0, 2.0 * kPi / static_cast<double>(n), n);
    std::vector<cplx> samples(n);
    for (std::size_t i = 0; i < n; ++i) samples[i] = std::polar(1.0 / std::sqrt(2.0 * kPi), m * axis.nodes[i]);
    const GridFunction u(axis, std::move(samples), hbar);
    const double value = matrix_element(a, hbar, u, u).real();
    MassReport rep;
    rep.block_kind = BlockKind::Regular;
    rep.hbar = hbar;
    rep.delta = delta;
    rep.value = value;
    rep.asymptote = 1.0;
    rep.mellin_asymptote = 1.0;
    rep.log_deficit = value - 1.0;
    return rep;
}

}  // namespace qcilab
