#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qcilab/error.hpp"
#include "qcilab/special.hpp"

namespace qcilab {

/// coeff * e^{i omega x} * x^power.
struct OscTerm {
    cplx coeff;
    double omega;
    cplx power;
};

/// Finite sum of oscillatory monomials; used for truncated large-x
/// asymptotic expansions.
using OscExpansion = std::vector<OscTerm>;

inline cplx cpow_real(double x, cplx p) { return std::exp(p * std::log(x)); }

inline cplx evaluate(const OscExpansion& e, double x) {
    cplx s = 0.0;
    for (const auto& t : e) s += t.coeff * std::polar(1.0, t.omega * x) * cpow_real(x, t.power);
    return s;
}

/// int_B^inf y^nu e^{i sigma y} dy for sigma = +-1, Re nu < 0, B >= 25, by
/// repeated integration by parts, truncated at the smallest term.
inline cplx unit_frequency_tail(cplx nu, int sigma, double b) {
    if (b < 25.0) throw RangeError("unit_frequency_tail: lower limit must be at least 25");
    const cplx is(0.0, static_cast<double>(sigma));
    cplx term = is * cpow_real(b, nu);  // (i sigma)^{m+1} (nu)_m b^{nu-m} at m = 0
    cplx sum = term;
    double last = std::abs(term);
    for (int m = 1; m < 400; ++m) {
        const cplx next = term * is * (nu - static_cast<double>(m - 1)) / b;
        const double mag = std::abs(next);
        if (mag > last) break;
        sum += next;
        term = next;
        last = mag;
        if (mag < 1e-18 * std::abs(sum)) break;
    }
    return std::polar(1.0, sigma * b) * sum;
}

/// int_{b1}^{b2} x^nu e^{i omega x} dx.
/// Non-zero frequencies use the asymptotic tails and need |omega| b1 >= 25.
inline cplx osc_monomial_integral(cplx nu, double omega, double b1, double b2) {
    if (b2 <= b1) return 0.0;
    if (omega == 0.0) {
        const cplx p = nu + 1.0;
        if (std::abs(p) < 1e-14) return std::log(b2 / b1);
        return (cpow_real(b2, p) - cpow_real(b1, p)) / p;
    }
    const double w = std::abs(omega);
    const int sigma = omega > 0.0 ? 1 : -1;
    const cplx scale = cpow_real(w, -nu - 1.0);
    const cplx hi = std::isfinite(b2) ? unit_frequency_tail(nu, sigma, w * b2) : cplx(0.0);
    return scale * (unit_frequency_tail(nu, sigma, w * b1) - hi);
}

/// int_{b1}^{b2} |E(x)|^2 dx / x, term by term.
inline double osc_modulus_sq_log_integral(const OscExpansion& e, double b1, double b2) {
    cplx s = 0.0;
    for (const auto& t : e) {
        for (const auto& u : e) {
            const cplx p = t.power + std::conj(u.power) - 1.0;
            s += t.coeff * std::conj(u.coeff) * osc_monomial_integral(p, t.omega - u.omega, b1, b2);
        }
    }
    return s.real();
}

/// Drop terms below `tol` relative magnitude at x = b.
inline OscExpansion prune(const OscExpansion& e, double b, double tol = 1e-17) {
    double peak = 0.0;
    for (const auto& t : e) peak = std::max(peak, std::abs(t.coeff) * std::pow(b, t.power.real()));
    OscExpansion out;
    for (const auto& t : e) {
        if (std::abs(t.coeff) * std::pow(b, t.power.real()) >= tol * peak) out.push_back(t);
    }
    return out;
}

namespace detail {

/// Terms of int_b^inf x^nu e^{i sigma x} dx as an expansion in b, truncated
/// where the series is smallest at b = b_min.
inline void append_tail_terms(OscExpansion& out, cplx scale, cplx nu, int sigma, double b_min) {
    const cplx is(0.0, static_cast<double>(sigma));
    cplx c = is;  // (i sigma)^{m+1} (nu)_m
    double last = std::abs(c) * std::pow(b_min, nu.real());
    out.push_back({scale * c, static_cast<double>(sigma), nu});
    for (int m = 1; m < 400; ++m) {
        c *= is * (nu - static_cast<double>(m - 1));
        const double mag = std::abs(c) * std::pow(b_min, nu.real() - m);
        if (mag > last) break;
        out.push_back({scale * c, static_cast<double>(sigma), nu - static_cast<double>(m)});
        last = mag;
        if (mag < 1e-19) break;
    }
}

template <class F>
cplx panel_integral(F&& f, double lo, double hi) {
    const auto& rule = gauss_legendre_20();
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    cplx s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * s;
}

/// int_lo^hi f by 20-point Gauss-Legendre panels no longer than `max_panel`.
template <class F>
cplx composite_integral(F&& f, double lo, double hi, double max_panel) {
    if (hi <= lo) return 0.0;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / max_panel));
    const double h = (hi - lo) / static_cast<double>(n);
    cplx s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += panel_integral(f, lo + k * h, lo + (k + 1) * h);
    return s;
}

}  // namespace detail

/// Partial oscillatory integral F(a) = int_0^a e^{i sigma x} x^{-1/2 + i s} dx
/// (sigma = -1 by default). Absolute accuracy about 1e-12 for |s| <= 10.
///
/// Power series on (0, 1], Gauss-Legendre panels on (1, B], and beyond B the
/// limit F(inf) minus the integration-by-parts tail expansion.
class OscillatoryPartial {
public:
    explicit OscillatoryPartial(double s, int sigma = -1) : s_(s), sigma_(sigma) {
        if (sigma != 1 && sigma != -1) throw RangeError("oscillatory partial: sigma must be +1 or -1");
        nu_ = cplx(-0.5, s);
        switch_ = 40.0 + 4.0 * std::abs(s);
        panel_ = std::min(1.0, 8.0 / (1.0 + std::abs(s)));
        detail::append_tail_terms(tail_, 1.0, nu_, sigma_, switch_);
        near_switch_ = near(switch_);
        limit_ = near_switch_ + evaluate(tail_, switch_);
    }

    double s() const { return s_; }
    int sigma() const { return sigma_; }
    double switch_point() const { return switch_; }
    cplx limit() const { return limit_; }
    /// int_a^inf as an expansion in a, valid for a >= switch_point().
    const OscExpansion& tail() const { return tail_; }

    cplx operator()(double a) const {
        if (!(a > 0.0)) {
            if (a == 0.0) return 0.0;
            throw RangeError("oscillatory partial: upper limit must be positive");
        }
        if (a <= switch_) return near(a);
        return limit_ - evaluate(tail_, a);
    }

    /// Closed form e^{i sigma pi mu / 2} Gamma(mu), mu = 1/2 + i s.
    cplx gamma_limit() const {
        const cplx mu(0.5, s_);
        return std::exp(cplx(0.0, sigma_ * kPi / 2.0) * mu) * gamma(mu);
    }

private:
    cplx series(double a) const {
        const cplx mu(0.5, s_);
        const cplx is(0.0, static_cast<double>(sigma_));
        cplx pw = 1.0;  // (i sigma a)^k / k!
        cplx sum = 0.0;
        for (int k = 0; k < 60; ++k) {
            const cplx term = pw / (static_cast<double>(k) + mu);
            sum += term;
            if (std::abs(term) < 1e-18) break;
            pw *= is * a / static_cast<double>(k + 1);
        }
        return sum * cpow_real(a, mu);
    }

    cplx near(double a) const {
        if (a <= 1.0) return series(a);
        const auto f = [this](double x) { return std::polar(1.0, sigma_ * x + s_ * std::log(x)) / std::sqrt(x); };
        return series(1.0) + detail::composite_integral(f, 1.0, a, panel_);
    }

    double s_;
    int sigma_;
    cplx nu_;
    double switch_;
    double panel_;
    OscExpansion tail_;
    cplx near_switch_;
    cplx limit_;
};

/// int_0^a e^{-ix} x^{-1/2 + i s} dx.
inline cplx oscillatory_partial(double a, double s) {
    if (!(a > 0.0)) throw RangeError("oscillatory_partial: a must be positive");
    return OscillatoryPartial(s)(a);
}

/// Bessel-Mellin partial integral G(b) = int_0^b J_k(rho) rho^{i t} drho.
///
/// Power series for b <= 2, Gauss-Legendre panels up to the switch point,
/// and beyond it the full-range value minus the Hankel tail expansion.
class BesselMellinPartial {
public:
    BesselMellinPartial(int k, double t) : k_(std::abs(k)), t_(t), sign_(k < 0 && (k % 2 != 0) ? -1.0 : 1.0) {
        if (std::abs(k) > 60) throw RangeError("Bessel-Mellin partial: |k| must not exceed 60");
        switch_ = 40.0 + 2.0 * k_ * k_ + 4.0 * std::abs(t);
        panel_ = std::min(1.0, 8.0 / (1.0 + std::abs(t)));
        build_tail();
        limit_ = near(switch_) + evaluate(tail_, switch_);
    }

    double switch_point() const { return switch_; }
    cplx limit() const { return sign_ * limit_; }
    /// int_b^inf as an expansion in b, valid for b >= switch_point().
    OscExpansion tail() const {
        OscExpansion e = tail_;
        for (auto& term : e) term.coeff *= sign_;
        return e;
    }

    cplx operator()(double b) const {
        if (b < 0.0) throw RangeError("Bessel-Mellin partial: upper limit must be non-negative");
        if (b == 0.0) return 0.0;
        if (b <= switch_) return sign_ * near(b);
        return sign_ * (limit_ - evaluate(tail_, b));
    }

    /// Closed form 2^{it} Gamma((k + 1 + it)/2) / Gamma((k + 1 - it)/2).
    cplx gamma_limit() const {
        const cplx a((k_ + 1) / 2.0, t_ / 2.0);
        return sign_ * std::exp(cplx(0.0, t_ * std::log(2.0)) + log_gamma(a) - log_gamma(std::conj(a)));
    }

private:
    cplx series(double b) const {
        // sum_m (-1)^m (b/2)^{2m+k} b / (m! (m+k)! (2m + k + 1 + it)) * b^{it}
        double mag = std::exp(k_ * std::log(b / 2.0) - std::lgamma(k_ + 1.0)) * b;
        cplx sum = 0.0;
        for (int m = 0; m < 80; ++m) {
            const cplx term = (m % 2 == 0 ? 1.0 : -1.0) * mag / cplx(2.0 * m + k_ + 1.0, t_);
            sum += term;
            if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum))) break;
            mag *= (b / 2.0) * (b / 2.0) / ((m + 1.0) * (m + 1.0 + k_));
        }
        return sum * std::polar(1.0, t_ * std::log(b));
    }

    cplx near(double b) const {
        if (b <= 2.0) return series(b);
        const auto f = [this](double r) { return bessel_j(k_, r) * std::polar(1.0, t_ * std::log(r)); };
        return series(2.0) + detail::composite_integral(f, 2.0, b, panel_);
    }

    void build_tail() {
        // J_k(r) = 1/2 sqrt(2/(pi r)) sum_j a_j [ i^j e^{i w} + (-i)^j e^{-i w} ] r^{-j},
        // w = r - k pi/2 - pi/4, a_j = prod_{l<=j} (4k^2 - (2l-1)^2) / (j! 8^j).
        const double phi = k_ * kPi / 2.0 + kPi / 4.0;
        const double pref = 0.5 * std::sqrt(2.0 / kPi);
        double a = 1.0;
        double last = 1.0;
        for (int j = 0; j < 60; ++j) {
            if (j > 0) {
                a *= (4.0 * k_ * k_ - (2.0 * j - 1.0) * (2.0 * j - 1.0)) / (8.0 * j);
                const double mag = std::abs(a) * std::pow(switch_, -j);
                if (a == 0.0) break;
                if (mag > last) break;
                last = mag;
                if (mag < 1e-19) {
                    break;
                }
            }
            const cplx nu(-0.5 - j, t_);
            const cplx ij = std::pow(cplx(0.0, 1.0), j);
            detail::append_tail_terms(tail_, pref * a * ij * std::polar(1.0, -phi), nu, 1, switch_);
            detail::append_tail_terms(tail_, pref * a * std::conj(ij) * std::polar(1.0, phi), nu, -1, switch_);
        }
        tail_ = prune(tail_, switch_, 1e-18);
    }

    int k_;
    double t_;
    double sign_;
    double switch_;
    double panel_;
    OscExpansion tail_;
    cplx limit_;
};

inline cplx bessel_mellin_partial(double b, int k, double t) { return BesselMellinPartial(k, t)(b); }

}  // namespace qcilab
