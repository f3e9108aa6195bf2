#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "qcilab/cutoff.hpp"
#include "qcilab/error.hpp"
#include "qcilab/fft.hpp"
#include "qcilab/grid.hpp"
#include "qcilab/parallel.hpp"

namespace qcilab {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    bool contains(double t) const { return t >= lo && t <= hi; }
};

/// A phase-space symbol a(x, xi; hbar) in `dimension` configuration
/// variables. When both factor lists are filled the symbol is the product
/// prod f_j(x_j) * prod g_j(xi_j) and quantization uses one FFT per axis.
struct Symbol {
    using Eval = std::function<cplx(std::span<const double> x, std::span<const double> xi, double hbar)>;
    using Factor = std::function<cplx(double)>;

    Eval eval;
    std::vector<Factor> x_factors;
    std::vector<Factor> xi_factors;
    int dimension = 1;
    double delta = 0.0;
    double order = 0.0;
    /// Smallest length over which the symbol varies in x; 0 when constant in x.
    double x_scale = 0.0;
    std::vector<Interval> x_support;
    std::vector<Interval> xi_support;

    bool separable() const {
        return static_cast<int>(x_factors.size()) == dimension && static_cast<int>(xi_factors.size()) == dimension;
    }

    cplx operator()(std::span<const double> x, std::span<const double> xi, double hbar) const {
        return eval(x, xi, hbar);
    }
    cplx operator()(double x, double xi, double hbar) const {
        const double xs[1] = {x};
        const double ps[1] = {xi};
        return eval(xs, ps, hbar);
    }

    /// Build a separable symbol from its factors.
    static Symbol product(std::vector<Factor> fx, std::vector<Factor> gxi) {
        if (fx.size() != gxi.size() || fx.empty()) throw DimensionError("separable symbol needs one factor pair per axis");
        Symbol a;
        a.dimension = static_cast<int>(fx.size());
        a.x_factors = std::move(fx);
        a.xi_factors = std::move(gxi);
        a.x_support.assign(a.dimension, Interval{});
        a.xi_support.assign(a.dimension, Interval{});
        a.eval = [f = a.x_factors, g = a.xi_factors](std::span<const double> x, std::span<const double> xi, double) {
            cplx v = 1.0;
            for (std::size_t j = 0; j < f.size(); ++j) v *= f[j](x[j]) * g[j](xi[j]);
            return v;
        };
        return a;
    }

    /// a = c.
    static Symbol constant(cplx c, int dimension = 1) {
        std::vector<Factor> fx(dimension, [](double) { return cplx(1.0); });
        std::vector<Factor> gxi(dimension, [](double) { return cplx(1.0); });
        fx[0] = [c](double) { return c; };
        return product(std::move(fx), std::move(gxi));
    }

    /// a = xi (one dimension).
    static Symbol momentum() {
        Symbol a = product({[](double) { return cplx(1.0); }}, {[](double xi) { return cplx(xi); }});
        a.order = 1.0;
        return a;
    }

    /// Non-separable symbol with bounded momentum support.
    static Symbol general(Eval eval, std::vector<Interval> x_support, std::vector<Interval> xi_support, double delta = 0.0,
                          double x_scale = 0.0) {
        Symbol a;
        a.eval = std::move(eval);
        a.dimension = static_cast<int>(xi_support.size());
        a.x_support = std::move(x_support);
        a.xi_support = std::move(xi_support);
        a.delta = delta;
        a.x_scale = x_scale;
        return a;
    }

    /// Complex conjugate symbol.
    Symbol conjugate() const {
        Symbol b = *this;
        b.eval = [e = eval](std::span<const double> x, std::span<const double> xi, double h) { return std::conj(e(x, xi, h)); };
        if (!x_factors.empty()) {
            b.x_factors.clear();
            for (const auto& f : x_factors) b.x_factors.push_back([f](double t) { return std::conj(f(t)); });
            b.xi_factors.clear();
            for (const auto& g : xi_factors) b.xi_factors.push_back([g](double t) { return std::conj(g(t)); });
        }
        return b;
    }
};

/// prod chi(hbar^{-delta} (x_j - c_j) / eps) * prod chi(hbar^{-delta} xi_j / eps).
inline Symbol small_scale_cutoff(double delta, double hbar, std::vector<double> center,
                                 double epsilon = kSmallScaleEpsilon) {
    if (!(delta >= 0.0 && delta < 0.5)) throw RangeError("small_scale_cutoff: delta must lie in [0, 1/2)");
    if (!(hbar > 0.0)) throw RangeError("small_scale_cutoff: hbar must be positive");
    if (center.empty()) throw DimensionError("small_scale_cutoff: center must have at least one coordinate");
    const double r = epsilon * std::pow(hbar, delta);
    std::vector<Symbol::Factor> fx, gxi;
    for (double c : center) {
        fx.push_back([c, r](double x) { return cplx(bump((x - c) / r)); });
        gxi.push_back([r](double xi) { return cplx(bump(xi / r)); });
    }
    Symbol a = Symbol::product(std::move(fx), std::move(gxi));
    a.delta = delta;
    a.x_scale = r;
    for (std::size_t j = 0; j < center.size(); ++j) {
        a.x_support[j] = {center[j] - r, center[j] + r};
        a.xi_support[j] = {-r, r};
    }
    return a;
}

/// Largest grid spacing quantize accepts for `a` at `hbar`.
inline double quantization_spacing_limit(const Symbol& a, double hbar) {
    double limit = std::pow(hbar, 1.0 - a.delta) / 8.0;
    if (a.x_scale > 0.0) limit = std::min(limit, a.x_scale / 16.0);
    return limit;
}

namespace detail {

inline bool negligible_at_edges(const GridFunction& u, std::size_t axis) {
    double peak = 0.0;
    for (const auto& v : u.values()) peak = std::max(peak, std::abs(v));
    const std::size_t n0 = u.axis(0).size();
    const std::size_t n1 = u.rank() > 1 ? u.axis(1).size() : 1;
    double edge = 0.0;
    if (axis == 0) {
        for (std::size_t j = 0; j < n1; ++j) {
            edge = std::max({edge, std::abs(u[j]), std::abs(u[(n0 - 1) * n1 + j])});
        }
    } else {
        for (std::size_t i = 0; i < n0; ++i) edge = std::max({edge, std::abs(u[i * n1]), std::abs(u[i * n1 + n1 - 1])});
    }
    return edge <= 1e-12 * peak;
}

inline void check_quantization_grid(const Symbol& a, double hbar, const GridFunction& u) {
    if (static_cast<int>(u.rank()) != a.dimension) throw DimensionError("symbol and grid function differ in dimension");
    if (!a.eval) throw DimensionError("symbol has no evaluation function");
    const double limit = quantization_spacing_limit(a, hbar);
    for (std::size_t k = 0; k < u.rank(); ++k) {
        const Axis& ax = u.axis(k);
        if (!ax.uniform) throw ResolutionError("quantize needs uniform axes");
        if (ax.spacing > limit * (1.0 + 1e-12)) {
            throw ResolutionError("grid spacing " + std::to_string(ax.spacing) + " exceeds the quantization limit " +
                                  std::to_string(limit));
        }
        if (k < a.xi_support.size() && a.xi_support[k].bounded()) {
            const double nyq = nyquist_momentum(ax.spacing, hbar);
            if (std::max(std::abs(a.xi_support[k].lo), std::abs(a.xi_support[k].hi)) > nyq) {
                throw ResolutionError("symbol momentum support exceeds the grid Nyquist momentum");
            }
        }
        if (k < a.x_support.size() && a.x_support[k].bounded()) {
            const Interval& s = a.x_support[k];
            const bool covered = s.lo >= ax.lower() && s.hi <= ax.upper();
            if (!covered && !negligible_at_edges(u, k)) {
                throw ResolutionError("symbol support exceeds the grid box where the input is not negligible");
            }
        }
    }
}

inline std::vector<cplx> apply_multiplier_axis(const std::vector<cplx>& data, std::size_t n0, std::size_t n1, int axis,
                                               double dx, double hbar, const Symbol::Factor& g) {
    std::vector<cplx> out(data.size());
    if (axis == 1) {
        std::vector<cplx> row(n1);
        for (std::size_t i = 0; i < n0; ++i) {
            std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(i * n1), n1, row.begin());
            auto r = fourier_multiplier(row, dx, hbar, g);
            std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(i * n1));
        }
    } else {
        std::vector<cplx> col(n0);
        for (std::size_t j = 0; j < n1; ++j) {
            for (std::size_t i = 0; i < n0; ++i) col[i] = data[i * n1 + j];
            auto r = fourier_multiplier(col, dx, hbar, g);
            for (std::size_t i = 0; i < n0; ++i) out[i * n1 + j] = r[i];
        }
    }
    return out;
}

}  // namespace detail

/// (Op_hbar(a) u)(x) = (2 pi hbar)^{-n} int int e^{i(x-y)xi/hbar} a(x, xi) u(y) dy dxi
/// on the periodic FFT grid of u.
inline GridFunction quantize(const Symbol& a, double hbar, const GridFunction& u, Parallelism par = {}) {
    detail::check_quantization_grid(a, hbar, u);
    const std::size_t n0 = u.axis(0).size();
    const std::size_t n1 = u.rank() > 1 ? u.axis(1).size() : 1;
    std::vector<cplx> out;

    if (a.separable()) {
        if (u.rank() == 1) {
            out = fourier_multiplier(u.values(), u.axis(0).spacing, hbar, a.xi_factors[0]);
        } else {
            out = detail::apply_multiplier_axis(u.values(), n0, n1, 0, u.axis(0).spacing, hbar, a.xi_factors[0]);
            out = detail::apply_multiplier_axis(out, n0, n1, 1, u.axis(1).spacing, hbar, a.xi_factors[1]);
        }
        for (std::size_t k = 0; k < out.size(); ++k) {
            cplx f = a.x_factors[0](u.axis(0).nodes[k / n1]);
            if (u.rank() > 1) f *= a.x_factors[1](u.axis(1).nodes[k % n1]);
            out[k] *= f;
        }
    } else {
        if (u.rank() != 1) throw DimensionError("non-separable symbols are quantized in one dimension only");
        if (a.xi_support.empty() || !a.xi_support[0].bounded()) {
            throw RangeError("non-separable symbols need a bounded momentum support");
        }
        const std::size_t n = n0;
        const double dx = u.axis(0).spacing;
        Eigen::FFT<double> fft;
        std::vector<cplx> spec;
        fft.fwd(spec, u.values());
        std::vector<std::size_t> bins;
        std::vector<double> momenta;
        for (std::size_t k = 0; k < n; ++k) {
            const double xi = fft_momentum(k, n, dx, hbar);
            if (a.xi_support[0].contains(xi)) {
                bins.push_back(k);
                momenta.push_back(xi);
            }
        }
        out.assign(n, 0.0);
        const Interval xs = a.x_support.empty() ? Interval{} : a.x_support[0];
        parallel_for(n, par, [&](std::size_t j) {
            const double x = u.axis(0).nodes[j];
            if (!xs.contains(x)) return;
            cplx acc = 0.0;
            for (std::size_t b = 0; b < bins.size(); ++b) {
                const double phase = 2.0 * kPi * static_cast<double>((bins[b] * j) % n) / static_cast<double>(n);
                acc += a(x, momenta[b], hbar) * spec[bins[b]] * std::polar(1.0, phase);
            }
            out[j] = acc / static_cast<double>(n);
        });
    }
    GridFunction result(u.axes(), std::move(out), hbar);
    result.wavelength = u.wavelength;
    result.measure_scale = u.measure_scale;
    return result;
}

/// <Op_hbar(a) u, v>.
inline cplx matrix_element(const Symbol& a, double hbar, const GridFunction& u, const GridFunction& v,
                           Parallelism par = {}) {
    if (!u.same_grid(v)) throw DimensionError("matrix_element: u and v live on different grids");
    return inner(quantize(a, hbar, u, par), v);
}

/// Normalised coherent state (pi hbar)^{-1/4} e^{-(x - x0)^2 / 2 hbar} e^{i x xi0 / hbar}.
inline GridFunction coherent_state(const Axis& axis, double hbar, double x0, double xi0) {
    std::vector<cplx> v(axis.size());
    const double norm = std::pow(kPi * hbar, -0.25);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = axis.nodes[i];
        v[i] = norm * std::exp(-(x - x0) * (x - x0) / (2.0 * hbar)) * std::polar(1.0, x * xi0 / hbar);
    }
    GridFunction u(axis, std::move(v), hbar);
    u.wavelength = xi0 != 0.0 ? 2.0 * kPi * hbar / std::abs(xi0) : 0.0;
    return u;
}

/// max(0, Re<Op(inner) u, u> - Re<Op(outer) u, u>) for symbols with inner <= outer.
inline double nested_cutoff_deficit(const Symbol& outer, const Symbol& inner, double hbar, const GridFunction& u,
                                    Parallelism par = {}) {
    const double a = matrix_element(outer, hbar, u, u, par).real();
    const double b = matrix_element(inner, hbar, u, u, par).real();
    return std::max(0.0, b - a);
}

/// Largest scaled finite-difference derivative
///   hbar^{delta(|alpha|+|beta|)} |d_x^alpha d_xi^beta a|,  |alpha|+|beta| <= 2,
/// over a lattice of 1D phase-space points. Bounded uniformly in hbar for
/// symbols in the small-scale class of order 0.
inline double symbol_class_constant(const Symbol& a, double hbar, std::span<const double> xs,
                                    std::span<const double> xis) {
    if (a.dimension != 1) throw DimensionError("symbol_class_constant probes one-dimensional symbols");
    const double scale = std::pow(hbar, a.delta);
    const double h = 1e-3 * scale * (a.x_scale > 0.0 ? a.x_scale / scale : 1.0);
    double worst = 0.0;
    for (double x : xs) {
        for (double xi : xis) {
            const auto f = [&](double dx, double dxi) { return a(x + dx, xi + dxi, hbar); };
            const cplx f0 = f(0, 0);
            const cplx dxa = (f(h, 0) - f(-h, 0)) / (2 * h);
            const cplx dxia = (f(0, h) - f(0, -h)) / (2 * h);
            const cplx dxx = (f(h, 0) - 2.0 * f0 + f(-h, 0)) / (h * h);
            const cplx dpp = (f(0, h) - 2.0 * f0 + f(0, -h)) / (h * h);
            const cplx dxp = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
            worst = std::max({worst, std::abs(f0), scale * std::abs(dxa), scale * std::abs(dxia),
                              scale * scale * std::abs(dxx), scale * scale * std::abs(dpp),
                              scale * scale * std::abs(dxp)});
        }
    }
    return worst;
}

}  // namespace qcilab
