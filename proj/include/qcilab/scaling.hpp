#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qcilab/error.hpp"
#include "qcilab/grid.hpp"
#include "qcilab/parallel.hpp"
#include "qcilab/special.hpp"
#include "qcilab/surfaces.hpp"

namespace qcilab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace detail {

inline void check_wavelength_resolution(const GridFunction& phi) {
    if (!(phi.wavelength > 0.0)) return;
    for (std::size_t k = 0; k < phi.rank(); ++k) {
        const double gap = phi.axis(k).max_gap();
        if (gap > phi.wavelength / 8.0 * (1.0 + 1e-12)) {
            throw ResolutionError("lp_norm: axis " + std::to_string(k) + " spacing " + std::to_string(gap) +
                                  " exceeds 1/8 of the wavelength " + std::to_string(phi.wavelength));
        }
    }
}

/// Maximum of g on [a, b] by golden-section search, started from the
/// better end point or the interior guess.
inline std::pair<double, double> golden_max(const std::function<double(double)>& g, double a, double b, double guess) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double best_x = guess;
    double best = g(guess);
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < 80 && b - a > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (gc > gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    const double x = 0.5 * (a + b);
    const double gx = g(x);
    if (gx > best) {
        best = gx;
        best_x = x;
    }
    return {best_x, best};
}

/// Vertex height of the parabola through three points, or the middle value
/// when the points are not strictly concave.
inline double parabolic_peak(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d01 = (y1 - y0) / (x1 - x0);
    const double d12 = (y2 - y1) / (x2 - x1);
    const double curv = (d12 - d01) / (x2 - x0);
    if (!(curv < 0.0)) return y1;
    const double slope_mid = d01 + curv * (x1 - x0);
    const double xv = x1 - slope_mid / (2.0 * curv);
    if (xv < x0 || xv > x2) return y1;
    return y1 + slope_mid * (xv - x1) + curv * (xv - x1) * (xv - x1);
}

}  // namespace detail

/// (int |phi|^p dvol)^{1/p} with the grid's (normalized) quadrature weights.
/// For p = infinity the grid maximum is refined once around the argmax:
/// along each axis by golden-section search on the evaluator when one is
/// given, by a parabolic fit through the neighbours otherwise.
inline double lp_norm(const GridFunction& phi, double p,
                      const std::function<cplx(std::span<const double>)>& eval = {}) {
    if (!(p >= 2.0)) throw RangeError("lp_norm: p must lie in [2, infinity]");
    if (phi.size() == 0) throw DimensionError("lp_norm: empty grid function");
    detail::check_wavelength_resolution(phi);
    if (std::isfinite(p)) {
        double peak = 0.0;
        for (const auto& v : phi.values()) peak = std::max(peak, std::abs(v));
        if (peak == 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) s += phi.weight(k) * std::pow(std::abs(phi[k]) / peak, p);
        return peak * std::pow(s, 1.0 / p);
    }
    std::size_t arg = 0;
    for (std::size_t k = 1; k < phi.size(); ++k) {
        if (std::abs(phi[k]) > std::abs(phi[arg])) arg = k;
    }
    const std::size_t n1 = phi.rank() > 1 ? phi.axis(1).size() : 1;
    const std::array<std::size_t, 2> idx{arg / n1, arg % n1};
    double best = std::abs(phi[arg]);
    if (eval) {
        std::array<double, 2> x{phi.axis(0).nodes[idx[0]], phi.rank() > 1 ? phi.axis(1).nodes[idx[1]] : 0.0};
        for (std::size_t d = 0; d < phi.rank(); ++d) {
            const Axis& ax = phi.axis(d);
            const std::size_t i = idx[d];
            const double lo = i > 0 ? ax.nodes[i - 1] : ax.lower();
            const double hi = i + 1 < ax.size() ? ax.nodes[i + 1] : ax.upper();
            auto g = [&](double t) {
                auto y = x;
                y[d] = t;
                return std::abs(eval(std::span<const double>(y.data(), phi.rank())));
            };
            const auto [xm, vm] = detail::golden_max(g, lo, hi, x[d]);
            if (vm > best) {
                best = vm;
                x[d] = xm;
            }
        }
        return best;
    }
    for (std::size_t d = 0; d < phi.rank(); ++d) {
        const Axis& ax = phi.axis(d);
        const std::size_t i = idx[d];
        if (i == 0 || i + 1 >= ax.size()) continue;
        const std::size_t stride = d == 0 ? n1 : 1;
        best = std::max(best, detail::parabolic_peak(ax.nodes[i - 1], std::abs(phi[arg - stride]), ax.nodes[i],
                                                     std::abs(phi[arg]), ax.nodes[i + 1],
                                                     std::abs(phi[arg + stride])));
    }
    return best;
}

inline double lp_norm(const SurfaceFunction& f, double p) { return lp_norm(f.samples, p, f.eval); }

/// L^p lower bound forced by `mass` inside a set of measure `tube_volume`:
/// (mass / tube_volume^{(p-2)/p})^{1/2}, and (mass / tube_volume)^{1/2} at p = infinity.
inline double holder_lower_bound(double mass, double tube_volume, double p) {
    if (!(mass > 0.0) || !(tube_volume > 0.0)) throw RangeError("holder_lower_bound: mass and volume must be positive");
    if (!(p >= 2.0)) throw RangeError("holder_lower_bound: p must lie in [2, infinity]");
    const double q = std::isfinite(p) ? (p - 2.0) / p : 1.0;
    return std::sqrt(mass / std::pow(tube_volume, q));
}

/// Growth exponent in lambda of the Hoelder bound when the tube volume scales
/// as hbar^{delta codim} with hbar = 1/lambda: delta codim (p-2)/(2p).
inline double holder_exponent(int codim, double p, double delta) {
    if (codim < 0) throw RangeError("holder_exponent: codimension must be non-negative");
    if (!(p >= 2.0)) throw RangeError("holder_exponent: p must lie in [2, infinity]");
    const double q = std::isfinite(p) ? (p - 2.0) / p : 1.0;
    return 0.5 * delta * codim * q;
}

/// The delta -> 1/2 limit codim (p-2)/(4p), codim/4 at p = infinity.
inline double ideal_exponent(int codim, double p) { return holder_exponent(codim, p, 0.5); }

struct ScalingFit {
    double exponent = 0.0;
    double intercept = 0.0;
    /// RMS of the log residuals.
    double residual = 0.0;
    std::size_t sample_count = 0;
    std::array<double, 2> window{0.0, 0.0};
};

/// Least-squares fit of log value = exponent log lambda + intercept.
inline ScalingFit fit_exponent(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 5) throw RangeError("fit_exponent: need at least 5 samples");
    double lo = kInfinity, hi = 0.0;
    for (const auto& [lam, v] : samples) {
        if (!(lam > 0.0) || !(v > 0.0) || !std::isfinite(lam) || !std::isfinite(v)) {
            throw RangeError("fit_exponent: samples must be positive and finite");
        }
        lo = std::min(lo, lam);
        hi = std::max(hi, lam);
    }
    if (hi < 10.0 * lo * (1.0 - 1e-12)) throw RangeError("fit_exponent: samples span less than one decade in lambda");
    const double n = static_cast<double>(samples.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [lam, v] : samples) {
        mx += std::log(lam);
        my += std::log(v);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [lam, v] : samples) {
        const double dx = std::log(lam) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(v) - my);
    }
    ScalingFit fit;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    double ss = 0.0;
    for (const auto& [lam, v] : samples) {
        const double r = std::log(v) - fit.intercept - fit.exponent * std::log(lam);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    fit.sample_count = samples.size();
    fit.window = {lo, hi};
    return fit;
}

// ---------------------------------------------------------------------------
// Ladder averages.

enum class Kernel { Fejer, Jackson };

inline const char* to_string(Kernel k) { return k == Kernel::Fejer ? "fejer" : "jackson"; }

/// One-dimensional profile with K(0) = 1 and Fourier transform supported in
/// [-1, 1] (Fejer) or [-2, 2] (Jackson).
inline double kernel_value(Kernel k, double t) {
    const double h = 0.5 * t;
    const double s = std::abs(h) < 1e-8 ? 1.0 - h * h / 6.0 : std::sin(h) / h;
    return k == Kernel::Fejer ? s * s : s * s * s * s;
}

/// sum_j masses_j f(hbar^{-1}(mu_j(hbar) - c)) with f the product kernel.
inline double weyl_ladder_average(const std::vector<JointEigenvalue>& spectrum, const std::vector<double>& masses,
                                  const std::array<double, 2>& c, Kernel f, double hbar) {
    if (spectrum.size() != masses.size()) throw DimensionError("weyl_ladder_average: masses not aligned with spectrum");
    if (!(hbar > 0.0)) throw RangeError("weyl_ladder_average: hbar must be positive");
    double sum = 0.0;
    for (std::size_t j = 0; j < spectrum.size(); ++j) {
        const auto mu = spectrum[j].mu(hbar);
        sum += masses[j] * kernel_value(f, (mu[0] - c[0]) / hbar) * kernel_value(f, (mu[1] - c[1]) / hbar);
    }
    return sum;
}

/// Sphere equatorial ladder average at degree l: hbar = 1/sqrt(l(l+1)),
/// c = (1, 1), tube masses at delta = 0 and tube radius `epsilon` for every
/// (l', m) within `halfwidth` of the ray.
inline double sphere_equatorial_average(int l, Kernel f, int halfwidth = 12, double epsilon = 0.5) {
    if (l < halfwidth + 1) throw RangeError("sphere_equatorial_average: l must exceed the window half-width");
    const double lam = std::sqrt(l * (l + 1.0));
    const double hbar = 1.0 / lam;
    const SingularLeaf leaf = singular_leaf_of(SurfaceModel::round_sphere());
    std::vector<JointEigenvalue> window;
    for (const auto& e : sphere_joint_spectrum(l - halfwidth, l + halfwidth)) {
        if (std::abs(e.lambda() - lam) <= halfwidth && std::abs(e.m - lam) <= halfwidth) window.push_back(e);
    }
    const Axis theta = sphere_theta_axis(sphere_theta_nodes(l + halfwidth), 2.0 * kPi);
    std::vector<double> masses(window.size());
    for (std::size_t j = 0; j < window.size(); ++j) {
        const SurfaceFunction phi = sphere_joint_eigenfunction(window[j].index, window[j].m, theta);
        masses[j] = tube_mass(normalized(phi.samples), leaf, 0.0, hbar, epsilon);
    }
    return weyl_ladder_average(window, masses, {1.0, 1.0}, f, hbar);
}

// ---------------------------------------------------------------------------
// Blow-up reports.

struct BlowupOptions {
    std::vector<double> p_list{kInfinity};
    double delta = 0.4;
    std::array<double, 2> lambda_window{20.0, 400.0};
    std::size_t samples = 12;
    /// Ladder half-width C in units of hbar.
    double ladder_c = 2.0;
    /// Ray direction; empty selects the equatorial ray (1, a(r0)).
    std::optional<std::array<double, 2>> ray;
    /// Adds the unasserted codim/8 target for p = infinity.
    bool exploratory = false;
    Parallelism par{};
};

struct BlowupSample {
    double lambda = 0.0;
    double hbar = 0.0;
    std::vector<int> quantum_numbers;
    std::size_t ladder_size = 0;
    double tube_mass = 0.0;
    double tube_volume = 0.0;
    std::vector<double> norms;
    std::vector<double> holder;
};

struct BlowupFit {
    double p = 0.0;
    ScalingFit measured;
    std::optional<ScalingFit> holder;
    double target_ideal = 0.0;
    double target_delta = 0.0;
    std::optional<double> exploratory_target;
};

struct BlowupReport {
    SurfaceKind kind = SurfaceKind::FlatTorus;
    double delta = 0.0;
    int codim = 0;
    std::vector<BlowupSample> samples;
    std::vector<BlowupFit> fits;
};

/// The ray of the equatorial geodesic in the moment image, (1, a(r0)).
inline std::array<double, 2> equatorial_ray(const SurfaceModel& surface) {
    const SingularLeaf leaf = singular_leaf_of(surface);
    if (leaf.kind == LeafKind::None) throw RangeError("equatorial_ray: surface has no singular leaf");
    const double a = surface.kind == SurfaceKind::RoundSphere ? 1.0 : surface.profile.a(leaf.r0);
    return {1.0, a};
}

namespace detail {

/// `count` distinct integers spread geometrically over [lo, hi].
inline std::vector<int> geometric_integers(double lo, double hi, std::size_t count) {
    std::vector<int> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
        const int v = static_cast<int>(std::lround(lo * std::pow(hi / lo, t)));
        if (out.empty() || v != out.back()) out.push_back(v);
    }
    return out;
}

inline void fill_norms(BlowupSample& s, const SurfaceFunction& f, const std::vector<double>& ps) {
    for (double p : ps) s.norms.push_back(lp_norm(f, p));
}

inline BlowupSample torus_sample(const SurfaceModel& surface, int k, const std::vector<double>& ps) {
    const SurfaceFunction f = torus_eigenfunction(k, 0, surface.lattice, static_cast<std::size_t>(8 * k + 8));
    BlowupSample s;
    s.lambda = std::sqrt(f.eigenvalue);
    s.hbar = 1.0 / s.lambda;
    s.quantum_numbers = f.quantum_numbers;
    s.ladder_size = 1;
    fill_norms(s, f, ps);
    return s;
}

inline BlowupSample leaf_sample(const SurfaceModel& surface, const SingularLeaf& leaf, int q,
                                const BlowupOptions& opt, const std::array<double, 2>& ray) {
    std::vector<JointEigenvalue> spectrum;
    double lam = 0.0;
    if (surface.kind == SurfaceKind::RoundSphere) {
        lam = std::sqrt(q * (q + 1.0));
        spectrum = sphere_joint_spectrum(std::max(0, q - 3), q + 3);
    } else {
        std::vector<int> ms;
        for (int m = std::max(0, q - 3); m <= q + 3; ++m) ms.push_back(m);
        spectrum = revolution_joint_spectrum(surface, ms, 3);
        for (const auto& e : spectrum) {
            if (e.m == q && e.index == 0) lam = e.lambda();
        }
    }
    const double hbar = 1.0 / lam;
    const auto ladder = ladder_select(spectrum, ray, opt.ladder_c, hbar);
    if (ladder.empty()) throw EmptyLadderError("blowup: empty ladder at lambda " + std::to_string(lam));
    const double width = tube_radius(opt.delta, hbar);
    BlowupSample best;
    best.tube_mass = -1.0;
    for (const auto& e : ladder) {
        SurfaceFunction f;
        if (surface.kind == SurfaceKind::RoundSphere) {
            f = sphere_joint_eigenfunction(e.index, e.m);
        } else {
            // 8 cells per wavelength and at least 64 across the tube.
            const double len = surface.profile.length;
            const auto n = static_cast<std::size_t>(
                std::max({2000.0, std::ceil(8.0 * len * e.lambda() / kPi), std::ceil(32.0 * len / width)}));
            f = revolution_eigenfunction(surface, e.m, e.index, n);
        }
        const GridFunction unit = normalized(f.samples);
        const double mass = tube_mass(unit, leaf, opt.delta, hbar);
        if (mass > best.tube_mass) {
            const double scale = 1.0 / l2_norm(f.samples);
            best = BlowupSample{};
            best.lambda = e.lambda();
            best.hbar = hbar;
            best.quantum_numbers =
                surface.kind == SurfaceKind::RoundSphere ? std::vector<int>{e.index, e.m} : std::vector<int>{e.m, e.index};
            best.ladder_size = ladder.size();
            best.tube_mass = mass;
            best.tube_volume = tube_volume(unit, leaf, opt.delta, hbar);
            auto eval = f.eval;
            SurfaceFunction g{unit, [eval, scale](std::span<const double> x) { return scale * eval(x); }, f.eigenvalue,
                              f.quantum_numbers};
            fill_norms(best, g, opt.p_list);
        }
    }
    for (double p : opt.p_list) best.holder.push_back(holder_lower_bound(best.tube_mass, best.tube_volume, p));
    return best;
}

}  // namespace detail

/// Per-hbar ladder maximizers of tube mass, their L^p norms and Hoelder
/// bounds, and exponent fits against the predicted rates. Norms use the
/// volume-normalized measure with unit L^2 norm.
inline BlowupReport blowup_report(const SurfaceModel& surface, const BlowupOptions& opt = {}) {
    surface.validate();
    if (opt.p_list.empty()) throw RangeError("blowup_report: empty p list");
    for (double p : opt.p_list) {
        if (!(p >= 2.0)) throw RangeError("blowup_report: every p must lie in [2, infinity]");
    }
    if (!(opt.delta >= 0.0 && opt.delta < 0.5)) throw RangeError("blowup_report: delta must lie in [0, 1/2)");
    const auto [lo, hi] = opt.lambda_window;
    if (!(lo >= 2.0 && hi >= 10.0 * lo * (1.0 - 1e-12))) {
        throw RangeError("blowup_report: lambda window must start at 2 or more and span a decade");
    }
    if (opt.samples < 5) throw RangeError("blowup_report: need at least 5 samples");
    BlowupReport rep;
    rep.kind = surface.kind;
    rep.delta = opt.delta;
    const SingularLeaf leaf = singular_leaf_of(surface);
    rep.codim = leaf.kind == LeafKind::None ? 0 : leaf.codim;

    std::vector<int> qs;
    if (surface.kind == SurfaceKind::FlatTorus) {
        const double unit = 2.0 * kPi * (surface.lattice.transpose().inverse() * Eigen::Vector2d(1.0, 0.0)).norm();
        qs = detail::geometric_integers(std::max(1.0, lo / unit), std::max(10.0, hi / unit), opt.samples);
    } else if (surface.kind == SurfaceKind::RoundSphere) {
        qs = detail::geometric_integers(lo, hi, opt.samples);
    } else {
        // Ladder members at q carry m in [q - 3, q + 3] and radial index below 3,
        // and lambda(m, j) >= m / a(r0); the top q keeps a full decade between
        // the first and last maximizers.
        const double a = surface.profile.a(leaf.r0);
        const int q_lo = static_cast<int>(std::lround(lo * a));
        const double lam_lo = revolution_joint_spectrum(surface, q_lo + 3, 3).back().lambda();
        qs = detail::geometric_integers(q_lo, std::max(hi * a, std::ceil(10.0 * a * lam_lo) + 3.0), opt.samples);
    }
    if (qs.size() < 5) throw RangeError("blowup_report: fewer than 5 distinct samples in the window");
    const std::array<double, 2> ray =
        surface.kind == SurfaceKind::FlatTorus ? std::array<double, 2>{1.0, 0.0} : opt.ray.value_or(equatorial_ray(surface));

    rep.samples.resize(qs.size());
    parallel_for(qs.size(), opt.par, [&](std::size_t i) {
        rep.samples[i] = surface.kind == SurfaceKind::FlatTorus ? detail::torus_sample(surface, qs[i], opt.p_list)
                                                                : detail::leaf_sample(surface, leaf, qs[i], opt, ray);
    });

    for (std::size_t k = 0; k < opt.p_list.size(); ++k) {
        const double p = opt.p_list[k];
        BlowupFit fit;
        fit.p = p;
        std::vector<std::pair<double, double>> measured, holder;
        for (const auto& s : rep.samples) {
            measured.emplace_back(s.lambda, s.norms[k]);
            if (!s.holder.empty()) holder.emplace_back(s.lambda, s.holder[k]);
        }
        fit.measured = fit_exponent(measured);
        if (!holder.empty()) fit.holder = fit_exponent(holder);
        fit.target_ideal = ideal_exponent(rep.codim, p);
        fit.target_delta = holder_exponent(rep.codim, p, opt.delta);
        if (opt.exploratory && !std::isfinite(p)) fit.exploratory_target = rep.codim / 8.0;
        rep.fits.push_back(fit);
    }
    return rep;
}

}  // namespace qcilab
