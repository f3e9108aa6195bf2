#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/interpolators/makima.hpp>

#include "qcilab/cutoff.hpp"
#include "qcilab/eliasson.hpp"
#include "qcilab/error.hpp"
#include "qcilab/grid.hpp"
#include "qcilab/parallel.hpp"
#include "qcilab/special.hpp"

namespace qcilab {

// ---------------------------------------------------------------------------
// Surface models.

/// Radius function a(r) of a surface of revolution dr^2 + a(r)^2 dtheta^2,
/// r in [0, length], vanishing at both poles.
struct Profile {
    std::string name;
    double length = kPi;
    std::function<double(double)> a;
    std::function<double(double)> da;

    static Profile sphere() { return {"sphere", kPi, [](double r) { return std::sin(r); }, [](double r) { return std::cos(r); }}; }

    /// a = sin r (1 + c sin^2 r); maximum 1 + c on the equator r = pi/2.
    static Profile oblate(double c = 0.3) {
        if (!(c > -1.0 / 3.0)) throw RangeError("oblate profile: c must exceed -1/3");
        return {"oblate",
                kPi,
                [c](double r) {
                    const double s = std::sin(r);
                    return s * (1.0 + c * s * s);
                },
                [c](double r) {
                    const double s = std::sin(r);
                    return std::cos(r) * (1.0 + 3.0 * c * s * s);
                }};
    }

    /// Cubic (modified Akima) interpolation of sampled (r, a) pairs.
    static Profile from_points(std::vector<double> r, std::vector<double> a, std::string name = "table") {
        if (r.size() != a.size() || r.size() < 5) throw RangeError("profile table needs at least 5 (r, a) rows");
        for (std::size_t i = 1; i < r.size(); ++i) {
            if (!(r[i] > r[i - 1])) throw RangeError("profile table radii must be strictly increasing");
        }
        if (std::abs(r.front()) > 1e-12) throw RangeError("profile table must start at r = 0");
        const double peak = *std::max_element(a.begin(), a.end());
        if (std::abs(a.front()) > 1e-9 * peak || std::abs(a.back()) > 1e-9 * peak) {
            throw RangeError("profile radius must vanish at both poles");
        }
        const double length = r.back();
        using Interp = boost::math::interpolators::makima<std::vector<double>>;
        auto spline = std::make_shared<Interp>(std::move(r), std::move(a));
        Profile p;
        p.name = std::move(name);
        p.length = length;
        p.a = [spline, length](double t) { return (*spline)(std::clamp(t, 0.0, length)); };
        p.da = [spline, length](double t) { return spline->prime(std::clamp(t, 0.0, length)); };
        p.validate();
        return p;
    }

    /// Whitespace-separated "r a" rows; '#' starts a comment.
    static Profile from_table(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw RangeError("cannot open profile table '" + path + "'");
        std::vector<double> r, a;
        std::string line;
        while (std::getline(in, line)) {
            if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            std::istringstream row(line);
            double x = 0.0, y = 0.0;
            if (!(row >> x)) continue;
            if (!(row >> y)) throw RangeError("profile table row needs two columns: '" + line + "'");
            r.push_back(x);
            a.push_back(y);
        }
        return from_points(std::move(r), std::move(a), path);
    }

    /// The unique interior critical point of a (the equator).
    double equator() const {
        constexpr int n = 4096;
        int changes = 0;
        double root = 0.0;
        for (int i = 1; i < n; ++i) {
            const double lo = length * i / n;
            const double hi = length * (i + 1) / n;
            const double flo = da(lo), fhi = da(hi);
            if (flo > 0.0 && fhi <= 0.0) {
                ++changes;
                double x0 = lo, x1 = hi;
                for (int it = 0; it < 200 && x1 - x0 > 1e-15; ++it) {
                    const double mid = 0.5 * (x0 + x1);
                    (da(mid) > 0.0 ? x0 : x1) = mid;
                }
                root = 0.5 * (x0 + x1);
            } else if (flo < 0.0 && fhi >= 0.0) {
                ++changes;
            }
        }
        if (changes != 1) throw RangeError("profile '" + name + "' does not have a single interior maximum");
        return root;
    }

    double max_radius() const { return a(equator()); }

    /// 2 pi int_0^L a(r) dr.
    double area() const {
        const auto& rule = gauss_legendre_20();
        constexpr int panels = 64;
        double s = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double lo = length * k / panels, hi = length * (k + 1) / panels;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                s += rule.weights[i] * 0.5 * (hi - lo) * a(0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[i]);
            }
        }
        return 2.0 * kPi * s;
    }

    void validate() const {
        if (!a || !da) throw RangeError("profile is missing its radius function");
        if (!(length > 0.0)) throw RangeError("profile length must be positive");
        for (int i = 1; i < 256; ++i) {
            if (!(a(length * i / 256.0) > 0.0)) throw RangeError("profile radius must be positive in the interior");
        }
        (void)equator();
    }
};

enum class SurfaceKind { FlatTorus, RoundSphere, Revolution };

struct SurfaceModel {
    SurfaceKind kind = SurfaceKind::RoundSphere;
    Eigen::Matrix2d lattice = Eigen::Matrix2d::Identity();
    Profile profile = Profile::sphere();

    static SurfaceModel flat_torus(const Eigen::Matrix2d& basis = Eigen::Matrix2d::Identity()) {
        SurfaceModel s;
        s.kind = SurfaceKind::FlatTorus;
        s.lattice = basis;
        s.validate();
        return s;
    }
    static SurfaceModel round_sphere() { return SurfaceModel{}; }
    static SurfaceModel revolution(Profile p) {
        SurfaceModel s;
        s.kind = SurfaceKind::Revolution;
        s.profile = std::move(p);
        s.validate();
        return s;
    }

    void validate() const {
        if (kind == SurfaceKind::FlatTorus && std::abs(lattice.determinant()) < 1e-12) {
            throw RangeError("flat torus lattice basis is singular");
        }
        if (kind == SurfaceKind::Revolution) profile.validate();
    }

    double volume() const {
        switch (kind) {
            case SurfaceKind::FlatTorus: return std::abs(lattice.determinant());
            case SurfaceKind::RoundSphere: return 4.0 * kPi;
            case SurfaceKind::Revolution: return profile.area();
        }
        return 1.0;
    }
};

inline const char* to_string(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::FlatTorus: return "torus";
        case SurfaceKind::RoundSphere: return "sphere";
        case SurfaceKind::Revolution: return "revolution";
    }
    return "?";
}

/// Samples of a surface eigenfunction together with an exact evaluator in
/// the same coordinates. Weights carry the surface measure normalized to
/// total volume 1. For joint eigenfunctions f(r) e^{im theta} only the
/// transverse profile is stored, since the modulus does not depend on theta.
struct SurfaceFunction {
    GridFunction samples;
    std::function<cplx(std::span<const double>)> eval;
    double eigenvalue = 0.0;
    std::vector<int> quantum_numbers;
};

// ---------------------------------------------------------------------------
// Flat torus.

/// e^{2 pi i <m, u>} in fractional coordinates u in [0,1)^2 of the lattice;
/// Laplace eigenvalue |2 pi B^{-T} m|^2.
inline SurfaceFunction torus_eigenfunction(int m1, int m2, const Eigen::Matrix2d& basis = Eigen::Matrix2d::Identity(),
                                           std::size_t n = 64) {
    if (std::abs(basis.determinant()) < 1e-12) throw RangeError("flat torus lattice basis is singular");
    const int top = std::max({std::abs(m1), std::abs(m2), 1});
    if (static_cast<double>(n) < 8.0 * top) throw ResolutionError("torus grid needs 8 points per wavelength");
    const Axis axis = Axis::uniform_grid(0.0, 1.0 / static_cast<double>(n), n);
    std::vector<cplx> v(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            // Integer phase reduction keeps |value| = 1 to rounding.
            const long long k = (static_cast<long long>(m1) * static_cast<long long>(i) +
                                 static_cast<long long>(m2) * static_cast<long long>(j)) %
                                static_cast<long long>(n);
            v[i * n + j] = std::polar(1.0, 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
        }
    }
    SurfaceFunction f;
    f.samples = GridFunction({axis, axis}, std::move(v), 1.0);
    f.samples.wavelength = 1.0 / top;
    const Eigen::Vector2d dual = 2.0 * kPi * basis.transpose().inverse() * Eigen::Vector2d(m1, m2);
    f.eigenvalue = dual.squaredNorm();
    f.quantum_numbers = {m1, m2};
    f.eval = [m1, m2](std::span<const double> u) { return std::polar(1.0, 2.0 * kPi * (m1 * u[0] + m2 * u[1])); };
    return f;
}

// ---------------------------------------------------------------------------
// Round sphere.

/// Normalized associated Legendre function with int_{-1}^1 |P|^2 dx = 1/(2 pi),
/// so that P(cos theta) e^{i m phi} has unit L^2 norm on the standard sphere.
/// The sectoral start value is formed in the log domain and the upward
/// recurrence carries a separate exponent, so no intermediate underflows.
inline double normalized_legendre(int l, int m, double x) {
    m = std::abs(m);
    if (l < m || l > 2000) throw RangeError("normalized_legendre: need |m| <= l <= 2000");
    const double s2 = std::max(0.0, 1.0 - x * x);
    double log_start = 0.5 * std::log((2.0 * m + 1.0) / (4.0 * kPi));
    for (int k = 1; k <= m; ++k) log_start += 0.5 * std::log((2.0 * k - 1.0) / (2.0 * k));
    if (m > 0) {
        if (s2 == 0.0) return 0.0;
        log_start += 0.5 * m * std::log(s2);
    }
    double exponent = log_start;
    double p_prev = 0.0;
    double p = 1.0;
    if (l == m) return std::exp(exponent);
    double p_next = x * std::sqrt(2.0 * m + 3.0) * p;
    p_prev = p;
    p = p_next;
    for (int k = m + 2; k <= l; ++k) {
        const double ak = std::sqrt((4.0 * k * k - 1.0) / (static_cast<double>(k) * k - static_cast<double>(m) * m));
        const double ak1 = std::sqrt((4.0 * (k - 1.0) * (k - 1.0) - 1.0) /
                                     ((k - 1.0) * (k - 1.0) - static_cast<double>(m) * m));
        p_next = ak * (x * p - p_prev / ak1);
        p_prev = p;
        p = p_next;
        if (std::abs(p) > 1e150) {
            p *= 1e-150;
            p_prev *= 1e-150;
            exponent += 150.0 * std::log(10.0);
        }
    }
    return p * std::exp(exponent);
}

/// Gauss-Legendre nodes in cos(theta), returned in ascending theta, with
/// weights multiplied by `phi_weight`.
inline Axis sphere_theta_axis(std::size_t n, double phi_weight) {
    const QuadratureRule rule = gauss_legendre(static_cast<int>(n));
    std::vector<double> theta(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        // rule.nodes ascend in x, so theta = acos(x) descends; reverse.
        theta[n - 1 - i] = std::acos(rule.nodes[i]);
        w[n - 1 - i] = rule.weights[i] * phi_weight;
    }
    return Axis::custom(std::move(theta), std::move(w), 0.0, kPi);
}

/// Default number of theta nodes for degree l.
inline std::size_t sphere_theta_nodes(int l) { return static_cast<std::size_t>(5 * l + 64); }

/// Real spherical harmonic with unit L^2 norm on the standard sphere, on a
/// (theta, phi) grid. Weights use the normalized measure dvol / (4 pi).
inline SurfaceFunction sphere_harmonic(int l, int m, std::size_t n_theta = 0, std::size_t n_phi = 0) {
    if (l < 0 || l > 2000 || std::abs(m) > l) throw RangeError("sphere_harmonic: need |m| <= l <= 2000");
    if (n_theta == 0) n_theta = sphere_theta_nodes(l);
    if (n_phi == 0) n_phi = static_cast<std::size_t>(8.0 * std::ceil(std::sqrt(l * (l + 1.0))) + 16.0);
    const Axis th = sphere_theta_axis(n_theta, 1.0);
    const Axis ph = Axis::uniform_grid(0.0, 2.0 * kPi / static_cast<double>(n_phi), n_phi);
    const double c = m == 0 ? 1.0 : std::sqrt(2.0);
    const auto angular = [m, c](double phi) {
        if (m > 0) return c * std::cos(m * phi);
        if (m < 0) return c * std::sin(-m * phi);
        return 1.0;
    };
    std::vector<cplx> v(n_theta * n_phi);
    for (std::size_t i = 0; i < n_theta; ++i) {
        const double p = normalized_legendre(l, m, std::cos(th.nodes[i]));
        for (std::size_t j = 0; j < n_phi; ++j) v[i * n_phi + j] = p * angular(ph.nodes[j]);
    }
    SurfaceFunction f;
    f.samples = GridFunction({th, ph}, std::move(v), 1.0);
    f.samples.measure_scale = 1.0 / (4.0 * kPi);
    f.samples.wavelength = 2.0 * kPi / std::max(1.0, std::sqrt(l * (l + 1.0)));
    f.eigenvalue = l * (l + 1.0);
    f.quantum_numbers = {l, m};
    f.eval = [l, m, angular](std::span<const double> x) {
        return cplx(normalized_legendre(l, m, std::cos(x[0])) * angular(x.size() > 1 ? x[1] : 0.0));
    };
    return f;
}

/// Joint eigenfunction P(cos theta) e^{i m phi} of (Laplacian, D_phi) as its
/// theta profile on a given theta axis, unit L^2 norm on the standard sphere.
inline SurfaceFunction sphere_joint_eigenfunction(int l, int m, const Axis& theta) {
    if (l < 0 || l > 2000 || std::abs(m) > l) throw RangeError("sphere_joint_eigenfunction: need |m| <= l <= 2000");
    std::vector<cplx> v(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) v[i] = normalized_legendre(l, m, std::cos(theta.nodes[i]));
    SurfaceFunction f;
    f.samples = GridFunction(theta, std::move(v), 1.0);
    f.samples.measure_scale = 1.0 / (4.0 * kPi);
    f.samples.wavelength = 2.0 * kPi / std::max(1.0, std::sqrt(l * (l + 1.0)));
    f.eigenvalue = l * (l + 1.0);
    f.quantum_numbers = {l, m};
    f.eval = [l, m](std::span<const double> x) { return cplx(normalized_legendre(l, m, std::cos(x[0]))); };
    return f;
}

inline SurfaceFunction sphere_joint_eigenfunction(int l, int m, std::size_t n_theta = 0) {
    if (l < 0 || l > 2000 || std::abs(m) > l) throw RangeError("sphere_joint_eigenfunction: need |m| <= l <= 2000");
    if (n_theta == 0) n_theta = sphere_theta_nodes(l);
    return sphere_joint_eigenfunction(l, m, sphere_theta_axis(n_theta, 2.0 * kPi));
}

// ---------------------------------------------------------------------------
// Joint spectra and ladders.

struct JointEigenvalue {
    /// Laplace eigenvalue lambda^2.
    double lambda_sq = 0.0;
    /// Angular momentum m (eigenvalue of D_theta).
    int m = 0;
    /// Second quantum number: l on the sphere, radial index j on revolutions.
    int index = 0;

    double lambda() const { return std::sqrt(std::max(0.0, lambda_sq)); }
    /// hbar = 1 / lambda.
    double hbar() const { return lambda() > 0.0 ? 1.0 / lambda() : std::numeric_limits<double>::infinity(); }
    /// (hbar lambda, hbar m) for a given hbar.
    std::array<double, 2> mu(double h) const { return {h * lambda(), h * m}; }
    std::array<double, 2> mu() const { return lambda() > 0.0 ? mu(hbar()) : std::array<double, 2>{0.0, 0.0}; }
};

/// Exact sphere joint spectrum, all (l, m) with l in [l_min, l_max].
inline std::vector<JointEigenvalue> sphere_joint_spectrum(int l_min, int l_max) {
    if (l_min < 0 || l_max < l_min || l_max > 2000) throw RangeError("sphere_joint_spectrum: invalid degree range");
    std::vector<JointEigenvalue> out;
    for (int l = l_min; l <= l_max; ++l) {
        for (int m = -l; m <= l; ++m) out.push_back({l * (l + 1.0), m, l});
    }
    return out;
}

/// Entries with |mu_j - b_j| <= C hbar for both coordinates. With hbar NaN
/// each entry is scaled by its own hbar = 1/lambda.
inline std::vector<JointEigenvalue> ladder_select(const std::vector<JointEigenvalue>& spectrum,
                                                  const std::array<double, 2>& b, double c,
                                                  double hbar = std::numeric_limits<double>::quiet_NaN()) {
    if (c < 0.0) throw RangeError("ladder_select: C must be non-negative");
    std::vector<JointEigenvalue> out;
    for (const auto& e : spectrum) {
        const double h = std::isnan(hbar) ? e.hbar() : hbar;
        if (!std::isfinite(h)) continue;
        const auto mu = e.mu(h);
        const double tol = c * h * (1.0 + 1e-12) + 1e-15;
        if (std::abs(mu[0] - b[0]) <= tol && std::abs(mu[1] - b[1]) <= tol) out.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigenproblems.

/// Number of eigenvalues of the symmetric tridiagonal (d, e) below x.
inline std::size_t sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
    std::size_t count = 0;
    double q = d[0] - x;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (q == 0.0) q = 1e-300;
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if (q < 0.0) ++count;
    }
    return count;
}

/// Lowest `count` eigenvalues by Sturm bisection.
inline std::vector<double> tridiagonal_lowest(const std::vector<double>& d, const std::vector<double>& e,
                                              std::size_t count) {
    if (d.empty() || e.size() + 1 != d.size()) throw DimensionError("tridiagonal: need n diagonal and n-1 off-diagonal entries");
    count = std::min(count, d.size());
    double lo = d[0], hi = d[0];
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double rad = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < d.size() ? std::abs(e[i]) : 0.0);
        lo = std::min(lo, d[i] - rad);
        hi = std::max(hi, d[i] + rad);
    }
    std::vector<double> out(count);
    double floor = lo;
    for (std::size_t k = 0; k < count; ++k) {
        double a = floor, b = hi;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + b);
            if (b - a <= 4e-16 * std::max(1.0, std::abs(mid))) break;
            if (sturm_count(d, e, mid) > k) {
                b = mid;
            } else {
                a = mid;
            }
        }
        out[k] = 0.5 * (a + b);
        floor = a;
    }
    return out;
}

/// Unit eigenvector for an isolated eigenvalue by inverse iteration.
inline std::vector<double> tridiagonal_eigenvector(const std::vector<double>& d, const std::vector<double>& e,
                                                   double lambda) {
    const std::size_t n = d.size();
    const double shift = lambda + 1e-12 * std::max(1.0, std::abs(lambda));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * std::sin(0.7 * static_cast<double>(i) + 0.3);
    std::vector<double> c(n), y(n);
    for (int it = 0; it < 4; ++it) {
        // Thomas algorithm on (T - shift).
        double piv = d[0] - shift;
        if (piv == 0.0) piv = 1e-300;
        c[0] = n > 1 ? e[0] / piv : 0.0;
        y[0] = x[0] / piv;
        for (std::size_t i = 1; i < n; ++i) {
            piv = d[i] - shift - e[i - 1] * c[i - 1];
            if (piv == 0.0) piv = 1e-300;
            c[i] = i + 1 < n ? e[i] / piv : 0.0;
            y[i] = (x[i] - e[i - 1] * y[i - 1]) / piv;
        }
        for (std::size_t i = n - 1; i-- > 0;) y[i] -= c[i] * y[i + 1];
        double norm = 0.0;
        for (double v : y) norm += v * v;
        norm = std::sqrt(norm);
        if (!(norm > 0.0) || !std::isfinite(norm)) throw ConvergenceError("inverse iteration broke down", 1.0);
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Radial Sturm-Liouville problem on a surface of revolution.
//
// Substituting f(r) e^{i m theta} into the Laplacian gives
//   -(a f')' + m^2 f / a = lambda^2 a f  on (0, L).
// Cell-centred finite volumes with face values of a; the zero face radius at
// the poles encodes regularity without explicit boundary conditions.

struct RadialOperator {
    double h = 0.0;
    std::vector<double> r;
    std::vector<double> mass;  // a_i h
    std::vector<double> diag;  // symmetrized D^{-1/2} K D^{-1/2}
    std::vector<double> off;
};

inline RadialOperator radial_operator(const Profile& profile, int m, std::size_t n) {
    if (n < 8) throw RangeError("radial mesh needs at least 8 cells");
    RadialOperator op;
    op.h = profile.length / static_cast<double>(n);
    op.r.resize(n);
    op.mass.resize(n);
    op.diag.resize(n);
    op.off.resize(n - 1);
    std::vector<double> face(n + 1, 0.0);
    for (std::size_t i = 1; i < n; ++i) face[i] = profile.a(static_cast<double>(i) * op.h);
    for (std::size_t i = 0; i < n; ++i) {
        op.r[i] = (static_cast<double>(i) + 0.5) * op.h;
        const double ai = profile.a(op.r[i]);
        op.mass[i] = ai * op.h;
        const double k = (face[i] + face[i + 1]) / op.h + static_cast<double>(m) * m * op.h / ai;
        op.diag[i] = k / op.mass[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i) op.off[i] = -face[i + 1] / op.h / std::sqrt(op.mass[i] * op.mass[i + 1]);
    return op;
}

struct RadialSpectrum {
    std::vector<double> lambda_sq;
    /// |extrapolated - finest| / max(1, |extrapolated|) per eigenvalue.
    std::vector<double> error;
    /// Observed convergence ratios (coarse - mid) / (mid - fine).
    std::vector<double> ratio;
};

/// Lowest `count` radial eigenvalues for angular momentum m, from meshes of
/// n, 2n and 4n cells with Richardson extrapolation. Throws ConvergenceError
/// when the observed ratio is not close to 4 (second-order convergence).
inline RadialSpectrum radial_eigenvalues(const Profile& profile, int m, std::size_t count, std::size_t n = 2000) {
    if (count == 0 || count > 200) throw RangeError("radial_eigenvalues: count must lie in [1, 200]");
    std::array<std::vector<double>, 3> levels;
    for (int k = 0; k < 3; ++k) {
        const auto op = radial_operator(profile, m, n << k);
        levels[k] = tridiagonal_lowest(op.diag, op.off, count);
    }
    RadialSpectrum out;
    for (std::size_t i = 0; i < count; ++i) {
        const double c = levels[0][i], md = levels[1][i], f = levels[2][i];
        const double ex = f + (f - md) / 3.0;
        const double scale = std::max(1.0, std::abs(ex));
        const double d1 = c - md, d2 = md - f;
        double ratio = 4.0;
        if (std::abs(d1) > 1e-9 * scale && std::abs(d2) > 1e-11 * scale) {
            ratio = d1 / d2;
            if (ratio < 3.0 || ratio > 5.5) {
                throw ConvergenceError("radial mesh refinement is not second order (ratio " + std::to_string(ratio) + ")",
                                       std::abs(d2) / scale);
            }
        }
        out.lambda_sq.push_back(ex);
        out.error.push_back(std::abs(ex - f) / scale);
        out.ratio.push_back(ratio);
    }
    return out;
}

/// Lowest `count` joint eigenvalues with angular momentum m on a surface of
/// revolution, sorted by eigenvalue.
inline std::vector<JointEigenvalue> revolution_joint_spectrum(const SurfaceModel& surface, int m, std::size_t count,
                                                              std::size_t n = 2000) {
    if (surface.kind == SurfaceKind::FlatTorus) throw RangeError("revolution_joint_spectrum: torus has no profile");
    const RadialSpectrum rs = radial_eigenvalues(surface.profile, m, count, n);
    std::vector<JointEigenvalue> out;
    for (std::size_t j = 0; j < rs.lambda_sq.size(); ++j) out.push_back({rs.lambda_sq[j], m, static_cast<int>(j)});
    return out;
}

/// Joint spectra for several angular momenta, merged and sorted by
/// eigenvalue then m. Independent per m.
inline std::vector<JointEigenvalue> revolution_joint_spectrum(const SurfaceModel& surface, const std::vector<int>& ms,
                                                              std::size_t count, std::size_t n = 2000,
                                                              Parallelism par = {}) {
    std::vector<std::vector<JointEigenvalue>> parts(ms.size());
    parallel_for(ms.size(), par, [&](std::size_t i) { parts[i] = revolution_joint_spectrum(surface, ms[i], count, n); });
    std::vector<JointEigenvalue> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.lambda_sq != b.lambda_sq ? a.lambda_sq < b.lambda_sq : a.m < b.m;
    });
    return out;
}

/// Radial profile f_j of the joint eigenfunction f(r) e^{i m theta} on the
/// mesh of n cells, unit norm in the normalized surface measure.
inline SurfaceFunction revolution_eigenfunction(const SurfaceModel& surface, int m, int j, std::size_t n = 4000) {
    if (surface.kind == SurfaceKind::FlatTorus) throw RangeError("revolution_eigenfunction: torus has no profile");
    if (j < 0 || j >= 200) throw RangeError("revolution_eigenfunction: radial index must lie in [0, 200)");
    const RadialOperator op = radial_operator(surface.profile, m, n);
    const auto ev = tridiagonal_lowest(op.diag, op.off, static_cast<std::size_t>(j) + 1);
    const double lam = ev.back();
    auto g = tridiagonal_eigenvector(op.diag, op.off, lam);
    std::vector<double> weights(n);
    std::vector<cplx> values(n);
    const double area = surface.profile.area();
    double norm = 0.0;
    std::size_t peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
        weights[i] = 2.0 * kPi * op.mass[i];
        const double f = g[i] / std::sqrt(op.mass[i]);
        values[i] = f;
        norm += weights[i] * f * f / area;
        if (std::abs(f) > std::abs(values[peak].real())) peak = i;
    }
    const double scale = (values[peak].real() < 0.0 ? -1.0 : 1.0) / std::sqrt(norm);
    for (auto& v : values) v *= scale;
    Axis axis = Axis::custom(op.r, std::move(weights), 0.0, surface.profile.length);
    SurfaceFunction out;
    out.samples = GridFunction(axis, values, 1.0);
    out.samples.measure_scale = 1.0 / area;
    out.samples.wavelength = 2.0 * kPi / std::max(1.0, std::sqrt(std::max(lam, 0.0)));
    out.eigenvalue = lam;
    out.quantum_numbers = {m, j};
    // Linear interpolation between cell centres, constant beyond the outer ones.
    out.eval = [r = op.r, values](std::span<const double> x) {
        const double t = x[0];
        if (t <= r.front()) return values.front();
        if (t >= r.back()) return values.back();
        const auto it = std::upper_bound(r.begin(), r.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - r.begin());
        const double w = (t - r[i - 1]) / (r[i] - r[i - 1]);
        return (1.0 - w) * values[i - 1] + w * values[i];
    };
    return out;
}

// ---------------------------------------------------------------------------
// Singular leaves and tubes.

enum class LeafKind { None, EquatorGeodesic, PolarCap };

struct SingularLeaf {
    LeafKind kind = LeafKind::None;
    /// Transverse coordinate of the leaf (theta on the sphere, r on revolutions).
    double r0 = 0.0;
    /// Orbit dimension ell and its codimension n - ell, n = 2.
    int rank = 2;
    int codim = 0;
    /// Points (r0, theta_k) of the projected leaf.
    std::vector<std::array<double, 2>> projection;
};

/// Gradients in (r, theta, rho, xi_theta) of |xi| = sqrt(rho^2 + xi_theta^2 / a^2)
/// and of xi_theta, the Clairaut pair.
inline std::vector<Eigen::VectorXd> clairaut_gradients(const Profile& p, double r, double rho, double xi_theta) {
    const double a = p.a(r), da = p.da(r);
    const double norm = std::sqrt(rho * rho + xi_theta * xi_theta / (a * a));
    if (!(norm > 0.0)) throw RangeError("clairaut_gradients: zero covector");
    Eigen::VectorXd g1(4), g2(4);
    g1 << -xi_theta * xi_theta * da / (a * a * a * norm), 0.0, rho / norm, xi_theta / (a * a * norm);
    g2 << 0.0, 0.0, 0.0, 1.0;
    return {g1, g2};
}

inline SingularLeaf singular_leaf_of(const SurfaceModel& surface) {
    SingularLeaf leaf;
    if (surface.kind == SurfaceKind::FlatTorus) return leaf;
    const Profile& p = surface.kind == SurfaceKind::RoundSphere ? Profile::sphere() : surface.profile;
    const double r0 = surface.kind == SurfaceKind::RoundSphere ? kPi / 2.0 : p.equator();
    const auto grads = clairaut_gradients(p, r0, 0.0, p.a(r0));
    leaf.kind = LeafKind::EquatorGeodesic;
    leaf.r0 = r0;
    leaf.rank = moment_rank(grads).rank;
    leaf.codim = 2 - leaf.rank;
    for (int k = 0; k < 64; ++k) leaf.projection.push_back({r0, 2.0 * kPi * k / 64.0});
    return leaf;
}

/// Support radius of the tube cutoff chi(hbar^{-delta} dist / eps).
inline double tube_radius(double delta, double hbar, double epsilon = kTubeEpsilon) {
    return epsilon * std::pow(hbar, delta);
}

/// int chi(hbar^{-delta} |r - r0| / eps) |phi|^2 dvol with the grid's
/// normalized measure; axis 0 of the grid is the transverse coordinate.
inline double tube_mass(const GridFunction& phi, const SingularLeaf& leaf, double delta, double hbar,
                        double epsilon = kTubeEpsilon) {
    if (leaf.kind == LeafKind::None) throw RangeError("tube_mass: surface has no singular leaf");
    if (!(delta >= 0.0 && delta < 0.5)) throw RangeError("tube_mass: delta must lie in [0, 1/2)");
    const double radius = tube_radius(delta, hbar, epsilon);
    const Axis& ax = phi.axis(0);
    std::size_t inside = 0;
    for (double r : ax.nodes) inside += std::abs(r - leaf.r0) < radius ? 1 : 0;
    if (inside < 16) {
        throw ResolutionError("tube_mass: only " + std::to_string(inside) + " samples across the tube (need 16)");
    }
    const std::size_t n1 = phi.rank() > 1 ? phi.axis(1).size() : 1;
    double mass = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
        const double r = ax.nodes[k / n1];
        mass += phi.weight(k) * bump((r - leaf.r0) / radius) * std::norm(phi[k]);
    }
    return mass;
}

/// Normalized measure of the cutoff tube, i.e. tube_mass of the constant 1.
inline double tube_volume(const GridFunction& grid, const SingularLeaf& leaf, double delta, double hbar,
                          double epsilon = kTubeEpsilon) {
    GridFunction one = grid;
    for (auto& v : one.values()) v = 1.0;
    return tube_mass(one, leaf, delta, hbar, epsilon);
}

}  // namespace qcilab
