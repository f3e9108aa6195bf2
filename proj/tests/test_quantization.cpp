#include <bit>
#include <cmath>
#include <complex>
#include <vector>

#include <gtest/gtest.h>

#include "qcilab/error.hpp"
#include "qcilab/quantization.hpp"
#include "qcilab/quasimodes.hpp"
#include "qcilab/special.hpp"

using namespace qcilab;

namespace {

GridFunction sampled(const Axis& ax, double hbar, auto&& f) {
    std::vector<cplx> v(ax.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(ax.nodes[i]);
    return GridFunction(ax, std::move(v), hbar);
}

double relative_l2(const GridFunction& a, const GridFunction& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += a.weight(i) * std::norm(a[i] - b[i]);
        den += b.weight(i) * std::norm(b[i]);
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST(Quantize, IdentitySymbol) {
    const double hbar = 1e-3;
    const Axis ax = Axis::centered(0.0, 1e-4, 4096);
    const GridFunction u = sampled(ax, hbar, [&](double x) {
        return bump(x / 0.3) * std::polar(1.0 + x, 25.0 * x + 3.0 * x * x);
    });
    EXPECT_LT(relative_l2(quantize(Symbol::constant(1.0), hbar, u), u), 1e-10);
    EXPECT_NEAR(std::abs(matrix_element(Symbol::constant(1.0), hbar, normalized(u), normalized(u)) - 1.0), 0.0, 1e-10);
}

TEST(Quantize, MomentumSymbolOnModulatedPlaneWave) {
    const double hbar = 1e-3, xi0 = 0.7, w = 0.4;
    const Axis ax = Axis::centered(0.0, 1e-4, 8192);
    const auto env = [&](double x) { return bump(x / w); };
    const auto denv = [&](double x) {
        const double t = x / w;
        if (std::abs(t) >= 1.0) return 0.0;
        return bump(t) * (-2.0 * t / ((1.0 - t * t) * (1.0 - t * t))) / w;
    };
    const GridFunction u = sampled(ax, hbar, [&](double x) { return env(x) * std::polar(1.0, x * xi0 / hbar); });
    const GridFunction out = quantize(Symbol::momentum(), hbar, u);
    // Op(xi) = -i hbar d/dx, so Op(xi) u = xi0 u - i hbar env' e^{i x xi0 / hbar}.
    double err = 0.0, near_center = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = ax.nodes[i];
        const cplx exact = xi0 * u[i] - cplx(0.0, hbar) * denv(x) * std::polar(1.0, x * xi0 / hbar);
        err = std::max(err, std::abs(out[i] - exact));
        if (std::abs(x) < 0.05) near_center = std::max(near_center, std::abs(out[i] - xi0 * u[i]));
    }
    EXPECT_LT(err, 1e-8);
    EXPECT_LT(near_center, 2.0 * hbar);
}

TEST(Quantize, GaussianInsidePhaseSpaceCutoff) {
    const double hbar = 1e-3;
    const Symbol a = small_scale_cutoff(0.0, hbar, {0.0}, 1.0);
    const Axis ax = Axis::centered(0.0, 1e-4, 8192);
    const GridFunction u = coherent_state(ax, hbar, 0.0, 0.0);
    const double value = matrix_element(a, hbar, u, u).real();

    // Independent oracle: <Op(chi x chi) u, u> = int chi(x) u(x) v(x) dx with
    // v = (2 pi hbar)^{-1/2} int e^{i x xi / hbar} chi(xi) u_hat(xi) dxi and
    // u_hat = u for the centred Gaussian; both integrals by Gauss-Legendre.
    const auto& rule = gauss_legendre_20();
    const auto gauss = [&](double t) { return std::pow(kPi * hbar, -0.25) * std::exp(-t * t / (2.0 * hbar)); };
    const auto panels = [&](auto&& f, double lo, double hi, int n) {
        cplx s = 0.0;
        const double h = (hi - lo) / n;
        for (int k = 0; k < n; ++k) {
            const double mid = lo + (k + 0.5) * h;
            for (std::size_t j = 0; j < rule.nodes.size(); ++j) s += 0.5 * h * rule.weights[j] * f(mid + 0.5 * h * rule.nodes[j]);
        }
        return s;
    };
    const double span = 12.0 * std::sqrt(hbar);
    const cplx oracle = panels(
        [&](double x) {
            const cplx v = panels([&](double xi) { return std::polar(bump(xi) * gauss(xi), x * xi / hbar); }, -span, span,
                                  40) /
                           std::sqrt(2.0 * kPi * hbar);
            return bump(x) * gauss(x) * v;
        },
        -span, span, 40);
    EXPECT_NEAR(value, oracle.real(), 1e-9);
    // chi = 1 - t^2 + O(t^4) and the Gaussian has variance hbar / 2 in x and xi.
    EXPECT_NEAR(value, 1.0 - hbar, 5.0 * hbar * hbar);
}

TEST(MatrixElement, SmallScaleCutoffOnEllipticBlock) {
    const double hbar = 1e-3;
    const QuasimodeSpec spec{{BlockSpec::elliptic(0)}, hbar};
    const GridFunction psi = normalized(microlocalize(spec));
    const Symbol a = small_scale_cutoff(0.4, hbar, {0.0});
    EXPECT_GE(matrix_element(a, hbar, psi, psi).real(), 0.9);
}

TEST(MatrixElement, HermiticityForRealSymbols) {
    const double hbar = 1e-3;
    const Axis ax = Axis::centered(0.0, 1e-4, 4096);
    const GridFunction u = coherent_state(ax, hbar, 0.05, 0.2);
    const GridFunction v = coherent_state(ax, hbar, -0.02, 0.25);
    const auto check = [&](const Symbol& a, double tol) {
        const cplx lhs = matrix_element(a, hbar, u, v);
        const cplx rhs = std::conj(matrix_element(a.conjugate(), hbar, v, u));
        EXPECT_NEAR(std::abs(lhs - rhs), 0.0, tol);
    };
    // Multiplication and Fourier multipliers are exactly self-adjoint.
    check(Symbol::product({[](double x) { return cplx(std::cos(3.0 * x)); }}, {[](double) { return cplx(1.0); }}), 1e-12);
    check(Symbol::product({[](double) { return cplx(1.0); }}, {[](double xi) { return cplx(bump(xi / 0.5)); }}), 1e-12);
    // A mixed real symbol differs from its adjoint by O(hbar).
    check(small_scale_cutoff(0.0, hbar, {0.0}, 0.3), 10.0 * hbar);
}

TEST(MatrixElement, RejectsMismatchedGrids) {
    const double hbar = 1e-3;
    const GridFunction u = coherent_state(Axis::centered(0.0, 1e-4, 1024), hbar, 0.0, 0.0);
    const GridFunction v = coherent_state(Axis::centered(0.0, 1e-4, 2048), hbar, 0.0, 0.0);
    EXPECT_THROW(matrix_element(Symbol::constant(1.0), hbar, u, v), DimensionError);
}

TEST(Quantize, LinearInSymbolAndFunction) {
    const double hbar = 1e-2;
    const Axis ax = Axis::centered(0.0, 5e-4, 2048);
    const GridFunction u = coherent_state(ax, hbar, 0.1, 0.3);
    const GridFunction v = coherent_state(ax, hbar, -0.1, -0.2);
    const Symbol a = small_scale_cutoff(0.2, hbar, {0.0}, 1.0);
    const cplx alpha(0.3, -1.2), beta(2.0, 0.5);
    GridFunction w = u;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = alpha * u[i] + beta * v[i];
    const GridFunction qu = quantize(a, hbar, u), qv = quantize(a, hbar, v), qw = quantize(a, hbar, w);
    double err = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) err = std::max(err, std::abs(qw[i] - alpha * qu[i] - beta * qv[i]));
    EXPECT_LT(err, 1e-12);

    const Interval xs{-0.5, 0.5}, ps{-1.0, 1.0};
    const auto f = [](double x, double xi) { return cplx(std::cos(x) * bump(xi), x * xi); };
    const auto g = [](double x, double xi) { return cplx(bump(x / 0.5) * xi * xi, 0.0); };
    const auto general = [&](auto&& h) {
        return Symbol::general([h](std::span<const double> x, std::span<const double> xi, double) { return h(x[0], xi[0]); },
                               {xs}, {ps});
    };
    const GridFunction qf = quantize(general(f), hbar, u), qg = quantize(general(g), hbar, u);
    const GridFunction qs = quantize(general([&](double x, double xi) { return alpha * f(x, xi) + beta * g(x, xi); }), hbar, u);
    err = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i) err = std::max(err, std::abs(qs[i] - alpha * qf[i] - beta * qg[i]));
    EXPECT_LT(err, 1e-11);
}

TEST(Quantize, GeneralPathAgreesWithSeparablePath) {
    const double hbar = 1e-2;
    const Axis ax = Axis::centered(0.0, 5e-4, 1024);
    const GridFunction u = coherent_state(ax, hbar, 0.05, 0.1);
    const Symbol sep = small_scale_cutoff(0.0, hbar, {0.0}, 0.2);
    const Symbol gen = Symbol::general(sep.eval, sep.x_support, sep.xi_support, 0.0, sep.x_scale);
    EXPECT_LT(relative_l2(quantize(gen, hbar, u), quantize(sep, hbar, u)), 1e-12);
}

TEST(Quantize, RealSymbolGivesNearlyRealDiagonal) {
    const double delta = 0.25;
    for (double hbar : {1e-2, 1e-3}) {
        const Symbol a = small_scale_cutoff(delta, hbar, {0.0}, 1.0);
        const double r = a.x_scale;
        const auto n = std::bit_ceil(static_cast<std::size_t>(std::ceil(8.0 * r / quantization_spacing_limit(a, hbar))));
        const Axis ax = Axis::centered(0.0, 4.0 * r / static_cast<double>(n), n / 2);
        for (double f : {0.0, 0.6, 0.9}) {
            const GridFunction u = coherent_state(ax, hbar, f * r, -f * r);
            // Op(a) - Op(a)^* = -i hbar Op(d_x d_xi a) + ..., and sup |chi'|^2 = 4.71.
            EXPECT_LT(std::abs(matrix_element(a, hbar, u, u).imag()), 2.5 * std::pow(hbar, 1.0 - 2.0 * delta)) << hbar;
        }
    }
}

TEST(Quantize, ResolutionGuards) {
    const double hbar = 1e-3;
    const Symbol a = small_scale_cutoff(0.4, hbar, {0.0}, 1.0);
    const GridFunction coarse = coherent_state(Axis::centered(0.0, 1e-2, 64), hbar, 0.0, 0.0);
    EXPECT_THROW(quantize(a, hbar, coarse), ResolutionError);
    // Box [-0.05, 0.05] is narrower than the symbol support and u is not
    // negligible at its edges.
    const GridFunction cut = coherent_state(Axis::centered(0.0, 1e-4, 500), hbar, 0.04, 0.0);
    EXPECT_THROW(quantize(a, hbar, cut), ResolutionError);
    const Symbol wide = small_scale_cutoff(0.0, hbar, {0.0}, 50.0);
    const GridFunction fine = coherent_state(Axis::centered(0.0, 1e-4, 8192), hbar, 0.0, 0.0);
    EXPECT_THROW(quantize(wide, hbar, fine), ResolutionError);
    const GridFunction two_d(std::vector<Axis>{Axis::centered(0, 1e-4, 8), Axis::centered(0, 1e-4, 8)},
                             std::vector<cplx>(256, 0.0), hbar);
    EXPECT_THROW(quantize(a, hbar, two_d), DimensionError);
}

TEST(SmallScaleCutoff, DeltaZeroIsThePlainBump) {
    const Symbol a = small_scale_cutoff(0.0, 1e-3, {0.2}, 1.0);
    for (double x : {-0.5, 0.0, 0.3, 0.9}) {
        for (double xi : {-0.7, 0.0, 0.4}) EXPECT_EQ(a(x, xi, 1e-3), cplx(bump(x - 0.2) * bump(xi)));
    }
    EXPECT_EQ(small_scale_cutoff(0.0, 1e-6, {0.2}, 1.0).x_scale, a.x_scale);
}

TEST(SmallScaleCutoff, SupportRadiusScales) {
    const Symbol a = small_scale_cutoff(0.4, 1e-2, {0.0});
    const double r = kSmallScaleEpsilon * std::pow(10.0, -0.8);
    EXPECT_NEAR(a.x_support[0].hi, r, 1e-14);
    EXPECT_NEAR(a.xi_support[0].hi, r, 1e-14);
    EXPECT_EQ(a(r, 0.0, 1e-2), cplx(0.0));
    EXPECT_GT(a(0.99 * r, 0.0, 1e-2).real(), 0.0);
}

TEST(SmallScaleCutoff, RejectsCriticalDelta) {
    EXPECT_THROW(small_scale_cutoff(0.5, 1e-2, {0.0}), RangeError);
    EXPECT_THROW(small_scale_cutoff(-0.1, 1e-2, {0.0}), RangeError);
    EXPECT_THROW(small_scale_cutoff(0.2, 1e-2, {}), DimensionError);
}

TEST(SmallScaleCutoff, SymbolClassConstantIsUniform) {
    std::vector<double> constants;
    for (double hbar : {1e-2, 1e-4, 1e-6}) {
        const Symbol a = small_scale_cutoff(0.4, hbar, {0.0}, 1.0);
        std::vector<double> lattice;
        for (int k = -10; k <= 10; ++k) lattice.push_back(0.1 * k * a.x_scale);
        constants.push_back(symbol_class_constant(a, hbar, lattice, lattice));
    }
    for (double c : constants) EXPECT_NEAR(c / constants.front(), 1.0, 1e-3);
}

TEST(Garding, NestedCutoffDeficitScalesLikeHbarPower) {
    const double delta = 0.25;
    std::vector<double> scaled;
    for (double hbar : {1e-2, 1e-3, 1e-4}) {
        const Symbol outer = small_scale_cutoff(delta, hbar, {0.0}, 1.0);
        const Symbol inner = small_scale_cutoff(delta, hbar, {0.0}, 0.7);
        const double r = outer.x_scale;
        const auto n = std::bit_ceil(static_cast<std::size_t>(std::ceil(8.0 * r / quantization_spacing_limit(outer, hbar))));
        const Axis ax = Axis::centered(0.0, 4.0 * r / static_cast<double>(n), n / 2);
        double worst = 0.0;
        for (double fx = -1.2; fx <= 1.21; fx += 0.2) {
            for (double fp = -1.2; fp <= 1.21; fp += 0.2) {
                worst = std::max(worst, nested_cutoff_deficit(outer, inner, hbar, coherent_state(ax, hbar, fx * r, fp * r)));
            }
        }
        scaled.push_back(worst / std::pow(hbar, 1.0 - 2.0 * delta));
    }
    const double c = std::max(scaled.front(), 1e-10);
    for (double s : scaled) EXPECT_LE(s, 2.0 * c);
}
