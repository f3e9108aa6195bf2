#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qcilab/error.hpp"
#include "qcilab/masses.hpp"
#include "qcilab/scaling.hpp"

using namespace qcilab;

namespace {

// M_h(s, hbar, delta = 0.4) from an independent mpmath evaluation of the
// nested integral (inner by mpmath.quadosc, outer by tanh-sinh on log xi).
struct HyperbolicCase {
    double hbar, s, value;
};
constexpr HyperbolicCase kHyperbolic[] = {
    {1e-2, 0.0, 0.9843084764891143}, {1e-2, 0.5, 0.9600370962766732}, {1e-2, 1.0, 0.560335686410816},
    {1e-3, 0.0, 0.9759257765505291}, {1e-3, 0.5, 1.2095472332700126}, {1e-3, 1.0, 0.8289698913944117},
    {1e-4, 0.0, 0.8478949808110854}, {1e-4, 0.5, 1.274722449658534},  {1e-4, 1.0, 1.0624142777549856},
    {1e-5, 0.0, 0.8267675428835154}, {1e-5, 0.5, 1.229921492014864},  {1e-5, 1.0, 1.0701199362996285},
    {1e-6, 0.0, 0.791994417852888},  {1e-6, 0.5, 1.2309877837655938}, {1e-6, 1.0, 1.1139728495877181},
};

const std::vector<double> kSweep{1e-2, 1e-3, 1e-4, 1e-5};

MassReport mass_of(BlockKind kind, double hbar, double delta) {
    switch (kind) {
        case BlockKind::Elliptic: return mass_elliptic(0, hbar, delta);
        case BlockKind::Hyperbolic: return mass_hyperbolic(0.0, hbar, delta);
        case BlockKind::ComplexHyperbolic: return mass_complex_hyperbolic(0, 0.0, hbar, delta);
        case BlockKind::Regular: return mass_regular(1, hbar, delta);
    }
    return {};
}

}  // namespace

TEST(MassElliptic, GaussianInsideShrinkingCutoff) {
    EXPECT_NEAR(mass_elliptic(0, 1e-4, 0.4).value, 1.0, 1e-3);
    EXPECT_GE(mass_elliptic(3, 1e-4, 0.4).value, 0.99);
}

TEST(MassElliptic, FixedCutoffHoldsAllMass) {
    // chi = 1 - t^2 + O(t^4); the y cutoff enters squared and the eta cutoff
    // once, on Gaussians of variance hbar / 2, so the loss is 3 hbar / (2 eps^2).
    for (double hbar : {1e-4, 1e-6}) EXPECT_NEAR(mass_elliptic(0, hbar, 0.0).value, 1.0, 1e-6) << hbar;
    const double loss = 1.0 - mass_elliptic(0, 1e-2, 0.0).value;
    EXPECT_NEAR(loss, 1.5e-2 / (kSmallScaleEpsilon * kSmallScaleEpsilon), 1e-7);
}

TEST(MassElliptic, MatchesDirectFourierQuadrature) {
    // Strong truncation (r < sqrt(hbar)); the transform of the cut-off
    // Gaussian is computed by Gauss-Legendre panels at every eta node.
    const double hbar = 1e-2, delta = 0.45, eps = 0.3;
    const double r = eps * std::pow(hbar, delta);
    const auto u = [&](double y) { return bump(y / r) * std::pow(kPi * hbar, -0.25) * std::exp(-y * y / (2.0 * hbar)); };
    const auto transform = [&](double eta) {
        return detail::composite_integral([&](double y) { return std::polar(u(y), -y * eta / hbar); }, -r, r, r / 128) /
               std::sqrt(2.0 * kPi * hbar);
    };
    const double oracle =
        detail::composite_integral([&](double eta) { return cplx(bump(eta / r) * std::norm(transform(eta))); }, -r, r,
                                   r / 128)
            .real();
    EXPECT_NEAR(mass_elliptic(0, hbar, delta, eps).value, oracle, 1e-10);
    EXPECT_LT(oracle, 0.5);
}

TEST(MassElliptic, Guards) {
    EXPECT_THROW(mass_elliptic(51, 1e-3, 0.4), RangeError);
    EXPECT_THROW(mass_elliptic(0, 1e-3, 0.6), RangeError);
    EXPECT_THROW(mass_elliptic(0, -1.0, 0.4), RangeError);
}

TEST(MassHyperbolic, MatchesHighPrecisionOracle) {
    for (const auto& c : kHyperbolic) {
        const MassReport r = mass_hyperbolic(c.s, c.hbar, 0.4);
        EXPECT_NEAR(r.value, c.value, 1e-8 * c.value) << "s=" << c.s << " hbar=" << c.hbar;
        EXPECT_LE(r.error_estimate, 1e-8);
    }
}

TEST(MassHyperbolic, GammaAsymptote) {
    EXPECT_NEAR(mass_hyperbolic(0.0, 1e-3, 0.4).asymptote, kPi * 0.2, 1e-14);
    EXPECT_NEAR(mass_hyperbolic(1.0, 1e-3, 0.4).asymptote, 0.0542, 1e-4);
    EXPECT_NEAR(mass_hyperbolic(1.0, 1e-3, 0.4).asymptote, 0.2 * kPi / std::cosh(kPi), 1e-15);
}

TEST(MassHyperbolic, InnerLimitCarriesExponentialFactor) {
    // The inner integral tends to e^{-i pi mu / 2} Gamma(mu), whose squared
    // modulus is e^{pi s} |Gamma(1/2 + is)|^2, so the two asymptotes differ
    // by e^{pi s}.
    for (double s : {0.0, 0.5, 1.0}) {
        const MassReport r = mass_hyperbolic(s, 1e-6, 0.4);
        EXPECT_NEAR(r.mellin_asymptote / r.asymptote, std::exp(kPi * s), 1e-9 * std::exp(kPi * s)) << s;
    }
}

TEST(MassHyperbolic, CriticalDeltaDiagnostic) {
    double previous = 1e300;
    for (double hbar : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        const MassReport r = mass_hyperbolic(0.0, hbar, 0.5);
        EXPECT_EQ(r.asymptote, 0.0);
        // The outer range [hbar^{-delta}, hbar^{delta - 1}] collapses to a point.
        EXPECT_LE(r.value, previous) << hbar;
        EXPECT_LE(r.value * std::abs(std::log(hbar)), 0.5) << hbar;
        previous = r.value;
    }
}

TEST(MassHyperbolic, Guards) {
    EXPECT_THROW(mass_hyperbolic(11.0, 1e-3, 0.4), RangeError);
    EXPECT_THROW(mass_hyperbolic(0.0, 0.2, 0.4), RangeError);
    EXPECT_THROW(mass_hyperbolic(0.0, 1e-3, 0.51), RangeError);
}

TEST(MassComplexHyperbolic, MatchesHighPrecisionOracle) {
    const std::pair<double, double> cases[] = {{1e-2, 0.321222}, {1e-5, 0.271555}, {1e-6, 0.258505}};
    for (const auto& [hbar, value] : cases) {
        EXPECT_NEAR(mass_complex_hyperbolic(0, 0.0, hbar, 0.4).value, value, 1e-5) << hbar;
    }
}

TEST(MassComplexHyperbolic, AsymptoteAndGuards) {
    const MassReport r = mass_complex_hyperbolic(0, 0.0, 1e-5, 0.4);
    EXPECT_NEAR(r.asymptote, 0.2, 1e-15);
    EXPECT_NEAR(r.mellin_asymptote, 0.2, 1e-10);
    EXPECT_THROW(mass_complex_hyperbolic(21, 0.0, 1e-3, 0.4), RangeError);
    EXPECT_THROW(mass_complex_hyperbolic(0, 11.0, 1e-3, 0.4), RangeError);
}

TEST(MassComplexHyperbolic, CriticalDeltaDiagnostic) {
    for (double hbar : {1e-2, 1e-4, 1e-6}) {
        const MassReport r = mass_complex_hyperbolic(0, 0.0, hbar, 0.5);
        EXPECT_LE(r.value * std::abs(std::log(hbar)), 1.0) << hbar;
    }
}

TEST(MassRegular, ZeroModeIsExact) {
    for (double delta : {0.0, 0.2, 0.4}) {
        for (double hbar : {1e-2, 1e-4}) EXPECT_NEAR(mass_regular(0, hbar, delta).value, 1.0, 1e-8);
    }
}

TEST(MassRegular, RateInHbar) {
    const double delta = 0.4;
    std::vector<std::pair<double, double>> samples;
    for (double hbar : {1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5}) {
        const double dev = std::abs(mass_regular(1, hbar, delta).value - 1.0);
        EXPECT_LE(dev, std::pow(hbar, 1.0 - delta)) << hbar;
        samples.emplace_back(1.0 / hbar, dev);
    }
    EXPECT_LE(fit_exponent(samples).exponent, -0.55);
}

TEST(MassInvariants, DeficitBoundedByInverseLog) {
    // Deficits are measured against the limit of the inner integral as
    // written; a single C per kind is fitted on the two largest hbar.
    for (BlockKind kind : {BlockKind::Elliptic, BlockKind::Hyperbolic, BlockKind::ComplexHyperbolic, BlockKind::Regular}) {
        double c = 0.0;
        std::vector<std::pair<double, double>> rest;
        for (double delta : {0.3, 0.4, 0.45}) {
            for (double hbar : kSweep) {
                const MassReport r = mass_of(kind, hbar, delta);
                const double scaled = std::abs(r.value - r.mellin_asymptote) * std::abs(std::log(hbar));
                if (hbar >= 1e-3) {
                    c = std::max(c, scaled);
                } else {
                    rest.emplace_back(hbar, scaled);
                }
            }
        }
        for (const auto& [hbar, scaled] : rest) EXPECT_LE(scaled, 1.5 * c) << to_string(kind) << " hbar=" << hbar;
    }
}

TEST(MassInvariants, AffineInOneMinusTwoDelta) {
    // At fixed small hbar the value is slope * (1 - 2 delta) + O(1 / |log hbar|)
    // with the slope given by the inner limit.
    const double hbar = 1e-6;
    const auto check = [&](auto&& mass, double slope) {
        const double v30 = mass(0.3), v40 = mass(0.4), v45 = mass(0.45);
        const double s1 = (v30 - v40) / 0.2, s2 = (v40 - v45) / 0.1;
        EXPECT_NEAR(s1 / slope, 1.0, 0.2);
        EXPECT_NEAR(s2 / slope, 1.0, 0.2);
        EXPECT_LE(std::abs(v30 - 0.4 * s1), 1.0 / std::abs(std::log(hbar)) * 3.0);
    };
    check([&](double d) { return mass_hyperbolic(0.0, hbar, d).value; }, kPi);
    check([&](double d) { return mass_hyperbolic(1.0, hbar, d).value; }, kPi * std::exp(kPi) / std::cosh(kPi));
    check([&](double d) { return mass_complex_hyperbolic(0, 0.0, hbar, d).value; }, 1.0);
}

TEST(MassInvariants, NonNegativeAndBounded) {
    for (double delta : {0.3, 0.4, 0.45}) {
        for (double hbar : kSweep) {
            for (BlockKind kind :
                 {BlockKind::Elliptic, BlockKind::Hyperbolic, BlockKind::ComplexHyperbolic, BlockKind::Regular}) {
                const MassReport r = mass_of(kind, hbar, delta);
                EXPECT_GE(r.value, 0.0);
                EXPECT_GE(r.asymptote, 0.0);
                EXPECT_LE(r.value, 2.0) << to_string(kind) << " delta=" << delta << " hbar=" << hbar;
            }
        }
    }
}
