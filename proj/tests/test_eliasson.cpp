#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qcilab/eliasson.hpp"
#include "qcilab/error.hpp"
#include "qcilab/special.hpp"

using namespace qcilab;

namespace {

using Q = QuadraticHamiltonian;

// {f, g} = sum_i d_xi f d_x g - d_x f d_xi g from the gradients 2 M z.
double bracket_at(const Q& f, const Q& g, const Eigen::VectorXd& z) {
    const int d = f.dim();
    const Eigen::VectorXd gf = 2.0 * f.matrix * z, gg = 2.0 * g.matrix * z;
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += gf[d + i] * gg[i] - gf[i] * gg[d + i];
    return s;
}

Q poly1(double xx, double xp, double pp) {
    Eigen::Matrix2d m;
    m << xx, 0.5 * xp, 0.5 * xp, pp;
    return Q(m);
}

}  // namespace

TEST(PoissonBracket, OscillatorWithDilation) {
    const Q osc = Q::elliptic(1, 0);
    const Q dil = Q::hyperbolic(1, 0);
    const Q b = poisson_bracket(osc, dil);
    // d_xi(x^2 + xi^2) d_x(x xi) - d_x(x^2 + xi^2) d_xi(x xi) = 2 xi^2 - 2 x^2.
    EXPECT_LT((b.matrix - poly1(-2.0, 0.0, 2.0).matrix).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GT(b.matrix.norm(), 1.0);
}

TEST(PoissonBracket, AgreesWithGradientFormula) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + trial % 3;
        Eigen::MatrixXd a(2 * d, 2 * d), c(2 * d, 2 * d);
        for (int i = 0; i < 2 * d; ++i) {
            for (int j = 0; j < 2 * d; ++j) {
                a(i, j) = n(rng);
                c(i, j) = n(rng);
            }
        }
        const Q f(0.5 * (a + a.transpose())), g(0.5 * (c + c.transpose()));
        const Q b = poisson_bracket(f, g);
        for (int k = 0; k < 5; ++k) {
            Eigen::VectorXd z(2 * d);
            for (int i = 0; i < 2 * d; ++i) z[i] = n(rng);
            EXPECT_NEAR(b(z), bracket_at(f, g, z), 1e-11 * (1.0 + std::abs(b(z))));
        }
    }
}

TEST(PoissonBracket, SelfAndDisjoint) {
    const Q q = Q::elliptic(2, 0) + 0.7 * Q::hyperbolic(2, 1) + Q::bilinear(2, 0, 3, 0.4);
    EXPECT_EQ(poisson_bracket(q, q).matrix.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(poisson_bracket(Q::elliptic(2, 0), Q::hyperbolic(2, 1)).matrix.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(poisson_bracket(Q::elliptic(1, 0), Q::elliptic(2, 0)), DimensionError);
}

TEST(QuadraticHamiltonian, Validation) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
    m(0, 1) = 1.0;
    EXPECT_THROW(Q{m}, RangeError);
    EXPECT_THROW(Q{Eigen::MatrixXd::Identity(3, 3)}, DimensionError);
}

TEST(Classify, StandardOneDegreeOfFreedom) {
    EXPECT_EQ(classify(Q::elliptic(1, 0)), (BlockDecomposition{0, 0, 1, {}}));
    EXPECT_EQ(classify(Q::hyperbolic(1, 0)), (BlockDecomposition{1, 0, 0, {}}));
    const auto spec = hamiltonian_spectrum(Q::hyperbolic(1, 0));
    // x xi = z^T M z with M = [[0, 1/2], [1/2, 0]]; J M has eigenvalues +-1/2.
    EXPECT_NEAR(std::abs(spec[0].real()), 0.5, 1e-14);
    EXPECT_NEAR(spec[0].imag(), 0.0, 1e-14);
}

TEST(Classify, ComplexQuadrupleRoundTrip) {
    const Q q = 1.0 * Q::ch_radial(2, 0, 1) + 2.0 * Q::ch_angular(2, 0, 1);
    const auto ev = hamiltonian_spectrum(q);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        EXPECT_NEAR(std::abs(ev[i].real()), 0.5, 1e-12);
        EXPECT_NEAR(std::abs(ev[i].imag()), 1.0, 1e-12);
    }
    const BlockDecomposition b = classify(q);
    EXPECT_EQ(b, (BlockDecomposition{0, 1, 0, {}}));
    ASSERT_EQ(b.blocks.size(), 1u);
    EXPECT_EQ(b.blocks[0].eigenvalues.size(), 4u);
}

TEST(Classify, RejectsDegenerateForms) {
    EXPECT_THROW(classify(Q::zero(2)), DegenerateError);
    EXPECT_THROW(classify(Q::bilinear(1, 0, 0, 1.0)), DegenerateError);
    EXPECT_THROW(classify(Q::elliptic(2, 0)), DegenerateError);
}

TEST(Classify, InvariantUnderSymplecticConjugation) {
    std::mt19937_64 rng(20240601);
    const int compositions[][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}, {2, 0, 1}, {0, 2, 0}};
    for (const auto& c : compositions) {
        const Q q = model_hamiltonian(c[0], c[1], c[2]);
        const BlockDecomposition expected = classify(q);
        EXPECT_EQ(expected, (BlockDecomposition{c[0], c[1], c[2], {}}));
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::MatrixXd s = random_symplectic(q.dim(), rng);
            const Eigen::MatrixXd j = symplectic_form(q.dim());
            ASSERT_LT((s.transpose() * j * s - j).cwiseAbs().maxCoeff(), 1e-10);
            const BlockDecomposition got = classify(conjugate(q, s));
            EXPECT_EQ(got, expected) << c[0] << c[1] << c[2] << " trial " << trial;
            EXPECT_EQ(got.dim(), q.dim());
        }
    }
}

TEST(IsCartan, StandardFamilies) {
    for (int h = 0; h <= 4; ++h) {
        for (int l = 0; 2 * l <= 4 - h; ++l) {
            for (int e = 0; h + 2 * l + e <= 4; ++e) {
                if (h + 2 * l + e == 0) continue;
                const CartanCertificate cert = is_cartan(model_family(h, l, e));
                EXPECT_TRUE(cert.is_cartan) << h << l << e << ": " << cert.failure;
                EXPECT_EQ(classify(model_hamiltonian(h, l, e)).dim(), h + 2 * l + e);
            }
        }
    }
    EXPECT_TRUE(is_cartan({Q::elliptic(2, 0), Q::hyperbolic(2, 1)}).is_cartan);
}

TEST(IsCartan, Counterexamples) {
    const CartanCertificate noncommuting = is_cartan({Q::hyperbolic(2, 0), Q::bilinear(2, 0, 0, 1.0)});
    EXPECT_FALSE(noncommuting.is_cartan);
    EXPECT_FALSE(noncommuting.commuting);
    EXPECT_EQ(noncommuting.failure, "brackets do not vanish");
    // {x xi, x^2} = x * 2x.
    EXPECT_NEAR(noncommuting.max_bracket, 2.0, 1e-14);

    const CartanCertificate repeated = is_cartan({Q::elliptic(2, 0), Q::elliptic(2, 0)});
    EXPECT_FALSE(repeated.is_cartan);
    EXPECT_EQ(repeated.failure, "span is rank deficient");
    EXPECT_EQ(repeated.span_rank, 1);

    const CartanCertificate nilpotent = is_cartan({Q::bilinear(2, 0, 0, 1.0), Q::hyperbolic(2, 1)});
    EXPECT_FALSE(nilpotent.is_cartan);
    EXPECT_TRUE(nilpotent.commuting);
    EXPECT_TRUE(nilpotent.full_span);
    EXPECT_FALSE(nilpotent.regular);

    EXPECT_FALSE(is_cartan({Q::elliptic(2, 0)}).is_cartan);
    EXPECT_FALSE(is_cartan({}).is_cartan);
    EXPECT_FALSE(is_cartan({Q::elliptic(1, 0), Q::elliptic(2, 0)}).is_cartan);
}

TEST(IsCartan, InvariantUnderConjugation) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd s = random_symplectic(4, rng);
        std::vector<Q> fam;
        for (const auto& q : model_family(1, 1, 1)) fam.push_back(conjugate(q, s));
        EXPECT_TRUE(is_cartan(fam).is_cartan) << trial;
    }
}

TEST(MomentRank, Basics) {
    EXPECT_EQ(moment_rank({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}).rank, 2);
    const MomentRank r = moment_rank({Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(2, 0, 0), Eigen::Vector3d(0, 0, 0)});
    EXPECT_EQ(r.rank, 1);
    EXPECT_TRUE(r.prefix_realizes);
    EXPECT_FALSE(moment_rank({Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 1)}, 1).prefix_realizes);
    EXPECT_EQ(moment_rank({Eigen::Vector2d(0, 0)}).rank, 0);
    EXPECT_THROW(moment_rank({}), DimensionError);
    EXPECT_THROW(moment_rank({Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)}), DimensionError);
}

TEST(MomentRank, ClairautIntegralAtTheEquator) {
    // p1 = |xi| = sqrt(xi_r^2 + xi_theta^2 / a(r)^2), p2 = xi_theta on the
    // surface with profile a = sin r, at the equatorial covector.
    const auto p1 = [](const Eigen::Vector4d& z) {
        const double a = std::sin(z[0]);
        return std::sqrt(z[2] * z[2] + z[3] * z[3] / (a * a));
    };
    const auto p2 = [](const Eigen::Vector4d& z) { return z[3]; };
    const auto gradient = [](auto&& f, const Eigen::Vector4d& z) {
        Eigen::VectorXd g(4);
        for (int i = 0; i < 4; ++i) {
            Eigen::Vector4d e = Eigen::Vector4d::Zero();
            e[i] = 1e-6;
            g[i] = (f(z + e) - f(z - e)) / 2e-6;
        }
        return g;
    };
    const Eigen::Vector4d equator(kPi / 2.0, 0.3, 0.0, 1.0);
    const Eigen::VectorXd g1 = gradient(p1, equator), g2 = gradient(p2, equator);
    // Symbolic gradient: (0, 0, 0, 1 / a(r0)) = (0, 0, 0, 1).
    EXPECT_NEAR((g1 - Eigen::Vector4d(0, 0, 0, 1)).norm(), 0.0, 1e-8);
    // Finite differences leave O(1e-10) noise; round to the rank threshold scale.
    const auto clean = [](Eigen::VectorXd v) {
        for (auto& x : v) x = std::abs(x) < 1e-7 ? 0.0 : x;
        return v;
    };
    EXPECT_EQ(moment_rank({clean(g1), clean(g2)}).rank, 1);
    const Eigen::Vector4d off(1.2, 0.3, 0.4, 0.8);
    EXPECT_EQ(moment_rank({clean(gradient(p1, off)), clean(gradient(p2, off))}).rank, 2);
}
