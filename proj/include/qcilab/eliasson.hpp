#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qcilab/error.hpp"

namespace qcilab {

/// Quadratic form q(z) = z^T M z on R^{2d}, z = (x_1..x_d, xi_1..xi_d).
struct QuadraticHamiltonian {
    Eigen::MatrixXd matrix;

    QuadraticHamiltonian() = default;
    explicit QuadraticHamiltonian(Eigen::MatrixXd m) : matrix(std::move(m)) { validate(); }

    int dim() const { return static_cast<int>(matrix.rows() / 2); }

    void validate() const {
        if (matrix.rows() != matrix.cols() || matrix.rows() % 2 != 0 || matrix.rows() == 0) {
            throw DimensionError("quadratic Hamiltonian needs a square matrix of even size");
        }
        if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, matrix.cwiseAbs().maxCoeff())) {
            throw RangeError("quadratic Hamiltonian matrix is not symmetric");
        }
    }

    double operator()(const Eigen::VectorXd& z) const { return z.dot(matrix * z); }

    static QuadraticHamiltonian zero(int d) { return QuadraticHamiltonian(Eigen::MatrixXd::Zero(2 * d, 2 * d)); }

    /// x_i^2 + xi_i^2.
    static QuadraticHamiltonian elliptic(int d, int i) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * d, 2 * d);
        m(i, i) = 1.0;
        m(d + i, d + i) = 1.0;
        return QuadraticHamiltonian(m);
    }
    /// x_i xi_i.
    static QuadraticHamiltonian hyperbolic(int d, int i) { return bilinear(d, i, d + i, 1.0); }
    /// x_i xi_i + x_j xi_j.
    static QuadraticHamiltonian ch_radial(int d, int i, int j) {
        return QuadraticHamiltonian(hyperbolic(d, i).matrix + hyperbolic(d, j).matrix);
    }
    /// x_i xi_j - x_j xi_i.
    static QuadraticHamiltonian ch_angular(int d, int i, int j) {
        return QuadraticHamiltonian(bilinear(d, i, d + j, 1.0).matrix + bilinear(d, j, d + i, -1.0).matrix);
    }
    /// c * z_a z_b.
    static QuadraticHamiltonian bilinear(int d, int a, int b, double c) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * d, 2 * d);
        if (a == b) {
            m(a, a) = c;
        } else {
            m(a, b) = 0.5 * c;
            m(b, a) = 0.5 * c;
        }
        return QuadraticHamiltonian(m);
    }
};

inline QuadraticHamiltonian operator+(const QuadraticHamiltonian& a, const QuadraticHamiltonian& b) {
    return QuadraticHamiltonian(a.matrix + b.matrix);
}
inline QuadraticHamiltonian operator*(double c, const QuadraticHamiltonian& a) { return QuadraticHamiltonian(c * a.matrix); }

/// Standard symplectic matrix [[0, I], [-I, 0]]; Hamilton's equations read z' = J grad q.
inline Eigen::MatrixXd symplectic_form(int d) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    j.topRightCorner(d, d).setIdentity();
    j.bottomLeftCorner(d, d) = -Eigen::MatrixXd::Identity(d, d);
    return j;
}

/// {q1, q2} = sum_i d_xi q1 d_x q2 - d_x q1 d_xi q2, again a quadratic form.
inline QuadraticHamiltonian poisson_bracket(const QuadraticHamiltonian& q1, const QuadraticHamiltonian& q2) {
    if (q1.matrix.rows() != q2.matrix.rows()) throw DimensionError("poisson_bracket: dimensions differ");
    const Eigen::MatrixXd omega = -symplectic_form(q1.dim());
    const Eigen::MatrixXd c = 2.0 * (q1.matrix * omega * q2.matrix - q2.matrix * omega * q1.matrix);
    return QuadraticHamiltonian(0.5 * (c + c.transpose()));
}

enum class BlockType { Hyperbolic, ComplexHyperbolic, Elliptic };

struct SpectralBlock {
    BlockType type;
    std::vector<std::complex<double>> eigenvalues;
};

struct BlockDecomposition {
    int hyperbolic = 0;
    int complex_hyperbolic = 0;
    int elliptic = 0;
    std::vector<SpectralBlock> blocks;

    int dim() const { return hyperbolic + 2 * complex_hyperbolic + elliptic; }
    bool operator==(const BlockDecomposition& o) const {
        return hyperbolic == o.hyperbolic && complex_hyperbolic == o.complex_hyperbolic && elliptic == o.elliptic;
    }
};

/// Eigenvalues of the Hamiltonian matrix J M.
inline Eigen::VectorXcd hamiltonian_spectrum(const QuadraticHamiltonian& q) {
    const Eigen::MatrixXd a = symplectic_form(q.dim()) * q.matrix;
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    if (es.info() != Eigen::Success) throw ConvergenceError("eigenvalue solver failed", 0.0);
    return es.eigenvalues();
}

/// Group the spectrum of J M into elliptic pairs +-ib, hyperbolic pairs +-a
/// and complex quadruples +-a+-ib.
inline BlockDecomposition classify(const QuadraticHamiltonian& q, double tol = 1e-8) {
    q.validate();
    const Eigen::VectorXcd ev = hamiltonian_spectrum(q);
    const double scale = ev.cwiseAbs().maxCoeff();
    if (scale <= 1e-300) throw DegenerateError("quadratic form is zero");
    std::vector<std::complex<double>> imag, real, cplxs;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const auto l = ev[i];
        if (std::abs(l) <= tol * scale) {
            throw DegenerateError("Hamiltonian matrix has a zero eigenvalue; the quadratic form is degenerate");
        }
        if (std::abs(l.real()) <= tol * std::abs(l)) {
            imag.push_back(l);
        } else if (std::abs(l.imag()) <= tol * std::abs(l)) {
            real.push_back(l);
        } else {
            cplxs.push_back(l);
        }
    }
    if (imag.size() % 2 || real.size() % 2 || cplxs.size() % 4) {
        throw DegenerateError("Hamiltonian spectrum does not split into symplectic blocks");
    }
    BlockDecomposition out;
    const auto by_magnitude = [](auto a, auto b) {
        return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : std::arg(a) < std::arg(b);
    };
    std::sort(imag.begin(), imag.end(), by_magnitude);
    std::sort(real.begin(), real.end(), by_magnitude);
    std::sort(cplxs.begin(), cplxs.end(), by_magnitude);
    for (std::size_t i = 0; i < imag.size(); i += 2) {
        out.blocks.push_back({BlockType::Elliptic, {imag[i], imag[i + 1]}});
        ++out.elliptic;
    }
    for (std::size_t i = 0; i < real.size(); i += 2) {
        out.blocks.push_back({BlockType::Hyperbolic, {real[i], real[i + 1]}});
        ++out.hyperbolic;
    }
    for (std::size_t i = 0; i < cplxs.size(); i += 4) {
        out.blocks.push_back({BlockType::ComplexHyperbolic, {cplxs[i], cplxs[i + 1], cplxs[i + 2], cplxs[i + 3]}});
        ++out.complex_hyperbolic;
    }
    return out;
}

struct CartanCertificate {
    bool is_cartan = false;
    bool commuting = false;
    bool full_span = false;
    bool regular = false;
    double max_bracket = 0.0;
    int span_rank = 0;
    /// Name of the first failed check, empty on success.
    std::string failure;
};

/// Checks that `family` spans a Cartan subalgebra of the quadratic forms:
/// pairwise commuting, linearly independent, and containing a regular
/// element whose Hamiltonian matrix has 2d distinct non-zero eigenvalues.
inline CartanCertificate is_cartan(const std::vector<QuadraticHamiltonian>& family) {
    CartanCertificate cert;
    if (family.empty()) {
        cert.failure = "empty family";
        return cert;
    }
    const int d = family.front().dim();
    for (const auto& q : family) {
        if (q.dim() != d) {
            cert.failure = "dimension mismatch";
            return cert;
        }
    }
    if (static_cast<int>(family.size()) != d) {
        cert.failure = "family size differs from the number of degrees of freedom";
        return cert;
    }
    for (std::size_t i = 0; i < family.size(); ++i) {
        for (std::size_t j = i + 1; j < family.size(); ++j) {
            cert.max_bracket =
                std::max(cert.max_bracket, poisson_bracket(family[i], family[j]).matrix.cwiseAbs().maxCoeff());
        }
    }
    cert.commuting = cert.max_bracket <= 1e-10;

    const Eigen::Index n = family.front().matrix.size();
    Eigen::MatrixXd span(n, static_cast<Eigen::Index>(family.size()));
    for (std::size_t i = 0; i < family.size(); ++i) {
        span.col(static_cast<Eigen::Index>(i)) = family[i].matrix.reshaped();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(span);
    const auto sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) cert.span_rank += sv[i] > 1e-10 * sv[0] ? 1 : 0;
    cert.full_span = cert.span_rank == d;

    // Irrational weights keep the combination away from accidental coincidences.
    Eigen::MatrixXd generic = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    for (std::size_t i = 0; i < family.size(); ++i) generic += std::sqrt(2.0 + 1.37 * i) * family[i].matrix;
    const Eigen::VectorXcd ev = hamiltonian_spectrum(QuadraticHamiltonian(generic));
    const double scale = std::max(1e-300, ev.cwiseAbs().maxCoeff());
    bool regular = scale > 1e-12;
    for (Eigen::Index i = 0; i < ev.size() && regular; ++i) {
        if (std::abs(ev[i]) <= 1e-8 * scale) regular = false;
        for (Eigen::Index j = i + 1; j < ev.size() && regular; ++j) {
            if (std::abs(ev[i] - ev[j]) <= 1e-6 * scale) regular = false;
        }
    }
    cert.regular = regular;
    cert.is_cartan = cert.commuting && cert.full_span && cert.regular;
    if (!cert.commuting) {
        cert.failure = "brackets do not vanish";
    } else if (!cert.full_span) {
        cert.failure = "span is rank deficient";
    } else if (!cert.regular) {
        cert.failure = "no regular element (nilpotent or repeated spectrum)";
    }
    return cert;
}

/// Model generators for a composition: one x_i xi_i per hyperbolic block,
/// the pair (x_i xi_i + x_j xi_j, x_i xi_j - x_j xi_i) per complex-hyperbolic
/// block, one x_i^2 + xi_i^2 per elliptic block, in that coordinate order.
inline std::vector<QuadraticHamiltonian> model_family(int h, int l, int e) {
    const int d = h + 2 * l + e;
    if (h < 0 || l < 0 || e < 0 || d == 0) throw DimensionError("model_family: invalid composition");
    std::vector<QuadraticHamiltonian> fam;
    int i = 0;
    for (int k = 0; k < h; ++k, ++i) fam.push_back(QuadraticHamiltonian::hyperbolic(d, i));
    for (int k = 0; k < l; ++k, i += 2) {
        fam.push_back(QuadraticHamiltonian::ch_radial(d, i, i + 1));
        fam.push_back(QuadraticHamiltonian::ch_angular(d, i, i + 1));
    }
    for (int k = 0; k < e; ++k, ++i) fam.push_back(QuadraticHamiltonian::elliptic(d, i));
    return fam;
}

/// A regular element of the model family with pairwise distinct block frequencies.
inline QuadraticHamiltonian model_hamiltonian(int h, int l, int e) {
    const auto fam = model_family(h, l, e);
    QuadraticHamiltonian q = QuadraticHamiltonian::zero(static_cast<int>(fam.front().dim()));
    std::size_t idx = 0;
    double w = 1.0;
    for (int k = 0; k < h; ++k, w += 0.5) q = q + w * fam[idx++];
    for (int k = 0; k < l; ++k, w += 0.5) {
        q = q + w * fam[idx++];
        q = q + 2.0 * w * fam[idx++];
    }
    for (int k = 0; k < e; ++k, w += 0.5) q = q + w * fam[idx++];
    return q;
}

/// exp(J S) for a random symmetric S with N(0, scale^2) entries; symplectic.
template <class Rng>
Eigen::MatrixXd random_symplectic(int d, Rng& rng, double scale = 0.3) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::MatrixXd s(2 * d, 2 * d);
    for (int i = 0; i < 2 * d; ++i) {
        for (int j = i; j < 2 * d; ++j) {
            s(i, j) = normal(rng);
            s(j, i) = s(i, j);
        }
    }
    const Eigen::MatrixXd a = symplectic_form(d) * s;
    return a.exp();
}

/// q(S z) as a quadratic form.
inline QuadraticHamiltonian conjugate(const QuadraticHamiltonian& q, const Eigen::MatrixXd& s) {
    const Eigen::MatrixXd m = s.transpose() * q.matrix * s;
    return QuadraticHamiltonian(0.5 * (m + m.transpose()));
}

struct MomentRank {
    int rank = 0;
    /// Whether the first `prefix` gradients already span the full rank.
    bool prefix_realizes = false;
};

/// Numerical rank of a set of gradients, singular values below
/// 1e-10 times the largest counted as zero.
inline MomentRank moment_rank(const std::vector<Eigen::VectorXd>& gradients, std::size_t prefix = 0) {
    if (gradients.empty()) throw DimensionError("moment_rank: no gradients");
    const Eigen::Index n = gradients.front().size();
    for (const auto& g : gradients) {
        if (g.size() != n) throw DimensionError("moment_rank: gradients differ in length");
    }
    const auto rank_of = [&](std::size_t count) {
        if (count == 0) return 0;
        Eigen::MatrixXd m(n, static_cast<Eigen::Index>(count));
        for (std::size_t i = 0; i < count; ++i) m.col(static_cast<Eigen::Index>(i)) = gradients[i];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const auto sv = svd.singularValues();
        if (sv.size() == 0 || sv[0] == 0.0) return 0;
        int r = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv[i] > 1e-10 * sv[0] ? 1 : 0;
        return r;
    };
    MomentRank out;
    out.rank = rank_of(gradients.size());
    const std::size_t k = prefix == 0 ? static_cast<std::size_t>(out.rank) : prefix;
    out.prefix_realizes = rank_of(std::min(k, gradients.size())) == out.rank;
    return out;
}

}  // namespace qcilab
