#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "qcilab/cutoff.hpp"
#include "qcilab/error.hpp"
#include "qcilab/fft.hpp"
#include "qcilab/grid.hpp"
#include "qcilab/parallel.hpp"
#include "qcilab/special.hpp"

namespace qcilab {

enum class BlockKind { Elliptic, Hyperbolic, ComplexHyperbolic, Regular };

inline const char* to_string(BlockKind k) {
    switch (k) {
        case BlockKind::Elliptic: return "elliptic";
        case BlockKind::Hyperbolic: return "hyperbolic";
        case BlockKind::ComplexHyperbolic: return "complex_hyperbolic";
        case BlockKind::Regular: return "regular";
    }
    return "?";
}

/// One normal-form factor of a model quasimode. Ratios are the
/// hbar-independent quantities lambda(hbar)/hbar, t_i(hbar)/hbar; only the
/// fields of the active kind are read.
struct BlockSpec {
    BlockKind kind = BlockKind::Regular;
    int elliptic_index = 0;
    double hyperbolic_ratio = 0.0;
    cplx coeff_plus = 1.0;
    cplx coeff_minus = 0.0;
    double ch_radial_ratio = 0.0;
    double ch_angular_ratio = 0.0;
    int ch_angular = 0;
    int regular_index = 0;

    static BlockSpec elliptic(int n) {
        BlockSpec b;
        b.kind = BlockKind::Elliptic;
        b.elliptic_index = n;
        b.validate();
        return b;
    }
    static BlockSpec hyperbolic(double s, cplx c_plus = 1.0, cplx c_minus = 0.0) {
        BlockSpec b;
        b.kind = BlockKind::Hyperbolic;
        b.hyperbolic_ratio = s;
        b.coeff_plus = c_plus;
        b.coeff_minus = c_minus;
        b.validate();
        return b;
    }
    static BlockSpec complex_hyperbolic(double s1, double s2, int k) {
        BlockSpec b;
        b.kind = BlockKind::ComplexHyperbolic;
        b.ch_radial_ratio = s1;
        b.ch_angular_ratio = s2;
        b.ch_angular = k;
        b.validate();
        return b;
    }
    static BlockSpec regular(int m) {
        BlockSpec b;
        b.kind = BlockKind::Regular;
        b.regular_index = m;
        return b;
    }

    /// Configuration-space dimension spanned by the block.
    int dimension() const { return kind == BlockKind::ComplexHyperbolic ? 2 : 1; }

    void validate() const {
        if (kind == BlockKind::Elliptic && (elliptic_index < 0 || elliptic_index > 200)) {
            throw RangeError("elliptic index must lie in [0, 200]");
        }
        if (kind == BlockKind::Hyperbolic) {
            const double n = std::norm(coeff_plus) + std::norm(coeff_minus);
            if (std::abs(n - 1.0) > 1e-12) throw RangeError("|c+|^2 + |c-|^2 must equal 1");
        }
    }

    /// Largest dimensionless frequency carried by the block.
    double max_frequency_ratio() const {
        switch (kind) {
            case BlockKind::Elliptic: return std::sqrt(2.0 * elliptic_index + 1.0);
            case BlockKind::Hyperbolic: return std::max(1.0, std::abs(hyperbolic_ratio));
            case BlockKind::ComplexHyperbolic:
                return std::max({1.0, std::abs(ch_radial_ratio), std::abs(ch_angular_ratio),
                                 static_cast<double>(std::abs(ch_angular))});
            case BlockKind::Regular: return std::max(1.0, static_cast<double>(std::abs(regular_index)));
        }
        return 1.0;
    }
};

/// Ordered product of normal-form blocks.
struct QuasimodeSpec {
    std::vector<BlockSpec> blocks;
    double hbar = 1e-2;

    int count(BlockKind k) const {
        return static_cast<int>(std::count_if(blocks.begin(), blocks.end(), [k](const BlockSpec& b) { return b.kind == k; }));
    }
    /// ell = number of Regular blocks.
    int ell() const { return count(BlockKind::Regular); }
    /// n_total = ell + H + 2L + E.
    int n_total() const {
        int n = 0;
        for (const auto& b : blocks) n += b.dimension();
        return n;
    }
    double max_frequency_ratio() const {
        double r = 1.0;
        for (const auto& b : blocks) r = std::max(r, b.max_frequency_ratio());
        return r;
    }
    void validate() const {
        if (!(hbar > 0.0)) throw RangeError("hbar must be positive");
        if (blocks.empty()) throw DimensionError("quasimode spec has no blocks");
        for (const auto& b : blocks) b.validate();
    }
};

/// Raw model eigenfunction of one block at `point` (length 1, or 2 for
/// the complex-hyperbolic block in polar form (r, theta)).
inline cplx eval_block(const BlockSpec& block, double hbar, std::span<const double> point) {
    if (static_cast<int>(point.size()) != block.dimension()) {
        throw DimensionError(std::string("eval_block: ") + to_string(block.kind) + " block takes " +
                             std::to_string(block.dimension()) + " coordinate(s)");
    }
    const double log_prefactor = 1.0 / std::sqrt(std::abs(std::log(hbar)));
    switch (block.kind) {
        case BlockKind::Elliptic: {
            const double y = point[0];
            return std::pow(hbar, -0.25) * hermite_function(block.elliptic_index, y / std::sqrt(hbar));
        }
        case BlockKind::Hyperbolic: {
            const double y = point[0];
            if (y == 0.0) return 0.0;
            const double ay = std::abs(y);
            const cplx c = y > 0.0 ? block.coeff_plus : block.coeff_minus;
            return log_prefactor * c * std::polar(1.0 / std::sqrt(ay), block.hyperbolic_ratio * std::log(ay));
        }
        case BlockKind::ComplexHyperbolic: {
            const double r = point[0];
            const double theta = point[1];
            if (r <= 0.0) return 0.0;
            return log_prefactor * std::polar(1.0 / r, block.ch_radial_ratio * std::log(r) + block.ch_angular * theta);
        }
        case BlockKind::Regular: return std::polar(1.0, block.regular_index * point[0]);
    }
    return 0.0;
}

/// Complex-hyperbolic block at Cartesian (y1, y2).
inline cplx eval_block_cartesian(const BlockSpec& block, double hbar, double y1, double y2) {
    const double polar[2] = {std::hypot(y1, y2), std::atan2(y2, y1)};
    return eval_block(block, hbar, polar);
}

/// Product of the block values, coordinates consumed in block order.
inline cplx eval_product(const QuasimodeSpec& spec, std::span<const double> point) {
    if (static_cast<int>(point.size()) != spec.n_total()) {
        throw DimensionError("eval_product: point has " + std::to_string(point.size()) + " coordinates, spec needs " +
                             std::to_string(spec.n_total()));
    }
    cplx value = 1.0;
    std::size_t offset = 0;
    for (const auto& b : spec.blocks) {
        const auto d = static_cast<std::size_t>(b.dimension());
        value *= eval_block(b, spec.hbar, point.subspan(offset, d));
        offset += d;
    }
    return value;
}

// ---------------------------------------------------------------------------
// Microlocalization psi = Op_hbar(chi(x) chi(y) chi(xi)) u.

/// Uniform sampling axes for a microlocalization.
struct GridSpec {
    std::vector<Axis> axes;
};

/// Finest spacing allowed for `spec` under `cutoff`.
inline double required_spacing(const QuasimodeSpec& spec, const Cutoff& cutoff) {
    const double by_frequency = spec.hbar / (4.0 * spec.max_frequency_ratio());
    const double by_momentum = kPi * spec.hbar / (2.0 * cutoff.epsilon);
    return std::min(by_frequency, by_momentum);
}

/// Power-of-two grid per configuration axis covering the cutoff support
/// with one extra support width of padding on each side; zero is never a node.
/// The spacing is half the resolution limit so that the result can also be
/// fed to quantize with order-zero symbols.
inline GridSpec microlocal_grid(const QuasimodeSpec& spec, const Cutoff& cutoff) {
    spec.validate();
    const double need = 0.5 * required_spacing(spec, cutoff);
    GridSpec g;
    for (int d = 0; d < spec.n_total(); ++d) {
        const double c = static_cast<std::size_t>(d) < cutoff.center.size() ? cutoff.center[d] : 0.0;
        const double half_width = 2.0 * cutoff.radius(spec.hbar);
        const auto n = std::bit_ceil(static_cast<std::size_t>(std::ceil(2.0 * half_width / need)));
        const double dx = 2.0 * half_width / static_cast<double>(n);
        g.axes.push_back(Axis::centered(c, dx, n / 2));
    }
    return g;
}

namespace detail {

inline void check_microlocal_grid(const QuasimodeSpec& spec, const Cutoff& cutoff, const GridSpec& grid) {
    if (static_cast<int>(grid.axes.size()) != spec.n_total()) throw DimensionError("grid rank does not match the spec");
    if (grid.axes.size() > 2) throw DimensionError("microlocalize supports at most two configuration dimensions");
    const double need = required_spacing(spec, cutoff);
    for (std::size_t d = 0; d < grid.axes.size(); ++d) {
        const Axis& a = grid.axes[d];
        if (!a.uniform) throw ResolutionError("microlocalize needs uniform axes");
        if (a.spacing > need * (1.0 + 1e-12)) {
            throw ResolutionError("grid spacing " + std::to_string(a.spacing) + " exceeds the resolution limit " +
                                  std::to_string(need));
        }
        const double c = d < cutoff.center.size() ? cutoff.center[d] : 0.0;
        const double r = cutoff.radius(spec.hbar);
        if (a.lower() > c - r || a.upper() < c + r) throw ResolutionError("grid does not contain the cutoff support");
    }
}

inline void fft_axis(std::vector<cplx>& data, std::size_t n0, std::size_t n1, int axis, double dx, double hbar,
                     double epsilon) {
    const auto mult = [&](double xi) { return bump(xi / epsilon); };
    if (axis == 1) {
        std::vector<cplx> row(n1);
        for (std::size_t i = 0; i < n0; ++i) {
            std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(i * n1), n1, row.begin());
            auto out = fourier_multiplier(row, dx, hbar, mult);
            std::copy(out.begin(), out.end(), data.begin() + static_cast<std::ptrdiff_t>(i * n1));
        }
    } else {
        std::vector<cplx> col(n0);
        for (std::size_t j = 0; j < n1; ++j) {
            for (std::size_t i = 0; i < n0; ++i) col[i] = data[i * n1 + j];
            auto out = fourier_multiplier(col, dx, hbar, mult);
            for (std::size_t i = 0; i < n0; ++i) data[i * n1 + j] = out[i];
        }
    }
}

}  // namespace detail

/// Samples of the raw product eigenfunction on the grid (Cartesian
/// coordinates; complex-hyperbolic blocks are converted to polar).
inline GridFunction sample_quasimode(const QuasimodeSpec& spec, const GridSpec& grid, Parallelism par = {}) {
    spec.validate();
    if (static_cast<int>(grid.axes.size()) != spec.n_total() || grid.axes.size() > 2) {
        throw DimensionError("sample_quasimode: grid rank must equal the spec dimension (at most 2)");
    }
    const std::size_t n0 = grid.axes[0].size();
    const std::size_t n1 = grid.axes.size() > 1 ? grid.axes[1].size() : 1;
    std::vector<cplx> values(n0 * n1);
    const bool is_ch = spec.blocks.size() == 1 && spec.blocks[0].kind == BlockKind::ComplexHyperbolic;
    parallel_for(n0, par, [&](std::size_t i) {
        for (std::size_t j = 0; j < n1; ++j) {
            if (grid.axes.size() == 1) {
                const double p[1] = {grid.axes[0].nodes[i]};
                values[i] = eval_product(spec, p);
            } else if (is_ch) {
                values[i * n1 + j] =
                    eval_block_cartesian(spec.blocks[0], spec.hbar, grid.axes[0].nodes[i], grid.axes[1].nodes[j]);
            } else {
                const double p[2] = {grid.axes[0].nodes[i], grid.axes[1].nodes[j]};
                values[i * n1 + j] = eval_product(spec, p);
            }
        }
    });
    GridFunction u(grid.axes, std::move(values), spec.hbar);
    u.wavelength = 2.0 * kPi * spec.hbar / spec.max_frequency_ratio();
    return u;
}

/// psi = chi(x) [chi(hbar D) (chi(y) u)], the microlocalized model quasimode.
/// The result is not renormalised; see normalized().
inline GridFunction microlocalize(const QuasimodeSpec& spec, const Cutoff& cutoff, const GridSpec& grid,
                                  Parallelism par = {}) {
    spec.validate();
    cutoff.validate();
    detail::check_microlocal_grid(spec, cutoff, grid);
    GridFunction u = sample_quasimode(spec, grid, par);
    const std::size_t n0 = grid.axes[0].size();
    const std::size_t n1 = grid.axes.size() > 1 ? grid.axes[1].size() : 1;
    const double hbar = spec.hbar;

    auto space_cutoff = [&](std::size_t flat) {
        double w = cutoff(grid.axes[0].nodes[flat / n1], hbar, 0);
        if (grid.axes.size() > 1) w *= cutoff(grid.axes[1].nodes[flat % n1], hbar, 1);
        return w;
    };
    auto& v = u.values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= space_cutoff(k);
    const double eps_xi = cutoff.radius(hbar);
    if (grid.axes.size() == 1) {
        v = fourier_multiplier(v, grid.axes[0].spacing, hbar, [&](double xi) { return bump(xi / eps_xi); });
    } else {
        detail::fft_axis(v, n0, n1, 0, grid.axes[0].spacing, hbar, eps_xi);
        detail::fft_axis(v, n0, n1, 1, grid.axes[1].spacing, hbar, eps_xi);
    }
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= space_cutoff(k);
    return u;
}

inline GridFunction microlocalize(const QuasimodeSpec& spec, const Cutoff& cutoff = {}) {
    return microlocalize(spec, cutoff, microlocal_grid(spec, cutoff));
}

}  // namespace qcilab
