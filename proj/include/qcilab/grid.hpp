#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include "qcilab/error.hpp"

namespace qcilab {

using cplx = std::complex<double>;

/// One coordinate axis of a sampling grid with its quadrature weights.
struct Axis {
    std::vector<double> nodes;
    std::vector<double> weights;
    bool uniform = false;
    double spacing = 0.0;
    /// Domain end points for non-uniform axes; NaN means the outer nodes.
    double lo_bound = std::numeric_limits<double>::quiet_NaN();
    double hi_bound = std::numeric_limits<double>::quiet_NaN();

    std::size_t size() const { return nodes.size(); }
    double origin() const { return nodes.empty() ? 0.0 : nodes.front(); }
    double lower() const {
        if (!std::isnan(lo_bound)) return lo_bound;
        return uniform ? origin() - 0.5 * spacing : nodes.front();
    }
    double upper() const {
        if (!std::isnan(hi_bound)) return hi_bound;
        return uniform ? nodes.back() + 0.5 * spacing : nodes.back();
    }
    /// Largest gap between neighbouring nodes (or to the domain ends).
    double max_gap() const {
        if (uniform) return spacing;
        double g = std::max(nodes.front() - lower(), upper() - nodes.back());
        for (std::size_t i = 1; i < nodes.size(); ++i) g = std::max(g, nodes[i] - nodes[i - 1]);
        return g;
    }

    /// n points origin + i*spacing, each carrying weight `spacing`.
    static Axis uniform_grid(double origin, double spacing, std::size_t n) {
        if (!(spacing > 0.0)) throw RangeError("axis spacing must be positive");
        Axis a;
        a.uniform = true;
        a.spacing = spacing;
        a.nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) a.nodes[i] = origin + static_cast<double>(i) * spacing;
        a.weights.assign(n, spacing);
        return a;
    }

    /// Midpoint nodes on [lo, hi]; none of them hits either end point.
    static Axis midpoint(double lo, double hi, std::size_t n) {
        const double h = (hi - lo) / static_cast<double>(n);
        return uniform_grid(lo + 0.5 * h, h, n);
    }

    /// Symmetric uniform grid of 2*half points straddling `center`, offset
    /// by half a cell so that `center` itself is never sampled.
    static Axis centered(double center, double spacing, std::size_t half) {
        return uniform_grid(center - (static_cast<double>(half) - 0.5) * spacing, spacing, 2 * half);
    }

    static Axis custom(std::vector<double> nodes, std::vector<double> weights,
                       double lo = std::numeric_limits<double>::quiet_NaN(),
                       double hi = std::numeric_limits<double>::quiet_NaN()) {
        if (nodes.size() != weights.size() || nodes.empty()) {
            throw DimensionError("axis nodes and weights must be non-empty and of equal length");
        }
        Axis a;
        a.nodes = std::move(nodes);
        a.weights = std::move(weights);
        a.lo_bound = lo;
        a.hi_bound = hi;
        return a;
    }
};

/// Complex samples on a tensor grid (rank 1 or 2, row-major), carrying the
/// hbar it was generated for and an optional smallest oscillation
/// wavelength used by resolution guards.
class GridFunction {
public:
    GridFunction() = default;

    GridFunction(std::vector<Axis> axes, std::vector<cplx> values, double hbar)
        : axes_(std::move(axes)), values_(std::move(values)), hbar_(hbar) {
        if (axes_.empty() || axes_.size() > 2) throw DimensionError("grid functions have rank 1 or 2");
        std::size_t n = 1;
        for (const auto& a : axes_) n *= a.size();
        if (n != values_.size()) throw DimensionError("grid function value count does not match its axes");
    }

    GridFunction(Axis axis, std::vector<cplx> values, double hbar)
        : GridFunction(std::vector<Axis>{std::move(axis)}, std::move(values), hbar) {}

    std::size_t rank() const { return axes_.size(); }
    std::size_t size() const { return values_.size(); }
    const Axis& axis(std::size_t i = 0) const { return axes_.at(i); }
    const std::vector<Axis>& axes() const { return axes_; }
    double hbar() const { return hbar_; }

    std::vector<cplx>& values() { return values_; }
    const std::vector<cplx>& values() const { return values_; }
    cplx& operator[](std::size_t i) { return values_[i]; }
    const cplx& operator[](std::size_t i) const { return values_[i]; }
    cplx& at(std::size_t i, std::size_t j) { return values_[i * axes_[1].size() + j]; }
    const cplx& at(std::size_t i, std::size_t j) const { return values_[i * axes_[1].size() + j]; }

    /// Quadrature weight of the flat sample index.
    double weight(std::size_t flat) const {
        if (axes_.size() == 1) return measure_scale * axes_[0].weights[flat];
        const std::size_t n1 = axes_[1].size();
        return measure_scale * axes_[0].weights[flat / n1] * axes_[1].weights[flat % n1];
    }

    /// Smallest oscillation wavelength present, 0 when unknown.
    double wavelength = 0.0;
    /// Global factor on all weights; surfaces use it to normalise volume to 1.
    double measure_scale = 1.0;

    bool same_grid(const GridFunction& other) const {
        if (rank() != other.rank()) return false;
        for (std::size_t k = 0; k < rank(); ++k) {
            if (axes_[k].nodes != other.axes_[k].nodes) return false;
        }
        return true;
    }

private:
    std::vector<Axis> axes_;
    std::vector<cplx> values_;
    double hbar_ = 1.0;
};

inline double total_measure(const GridFunction& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u.weight(i);
    return s;
}

/// <u, v> = sum w u conj(v).
inline cplx inner(const GridFunction& u, const GridFunction& v) {
    if (!u.same_grid(v)) throw DimensionError("inner product of functions on different grids");
    cplx s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u.weight(i) * u[i] * std::conj(v[i]);
    return s;
}

inline double l2_norm(const GridFunction& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u.weight(i) * std::norm(u[i]);
    return std::sqrt(s);
}

inline GridFunction normalized(GridFunction u) {
    const double n = l2_norm(u);
    if (!(n > 0.0)) throw RangeError("cannot normalise a zero function");
    for (auto& v : u.values()) v /= n;
    return u;
}

}  // namespace qcilab
