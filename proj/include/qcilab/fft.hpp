#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "qcilab/grid.hpp"
#include "qcilab/special.hpp"

namespace qcilab {

/// Momentum sample xi_k = hbar * 2 pi k / (n dx) for FFT bin k (wrapped to
/// the symmetric range).
inline double fft_momentum(std::size_t k, std::size_t n, double dx, double hbar) {
    const auto signed_k = static_cast<double>(k < (n + 1) / 2 ? static_cast<long long>(k)
                                                              : static_cast<long long>(k) - static_cast<long long>(n));
    return hbar * 2.0 * kPi * signed_k / (static_cast<double>(n) * dx);
}

/// Largest momentum representable on a grid of spacing dx.
inline double nyquist_momentum(double dx, double hbar) { return kPi * hbar / dx; }

/// Apply the Fourier multiplier g(hbar D) to periodic samples with spacing dx.
template <class Multiplier>
std::vector<cplx> fourier_multiplier(const std::vector<cplx>& u, double dx, double hbar, Multiplier&& g) {
    Eigen::FFT<double> fft;
    std::vector<cplx> spec;
    fft.fwd(spec, u);
    const std::size_t n = u.size();
    for (std::size_t k = 0; k < n; ++k) spec[k] *= g(fft_momentum(k, n, dx, hbar));
    std::vector<cplx> out;
    fft.inv(out, spec);
    return out;
}

/// Unitary hbar-Fourier transform (2 pi hbar)^{-1/2} int e^{-i x xi / hbar} u(x) dx
/// of a compactly supported rank-1 grid function, returned on the ascending
/// momentum grid with spacing 2 pi hbar / (n dx).
inline GridFunction hbar_fourier_transform(const GridFunction& u) {
    if (u.rank() != 1 || !u.axis().uniform) throw DimensionError("hbar_fourier_transform needs a uniform rank-1 grid");
    const std::size_t n = u.size();
    const double dx = u.axis().spacing;
    const double hbar = u.hbar();
    const double x0 = u.axis().origin();
    Eigen::FFT<double> fft;
    std::vector<cplx> spec;
    fft.fwd(spec, u.values());
    const double dxi = 2.0 * kPi * hbar / (static_cast<double>(n) * dx);
    const std::size_t shift = n / 2;
    std::vector<cplx> out(n);
    const double scale = dx / std::sqrt(2.0 * kPi * hbar);
    for (std::size_t k = 0; k < n; ++k) {
        const double xi = fft_momentum(k, n, dx, hbar);
        const std::size_t pos = (k + shift) % n;
        out[pos] = scale * spec[k] * std::polar(1.0, -x0 * xi / hbar);
    }
    const double xi_min = -static_cast<double>(shift) * dxi;
    GridFunction result(Axis::uniform_grid(xi_min, dxi, n), std::move(out), hbar);
    return result;
}

}  // namespace qcilab
