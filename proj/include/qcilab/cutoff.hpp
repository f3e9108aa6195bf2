#pragma once

#include <cmath>
#include <vector>

#include "qcilab/error.hpp"

namespace qcilab {

/// The fixed smooth bump exp(1 - 1/(1 - t^2)) on |t| < 1, zero outside.
/// Equals 1 at t = 0 and is non-increasing in |t|.
inline double bump(double t) noexcept {
    const double t2 = t * t;
    if (t2 >= 1.0) return 0.0;
    return std::exp(-t2 / (1.0 - t2));
}

/// Radius scales used by the different cutoff families.
///
/// The microlocalization cutoff lives at a fixed phase-space scale. The
/// small-scale cutoffs in normal-form variables must cover the sqrt(hbar)
/// Gaussian core with room to spare, which needs a wide profile because the
/// bump is not flat at the origin. Tube cutoffs around a projected leaf are
/// measured in arclength on the surface.
inline constexpr double kMicrolocalEpsilon = 0.25;
inline constexpr double kSmallScaleEpsilon = 20.0;
inline constexpr double kTubeEpsilon = 2.0;

/// chi(hbar^{-delta} (x - center) / epsilon) per axis.
struct Cutoff {
    double delta = 0.0;
    std::vector<double> center{0.0};
    double epsilon = kMicrolocalEpsilon;

    Cutoff() = default;
    Cutoff(double delta_, std::vector<double> center_, double epsilon_)
        : delta(delta_), center(std::move(center_)), epsilon(epsilon_) {
        validate();
    }

    void validate() const {
        if (!(delta >= 0.0 && delta < 0.5)) throw RangeError("cutoff delta must lie in [0, 1/2)");
        if (!(epsilon > 0.0)) throw RangeError("cutoff epsilon must be positive");
    }

    /// Support radius per axis at the given hbar.
    double radius(double hbar) const { return epsilon * std::pow(hbar, delta); }

    double operator()(double x, double hbar, std::size_t axis = 0) const {
        const double c = axis < center.size() ? center[axis] : 0.0;
        return bump((x - c) / radius(hbar));
    }
};

/// Integral of the bump over [-1, 1], used for tube-volume estimates.
inline double bump_integral() {
    // 2000-panel midpoint rule; the integrand is C-infinity with all
    // derivatives vanishing at the ends, so this is spectrally accurate.
    constexpr int n = 2000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += bump(-1.0 + (i + 0.5) * 2.0 / n);
    return sum * 2.0 / n;
}

}  // namespace qcilab
