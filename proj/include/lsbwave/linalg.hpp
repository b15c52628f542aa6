#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>

namespace lsbwave {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;

inline constexpr cplx kI{0.0, 1.0};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x, double slack = 0.0) const { return x >= lo - slack && x <= hi + slack; }
};

/// Relative slack used when a coordinate computed by a chain of affine maps
/// should land on an interval endpoint.
inline double coordinate_slack(const Interval& iv) {
    return 1e-12 * std::max({1.0, std::abs(iv.lo), std::abs(iv.hi)});
}

inline bool all_finite(const Mat2& m) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    return true;
}

inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

/// Drops an imaginary part that is rounding noise relative to the real part.
inline cplx truncate_imag(cplx z, double tol) {
    if (std::abs(z.imag()) <= tol * std::max(1.0, std::abs(z.real()))) return {z.real(), 0.0};
    return z;
}

}  // namespace lsbwave
