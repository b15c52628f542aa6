#pragma once

#include "lsbwave/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace lsbwave {

/// Cubic interpolating spline with clamped (prescribed first-derivative)
/// end conditions. When end slopes are not given they are taken from the
/// cubic through the four outermost samples on each side.
class ClampedCubicSpline {
public:
    ClampedCubicSpline() = default;

    ClampedCubicSpline(std::vector<double> x, std::vector<double> y,
                       std::optional<std::pair<double, double>> end_slopes = std::nullopt)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n)
            throw InputError("potential", 0, "samples", "sample table needs >= 2 points and matching x/v sizes");
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (!(x_[i + 1] > x_[i]))
                throw InputError("potential", 0, "samples", "sample positions must be strictly increasing");
        for (double v : y_)
            if (!std::isfinite(v)) throw InputError("potential", 0, "samples", "sample values must be finite");

        const auto [s0, sn] = end_slopes ? *end_slopes : std::pair{edge_slope(false), edge_slope(true)};
        solve_moments(s0, sn);
    }

    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }
    const std::vector<double>& knots() const { return x_; }
    const std::vector<double>& values() const { return y_; }

    double value(double x) const {
        const auto [i, a, b, h] = locate(x);
        return m_[i] * a * a * a / (6.0 * h) + m_[i + 1] * b * b * b / (6.0 * h) +
               (y_[i] / h - m_[i] * h / 6.0) * a + (y_[i + 1] / h - m_[i + 1] * h / 6.0) * b;
    }

    double slope(double x) const {
        const auto [i, a, b, h] = locate(x);
        return -m_[i] * a * a / (2.0 * h) + m_[i + 1] * b * b / (2.0 * h) - (y_[i] / h - m_[i] * h / 6.0) +
               (y_[i + 1] / h - m_[i + 1] * h / 6.0);
    }

private:
    struct Segment {
        std::size_t i;
        double a;  // distance to right knot
        double b;  // distance from left knot
        double h;
    };

    Segment locate(double x) const {
        x = std::clamp(x, x_.front(), x_.back());
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        i = std::min(i, x_.size() - 2);
        const double h = x_[i + 1] - x_[i];
        return {i, x_[i + 1] - x, x - x_[i], h};
    }

    // Derivative at the end knot of the interpolating polynomial through the
    // (up to) four outermost samples.
    double edge_slope(bool right) const {
        const std::size_t n = x_.size();
        const std::size_t m = std::min<std::size_t>(4, n);
        std::vector<double> xs(m), ys(m);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t k = right ? n - 1 - j : j;
            xs[j] = x_[k];
            ys[j] = y_[k];
        }
        double d = 0.0;
        double l0 = 0.0;
        for (std::size_t k = 1; k < m; ++k) l0 += 1.0 / (xs[0] - xs[k]);
        d += ys[0] * l0;
        for (std::size_t j = 1; j < m; ++j) {
            double num = 1.0, den = 1.0;
            for (std::size_t k = 0; k < m; ++k) {
                if (k == j) continue;
                den *= xs[j] - xs[k];
                if (k != 0) num *= xs[0] - xs[k];
            }
            d += ys[j] * num / den;
        }
        return d;
    }

    void solve_moments(double s0, double sn) {
        const std::size_t n = x_.size();
        std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0), rhs(n, 0.0);
        auto h = [&](std::size_t i) { return x_[i + 1] - x_[i]; };
        auto secant = [&](std::size_t i) { return (y_[i + 1] - y_[i]) / h(i); };

        diag[0] = 2.0 * h(0);
        sup[0] = h(0);
        rhs[0] = 6.0 * (secant(0) - s0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            sub[i] = h(i - 1);
            diag[i] = 2.0 * (h(i - 1) + h(i));
            sup[i] = h(i);
            rhs[i] = 6.0 * (secant(i) - secant(i - 1));
        }
        sub[n - 1] = h(n - 2);
        diag[n - 1] = 2.0 * h(n - 2);
        rhs[n - 1] = 6.0 * (sn - secant(n - 2));

        // Thomas algorithm; the system is strictly diagonally dominant.
        for (std::size_t i = 1; i < n; ++i) {
            const double w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m_.assign(n, 0.0);
        m_[n - 1] = rhs[n - 1] / diag[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];
    }

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;  // second derivatives at the knots
};

}  // namespace lsbwave
