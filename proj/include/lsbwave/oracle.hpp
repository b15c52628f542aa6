#pragma once

#include "lsbwave/errors.hpp"
#include "lsbwave/linalg.hpp"
#include "lsbwave/potential.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace lsbwave::oracle {

struct PsiSample {
    double x = 0.0;
    cplx psi{};
};

struct OracleResult {
    double energy = 0.0;
    double k_left = 0.0, k_right = 0.0;
    cplx r{}, t{};
    double R = 0.0, T = 0.0;
    std::vector<PsiSample> samples;  // psi at the accepted steps, increasing x
    std::size_t steps = 0;
};

namespace detail {

using State = std::array<double, 4>;  // re psi, im psi, re psi', im psi'

inline double wavenumber(double energy, double lead, const char* side) {
    if (!(energy > lead))
        throw InputError("oracle", 0, std::string("lead ") + side, "closed channel: energy <= lead potential");
    return std::sqrt(2.0 * (energy - lead));
}

/// Breakpoints of the potential: every domain and cell boundary.
inline std::vector<double> breakpoints(const PotentialSpec& p) {
    std::vector<double> out{p.region().lo};
    for (const auto& d : p.domains())
        for (int l = 1; l <= d.cell_count; ++l) out.push_back(cell_bounds(d, l).hi);
    return out;
}

/// Integrates psi'' = 2 (V - E) psi piecewise between breakpoints, from
/// `start` at one end of the region to the other.
inline std::size_t propagate(const PotentialSpec& p, double energy, State& y, bool backward, double tol,
                             std::vector<PsiSample>* samples) {
    namespace ode = boost::numeric::odeint;
    const auto cuts = breakpoints(p);
    std::size_t steps = 0;
    auto record = [&](const State& s, double x) {
        if (samples && (samples->empty() || samples->back().x != x)) samples->push_back({x, cplx(s[0], s[1])});
    };
    const std::size_t n = cuts.size() - 1;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = backward ? n - 1 - k : k;
        const double lo = cuts[i], hi = cuts[i + 1];
        const int d = p.locate_domain(0.5 * (lo + hi));
        const auto& dom = p.domain(d);
        const int l = locate_cell(dom, 0.5 * (lo + hi));
        auto rhs = [&](const State& s, State& ds, double x) {
            const double a = 2.0 * (cell_potential(dom, l, x) - energy);
            ds[0] = s[2];
            ds[1] = s[3];
            ds[2] = a * s[0];
            ds[3] = a * s[1];
        };
        auto stepper = ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<State>());
        const double h0 = (backward ? -1.0 : 1.0) * std::min(1e-3, hi - lo);
        steps += ode::integrate_adaptive(stepper, rhs, y, backward ? hi : lo, backward ? lo : hi, h0,
                                         [&](const State& s, double x) { record(s, x); });
        for (double v : y)
            if (!std::isfinite(v)) throw NumericalError("oracle", d, "solution", "direct integration overflowed");
    }
    if (samples && backward) std::reverse(samples->begin(), samples->end());
    return steps;
}

}  // namespace detail

/// Single pass across the whole region from a purely transmitted wave at x_N
/// back to x_0, where r and t are read off.
inline OracleResult direct_scatter(const PotentialSpec& p, double energy, double tol = 1e-12) {
    OracleResult out;
    out.energy = energy;
    out.k_left = detail::wavenumber(energy, p.lead_left(), "left");
    out.k_right = detail::wavenumber(energy, p.lead_right(), "right");
    const double x0 = p.region().lo, xn = p.region().hi;
    const cplx psi_n = std::exp(kI * out.k_right * xn);
    const cplx dpsi_n = kI * out.k_right * psi_n;
    detail::State y{psi_n.real(), psi_n.imag(), dpsi_n.real(), dpsi_n.imag()};
    out.steps = detail::propagate(p, energy, y, true, tol, &out.samples);

    const cplx psi(y[0], y[1]), dpsi(y[2], y[3]);
    const double k = out.k_left;
    const cplx a_plus = 0.5 * std::exp(-kI * k * x0) * (psi + dpsi / (kI * k));
    const cplx a_minus = 0.5 * std::exp(kI * k * x0) * (psi - dpsi / (kI * k));
    out.t = 1.0 / a_plus;
    out.r = a_minus / a_plus;
    out.R = std::norm(out.r);
    out.T = out.k_right / out.k_left * std::norm(out.t);
    return out;
}

struct Piece {
    double width = 0.0;
    double value = 0.0;
};

/// Exact transfer of (psi, psi') across a constant piece; the linear branch
/// covers E = V.
inline Eigen::Matrix2cd constant_piece_transfer(double width, double value, double energy) {
    const double k2 = 2.0 * (energy - value);
    Eigen::Matrix2cd m;
    if (std::abs(k2) * width * width < 1e-14) {
        m << 1.0, width, k2 * width, 1.0;
        return m;
    }
    const cplx k = std::sqrt(cplx(k2, 0.0));
    const cplx c = std::cos(k * width), s = std::sin(k * width);
    m << c, s / k, -k * s, c;
    return m;
}

/// Closed-form scattering by a sequence of constant pieces starting at x0.
inline OracleResult analytic_rectangular(const std::vector<Piece>& pieces, double energy, double lead_left = 0.0,
                                         double lead_right = 0.0, double x0 = 0.0) {
    if (pieces.empty()) throw InputError("oracle", 0, "pieces", "at least one piece is required");
    double xn = x0;
    Eigen::Matrix2cd total = Eigen::Matrix2cd::Identity();
    for (const auto& pc : pieces) {
        if (!(pc.width > 0.0)) throw InputError("oracle", 0, "pieces", "piece widths must be > 0");
        total = constant_piece_transfer(pc.width, pc.value, energy) * total;
        xn += pc.width;
    }
    OracleResult out;
    out.energy = energy;
    out.k_left = detail::wavenumber(energy, lead_left, "left");
    out.k_right = detail::wavenumber(energy, lead_right, "right");
    const cplx psi_n = std::exp(kI * out.k_right * xn);
    const Eigen::Vector2cd end(psi_n, kI * out.k_right * psi_n);
    const Eigen::Vector2cd start = total.inverse() * end;
    const double k = out.k_left;
    const cplx a_plus = 0.5 * std::exp(-kI * k * x0) * (start(0) + start(1) / (kI * k));
    const cplx a_minus = 0.5 * std::exp(kI * k * x0) * (start(0) - start(1) / (kI * k));
    out.t = 1.0 / a_plus;
    out.r = a_minus / a_plus;
    out.R = std::norm(out.r);
    out.T = out.k_right / out.k_left * std::norm(out.t);
    return out;
}

/// Per-cell pieces of a potential whose profiles are all constant.
inline std::vector<Piece> constant_pieces(const PotentialSpec& p) {
    std::vector<Piece> out;
    for (const auto& d : p.domains()) {
        const auto* c = std::get_if<profile::Constant>(&d.first_cell_profile.variant());
        if (d.sampled_profile || !c)
            throw InputError("oracle", d.index, "profile", "analytic oracle needs constant profiles");
        for (int l = 1; l <= d.cell_count; ++l) out.push_back({cell_bounds(d, l).length(), c->value});
    }
    return out;
}

enum class Boundary { Dirichlet, Decaying };

/// Mismatch at x_N of the solution started from the left boundary condition
/// and integrated forward in one pass.
inline double direct_bound_function(const PotentialSpec& p, double energy, Boundary bc, double tol = 1e-11) {
    detail::State y{};
    double kl = 0.0, kr = 0.0;
    if (bc == Boundary::Dirichlet) {
        y = {0.0, 0.0, 1.0, 0.0};
    } else {
        if (!(energy < p.lead_left() && energy < p.lead_right()))
            throw InputError("oracle", 0, "energy", "decaying leads need energy below both leads");
        kl = std::sqrt(2.0 * (p.lead_left() - energy));
        kr = std::sqrt(2.0 * (p.lead_right() - energy));
        y = {1.0, 0.0, kl, 0.0};
    }
    detail::propagate(p, energy, y, false, tol, nullptr);
    return bc == Boundary::Dirichlet ? y[0] : y[2] + kr * y[0];
}

/// Bound-state energies by scanning `n_scan` points and bisecting sign changes.
inline std::vector<double> direct_bound_states(const PotentialSpec& p, Interval range, Boundary bc, int n_scan,
                                               double rel_tol = 1e-13) {
    if (n_scan < 2) throw InputError("oracle", 0, "n_scan", "need at least 2 scan points");
    auto f = [&](double e) { return direct_bound_function(p, e, bc); };
    std::vector<double> out;
    double e_prev = range.lo, f_prev = f(e_prev);
    if (f_prev == 0.0) out.push_back(e_prev);
    for (int i = 1; i < n_scan; ++i) {
        const double e = range.lo + range.length() * i / (n_scan - 1);
        const double fe = f(e);
        if (fe == 0.0) {
            out.push_back(e);
        } else if (f_prev != 0.0 && (f_prev < 0.0) != (fe < 0.0)) {
            auto done = [&](double a, double b) {
                return std::abs(b - a) <= rel_tol * std::max({std::abs(a), std::abs(b), 1e-3});
            };
            const auto [a, b] = boost::math::tools::bisect(f, e_prev, e, done);
            out.push_back(0.5 * (a + b));
        }
        e_prev = e;
        f_prev = fe;
    }
    return out;
}

/// Half trace of the one-cell monodromy matrix of a translation domain, the
/// quantity cos(kL) of the dispersion relation.
inline double monodromy_half_trace(const PotentialSpec& p, int d, double energy, double tol = 1e-12) {
    namespace ode = boost::numeric::odeint;
    const auto& dom = p.domain(d);
    const Interval c = cell_bounds(dom, 1);
    auto rhs = [&](const std::array<double, 2>& s, std::array<double, 2>& ds, double x) {
        ds[0] = s[1];
        ds[1] = 2.0 * (cell_potential(dom, 1, x) - energy) * s[0];
    };
    std::array<double, 2> u{1.0, 0.0}, v{0.0, 1.0};
    const double h0 = std::min(1e-3, c.length());
    ode::integrate_adaptive(ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<std::array<double, 2>>()), rhs, u,
                            c.lo, c.hi, h0);
    ode::integrate_adaptive(ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<std::array<double, 2>>()), rhs, v,
                            c.lo, c.hi, h0);
    return 0.5 * (u[0] + v[1]);
}

}  // namespace lsbwave::oracle
