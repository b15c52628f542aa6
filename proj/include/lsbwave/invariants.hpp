#pragma once

#include "lsbwave/errors.hpp"
#include "lsbwave/integrator.hpp"
#include "lsbwave/linalg.hpp"
#include "lsbwave/potential.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace lsbwave {

/// Mixed two-point currents of solutions m (at x) and n (at xbar).
struct MixedCurrents {
    cplx q{};
    cplx q_tilde{};
    double j_m = 0.0;
    double j_n = 0.0;
    int sigma = 1;
};

/// One-point current (1/2i)(psi* psi' - psi*' psi) = Im(psi* psi').
inline double current(const StateVector& s) { return (std::conj(s.value) * s.derivative).imag(); }

/// q = (1/2i)[sigma phi_m(x) phi_n'(xbar) - phi_m'(x) phi_n(xbar)];
/// q_tilde is the same with phi_m conjugated.
inline cplx mixed_current(const StateVector& m_at_x, const StateVector& n_at_xbar, int sigma) {
    return (static_cast<double>(sigma) * m_at_x.value * n_at_xbar.derivative - m_at_x.derivative * n_at_xbar.value) /
           (2.0 * kI);
}

inline MixedCurrents two_point_currents(const StateVector& m_at_x, const StateVector& n_at_xbar, int sigma) {
    const StateVector m_conj{std::conj(m_at_x.value), std::conj(m_at_x.derivative), m_at_x.x};
    return {mixed_current(m_at_x, n_at_xbar, sigma), mixed_current(m_conj, n_at_xbar, sigma), current(m_at_x),
            current(n_at_xbar), sigma};
}

/// | |q~|^2 - |q|^2 - sigma j_m j_n |. Only meaningful for real potentials.
inline double check_relation(const MixedCurrents& c) {
    return std::abs(std::norm(c.q_tilde) - std::norm(c.q) - static_cast<double>(c.sigma) * c.j_m * c.j_n);
}

/// Invariant symmetry-mapping matrix of a basis: phi(xbar) = Q phi(x).
struct QMatrix {
    Mat2 entries = Mat2::Identity();
    Mat2 currents = Mat2::Zero();  // q_{m nbar}, row m, column n
    int sigma = 0;
    cplx trace{};
    cplx discriminant{};
    cplx wronskian_used{};
    std::string diagnostic;  // non-empty when trace/discriminant carried a sizeable imaginary part

    cplx det() const { return entries.determinant(); }
};

inline constexpr double kImagTruncation = 1e-9;

/// Assembles Q = (2i/w) [[-q_21, q_11], [-q_22, q_12]] from the basis at a
/// symmetry-related pair of points.
inline QMatrix q_matrix(const BasisState& at_x, const BasisState& at_xbar, int sigma, int domain = 0) {
    const cplx w = wronskian(at_x[0], at_x[1]);
    const double row1 = std::abs(at_x[0].value) + std::abs(at_x[0].derivative);
    const double row2 = std::abs(at_x[1].value) + std::abs(at_x[1].derivative);
    if (!(std::abs(w) >= 1e-12 * row1 * row2) || w == 0.0)
        throw NumericalError("invariants", domain, "wronskian", "basis degenerate");

    QMatrix out;
    out.sigma = sigma;
    out.wronskian_used = w;
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) out.currents(m, n) = mixed_current(at_x[m], at_xbar[n], sigma);
    const auto& q = out.currents;
    const cplx f = 2.0 * kI / w;
    out.entries << -f * q(1, 0), f * q(0, 0), -f * q(1, 1), f * q(0, 1);

    const cplx tr = f * (q(0, 1) - q(1, 0));
    const cplx disc = 0.25 * tr * tr - static_cast<double>(sigma);
    out.trace = truncate_imag(tr, kImagTruncation);
    out.discriminant = truncate_imag(disc, kImagTruncation);
    if (out.trace.imag() != 0.0 || out.discriminant.imag() != 0.0)
        out.diagnostic = "trace/discriminant imaginary part above " + std::to_string(kImagTruncation) +
                         " (Im tr = " + std::to_string(tr.imag()) + ")";
    return out;
}

/// Values Q * (phi_1(x), phi_2(x)).
inline Vec2 map_basis(const QMatrix& q, const BasisState& at_x) {
    return q.entries * Vec2(at_x[0].value, at_x[1].value);
}

/// Full mapped state at xbar; derivatives pick up the factor sigma.
inline BasisState map_basis_state(const Mat2& q, int sigma, const BasisState& at_x, double xbar) {
    const Vec2 v = q * Vec2(at_x[0].value, at_x[1].value);
    const Vec2 d = static_cast<double>(sigma) * (q * Vec2(at_x[0].derivative, at_x[1].derivative));
    return {StateVector{v(0), d(0), xbar}, StateVector{v(1), d(1), xbar}};
}

struct InvarianceReport {
    double max_deviation = 0.0;
    Mat2 mean = Mat2::Zero();    // q_{m nbar} averaged over the sampled pairs
    Eigen::Matrix2d spread = Eigen::Matrix2d::Zero();
    int pairs = 0;
};

/// Samples q_{m nbar}(x, F(x)) over the region where the domain transform
/// applies, using a basis integrated across the whole domain.
inline InvarianceReport check_invariance(const PotentialSpec& p, const DomainSpec& d, double energy, int n_pairs,
                                         double tol = 1e-10) {
    if (!d.symmetric()) throw InputError("invariants", d.index, "domain", "domain has no declared symmetry");
    if (n_pairs < 2) throw InputError("invariants", d.index, "n_pairs", "need at least 2 pairs");
    const auto basis = integrate_span(p, energy, d.bounds, unit_initial_conditions(d.bounds.lo), tol);
    const Interval region = transform_region(d);

    std::array<std::array<double, 4>, 4> range{};  // per (m,n): min re, max re, min im, max im
    for (auto& r : range) r = {1e300, -1e300, 1e300, -1e300};
    InvarianceReport rep;
    rep.pairs = n_pairs;
    for (int i = 0; i < n_pairs; ++i) {
        const double x = region.lo + region.length() * i / (n_pairs - 1);
        const double xbar = std::clamp(transform_point(d.transform, x), d.bounds.lo, d.bounds.hi);
        const auto bx = basis.eval(x);
        const auto bxb = basis.eval(xbar);
        for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n) {
                const cplx q = mixed_current(bx[m], bxb[n], d.sigma());
                auto& r = range[2 * m + n];
                r[0] = std::min(r[0], q.real());
                r[1] = std::max(r[1], q.real());
                r[2] = std::min(r[2], q.imag());
                r[3] = std::max(r[3], q.imag());
                rep.mean(m, n) += q / static_cast<double>(n_pairs);
            }
    }
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
            const auto& r = range[2 * m + n];
            rep.spread(m, n) = std::hypot(r[1] - r[0], r[3] - r[2]);
            rep.max_deviation = std::max(rep.max_deviation, rep.spread(m, n));
        }
    return rep;
}

}  // namespace lsbwave
