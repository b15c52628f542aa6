#pragma once

#include "lsbwave/errors.hpp"
#include "lsbwave/integrator.hpp"
#include "lsbwave/invariants.hpp"
#include "lsbwave/linalg.hpp"
#include "lsbwave/potential.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>

namespace lsbwave {

enum class DomainClass { Parity, BlochPropagating, BlochEvanescent, Degenerate, Unsymmetric };

inline const char* to_string(DomainClass c) {
    switch (c) {
        case DomainClass::Parity: return "parity";
        case DomainClass::BlochPropagating: return "propagating";
        case DomainClass::BlochEvanescent: return "evanescent";
        case DomainClass::Degenerate: return "degenerate";
        case DomainClass::Unsymmetric: return "unsymmetric";
    }
    return "?";
}

struct Classification {
    DomainClass kind = DomainClass::Unsymmetric;
    double k = 0.0;      // Bloch wavenumber, propagating domains
    double kappa = 0.0;  // decay constant, evanescent domains
    double z = 0.0;      // double root (+1 or -1), degenerate domains
};

/// Diagonalisation of a mapping matrix: S Q S^-1 = diag(z+, z-).
struct LSBTransform {
    Mat2 S = Mat2::Identity();
    cplx z_plus{1.0};
    cplx z_minus{1.0};
    Classification classification;
    double trace = 0.0;
    double delta = 0.0;
    int sigma = 0;
};

/// Eigen-decomposition of Q through its characteristic equation
/// z^2 - tr Q z + sigma = 0. `period` converts the Bloch phase into k and
/// kappa. A negative tol_deg selects 1e-10 max(1, |tr/2|^2).
inline LSBTransform diagonalize_q(const QMatrix& q, double period = 1.0, double tol_deg = -1.0, int domain = 0) {
    const int sigma = q.sigma;
    if (sigma != 1 && sigma != -1) throw InputError("lsb", domain, "sigma", "Q must carry sigma = +1 or -1");
    const cplx det = q.det();
    if (std::abs(det - static_cast<double>(sigma)) > 1e-6 * std::max(1.0, max_abs(q.entries) * max_abs(q.entries)))
        throw NumericalError("lsb", domain, "det Q",
                             "inconsistent determinant " + std::to_string(det.real()) + "+" +
                                 std::to_string(det.imag()) + "i, expected " + std::to_string(sigma));

    LSBTransform t;
    t.sigma = sigma;
    t.trace = q.trace.real();
    const double half = 0.5 * t.trace;
    t.delta = half * half - sigma;
    if (tol_deg < 0.0) tol_deg = 1e-10 * std::max(1.0, half * half);

    auto& cls = t.classification;
    if (sigma == -1) {
        const double r = std::sqrt(t.delta);
        t.z_plus = half + r;
        t.z_minus = half - r;
        cls.kind = DomainClass::Parity;
    } else if (std::abs(t.delta) <= tol_deg) {
        t.z_plus = t.z_minus = half;
        cls.kind = DomainClass::Degenerate;
        cls.z = half >= 0.0 ? 1.0 : -1.0;
        t.S = Mat2::Identity();
        return t;
    } else if (t.delta < 0.0) {
        const double r = std::sqrt(-t.delta);
        t.z_plus = cplx(half, r);
        t.z_minus = cplx(half, -r);
        cls.kind = DomainClass::BlochPropagating;
        cls.k = std::atan2(r, half) / period;
    } else {
        const double r = std::sqrt(t.delta);
        double zp = half + r, zm = half - r;
        if (std::abs(zm) > std::abs(zp)) std::swap(zp, zm);
        t.z_plus = zp;
        t.z_minus = zm;
        cls.kind = DomainClass::BlochEvanescent;
        cls.kappa = std::log(std::abs(zp)) / period;
    }

    // Left eigenvectors in the q-current form; gamma(z) = q_12 - z w / 2i so
    // that gamma_+ = gamma(z-) and gamma_- = gamma(z+).
    const Mat2& qc = q.currents;
    const cplx w = q.wronskian_used;
    auto gamma = [&](cplx z) { return qc(0, 1) - z * w / (2.0 * kI); };
    const double scale = max_abs(q.entries);
    const double off_tol = 1e-14 * std::max(1.0, scale);
    const cplx q11 = qc(0, 0), q22 = qc(1, 1);
    if (std::abs(q.entries(0, 1)) <= off_tol && std::abs(q.entries(1, 0)) <= off_tol) {
        // Already diagonal; only the labelling may need a row swap.
        const bool swapped = std::abs(q.entries(0, 0) - t.z_plus) > std::abs(q.entries(1, 1) - t.z_plus);
        t.S = swapped ? Mat2{{0.0, 1.0}, {1.0, 0.0}} : Mat2::Identity();
    } else if (std::abs(q11) >= std::abs(q22)) {
        t.S << gamma(t.z_plus), -q11, -gamma(t.z_minus), q11;
    } else {
        t.S << q22, -gamma(t.z_minus), -q22, gamma(t.z_plus);
    }
    for (int r = 0; r < 2; ++r) {
        const int c = std::abs(t.S(r, 0)) >= std::abs(t.S(r, 1)) ? 0 : 1;
        const cplx pivot = t.S(r, c);
        t.S.row(r) /= pivot;
    }
    if (!(std::abs(t.S.determinant()) > 1e-12))
        throw NumericalError("lsb", domain, "S", "symmetry basis transform is singular");
    return t;
}

struct LSBOptions {
    double tol = 1e-10;
    double tol_deg = -1.0;
    std::array<cplx, 2> row_scale{cplx{1.0}, cplx{1.0}};
};

/// Symmetry-adapted basis chi = S phi of one domain, built from a basis
/// integrated over the first cell only.
struct DomainLSB {
    DomainSpec domain;
    CellBasis first_cell;
    QMatrix q;
    LSBTransform transform;
    Mat2 S = Mat2::Identity();  // includes any requested row rescaling
    Mat2 q_chi = Mat2::Identity();
    bool diagonal = true;  // false for the degenerate fallback

    int index() const { return domain.index; }
    int sigma() const { return domain.symmetric() ? domain.sigma() : 1; }

    BasisState chi_first(double x) const {
        const auto phi = eval_basis(first_cell, x);
        const Vec2 v = S * Vec2(phi[0].value, phi[1].value);
        const Vec2 d = S * Vec2(phi[0].derivative, phi[1].derivative);
        return {StateVector{v(0), d(0), x}, StateVector{v(1), d(1), x}};
    }
};

/// Pair of points at which Q is assembled: the inversion centre approached
/// from the first cell, or the two ends of the first period.
inline std::pair<BasisState, BasisState> convenient_points(const CellBasis& phi, const DomainSpec& d) {
    const Interval c = cell_bounds(d, 1);
    if (d.kind() == SymmetryKind::Inversion) {
        const auto at = eval_basis(phi, c.hi);
        return {at, at};
    }
    return {eval_basis(phi, c.lo), eval_basis(phi, c.hi)};
}

inline DomainLSB build_domain_lsb(const PotentialSpec& p, const DomainSpec& d, double energy,
                                  const LSBOptions& opt = {}) {
    (void)p;
    DomainLSB out;
    out.domain = d;
    const Interval c1 = cell_bounds(d, 1);
    const auto init = unit_initial_conditions(c1.lo);
    try {
        out.first_cell = integrate_cell(CellPotential{&d, 1}, energy, c1, init[0], init[1], opt.tol);
    } catch (const NumericalError& e) {
        throw NumericalError("lsb", d.index, "first-cell basis", e.what());
    }

    const Mat2 D = Vec2(opt.row_scale[0], opt.row_scale[1]).asDiagonal();
    if (!d.symmetric()) {
        out.S = D;
        out.q_chi = Mat2::Identity();
        return out;
    }

    const auto [at_x, at_xbar] = convenient_points(out.first_cell, d);
    out.q = q_matrix(at_x, at_xbar, d.sigma(), d.index);
    const double period = d.kind() == SymmetryKind::Translation ? d.transform.length : d.bounds.length();
    out.transform = diagonalize_q(out.q, period, opt.tol_deg, d.index);
    out.S = D * out.transform.S;
    if (out.transform.classification.kind == DomainClass::Degenerate) {
        out.diagonal = false;
        out.q_chi = D * out.q.entries * D.inverse();
    } else {
        out.q_chi = Vec2(out.transform.z_plus, out.transform.z_minus).asDiagonal();
    }
    return out;
}

/// [Q_chi]^k for any integer k. Diagonal powers go through the logarithm so
/// large cell counts do not accumulate products; overflow is reported.
inline Mat2 chi_power(const DomainLSB& lsb, long k) {
    if (k == 0) return Mat2::Identity();
    Mat2 out;
    if (lsb.diagonal) {
        out = Mat2::Zero();
        const double kd = static_cast<double>(k);
        out(0, 0) = std::exp(kd * std::log(lsb.q_chi(0, 0)));
        out(1, 1) = std::exp(kd * std::log(lsb.q_chi(1, 1)));
    } else {
        Mat2 base = k > 0 ? lsb.q_chi : lsb.q_chi.inverse().eval();
        unsigned long n = static_cast<unsigned long>(k > 0 ? k : -k);
        out = Mat2::Identity();
        while (n > 0) {
            if (n & 1UL) out = out * base;
            base = base * base;
            n >>= 1UL;
        }
    }
    if (!all_finite(out))
        throw NumericalError("lsb", lsb.index(), "Q_chi power",
                             "scale overflow raising the mapping matrix to power " + std::to_string(k));
    return out;
}

/// chi in cell l: [Q_chi]^(l-1) chi_1(F^{-(l-1)} x); derivatives carry sigma^(l-1).
inline BasisState propagate_chi(const DomainLSB& lsb, int l, double x) {
    const auto& d = lsb.domain;
    const Interval cell = cell_bounds(d, l);
    if (!cell.contains(x, coordinate_slack(cell)))
        throw InputError("lsb", d.index, "x", "point outside cell " + std::to_string(l));
    const Interval c1 = cell_bounds(d, 1);
    const double x1 = std::clamp(to_first_cell(d, l, x), c1.lo, c1.hi);
    const auto chi1 = lsb.chi_first(x1);
    if (l == 1) return {StateVector{chi1[0].value, chi1[0].derivative, x}, StateVector{chi1[1].value, chi1[1].derivative, x}};
    const Mat2 P = chi_power(lsb, l - 1);
    const double sgn = (l - 1) % 2 == 1 ? static_cast<double>(lsb.sigma()) : 1.0;
    const Vec2 v = P * Vec2(chi1[0].value, chi1[1].value);
    const Vec2 dv = sgn * (P * Vec2(chi1[0].derivative, chi1[1].derivative));
    return {StateVector{v(0), dv(0), x}, StateVector{v(1), dv(1), x}};
}

}  // namespace lsbwave
