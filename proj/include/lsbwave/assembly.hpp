#pragma once

#include "lsbwave/errors.hpp"
#include "lsbwave/lsb.hpp"
#include "lsbwave/potential.hpp"

#include <future>
#include <string>
#include <vector>

namespace lsbwave {

/// chi^(d)(x_d) = M chi^(d+1)(x_d), from one-sided limits at the interface.
struct MatchingMatrix {
    Mat2 entries = Mat2::Identity();
    int interface = 0;  // d: between domain d and d+1
};

/// Matching from value/derivative continuity, written with the Wronskians
/// W^{i,j}_{r,s} = chi^(i)_r chi^(j)'_s - chi^(j)_s chi^(i)'_r at x_d.
inline MatchingMatrix matching_matrix(const BasisState& left, const BasisState& right, int interface = 0) {
    const cplx den = wronskian(right[0], right[1]);
    const double scale = (std::abs(right[0].value) + std::abs(right[0].derivative)) *
                         (std::abs(right[1].value) + std::abs(right[1].derivative));
    if (!(std::abs(den) > 1e-12 * scale))
        throw NumericalError("assembly", interface, "matching wronskian", "degenerate right basis");
    MatchingMatrix m;
    m.interface = interface;
    m.entries << wronskian(left[0], right[1]), wronskian(right[0], left[0]), wronskian(left[1], right[1]),
        wronskian(right[0], left[1]);
    m.entries /= den;
    return m;
}

struct BuildOptions {
    LSBOptions lsb;
    /// Optional extra row rescaling of each domain's LSB (index d-1).
    std::vector<std::array<cplx, 2>> row_scales;
    bool parallel_domains = false;
};

/// One domain's part of the global basis. `anchor` is the cell whose first-
/// cell image carries no Q_chi factor: 1 for domains at or right of the
/// reference domain, N_d for domains left of it (backward propagation).
struct DomainBranch {
    DomainLSB lsb;
    int anchor = 1;
    Mat2 matcher = Mat2::Identity();  // cumulative M^(di) or its backward analogue

    /// Propagation-matching matrix of cell l, formed on demand so the cost of
    /// a build does not grow with the cell count.
    Mat2 G(int l) const { return matcher * chi_power(lsb, static_cast<long>(l) - anchor); }
};

class GlobalBasis {
public:
    GlobalBasis(PotentialSpec potential, double energy, int reference)
        : potential_(std::move(potential)), energy_(energy), reference_(reference) {}

    const PotentialSpec& potential() const { return potential_; }
    double energy() const { return energy_; }
    int reference_domain() const { return reference_; }
    const std::vector<DomainBranch>& branches() const { return branches_; }
    const DomainBranch& branch(int d) const {
        if (d < 1 || d > static_cast<int>(branches_.size()))
            throw InputError("assembly", d, "domain index", "domain index out of range");
        return branches_[d - 1];
    }
    const std::vector<MatchingMatrix>& interfaces() const { return interfaces_; }
    /// G^(di)_l (forward) or G~^(id)_l (backward), depending on the side of the reference domain.
    Mat2 propagation_matrix(int d, int l) const {
        const auto& b = branch(d);
        if (l < 1 || l > b.lsb.domain.cell_count)
            throw InputError("assembly", d, "cell index", "cell index out of range");
        return b.G(l);
    }
    std::size_t ode_steps() const {
        std::size_t s = 0;
        for (const auto& b : branches_) s += b.lsb.first_cell.steps();
        return s;
    }

private:
    friend GlobalBasis build_global_basis(const PotentialSpec&, double, int, const BuildOptions&);

    PotentialSpec potential_;
    double energy_;
    int reference_;
    std::vector<DomainBranch> branches_;
    std::vector<MatchingMatrix> interfaces_;
};

/// Branch representation without the cumulative matcher:
/// [Q_chi]^(l - anchor) chi_1(F^{-(l-1)} x).
inline BasisState branch_chi(const DomainBranch& b, int l, double x) {
    const auto& lsb = b.lsb;
    const auto& d = lsb.domain;
    const Interval c1 = cell_bounds(d, 1);
    const double x1 = std::clamp(to_first_cell(d, l, x), c1.lo, c1.hi);
    const auto chi1 = lsb.chi_first(x1);
    const Mat2 P = chi_power(lsb, static_cast<long>(l) - b.anchor);
    const double sgn = (l - 1) % 2 == 1 ? static_cast<double>(lsb.sigma()) : 1.0;
    const Vec2 v = P * Vec2(chi1[0].value, chi1[1].value);
    const Vec2 dv = sgn * (P * Vec2(chi1[0].derivative, chi1[1].derivative));
    return {StateVector{v(0), dv(0), x}, StateVector{v(1), dv(1), x}};
}

inline GlobalBasis build_global_basis(const PotentialSpec& p, double energy, int reference = 1,
                                      const BuildOptions& opt = {}) {
    const int n = p.domain_count();
    if (reference < 1 || reference > n)
        throw InputError("assembly", reference, "reference domain", "reference domain out of range");

    GlobalBasis g(p, energy, reference);
    auto build_one = [&](int d) {
        LSBOptions lo = opt.lsb;
        if (static_cast<int>(opt.row_scales.size()) >= d) lo.row_scale = opt.row_scales[d - 1];
        return build_domain_lsb(p, p.domain(d), energy, lo);
    };
    std::vector<DomainLSB> lsbs;
    lsbs.reserve(n);
    if (opt.parallel_domains && n > 1) {
        std::vector<std::future<DomainLSB>> jobs;
        for (int d = 1; d <= n; ++d) jobs.push_back(std::async(std::launch::async, build_one, d));
        for (auto& j : jobs) lsbs.push_back(j.get());
    } else {
        for (int d = 1; d <= n; ++d) lsbs.push_back(build_one(d));
    }

    auto& branches = g.branches_;
    branches.resize(n);
    for (int d = 1; d <= n; ++d) {
        auto& b = branches[d - 1];
        b.lsb = std::move(lsbs[d - 1]);
        b.anchor = d < reference ? b.lsb.domain.cell_count : 1;
    }

    g.interfaces_.resize(n > 1 ? n - 1 : 0);
    auto interface_matrix = [&](int d) {
        const double xd = p.domain(d).bounds.hi;
        const auto left = branch_chi(branches[d - 1], p.domain(d).cell_count, xd);
        const auto right = branch_chi(branches[d], 1, xd);
        auto m = matching_matrix(left, right, d);
        g.interfaces_[d - 1] = m;
        return m.entries;
    };
    auto check = [](const Mat2& m, int d) {
        if (!all_finite(m))
            throw NumericalError("assembly", d, "matcher product", "scale overflow in cumulative matching matrix");
    };
    // Forward: M^(di) = M_{i+1} ... M_d.
    for (int d = reference + 1; d <= n; ++d) {
        branches[d - 1].matcher = branches[d - 2].matcher * interface_matrix(d - 1);
        check(branches[d - 1].matcher, d);
    }
    // Backward: each step to the left applies one matching-matrix inversion.
    for (int d = reference - 1; d >= 1; --d) {
        const Mat2 m = interface_matrix(d);
        if (!(std::abs(m.determinant()) > 0.0))
            throw NumericalError("assembly", d, "matching matrix", "matching matrix is singular");
        branches[d - 1].matcher = branches[d].matcher * m.inverse();
        check(branches[d - 1].matcher, d);
    }

    // Entry moduli of the powers are monotone in l for diagonal Q_chi, so the
    // end cells bound every G_l; the degenerate fallback grows at most polynomially.
    for (auto& b : branches) {
        check(b.G(1), b.lsb.index());
        check(b.G(b.lsb.domain.cell_count), b.lsb.index());
    }
    return g;
}

/// xi on the explicit branch (d, l): G_l chi_1(F^{1-l} x).
inline BasisState eval_branch(const GlobalBasis& g, int d, int l, double x) {
    const auto& b = g.branch(d);
    const Interval cell = cell_bounds(b.lsb.domain, l);
    if (!cell.contains(x, coordinate_slack(cell)))
        throw InputError("assembly", d, "x", "point outside cell " + std::to_string(l));
    const Interval c1 = cell_bounds(b.lsb.domain, 1);
    const double x1 = std::clamp(to_first_cell(b.lsb.domain, l, x), c1.lo, c1.hi);
    const auto chi1 = b.lsb.chi_first(x1);
    const Mat2 G = b.G(l);
    const double sgn = (l - 1) % 2 == 1 ? static_cast<double>(b.lsb.sigma()) : 1.0;
    const Vec2 v = G * Vec2(chi1[0].value, chi1[1].value);
    const Vec2 dv = sgn * (G * Vec2(chi1[0].derivative, chi1[1].derivative));
    return {StateVector{v(0), dv(0), x}, StateVector{v(1), dv(1), x}};
}

inline BasisState eval_global(const GlobalBasis& g, double x) {
    const int d = g.potential().locate_domain(x);
    if (d == 0) throw InputError("assembly", 0, "x", "point outside the interaction region");
    return eval_branch(g, d, locate_cell(g.potential().domain(d), x), x);
}

/// Q_xi = M Q_chi M^-1: xi(xbar) = Q_xi xi(x) inside domain d.
inline Mat2 domain_q_xi(const GlobalBasis& g, int d) {
    const auto& b = g.branch(d);
    if (!b.lsb.domain.symmetric()) throw InputError("assembly", d, "Q_xi", "no symmetry mapping");
    return b.matcher * b.lsb.q_chi * b.matcher.inverse();
}

}  // namespace lsbwave
