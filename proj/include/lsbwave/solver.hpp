#pragma once

#include "lsbwave/assembly.hpp"
#include "lsbwave/errors.hpp"
#include "lsbwave/invariants.hpp"
#include "lsbwave/parallel.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lsbwave {

// ---------------------------------------------------------------------------
// Physical solution psi = c . xi
// ---------------------------------------------------------------------------

inline StateVector evaluate_psi(const GlobalBasis& g, const Vec2& c, double x) {
    const auto xi = eval_global(g, x);
    return {c(0) * xi[0].value + c(1) * xi[1].value, c(0) * xi[0].derivative + c(1) * xi[1].derivative, x};
}

/// Local coefficients a = c G_l S of the physical solution with respect to
/// the first-cell integration basis phi of domain d, cell l.
inline Eigen::RowVector2cd local_coefficients(const GlobalBasis& g, const Vec2& c, int d, int l) {
    return c.transpose() * g.propagation_matrix(d, l) * g.branch(d).lsb.S;
}

// ---------------------------------------------------------------------------
// Scattering
// ---------------------------------------------------------------------------

struct Incoming {
    cplx from_left{1.0};
    cplx from_right{0.0};
};

/// Plane-wave amplitudes a_+ e^{ikx} + a_- e^{-ikx} in the two leads.
struct LeadAmplitudes {
    cplx plus_left{}, minus_left{}, plus_right{}, minus_right{};
};

struct ScatteringResult {
    double energy = 0.0;
    double k_left = 0.0;
    double k_right = 0.0;
    LeadAmplitudes amplitudes;
    cplx r{}, t{};
    double R = 0.0, T = 0.0;
    Vec2 c = Vec2::Zero();
};

inline double lead_wavenumber(double energy, double lead, const char* side) {
    if (!(energy > lead))
        throw InputError("solver", 0, std::string("lead ") + side,
                         "closed channel: energy " + std::to_string(energy) + " <= lead potential " + std::to_string(lead));
    return std::sqrt(2.0 * (energy - lead));
}

namespace detail {

/// Row vectors p such that a = p . c for each lead amplitude.
struct LeadProjection {
    Vec2 plus_left, minus_left, plus_right, minus_right;
    double k_left = 0.0, k_right = 0.0;
};

inline void project(const BasisState& xi, double k, double x, Vec2& plus, Vec2& minus) {
    for (int j = 0; j < 2; ++j) {
        const cplx v = xi[j].value, dv = xi[j].derivative / (kI * k);
        plus(j) = 0.5 * std::exp(-kI * k * x) * (v + dv);
        minus(j) = 0.5 * std::exp(kI * k * x) * (v - dv);
    }
}

inline LeadProjection lead_projection(const GlobalBasis& g) {
    const auto& p = g.potential();
    const double e = g.energy();
    LeadProjection lp;
    lp.k_left = lead_wavenumber(e, p.lead_left(), "left");
    lp.k_right = lead_wavenumber(e, p.lead_right(), "right");
    const double x0 = p.region().lo, xn = p.region().hi;
    const auto& last = p.domain(p.domain_count());
    project(eval_branch(g, 1, 1, x0), lp.k_left, x0, lp.plus_left, lp.minus_left);
    project(eval_branch(g, last.index, last.cell_count, xn), lp.k_right, xn, lp.plus_right, lp.minus_right);
    return lp;
}

inline LeadAmplitudes amplitudes_for(const LeadProjection& lp, const Vec2& c) {
    auto apply = [&](const Vec2& row) { return row(0) * c(0) + row(1) * c(1); };
    return {apply(lp.plus_left), apply(lp.minus_left), apply(lp.plus_right), apply(lp.minus_right)};
}

inline Vec2 solve_incoming(const LeadProjection& lp, cplx from_left, cplx from_right) {
    Mat2 A;
    A.row(0) = lp.plus_left.transpose();
    A.row(1) = lp.minus_right.transpose();
    const double scale = A.row(0).norm() * A.row(1).norm();
    if (!(std::abs(A.determinant()) > 1e-14 * scale))
        throw NumericalError("solver", 0, "scattering system", "singular matching system for lead amplitudes");
    return A.partialPivLu().solve(Vec2(from_left, from_right));
}

inline void fill_unit_left(const LeadProjection& lp, ScatteringResult& out) {
    const Vec2 c = solve_incoming(lp, 1.0, 0.0);
    const auto a = amplitudes_for(lp, c);
    out.r = a.minus_left / a.plus_left;
    out.t = a.plus_right / a.plus_left;
    out.R = std::norm(out.r);
    out.T = lp.k_right / lp.k_left * std::norm(out.t);
}

}  // namespace detail

/// Imposes plane-wave asymptotics at x_0 and x_N on psi = c . xi. The
/// returned amplitudes belong to the requested incoming pair; r, t, R, T
/// always refer to unit incidence from the left.
inline ScatteringResult solve_scattering(const GlobalBasis& g, const Incoming& incoming = {}) {
    const auto lp = detail::lead_projection(g);
    ScatteringResult out;
    out.energy = g.energy();
    out.k_left = lp.k_left;
    out.k_right = lp.k_right;
    out.c = detail::solve_incoming(lp, incoming.from_left, incoming.from_right);
    out.amplitudes = detail::amplitudes_for(lp, out.c);
    detail::fill_unit_left(lp, out);
    return out;
}

/// Fixes c = (1, 1) and reports the lead amplitudes that realise it; the
/// ingoing pair is (plus_left, minus_right).
inline ScatteringResult design_amplitudes(const GlobalBasis& g) {
    const auto lp = detail::lead_projection(g);
    ScatteringResult out;
    out.energy = g.energy();
    out.k_left = lp.k_left;
    out.k_right = lp.k_right;
    out.c = Vec2(1.0, 1.0);
    out.amplitudes = detail::amplitudes_for(lp, out.c);
    detail::fill_unit_left(lp, out);
    return out;
}

// ---------------------------------------------------------------------------
// Pure currents
// ---------------------------------------------------------------------------

struct PureCurrents {
    cplx Q{};
    cplx Q_tilde{};
    double J = 0.0;
    int domain = 0;
};

inline PureCurrents pure_currents(const StateVector& psi_x, const StateVector& psi_xbar, int sigma, int domain = 0) {
    const auto m = two_point_currents(psi_x, psi_xbar, sigma);
    return {m.q, m.q_tilde, current(psi_x), domain};
}

/// psi(xbar) = (Q~ psi(x) - Q psi*(x)) / J; undefined at zero current.
inline cplx map_pure(const PureCurrents& q, const StateVector& psi_x) {
    if (!(std::abs(q.J) > 1e-12 * std::abs(q.Q_tilde)))
        throw NumericalError("solver", q.domain, "J", "mapping undefined at zero current");
    return (q.Q_tilde * psi_x.value - q.Q * std::conj(psi_x.value)) / q.J;
}

// ---------------------------------------------------------------------------
// Bound states
// ---------------------------------------------------------------------------

enum class BoundaryCondition { DirichletBox, DecayingLeads };

struct BoundOptions {
    int reference_domain = 1;
    BuildOptions build;
    double root_tol = 1e-12;  // relative bracket width
    int grid = 4000;          // samples for node count and norm
};

struct BoundState {
    double energy = 0.0;
    Vec2 c = Vec2::Zero();  // normalised coefficients in the global basis at this energy
    double norm = 0.0;      // L2 norm of c . xi before normalisation
    int nodes = 0;
    double imag_residual = 0.0;  // max |Im psi| / max |Re psi| before projecting onto the real state
    BoundaryCondition bc = BoundaryCondition::DirichletBox;
    GlobalBasis basis;

    /// Real bound-state wavefunction (value, derivative).
    StateVector evaluate(double x) const {
        const auto s = evaluate_psi(basis, c, x);
        return {s.value.real(), s.derivative.real(), x};
    }
};

namespace detail {

inline double decay_constant(double energy, double lead, const char* side) {
    if (!(energy < lead))
        throw InputError("solver", 0, std::string("lead ") + side,
                         "decaying leads need energy below the lead potential");
    return std::sqrt(2.0 * (lead - energy));
}

/// c for the solution obeying the left boundary condition: psi(x0)=0,
/// psi'(x0)=1 (Dirichlet) or psi(x0)=1, psi'(x0)=kappa_left (decaying).
inline Vec2 left_condition_coefficients(const GlobalBasis& g, BoundaryCondition bc) {
    const auto& p = g.potential();
    const double x0 = p.region().lo;
    const auto xi = eval_branch(g, 1, 1, x0);
    Mat2 A;
    A << xi[0].value, xi[1].value, xi[0].derivative, xi[1].derivative;
    const Vec2 rhs = bc == BoundaryCondition::DirichletBox
                         ? Vec2(0.0, 1.0)
                         : Vec2(1.0, decay_constant(g.energy(), p.lead_left(), "left"));
    if (!(std::abs(A.determinant()) > 0.0))
        throw NumericalError("solver", 1, "global basis wronskian", "global basis degenerate at x_0");
    return A.partialPivLu().solve(rhs);
}

inline double right_condition(const GlobalBasis& g, const Vec2& c, BoundaryCondition bc) {
    const auto& p = g.potential();
    const double xn = p.region().hi;
    const auto& last = p.domain(p.domain_count());
    const auto xi = eval_branch(g, last.index, last.cell_count, xn);
    const cplx v = c(0) * xi[0].value + c(1) * xi[1].value;
    if (bc == BoundaryCondition::DirichletBox) return v.real();
    const cplx dv = c(0) * xi[0].derivative + c(1) * xi[1].derivative;
    return (dv + decay_constant(g.energy(), p.lead_right(), "right") * v).real();
}

}  // namespace detail

/// Boundary-condition mismatch at x_N of the solution fixed by the left
/// condition. Its zeros are the bound-state energies.
inline double bound_state_function(const PotentialSpec& p, double energy, BoundaryCondition bc,
                                   const BoundOptions& opt = {}) {
    const auto g = build_global_basis(p, energy, opt.reference_domain, opt.build);
    return detail::right_condition(g, detail::left_condition_coefficients(g, bc), bc);
}

inline BoundState make_bound_state(const PotentialSpec& p, double energy, BoundaryCondition bc,
                                   const BoundOptions& opt = {}) {
    BoundState s{energy, Vec2::Zero(), 0.0, 0, 0.0, bc,
                 build_global_basis(p, energy, opt.reference_domain, opt.build)};
    s.c = detail::left_condition_coefficients(s.basis, bc);

    const Interval region = p.region();
    const int n = std::max(opt.grid, 16);
    std::vector<double> re(n + 1);
    double max_re = 0.0, max_im = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = region.lo + region.length() * i / n;
        const cplx v = evaluate_psi(s.basis, s.c, x).value;
        re[i] = v.real();
        max_re = std::max(max_re, std::abs(v.real()));
        max_im = std::max(max_im, std::abs(v.imag()));
    }
    s.imag_residual = max_re > 0.0 ? max_im / max_re : 0.0;

    // Simpson on the grid plus analytic lead tails.
    const double h = region.length() / n;
    double integral = 0.0;
    for (int i = 0; i + 2 <= n; i += 2) integral += h / 3.0 * (re[i] * re[i] + 4 * re[i + 1] * re[i + 1] + re[i + 2] * re[i + 2]);
    if (n % 2 == 1) integral += 0.5 * h * (re[n - 1] * re[n - 1] + re[n] * re[n]);
    if (bc == BoundaryCondition::DecayingLeads) {
        integral += re[0] * re[0] / (2.0 * detail::decay_constant(energy, p.lead_left(), "left"));
        integral += re[n] * re[n] / (2.0 * detail::decay_constant(energy, p.lead_right(), "right"));
    }
    s.norm = std::sqrt(integral);
    if (s.norm > 0.0) s.c /= s.norm;

    const double floor = 1e-8 * max_re;
    int last_sign = 0;
    for (int i = 0; i <= n; ++i) {
        if (std::abs(re[i]) <= floor) continue;
        const int sg = re[i] > 0.0 ? 1 : -1;
        if (last_sign != 0 && sg != last_sign) ++s.nodes;
        last_sign = sg;
    }
    return s;
}

/// Uniform scan of the boundary-condition function over `range` followed by
/// bisection of every sign change. n_scan <= 0 selects 400 points per unit energy.
inline std::vector<BoundState> solve_bound_states(const PotentialSpec& p, Interval range, BoundaryCondition bc,
                                                  int n_scan = 0, const BoundOptions& opt = {}) {
    if (!std::isfinite(range.lo) || !std::isfinite(range.hi) || !(range.hi > range.lo))
        throw InputError("solver", 0, "energy range", "energy range must be finite with lo < hi");
    if (bc == BoundaryCondition::DecayingLeads && !(range.hi < std::min(p.lead_left(), p.lead_right())))
        throw InputError("solver", 0, "energy range", "decaying leads need energies below both lead potentials");
    if (n_scan <= 0) n_scan = std::max(2, static_cast<int>(std::ceil(400.0 * range.length())));
    if (n_scan < 2) n_scan = 2;

    auto f = [&](double e) {
        try {
            return bound_state_function(p, e, bc, opt);
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    std::vector<double> es(n_scan);
    for (int i = 0; i < n_scan; ++i) es[i] = range.lo + range.length() * i / (n_scan - 1);
    const auto fs = parallel_map<double>(es.size(), [&](std::size_t i) { return f(es[i]); });

    std::vector<double> roots;
    for (int i = 0; i < n_scan; ++i) {
        if (fs[i] == 0.0) {
            roots.push_back(es[i]);
            continue;
        }
        if (i + 1 >= n_scan || !std::isfinite(fs[i]) || !std::isfinite(fs[i + 1]) || fs[i + 1] == 0.0) continue;
        if ((fs[i] < 0.0) == (fs[i + 1] < 0.0)) continue;
        auto done = [&](double a, double b) {
            return std::abs(b - a) <= opt.root_tol * std::max({std::abs(a), std::abs(b), 1e-3});
        };
        const auto [a, b] = boost::math::tools::bisect(f, es[i], es[i + 1], done);
        roots.push_back(0.5 * (a + b));
    }

    std::vector<BoundState> out;
    out.reserve(roots.size());
    for (double e : roots) out.push_back(make_bound_state(p, e, bc, opt));
    return out;
}

// ---------------------------------------------------------------------------
// Potential design from a target profile
// ---------------------------------------------------------------------------

struct SampledProfile {
    std::vector<double> x;
    std::vector<double> value;
    std::vector<double> second_derivative;
};

struct SampledPotential {
    std::vector<double> x;
    std::vector<double> v;
};

/// V(x) = E + chi''(x) / (2 chi(x)) for a nodeless target profile chi.
inline SampledPotential potential_from_profile(const SampledProfile& chi, double energy) {
    const std::size_t n = chi.x.size();
    if (n == 0 || chi.value.size() != n || chi.second_derivative.size() != n)
        throw InputError("solver", 0, "profile", "profile arrays must be non-empty and of equal length");
    double peak = 0.0;
    for (double v : chi.value) peak = std::max(peak, std::abs(v));
    SampledPotential out{chi.x, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        if (!(std::abs(chi.value[i]) >= 1e-6 * peak) || peak == 0.0)
            throw NumericalError("solver", 0, "profile",
                                 "profile has (near-)node at x = " + std::to_string(chi.x[i]));
        out.v[i] = energy + chi.second_derivative[i] / (2.0 * chi.value[i]);
    }
    return out;
}

}  // namespace lsbwave
