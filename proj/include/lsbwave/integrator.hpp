#pragma once

#include "lsbwave/errors.hpp"
#include "lsbwave/linalg.hpp"
#include "lsbwave/potential.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <vector>

namespace lsbwave {

struct StateVector {
    cplx value{};
    cplx derivative{};
    double x = 0.0;
};

/// The two basis functions (value + derivative) at one abscissa.
using BasisState = std::array<StateVector, 2>;

struct IntegratorOptions {
    double tol = 1e-10;
    std::size_t max_steps = 2'000'000;
};

/// Anything that can be sampled as a real potential together with its slope.
template <class P>
concept LocalPotential = requires(const P& p, double x) {
    { p.value(x) } -> std::convertible_to<double>;
    { p.slope(x) } -> std::convertible_to<double>;
};

/// Coefficients of a linear second-order equation psi'' = a(x) psi + b(x) psi'.
/// da/db are the x-derivatives, used only for the dense-output jets.
template <class M>
concept LinearSecondOrderModel = requires(const M& m, double x) {
    { m.a(x) } -> std::convertible_to<double>;
    { m.b(x) } -> std::convertible_to<double>;
    { m.da(x) } -> std::convertible_to<double>;
    { m.db(x) } -> std::convertible_to<double>;
};

/// -1/2 psi'' + V psi = E psi  <=>  psi'' = 2 (V - E) psi
template <LocalPotential P>
struct SchrodingerModel {
    const P* potential;
    double energy;

    double a(double x) const { return 2.0 * (potential->value(x) - energy); }
    double b(double) const { return 0.0; }
    double da(double x) const { return 2.0 * potential->slope(x); }
    double db(double) const { return 0.0; }
};

namespace detail {

/// Value and first three derivatives at a step node.
struct Jet {
    cplx d0, d1, d2, d3;
};

/// Quintic Hermite interpolation on one step from (f, f', f'') at both ends.
/// Returns the interpolant and its x-derivative.
inline std::pair<cplx, cplx> quintic_hermite(cplx f0, cplx g0, cplx s0, cplx f1, cplx g1, cplx s1, double h,
                                             double t) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    const double h3 = 0.5 * t3 - t4 + 0.5 * t5;
    const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
    const double d0 = -30 * t2 + 60 * t3 - 30 * t4;
    const double d1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double d2 = t - 4.5 * t2 + 6 * t3 - 2.5 * t4;
    const double d3 = 1.5 * t2 - 4 * t3 + 2.5 * t4;
    const double d4 = -12 * t2 + 28 * t3 - 15 * t4;
    const double d5 = 30 * t2 - 60 * t3 + 30 * t4;
    const cplx v = f0 * h0 + h * g0 * h1 + h * h * s0 * h2 + h * h * s1 * h3 + h * g1 * h4 + f1 * h5;
    const cplx dv = (f0 * d0 + h * g0 * d1 + h * h * s0 * d2 + h * h * s1 * d3 + h * g1 * d4 + f1 * d5) / h;
    return {v, dv};
}

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace detail

/// Dense solution of N independent solutions of a linear second-order
/// equation on one interval, sharing a common step sequence.
template <std::size_t N>
class DenseTrack {
public:
    DenseTrack() = default;
    DenseTrack(Interval iv, std::vector<double> nodes, std::vector<std::array<detail::Jet, N>> jets)
        : interval_(iv), nodes_(std::move(nodes)), jets_(std::move(jets)) {}

    const Interval& interval() const { return interval_; }
    const std::vector<double>& nodes() const { return nodes_; }
    std::size_t steps() const { return nodes_.empty() ? 0 : nodes_.size() - 1; }

    /// (psi, psi') of component c at x.
    StateVector state(std::size_t c, double x) const {
        const auto [i, exact] = locate(x);
        const auto& j0 = jets_[i][c];
        if (exact) return {j0.d0, j0.d1, x};
        const auto& j1 = jets_[i + 1][c];
        const double h = nodes_[i + 1] - nodes_[i];
        const double t = (x - nodes_[i]) / h;
        const auto v = detail::quintic_hermite(j0.d0, j0.d1, j0.d2, j1.d0, j1.d1, j1.d2, h, t);
        const auto d = detail::quintic_hermite(j0.d1, j0.d2, j0.d3, j1.d1, j1.d2, j1.d3, h, t);
        return {v.first, d.first, x};
    }

    /// psi'' of component c from differentiating the dense derivative; used for
    /// residual checks against the equation itself.
    cplx interpolated_second_derivative(std::size_t c, double x) const {
        const auto [i, exact] = locate(x);
        if (exact) return jets_[i][c].d2;
        const auto& j0 = jets_[i][c];
        const auto& j1 = jets_[i + 1][c];
        const double h = nodes_[i + 1] - nodes_[i];
        return detail::quintic_hermite(j0.d1, j0.d2, j0.d3, j1.d1, j1.d2, j1.d3, h, (x - nodes_[i]) / h).second;
    }

    bool contains(double x) const { return interval_.contains(x, coordinate_slack(interval_)); }

private:
    std::pair<std::size_t, bool> locate(double x) const {
        if (!contains(x))
            throw InputError("integrator", 0, "x", "query point " + std::to_string(x) + " outside the integrated interval");
        x = std::clamp(x, nodes_.front(), nodes_.back());
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
        if (it != nodes_.end() && *it == x) return {static_cast<std::size_t>(it - nodes_.begin()), true};
        const std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
        return {i, false};
    }

    Interval interval_;
    std::vector<double> nodes_;
    std::vector<std::array<detail::Jet, N>> jets_;
};

/// Adaptive Dormand-Prince integration of N solutions of
/// psi'' = a psi + b psi' from `start` (either end of `iv`) across `iv`.
template <std::size_t N, LinearSecondOrderModel M>
DenseTrack<N> integrate_linear(const M& model, Interval iv, bool from_left,
                               const std::array<std::pair<cplx, cplx>, N>& init, const IntegratorOptions& opt) {
    using namespace detail;
    constexpr std::size_t K = 2 * N;
    using Y = std::array<cplx, K>;  // psi_0, psi_0', psi_1, psi_1', ...

    if (!(iv.hi > iv.lo)) throw InputError("integrator", 0, "interval", "empty integration interval");
    if (!(opt.tol > 0.0)) throw InputError("integrator", 0, "tol", "tolerance must be > 0");

    auto rhs = [&model](double x, const Y& y) {
        const double a = model.a(x), b = model.b(x);
        Y f;
        for (std::size_t c = 0; c < N; ++c) {
            f[2 * c] = y[2 * c + 1];
            f[2 * c + 1] = a * y[2 * c] + b * y[2 * c + 1];
        }
        return f;
    };
    auto jets_at = [&model](double x, const Y& y) {
        const double a = model.a(x), b = model.b(x), da = model.da(x), db = model.db(x);
        std::array<Jet, N> out;
        for (std::size_t c = 0; c < N; ++c) {
            const cplx p = y[2 * c], dp = y[2 * c + 1];
            const cplx d2 = a * p + b * dp;
            out[c] = {p, dp, d2, da * p + a * dp + db * dp + b * d2};
        }
        return out;
    };

    const double dir = from_left ? 1.0 : -1.0;
    const double x_end = from_left ? iv.hi : iv.lo;
    double x = from_left ? iv.lo : iv.hi;
    Y y;
    for (std::size_t c = 0; c < N; ++c) {
        y[2 * c] = init[c].first;
        y[2 * c + 1] = init[c].second;
    }

    std::vector<double> nodes{x};
    std::vector<std::array<Jet, N>> jets{jets_at(x, y)};

    const double span = iv.length();
    double h = std::min(span, 0.05 / std::max(1.0, std::sqrt(std::abs(model.a(x)))));
    const double h_min = 1e-14 * std::max(1.0, std::max(std::abs(iv.lo), std::abs(iv.hi)));
    Y k1 = rhs(x, y);
    std::size_t attempts = 0;

    while (dir * (x_end - x) > 0.0) {
        if (++attempts > opt.max_steps) throw NumericalError("integrator", 0, "steps", "step budget exhausted");
        bool last = false;
        if (h >= std::abs(x_end - x)) {
            h = std::abs(x_end - x);
            last = true;
        }
        const double s = dir * h;
        Y t;
        auto stage = [&](std::initializer_list<std::pair<double, const Y*>> terms) {
            for (std::size_t i = 0; i < K; ++i) {
                cplx acc = y[i];
                for (const auto& [coef, k] : terms) acc += s * coef * (*k)[i];
                t[i] = acc;
            }
            return t;
        };
        const Y k2 = rhs(x + c2 * s, stage({{a21, &k1}}));
        const Y k3 = rhs(x + c3 * s, stage({{a31, &k1}, {a32, &k2}}));
        const Y k4 = rhs(x + c4 * s, stage({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const Y k5 = rhs(x + c5 * s, stage({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const Y k6 = rhs(x + s, stage({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const Y y_new = stage({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const double x_new = last ? x_end : x + s;
        const Y k7 = rhs(x_new, y_new);

        double err2 = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            const cplx e = s * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale = opt.tol * (1.0 + std::max(std::abs(y[i]), std::abs(y_new[i])));
            err2 += std::norm(e / scale);
        }
        const double err = std::sqrt(err2 / K);

        if (err <= 1.0) {
            x = x_new;
            y = y_new;
            k1 = k7;
            for (const auto& v : y)
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                    throw NumericalError("integrator", 0, "solution", "solution overflowed");
            nodes.push_back(x);
            jets.push_back(jets_at(x, y));
        }
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= err <= 1.0 ? factor : std::min(1.0, factor);
        if (h < h_min && dir * (x_end - x) > 0.0)
            throw NumericalError("integrator", 0, "step size", "step size underflow");
    }

    if (!from_left) {
        std::reverse(nodes.begin(), nodes.end());
        std::reverse(jets.begin(), jets.end());
    }
    nodes.front() = iv.lo;
    nodes.back() = iv.hi;
    return DenseTrack<N>(iv, std::move(nodes), std::move(jets));
}

// ---------------------------------------------------------------------------
// Cell bases
// ---------------------------------------------------------------------------

/// Two solutions of the Schroedinger equation on one cell with dense output.
class CellBasis {
public:
    CellBasis() = default;
    CellBasis(double energy, BasisState init, DenseTrack<2> track)
        : energy_(energy), init_(init), track_(std::move(track)) {}

    const Interval& interval() const { return track_.interval(); }
    double energy() const { return energy_; }
    const BasisState& initial_conditions() const { return init_; }
    const DenseTrack<2>& track() const { return track_; }
    std::size_t steps() const { return track_.steps(); }

private:
    double energy_ = 0.0;
    BasisState init_{};
    DenseTrack<2> track_;
};

inline void check_independent(const StateVector& a, const StateVector& b, const char* module) {
    const double na = std::abs(a.value) + std::abs(a.derivative);
    const double nb = std::abs(b.value) + std::abs(b.derivative);
    const cplx det = a.value * b.derivative - b.value * a.derivative;
    if (!(std::abs(det) > 1e-12 * na * nb))
        throw InputError(module, 0, "initial conditions", "linearly dependent initial conditions");
}

template <LocalPotential P>
CellBasis integrate_cell(const P& potential, double energy, Interval iv, StateVector init1, StateVector init2,
                         double tol = 1e-10) {
    check_independent(init1, init2, "integrator");
    const double slack = coordinate_slack(iv);
    if (std::abs(init1.x - iv.lo) > slack || std::abs(init2.x - iv.lo) > slack)
        throw InputError("integrator", 0, "initial conditions", "initial states must sit at the left endpoint");
    if (!std::isfinite(energy)) throw InputError("integrator", 0, "energy", "energy must be finite");
    SchrodingerModel<P> model{&potential, energy};
    auto track = integrate_linear<2>(model, iv, true,
                                     {std::pair{init1.value, init1.derivative}, std::pair{init2.value, init2.derivative}},
                                     IntegratorOptions{tol});
    init1.x = init2.x = iv.lo;
    return CellBasis(energy, {init1, init2}, std::move(track));
}

/// Default initialisation (1,0), (0,1) at the left edge, unit Wronskian.
inline BasisState unit_initial_conditions(double x) { return {StateVector{1.0, 0.0, x}, StateVector{0.0, 1.0, x}}; }

/// Integrates on `iv`, which must lie inside a single cell of `p`.
inline CellBasis integrate_cell(const PotentialSpec& p, double energy, Interval iv, StateVector init1,
                                StateVector init2, double tol = 1e-10) {
    const int d = p.locate_domain(iv.mid());
    if (d == 0) throw InputError("integrator", 0, "interval", "interval lies outside the interaction region");
    const auto& dom = p.domain(d);
    const int l = locate_cell(dom, iv.mid());
    const Interval cell = cell_bounds(dom, l);
    const double slack = coordinate_slack(cell);
    if (iv.lo < cell.lo - slack || iv.hi > cell.hi + slack)
        throw InputError("integrator", d, "interval", "integration interval must lie within one cell");
    return integrate_cell(CellPotential{&dom, l}, energy, iv, init1, init2, tol);
}

inline BasisState eval_basis(const CellBasis& b, double x) {
    return {b.track().state(0, x), b.track().state(1, x)};
}

inline cplx wronskian(const StateVector& a, const StateVector& b) {
    return a.value * b.derivative - b.value * a.derivative;
}

inline cplx wronskian(const CellBasis& b, double x) {
    const auto s = eval_basis(b, x);
    return wronskian(s[0], s[1]);
}

// ---------------------------------------------------------------------------
// Multi-cell integration (diagnostics and test comparisons)
// ---------------------------------------------------------------------------

/// Basis integrated continuously across consecutive cells, one dense piece
/// per cell so every step stays inside a smooth part of the potential.
class PiecewiseBasis {
public:
    explicit PiecewiseBasis(std::vector<CellBasis> pieces) : pieces_(std::move(pieces)) {}

    Interval interval() const { return {pieces_.front().interval().lo, pieces_.back().interval().hi}; }
    const std::vector<CellBasis>& pieces() const { return pieces_; }
    std::size_t steps() const {
        std::size_t s = 0;
        for (const auto& p : pieces_) s += p.steps();
        return s;
    }

    BasisState eval(double x) const {
        for (const auto& p : pieces_)
            if (x <= p.interval().hi) return eval_basis(p, std::max(x, p.interval().lo));
        return eval_basis(pieces_.back(), x);
    }

private:
    std::vector<CellBasis> pieces_;
};

/// Integrates a basis over `span` (inside the interaction region), restarting
/// at every cell and domain boundary with the carried-over state.
inline PiecewiseBasis integrate_span(const PotentialSpec& p, double energy, Interval span, BasisState init,
                                     double tol = 1e-10) {
    const Interval region = p.region();
    const double slack = coordinate_slack(region);
    if (span.lo < region.lo - slack || span.hi > region.hi + slack)
        throw InputError("integrator", 0, "interval", "span must lie within the interaction region");

    std::vector<double> cuts{span.lo};
    for (const auto& d : p.domains())
        for (int l = 1; l <= d.cell_count; ++l) {
            const double b = cell_bounds(d, l).hi;
            if (b > span.lo + slack && b < span.hi - slack) cuts.push_back(b);
        }
    cuts.push_back(span.hi);

    std::vector<CellBasis> pieces;
    StateVector s1 = init[0], s2 = init[1];
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Interval iv{cuts[i], cuts[i + 1]};
        s1.x = s2.x = iv.lo;
        pieces.push_back(integrate_cell(p, energy, iv, s1, s2, tol));
        const auto end = eval_basis(pieces.back(), iv.hi);
        s1 = end[0];
        s2 = end[1];
    }
    return PiecewiseBasis(std::move(pieces));
}

}  // namespace lsbwave
