#pragma once

#include "lsbwave/errors.hpp"
#include "lsbwave/integrator.hpp"
#include "lsbwave/invariants.hpp"
#include "lsbwave/potential.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace lsbwave {

/// Smooth bijection y = F(x) of `domain` onto `image`, given as evaluators.
struct GeneralTransform {
    std::string name;
    std::function<double(double)> F, F_prime, F_double_prime, F_inverse;
    Interval domain;
    Interval image;

    /// F(x) = scale * x + shift.
    static GeneralTransform affine(double scale, double shift, Interval domain, std::string name = "affine") {
        if (scale == 0.0) throw InputError("general-transform", 0, "scale", "affine map with zero slope");
        GeneralTransform t;
        t.name = std::move(name);
        t.F = [=](double x) { return scale * x + shift; };
        t.F_prime = [=](double) { return scale; };
        t.F_double_prime = [](double) { return 0.0; };
        t.F_inverse = [=](double y) { return (y - shift) / scale; };
        t.domain = domain;
        const double a = t.F(domain.lo), b = t.F(domain.hi);
        t.image = {std::min(a, b), std::max(a, b)};
        return t;
    }
    static GeneralTransform translation(double length, Interval domain) {
        return affine(1.0, length, domain, "translation");
    }
    static GeneralTransform inversion(double alpha, Interval domain) {
        return affine(-1.0, 2.0 * alpha, domain, "inversion");
    }
    static GeneralTransform scaling(double factor, Interval domain) {
        if (!(factor > 0.0)) throw InputError("general-transform", 0, "factor", "scaling factor must be > 0");
        return affine(factor, 0.0, domain, "scaling");
    }
    /// Wraps arbitrary evaluators; the image is taken from the endpoint images.
    static GeneralTransform custom(std::string name, std::function<double(double)> F,
                                   std::function<double(double)> F_prime, std::function<double(double)> F_double_prime,
                                   std::function<double(double)> F_inverse, Interval domain) {
        GeneralTransform t{std::move(name), std::move(F), std::move(F_prime), std::move(F_double_prime),
                           std::move(F_inverse), domain, {}};
        const double a = t.F(domain.lo), b = t.F(domain.hi);
        t.image = {std::min(a, b), std::max(a, b)};
        return t;
    }

    bool increasing() const { return F(domain.hi) > F(domain.lo); }
};

/// Strict monotonicity of F and F(F^-1(y)) = y on a sample grid. This is a
/// necessary condition for bijectivity only.
inline void validate_transform(const GeneralTransform& t, int n_samples = 256) {
    if (!(t.domain.hi > t.domain.lo)) throw InputError("general-transform", 0, "domain", "empty transform domain");
    const bool up = t.increasing();
    double prev = t.F(t.domain.lo);
    for (int i = 0; i <= n_samples; ++i) {
        const double x = t.domain.lo + t.domain.length() * i / n_samples;
        const double y = t.F(x);
        if (!std::isfinite(y) || !std::isfinite(t.F_prime(x)) || !std::isfinite(t.F_double_prime(x)))
            throw InputError("general-transform", 0, "F", "transform not finite on its domain");
        if (i > 0 && (up ? !(y > prev) : !(y < prev)))
            throw InputError("general-transform", 0, "F", "transform is not strictly monotone on its domain");
        if (std::abs(t.F_prime(x)) < 1e-12) throw InputError("general-transform", 0, "F'", "transform not bijective here");
        const double back = t.F(t.F_inverse(y));
        if (std::abs(back - y) > 1e-10 * std::max(1.0, std::abs(y)))
            throw InputError("general-transform", 0, "F_inverse", "F(F_inverse(y)) != y");
        prev = y;
    }
}

/// F'' = 0 and (F')^2 = 1 on all samples, i.e. F(x) = sigma x + rho.
inline bool isometry_check(const GeneralTransform& t, int n_samples = 64, double tol = 1e-10) {
    const int n = std::max(n_samples, 2);
    for (int i = 0; i < n; ++i) {
        const double x = t.domain.lo + t.domain.length() * i / (n - 1);
        const double fp = t.F_prime(x);
        if (std::abs(t.F_double_prime(x)) > tol || std::abs(fp * fp - 1.0) > tol) return false;
    }
    return true;
}

namespace detail {

/// Potential with one-sided slope inside the piece [lo, hi] of the image axis.
struct ImagePotential {
    const PotentialSpec* p;
    double lo, hi;

    std::pair<double, double> sample(double y) const {
        const double mid = 0.5 * (lo + hi);
        const int d = p->locate_domain(mid);
        if (d == 0) return {evaluate_potential(*p, y), 0.0};
        const auto& dom = p->domain(d);
        const int l = locate_cell(dom, mid);
        return {cell_potential(dom, l, y), cell_potential_slope(dom, l, y)};
    }
};

/// psi_F'' = a psi_F + b psi_F' on the image axis:
/// a = 2 (V(y) - E) / F'(x)^2, b = -F''(x) / F'(x)^2 with x = F^-1(y).
struct TransformedModel {
    const GeneralTransform* t;
    ImagePotential v;
    double energy;

    double fp(double x) const {
        const double f = t->F_prime(x);
        if (std::abs(f) < 1e-12) throw InputError("general-transform", 0, "F'", "transform not bijective here");
        return f;
    }
    double a(double y) const {
        const double x = t->F_inverse(y), f = fp(x);
        return 2.0 * (v.sample(y).first - energy) / (f * f);
    }
    double b(double y) const {
        const double x = t->F_inverse(y), f = fp(x);
        return -t->F_double_prime(x) / (f * f);
    }
    double da(double y) const {
        const double x = t->F_inverse(y), f = fp(x), f2 = t->F_double_prime(x);
        const auto [val, slope] = v.sample(y);
        return 2.0 * slope / (f * f) - 4.0 * (val - energy) * f2 / (f * f * f * f);
    }
    double db(double y) const {
        const double x = t->F_inverse(y), f = fp(x), f2 = t->F_double_prime(x);
        const double h = 1e-5 * std::max(1.0, std::abs(x));
        const double f3 = (t->F_double_prime(x + h) - t->F_double_prime(x - h)) / (2.0 * h);
        return (-f3 / (f * f) + 2.0 * f2 * f2 / (f * f * f)) / f;
    }
};

}  // namespace detail

/// Solutions psi_F(y) of the transformed equation on the image interval,
/// one dense piece per cell crossed.
template <std::size_t N>
struct TransformedSolution {
    double energy = 0.0;
    GeneralTransform transform;
    std::vector<DenseTrack<N>> pieces;

    Interval interval() const { return {pieces.front().interval().lo, pieces.back().interval().hi}; }

    /// (psi_F, d psi_F / dy) of component c.
    StateVector eval(std::size_t c, double y) const { return piece(y).state(c, y); }
    cplx second_derivative(std::size_t c, double y) const { return piece(y).interpolated_second_derivative(c, y); }
    std::size_t steps() const {
        std::size_t s = 0;
        for (const auto& p : pieces) s += p.steps();
        return s;
    }

private:
    const DenseTrack<N>& piece(double y) const {
        for (const auto& p : pieces)
            if (y <= p.interval().hi) return p;
        return pieces.back();
    }
};

namespace detail {

template <std::size_t N>
TransformedSolution<N> integrate_transformed_impl(const PotentialSpec& p, double energy, const GeneralTransform& t,
                                                  std::array<StateVector, N> init, double tol) {
    validate_transform(t);
    const Interval img = t.image;
    for (const auto& s : init)
        if (std::abs(s.x - img.lo) > coordinate_slack(img))
            throw InputError("general-transform", 0, "initial conditions", "initial states must sit at the image's left end");

    std::vector<double> cuts{img.lo};
    const double slack = coordinate_slack(img);
    for (const auto& d : p.domains())
        for (int l = 0; l <= d.cell_count; ++l) {
            const double b = l == 0 ? d.bounds.lo : cell_bounds(d, l).hi;
            if (b > img.lo + slack && b < img.hi - slack) cuts.push_back(b);
        }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    cuts.push_back(img.hi);

    TransformedSolution<N> out;
    out.energy = energy;
    out.transform = t;
    std::array<std::pair<cplx, cplx>, N> y0;
    for (std::size_t c = 0; c < N; ++c) y0[c] = {init[c].value, init[c].derivative};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Interval iv{cuts[i], cuts[i + 1]};
        TransformedModel model{&t, ImagePotential{&p, iv.lo, iv.hi}, energy};
        out.pieces.push_back(integrate_linear<N>(model, iv, true, y0, IntegratorOptions{tol}));
        for (std::size_t c = 0; c < N; ++c) {
            const auto s = out.pieces.back().state(c, iv.hi);
            y0[c] = {s.value, s.derivative};
        }
    }
    return out;
}

}  // namespace detail

/// Integrates -1/2 D_F + V(y) psi_F = E psi_F over the image of t, starting
/// from `init` at its left end (y-derivative in init.derivative).
inline TransformedSolution<1> integrate_transformed(const PotentialSpec& p, double energy, const GeneralTransform& t,
                                                    StateVector init, double tol = 1e-10) {
    return detail::integrate_transformed_impl<1>(p, energy, t, {init}, tol);
}

inline TransformedSolution<2> integrate_transformed_basis(const PotentialSpec& p, double energy,
                                                          const GeneralTransform& t, BasisState init,
                                                          double tol = 1e-10) {
    check_independent(init[0], init[1], "general-transform");
    return detail::integrate_transformed_impl<2>(p, energy, t, init, tol);
}

/// |F'' psi_F' + F'^2 psi_F'' - 2 (V - E) psi_F| at y, using the dense second derivative.
template <std::size_t N>
double transformed_residual(const PotentialSpec& p, const TransformedSolution<N>& s, std::size_t c, double y) {
    const auto& t = s.transform;
    const double x = t.F_inverse(y), f = t.F_prime(x);
    const auto st = s.eval(c, y);
    const int d = p.locate_domain(y);
    const double v = d == 0 ? evaluate_potential(p, y) : domain_potential(p.domain(d), y);
    return std::abs(t.F_double_prime(x) * st.derivative + f * f * s.second_derivative(c, y) -
                    2.0 * (v - s.energy) * st.value);
}

/// (1/2i)[psi(x) F'(x) psi_F'(y) - psi'(x) psi_F(y)]
inline cplx q_general(const StateVector& psi_at_x, const StateVector& psiF_at_y, double Fprime_at_x) {
    return (psi_at_x.value * Fprime_at_x * psiF_at_y.derivative - psi_at_x.derivative * psiF_at_y.value) / (2.0 * kI);
}

/// Same combination with psi replaced by psi*.
inline cplx q_tilde_general(const StateVector& psi_at_x, const StateVector& psiF_at_y, double Fprime_at_x) {
    const StateVector c{std::conj(psi_at_x.value), std::conj(psi_at_x.derivative), psi_at_x.x};
    return q_general(c, psiF_at_y, Fprime_at_x);
}

/// Q_F with the layout of Q, built from the q^F currents and w[phi] at x.
inline Mat2 q_f_matrix(const Mat2& q_f, cplx w) {
    if (w == 0.0) throw NumericalError("general-transform", 0, "wronskian", "basis degenerate");
    const cplx f = 2.0 * kI / w;
    Mat2 out;
    out << -f * q_f(1, 0), f * q_f(0, 0), -f * q_f(1, 1), f * q_f(0, 1);
    return out;
}

struct GeneralInvarianceReport {
    double max_deviation = 0.0;  // largest spread of any q^F_{m nbar}
    Mat2 q_f = Mat2::Zero();     // currents at the reference pair x_ref = F^-1(image.lo)
    Mat2 Q_F = Mat2::Identity();
    double mapping_residual = 0.0;  // max |phi_F(xbar) - Q_F phi(x)| / max(1, |phi_F(xbar)|)
    double symmetry_deviation = 0.0;
    bool isometry = false;
    int pairs = 0;
};

/// Samples q^F_{m nbar}(x, F(x)) over `d` for the basis phi (unit initial
/// conditions at the left end of the hull of d and its image) and phi_F
/// (started from phi at the image's left end). With validate = true a
/// potential violating V(F(x)) = V(x) is rejected up front.
inline GeneralInvarianceReport check_general_invariance(const PotentialSpec& p, Interval d, const GeneralTransform& t0,
                                                        double energy, int n_pairs, double tol = 1e-10,
                                                        bool validate = true) {
    if (n_pairs < 2) throw InputError("general-transform", 0, "n_pairs", "need at least 2 pairs");
    GeneralTransform t = t0;
    t.domain = d;
    const double a = t.F(d.lo), b = t.F(d.hi);
    t.image = {std::min(a, b), std::max(a, b)};
    validate_transform(t);

    GeneralInvarianceReport rep;
    rep.pairs = n_pairs;
    rep.isometry = isometry_check(t);
    // interior probes: at domain boundaries the potential may be two-valued
    constexpr int probes = 400;
    for (int i = 0; i < probes; ++i) {
        const double x = d.lo + d.length() * (i + 0.5) / probes;
        rep.symmetry_deviation =
            std::max(rep.symmetry_deviation, std::abs(evaluate_potential(p, t.F(x)) - evaluate_potential(p, x)));
    }
    if (validate && rep.symmetry_deviation > 1e-9)
        throw InputError("general-transform", 0, "symmetry",
                         "V(F(x)) != V(x) on the domain, max deviation " + std::to_string(rep.symmetry_deviation));

    const Interval hull{std::min(d.lo, t.image.lo), std::max(d.hi, t.image.hi)};
    const auto phi = integrate_span(p, energy, hull, unit_initial_conditions(hull.lo), tol);
    auto start = phi.eval(t.image.lo);
    start[0].x = start[1].x = t.image.lo;
    const auto phi_f = integrate_transformed_basis(p, energy, t, start, tol);

    auto currents_at = [&](double x) {
        x = std::clamp(x, d.lo, d.hi);
        const double y = std::clamp(t.F(x), t.image.lo, t.image.hi);
        const auto px = phi.eval(x);
        const double fp = t.F_prime(x);
        Mat2 q;
        for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n) q(m, n) = q_general(px[m], phi_f.eval(n, y), fp);
        return std::pair{q, px};
    };

    const double x_ref = std::clamp(t.F_inverse(t.image.lo), d.lo, d.hi);
    const auto [q_ref, p_ref] = currents_at(x_ref);
    rep.q_f = q_ref;
    rep.Q_F = q_f_matrix(q_ref, wronskian(p_ref[0], p_ref[1]));

    std::array<std::array<double, 4>, 4> range{};
    for (auto& r : range) r = {1e300, -1e300, 1e300, -1e300};
    for (int i = 0; i < n_pairs; ++i) {
        const double x = d.lo + d.length() * i / (n_pairs - 1);
        const auto [q, px] = currents_at(x);
        for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n) {
                auto& r = range[2 * m + n];
                r[0] = std::min(r[0], q(m, n).real());
                r[1] = std::max(r[1], q(m, n).real());
                r[2] = std::min(r[2], q(m, n).imag());
                r[3] = std::max(r[3], q(m, n).imag());
            }
        const double y = std::clamp(t.F(x), t.image.lo, t.image.hi);
        const Vec2 mapped = rep.Q_F * Vec2(px[0].value, px[1].value);
        for (int n = 0; n < 2; ++n) {
            const cplx target = phi_f.eval(n, y).value;
            rep.mapping_residual =
                std::max(rep.mapping_residual, std::abs(target - mapped(n)) / std::max(1.0, std::abs(target)));
        }
    }
    for (const auto& r : range) rep.max_deviation = std::max(rep.max_deviation, std::hypot(r[1] - r[0], r[3] - r[2]));
    return rep;
}

}  // namespace lsbwave
