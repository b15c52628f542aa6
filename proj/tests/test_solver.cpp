#include "test_potentials.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace lsbwave;

namespace {
constexpr double pi = std::numbers::pi;

double barrier_T(double v0, double a, double e) {
    const double k = std::sqrt(2.0 * e);
    if (e < v0) {
        const double kap = std::sqrt(2.0 * (v0 - e));
        const double s = std::sinh(kap * a);
        return 1.0 / (1.0 + std::pow(k * k + kap * kap, 2) * s * s / (4.0 * k * k * kap * kap));
    }
    const double q = std::sqrt(2.0 * (e - v0));
    const double s = std::sin(q * a);
    return 1.0 / (1.0 + std::pow(k * k - q * q, 2) * s * s / (4.0 * k * k * q * q));
}

double gap_energy(const PotentialSpec& p, int d, double lo, double hi) {
    double best = lo, val = 0.0;
    for (double e = lo; e <= hi; e += 0.01) {
        const double h = std::abs(oracle::monodromy_half_trace(p, d, e));
        if (h > val) val = h, best = e;
    }
    return best;
}
}  // namespace

TEST(Scattering, FreeSpaceIsTransparent) {
    for (double e : {0.1, 0.9, 3.7}) {
        const auto s = solve_scattering(build_global_basis(testpot::free_space(2.5, 5), e));
        EXPECT_NEAR(s.T, 1.0, 1e-10);
        EXPECT_NEAR(s.R, 0.0, 1e-10);
        EXPECT_LE(std::abs(s.t - 1.0), 1e-9);
    }
}

TEST(Scattering, RectangularBarrierClosedForm) {
    const auto s = solve_scattering(build_global_basis(testpot::barrier(1.0, 1.0), 0.5));
    const double sh = std::sinh(1.0);
    EXPECT_NEAR(s.T, 1.0 / (1.0 + sh * sh), 1e-9);
    for (double e : {0.05, 0.3, 0.99, 1.01, 1.7, 4.0}) {
        const auto r = solve_scattering(build_global_basis(testpot::barrier(1.0, 1.0), e));
        EXPECT_NEAR(r.T, barrier_T(1.0, 1.0, e), 1e-9) << e;
        EXPECT_NEAR(r.T, r.k_right / r.k_left * std::norm(r.t), 1e-14);
    }
}

TEST(Scattering, UnitarityAcrossSuite) {
    for (const auto& [name, p] : testpot::suite())
        for (double e : {0.2, 0.75, 1.6, 3.1, 6.0}) {
            const auto s = solve_scattering(build_global_basis(p, e));
            EXPECT_LE(std::abs(s.R + s.T - 1.0), 1e-8) << name << " E=" << e;
        }
}

TEST(Scattering, AgreesWithDirectIntegration) {
    for (const auto& [name, p] : testpot::suite())
        for (double e : {0.35, 1.3, 2.9}) {
            const auto s = solve_scattering(build_global_basis(p, e));
            const auto o = oracle::direct_scatter(p, e);
            EXPECT_NEAR(s.T, o.T, 1e-6) << name;
            EXPECT_NEAR(s.R, o.R, 1e-6) << name;
        }
}

TEST(Scattering, UnequalLeads) {
    const auto p = testpot::mixed_chain();
    ASSERT_NE(p.lead_left(), p.lead_right());
    for (double e : {0.3, 0.8, 2.2}) {
        const auto s = solve_scattering(build_global_basis(p, e));
        EXPECT_NEAR(s.k_right, std::sqrt(2.0 * (e - p.lead_right())), 1e-15);
        EXPECT_LE(std::abs(s.R + s.T - 1.0), 1e-8);
        EXPECT_NEAR(s.T, oracle::direct_scatter(p, e).T, 1e-6);
    }
}

TEST(Scattering, ClosedChannelRaises) {
    const auto g = build_global_basis(testpot::mixed_chain(), 0.1);
    EXPECT_THROW(solve_scattering(g), InputError);
    EXPECT_THROW(design_amplitudes(g), InputError);
}

TEST(Scattering, IncomingFromRightMirrorsBarrier) {
    const auto g = build_global_basis(testpot::barrier(1.0, 1.0), 0.7);
    const auto s = solve_scattering(g, Incoming{0.0, 1.0});
    EXPECT_LE(std::abs(s.amplitudes.plus_left), 1e-12);
    EXPECT_LE(std::abs(s.amplitudes.minus_right - 1.0), 1e-12);
    EXPECT_NEAR(std::norm(s.amplitudes.minus_left), barrier_T(1.0, 1.0, 0.7), 1e-9);
}

TEST(DesignAmplitudes, FreeSpaceDecomposition) {
    const auto p = testpot::free_space(2.0, 4);
    const double e = 1.1, k = std::sqrt(2.0 * e);
    const auto g = build_global_basis(p, e);
    const auto s = design_amplitudes(g);
    EXPECT_EQ(s.c, Vec2(1.0, 1.0));
    for (double x : {0.0, 2.0}) {
        const auto psi = evaluate_psi(g, s.c, x);
        const auto& a = s.amplitudes;
        const cplx plus = x == 0.0 ? a.plus_left : a.plus_right, minus = x == 0.0 ? a.minus_left : a.minus_right;
        EXPECT_LE(std::abs(plus * std::exp(kI * k * x) + minus * std::exp(-kI * k * x) - psi.value), 1e-10);
        EXPECT_LE(std::abs(kI * k * (plus * std::exp(kI * k * x) - minus * std::exp(-kI * k * x)) - psi.derivative), 1e-10);
    }
    // free space: left and right decompositions coincide
    EXPECT_LE(std::abs(s.amplitudes.plus_left - s.amplitudes.plus_right), 1e-10);
}

TEST(DesignAmplitudes, RoundTripThroughScattering) {
    for (const auto& [name, p] : testpot::suite())
        for (double e : {0.6, 2.4}) {
            const auto g = build_global_basis(p, e);
            const auto d = design_amplitudes(g);
            const auto s = solve_scattering(g, Incoming{d.amplitudes.plus_left, d.amplitudes.minus_right});
            EXPECT_LE((s.c - Vec2(1.0, 1.0)).cwiseAbs().maxCoeff(), 1e-8) << name;
        }
}

TEST(DesignAmplitudes, EvanescentLocalizationGrowsWithCells) {
    // strong lattice so that the decaying branch is negligible after 12 cells
    const double e = gap_energy(testpot::cosine_lattice(4, 2.5), 1, 4.0, 6.5);
    std::vector<double> ratio;
    double zmax = 0.0;
    for (int n : {12, 24}) {
        const auto p = testpot::cosine_lattice(n, 2.5);
        const auto g = build_global_basis(p, e);
        ASSERT_EQ(g.branch(1).lsb.transform.classification.kind, DomainClass::BlochEvanescent);
        zmax = std::max(std::abs(g.branch(1).lsb.transform.z_plus), std::abs(g.branch(1).lsb.transform.z_minus));
        const auto s = design_amplitudes(g);
        const auto psi0 = evaluate_psi(g, s.c, 0.0);
        const cplx right = evaluate_psi(g, s.c, static_cast<double>(n)).value;
        ratio.push_back(std::abs(right) / std::abs(psi0.value));
        // the same solution integrated in one pass
        const auto span = integrate_span(p, e, p.region(), unit_initial_conditions(0.0), 1e-12);
        const auto phi = span.eval(static_cast<double>(n));
        const cplx direct = psi0.value * phi[0].value + psi0.derivative * phi[1].value;
        EXPECT_LE(std::abs(direct - right), 1e-6 * std::abs(direct));
    }
    EXPECT_GT(zmax, 1.4);
    EXPECT_NEAR(ratio[1] / ratio[0], std::pow(zmax, 12), 1e-3 * std::pow(zmax, 12));
}

TEST(BoundStates, ParticleInABox) {
    const auto states = solve_bound_states(testpot::box(4), {1.0, 50.0}, BoundaryCondition::DirichletBox);
    ASSERT_EQ(states.size(), 3u);
    for (int n = 1; n <= 3; ++n) {
        const double exact = n * n * pi * pi / 2.0;
        EXPECT_LE(std::abs(states[n - 1].energy - exact) / exact, 1e-8);
        EXPECT_EQ(states[n - 1].nodes, n - 1);
        EXPECT_NEAR(states[n - 1].evaluate(0.0).value.real(), 0.0, 1e-8);
        EXPECT_NEAR(states[n - 1].evaluate(1.0).value.real(), 0.0, 1e-7);
    }
}

TEST(BoundStates, FiniteWellHasTwoAlternatingStates) {
    const auto p = testpot::square_well(2.0, 1.0);
    const auto states = solve_bound_states(p, {0.01, 1.99}, BoundaryCondition::DecayingLeads);
    const auto direct = oracle::direct_bound_states(p, {0.01, 1.99}, oracle::Boundary::Decaying, 800);
    ASSERT_EQ(states.size(), 2u);
    ASSERT_EQ(direct.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_LE(std::abs(states[i].energy - direct[i]) / direct[i], 1e-8);
        EXPECT_EQ(states[i].nodes, static_cast<int>(i));
        const double parity = i % 2 == 0 ? 1.0 : -1.0;
        for (double x : {0.2, 0.55, 0.9}) {
            const auto a = states[i].evaluate(-x), b = states[i].evaluate(x);
            EXPECT_NEAR(b.value.real(), parity * a.value.real(), 1e-7);
            // pure Q vanishes for a state that respects the symmetry
            const auto pc = pure_currents(a, b, -1, 1);
            EXPECT_LE(std::abs(pc.Q), 1e-7);
            EXPECT_EQ(pc.J, 0.0);
        }
    }
    // even ground state: k tan k = kappa with k^2 + kappa^2 = 4
    const double k = std::sqrt(2.0 * states[0].energy);
    EXPECT_NEAR(k * std::tan(k), std::sqrt(4.0 - k * k), 1e-7);
}

TEST(BoundStates, EmptyRangeGivesNoStates) {
    EXPECT_TRUE(solve_bound_states(testpot::box(2), {0.5, 4.0}, BoundaryCondition::DirichletBox).empty());
}

TEST(BoundStates, BadRangeRaises) {
    EXPECT_THROW(solve_bound_states(testpot::box(2), {4.0, 1.0}, BoundaryCondition::DirichletBox), InputError);
    EXPECT_THROW(solve_bound_states(testpot::square_well(), {0.1, 3.0}, BoundaryCondition::DecayingLeads), InputError);
}

TEST(BoundStates, NormalisedAndSatisfyBoundaryConditions) {
    const auto p = testpot::bound_chain();
    const auto states = solve_bound_states(p, {-2.0, 0.49}, BoundaryCondition::DecayingLeads);
    ASSERT_GE(states.size(), 1u);
    const auto direct = oracle::direct_bound_states(p, {-2.0, 0.49}, oracle::Boundary::Decaying, 1000);
    ASSERT_EQ(direct.size(), states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& s = states[i];
        EXPECT_LE(std::abs(s.energy - direct[i]), 1e-8 * std::max(1.0, std::abs(direct[i])));
        EXPECT_LE(s.imag_residual, 1e-6);
        const double kap = std::sqrt(2.0 * (0.5 - s.energy));
        const auto l = s.evaluate(-1.0), r = s.evaluate(4.0);
        EXPECT_LE(std::abs(l.derivative - kap * l.value), 1e-6);
        EXPECT_LE(std::abs(r.derivative + kap * r.value), 1e-6);
        // unit norm including the exponential tails
        double sum = 0.0;
        const int n = 4000;
        for (int j = 0; j <= n; ++j) {
            const double x = -1.0 + 5.0 * j / n, w = (j == 0 || j == n) ? 0.5 : 1.0;
            sum += w * std::pow(s.evaluate(x).value.real(), 2) * 5.0 / n;
        }
        sum += (std::norm(l.value) + std::norm(r.value)) / (2.0 * kap);
        EXPECT_NEAR(sum, 1.0, 1e-5);
    }
}

TEST(PureCurrents, BoundStateHasNoCurrent) {
    const auto states = solve_bound_states(testpot::square_well(), {0.01, 1.99}, BoundaryCondition::DecayingLeads);
    ASSERT_FALSE(states.empty());
    const auto a = states[0].evaluate(-0.4), b = states[0].evaluate(0.4);
    const auto pc = pure_currents(a, b, -1, 1);
    EXPECT_EQ(pc.J, 0.0);
    EXPECT_LE(std::abs(pc.Q - pc.Q_tilde), 1e-15);
    try {
        map_pure(pc, a);
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("mapping undefined at zero current"), std::string::npos);
    }
}

TEST(PureCurrents, BasisMappingSurvivesZeroCurrent) {
    const auto p = testpot::gauss_pair_lattice(4);
    const auto bp = PotentialSpec(p.domains(), 2.5, 2.5);
    const auto states = solve_bound_states(bp, {-1.0, 2.4}, BoundaryCondition::DecayingLeads);
    ASSERT_FALSE(states.empty());
    const auto& s = states.front();
    for (int d : {1, 2}) {
        const Mat2 q = domain_q_xi(s.basis, d);
        const auto& dom = bp.domain(d);
        const Interval r = transform_region(dom);
        for (int i = 0; i < 10; ++i) {
            const double x = r.lo + r.length() * (i + 0.5) / 10.0, xb = transform_point(dom.transform, x);
            const auto xi = eval_global(s.basis, x), xib = eval_global(s.basis, xb);
            const Vec2 m = q * Vec2(xi[0].value, xi[1].value);
            for (int k = 0; k < 2; ++k) EXPECT_LE(std::abs(m(k) - xib[k].value), 1e-7 * std::max(1.0, std::abs(xib[k].value)));
            const cplx psi_b = s.c(0) * m(0) + s.c(1) * m(1);
            EXPECT_NEAR(psi_b.real(), s.evaluate(xb).value.real(), 1e-7);
        }
    }
}

TEST(PureCurrents, HermitianRelationForScattering) {
    for (const auto& [name, p] : testpot::suite()) {
        const auto g = build_global_basis(p, 1.3);
        const auto s = solve_scattering(g);
        for (const auto& d : p.domains()) {
            if (!d.symmetric()) continue;
            const Interval r = transform_region(d);
            std::vector<cplx> qs;
            for (int i = 0; i < 20; ++i) {
                const double x = r.lo + r.length() * (i + 0.5) / 20.0;
                const auto pc = pure_currents(evaluate_psi(g, s.c, x), evaluate_psi(g, s.c, transform_point(d.transform, x)),
                                              d.sigma(), d.index);
                EXPECT_LE(std::abs(std::norm(pc.Q_tilde) - std::norm(pc.Q) - d.sigma() * pc.J * pc.J), 1e-9) << name;
                qs.push_back(pc.Q);
            }
            for (const auto& q : qs) EXPECT_LE(std::abs(q - qs.front()), 1e-8) << name << " domain " << d.index;
        }
    }
}

TEST(PureCurrents, SymmetricIncidenceOnSymmetricPotential) {
    const auto p = testpot::barrier(1.0, 1.0);
    const double e = 0.8, k = std::sqrt(2.0 * e);
    const auto g = build_global_basis(p, e);
    const auto s = solve_scattering(g, Incoming{1.0, std::exp(kI * k)});
    for (double x : {0.05, 0.3, 0.45}) {
        const auto pc = pure_currents(evaluate_psi(g, s.c, x), evaluate_psi(g, s.c, 1.0 - x), -1, 1);
        EXPECT_LE(std::abs(pc.Q), 1e-8);
    }
}

TEST(PureCurrents, MappingPredictsImagePoint) {
    const auto p = testpot::gauss_pair_lattice(8);
    const auto g = build_global_basis(p, 2.1);
    const auto s = solve_scattering(g);
    for (const auto& d : p.domains()) {
        const Interval r = transform_region(d);
        const double x0 = r.lo + 0.3 * r.length();
        const auto pc = pure_currents(evaluate_psi(g, s.c, x0), evaluate_psi(g, s.c, transform_point(d.transform, x0)),
                                      d.sigma(), d.index);
        for (int i = 0; i < 10; ++i) {
            const double x = r.lo + r.length() * (i + 0.5) / 10.0;
            const cplx predicted = map_pure(pc, evaluate_psi(g, s.c, x));
            const cplx actual = evaluate_psi(g, s.c, transform_point(d.transform, x)).value;
            EXPECT_LE(std::abs(predicted - actual), 1e-7 * std::max(1.0, std::abs(actual)));
        }
    }
}

TEST(PureCurrents, PlaneWaveTranslationPhase) {
    const double k = 1.7, L = 0.8, x = 0.35;
    auto wave = [&](double y) { return StateVector{std::exp(kI * k * y), kI * k * std::exp(kI * k * y), y}; };
    const auto pc = pure_currents(wave(x), wave(x + L), +1);
    EXPECT_NEAR(pc.J, k, 1e-14);
    EXPECT_LE(std::abs(pc.Q), 1e-14);
    const auto psi = wave(1.1);
    EXPECT_LE(std::abs(map_pure(pc, psi) - std::exp(kI * k * L) * psi.value), 1e-13);
}

TEST(ProfileDesign, GaussianGivesHarmonicWell) {
    SampledProfile chi;
    for (int i = 0; i <= 40; ++i) {
        const double x = -2.0 + 0.1 * i;
        chi.x.push_back(x);
        chi.value.push_back(std::exp(-x * x));
        chi.second_derivative.push_back((4.0 * x * x - 2.0) * std::exp(-x * x));
    }
    const auto v = potential_from_profile(chi, 0.37);
    for (std::size_t i = 0; i < v.x.size(); ++i) EXPECT_NEAR(v.v[i], 0.37 + 2.0 * v.x[i] * v.x[i] - 1.0, 1e-12);
}

TEST(ProfileDesign, ConstantProfileGivesFlatPotential) {
    const SampledProfile chi{{0.0, 0.5, 1.0}, {2.0, 2.0, 2.0}, {0.0, 0.0, 0.0}};
    for (double v : potential_from_profile(chi, -0.6).v) EXPECT_EQ(v, -0.6);
}

TEST(ProfileDesign, RoundTripThroughIntegrator) {
    const double e = 0.9;
    SampledProfile chi;
    const int n = 2000;
    for (int i = 0; i <= n; ++i) {
        const double x = -2.0 + 4.0 * i / n;
        chi.x.push_back(x);
        chi.value.push_back(std::exp(-x * x));
        chi.second_derivative.push_back((4.0 * x * x - 2.0) * std::exp(-x * x));
    }
    const auto v = potential_from_profile(chi, e);
    const PotentialSpec p({DomainSpec::plain({-2.0, 2.0}, CellProfile::samples(v.x, v.v))}, v.v.front(), v.v.back());
    const auto span = integrate_span(p, e, {-2.0, 2.0}, unit_initial_conditions(-2.0), 1e-12);
    const double c0 = std::exp(-4.0), d0 = 4.0 * std::exp(-4.0);
    for (double x = -2.0; x <= 2.0; x += 0.05) {
        const auto phi = span.eval(x);
        EXPECT_NEAR((c0 * phi[0].value + d0 * phi[1].value).real(), std::exp(-x * x), 1e-7) << x;
    }
}

TEST(ProfileDesign, NodeRaises) {
    const SampledProfile chi{{-1.0, 0.0, 1.0}, {-1.0, 0.0, 1.0}, {0.0, 0.0, 0.0}};
    try {
        potential_from_profile(chi, 0.0);
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("profile has (near-)node"), std::string::npos);
    }
    EXPECT_THROW(potential_from_profile(SampledProfile{{0.0}, {1.0}, {}}, 0.0), InputError);
}

TEST(Conventions, ReferenceDomainIndependence) {
    const auto p = testpot::mixed_chain();
    for (double e : {0.4, 1.7}) {
        const auto base = solve_scattering(build_global_basis(p, e, 1));
        for (int ref = 2; ref <= p.domain_count(); ++ref) {
            const auto s = solve_scattering(build_global_basis(p, e, ref));
            EXPECT_NEAR(s.T, base.T, 1e-9);
            EXPECT_NEAR(s.R, base.R, 1e-9);
            EXPECT_LE(std::abs(s.t - base.t), 1e-9);
        }
    }
    const auto bp = testpot::bound_chain();
    BoundOptions o1, o2;
    o2.reference_domain = 2;
    const auto s1 = solve_bound_states(bp, {-2.0, 0.49}, BoundaryCondition::DecayingLeads, 0, o1);
    const auto s2 = solve_bound_states(bp, {-2.0, 0.49}, BoundaryCondition::DecayingLeads, 0, o2);
    ASSERT_EQ(s1.size(), s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i) EXPECT_NEAR(s1[i].energy, s2[i].energy, 1e-9);
}

TEST(Conventions, RowRescalingIndependence) {
    const auto p = testpot::mixed_chain();
    BuildOptions scaled;
    scaled.row_scales = {{cplx(3.0, -1.0), cplx(0.01, 0.0)}, {cplx(-2.0, 0.5), cplx(0.0, 7.0)}, {1.0, 1.0}, {cplx(1e3, 0.0), 1e-3}};
    scaled.row_scales.resize(p.domain_count(), {cplx(1.0), cplx(1.0)});
    for (double e : {0.4, 1.7}) {
        const auto a = solve_scattering(build_global_basis(p, e));
        const auto b = solve_scattering(build_global_basis(p, e, 1, scaled));
        EXPECT_NEAR(a.T, b.T, 1e-9);
        EXPECT_NEAR(a.R, b.R, 1e-9);
    }
}

TEST(LocalCoefficients, ReproduceSolutionInCell) {
    const auto p = testpot::gauss_pair_lattice(6);
    const auto g = build_global_basis(p, 1.5);
    const auto s = solve_scattering(g);
    const auto& dom = p.domain(2);
    for (int l : {1, 3, 6}) {
        const auto a = local_coefficients(g, s.c, 2, l);
        const double x = cell_bounds(dom, l).lo + 0.37;
        const auto phi = eval_basis(g.branch(2).lsb.first_cell, to_first_cell(dom, l, x));
        EXPECT_LE(std::abs(a(0) * phi[0].value + a(1) * phi[1].value - evaluate_psi(g, s.c, x).value), 1e-9);
    }
}
