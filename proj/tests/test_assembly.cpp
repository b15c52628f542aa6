#include "test_potentials.hpp"

#include <gtest/gtest.h>

using namespace lsbwave;

namespace {
BasisState states(cplx v1, cplx d1, cplx v2, cplx d2, double x = 0.0) {
    return {StateVector{v1, d1, x}, StateVector{v2, d2, x}};
}

double boundary_jump(const GlobalBasis& g, int d, int l_left, int d_right, int l_right, double x) {
    const auto a = eval_branch(g, d, l_left, x), b = eval_branch(g, d_right, l_right, x);
    double worst = 0.0;
    for (int m = 0; m < 2; ++m) {
        const double scale = std::max(1.0, std::abs(a[m].value) + std::abs(a[m].derivative));
        worst = std::max(worst, (std::abs(a[m].value - b[m].value) + std::abs(a[m].derivative - b[m].derivative)) / scale);
    }
    return worst;
}

/// Three domains: inversion pair, 4-cell lattice, unsymmetric defect.
PotentialSpec three_domains() {
    return PotentialSpec({DomainSpec::inversion({-1.0, 1.0}, CellProfile::gaussian(0.9, -0.5, 0.2)),
                          DomainSpec::translation({1.0, 5.0}, 4, CellProfile::cosine(0.6, 1.0, 0.3, 0.2)),
                          DomainSpec::plain({5.0, 5.7}, CellProfile::linear(-2.0, 0.5))},
                         0.0, 0.0);
}
}  // namespace

TEST(MatchingMatrix, IdenticalBasesGiveIdentity) {
    const auto s = states(cplx(0.3, 0.1), 1.2, cplx(-0.4, 0.0), cplx(0.2, 0.5));
    EXPECT_TRUE(matching_matrix(s, s).entries.isApprox(Mat2::Identity(), 1e-14));
}

TEST(MatchingMatrix, LinearCombinationIsRecovered) {
    Mat2 a;
    a << cplx(1.0, 2.0), 0.5, cplx(0.0, -1.0), 3.0;
    const auto right = states(1.0, cplx(0.2, 0.3), cplx(0.5, -0.1), 2.0);
    const Vec2 v = a * Vec2(right[0].value, right[1].value), d = a * Vec2(right[0].derivative, right[1].derivative);
    const auto left = states(v(0), d(0), v(1), d(1));
    EXPECT_TRUE(matching_matrix(left, right).entries.isApprox(a, 1e-13));
}

TEST(MatchingMatrix, BarrierEdgeWronskians) {
    // (cos x, sin x) on the left meets (cosh x, sinh x) on the right at x = 0, k = kappa = 1
    const auto left = states(std::cos(0.0), -std::sin(0.0), std::sin(0.0), std::cos(0.0));
    const auto right = states(std::cosh(0.0), std::sinh(0.0), std::sinh(0.0), std::cosh(0.0));
    // W^{L,R}_{1,2} = 1, W^{R,L}_{1,1} = 0, W^{L,R}_{2,2} = 0, W^{R,L}_{1,2} = 1, W^{R,R}_{1,2} = 1
    EXPECT_NEAR(std::abs(wronskian(left[0], right[1]) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(wronskian(right[0], left[0])), 0.0, 1e-15);
    const auto m = matching_matrix(left, right).entries;
    EXPECT_TRUE(m.isApprox(Mat2::Identity(), 1e-15));
}

TEST(MatchingMatrix, DegenerateRightBasisRaises) {
    const auto right = states(1.0, 2.0, 2.0, 4.0);
    try {
        matching_matrix(states(1.0, 0.0, 0.0, 1.0), right, 3);
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_EQ(e.domain(), 3);
        EXPECT_NE(std::string(e.what()).find("degenerate right basis"), std::string::npos);
    }
}

TEST(BuildGlobalBasis, SingleFreeDomainEqualsChi) {
    const auto p = testpot::free_space(3.0, 3);
    const auto g = build_global_basis(p, 0.8);
    for (double x : {0.2, 1.5, 2.9}) {
        const auto xi = eval_global(g, x);
        const auto chi = propagate_chi(g.branch(1).lsb, locate_cell(p.domain(1), x), x);
        EXPECT_EQ(xi[0].value, chi[0].value);
        EXPECT_EQ(xi[1].value, chi[1].value);
    }
}

TEST(BuildGlobalBasis, IdenticalFreeDomainsMatchTrivially) {
    const PotentialSpec p({DomainSpec::translation({0.0, 2.0}, 2, CellProfile::constant(0.0)),
                           DomainSpec::translation({2.0, 4.0}, 2, CellProfile::constant(0.0))},
                          0.0, 0.0);
    const auto g = build_global_basis(p, 1.3);
    ASSERT_EQ(g.interfaces().size(), 1u);
    // the second domain's first-cell basis starts at x = 2 from unit data, so
    // the interface matrix is a fixed similarity; xi stays a plane-wave pair
    for (int l = 1; l <= 2; ++l) {
        const Mat2 G = g.propagation_matrix(2, l);
        EXPECT_LE(std::abs(G(0, 1)), 1e-9 * std::abs(G(0, 0)));
        EXPECT_LE(std::abs(G(1, 0)), 1e-9 * std::abs(G(1, 1)));
    }
}

TEST(BuildGlobalBasis, ContinuityAtAllInternalBoundaries) {
    const auto p = three_domains();
    for (double e : {0.3, 1.1, 2.6})
        for (int ref : {1, 2, 3}) {
            const auto g = build_global_basis(p, e, ref);
            for (const auto& d : p.domains()) {
                for (int l = 1; l < d.cell_count; ++l)
                    EXPECT_LE(boundary_jump(g, d.index, l, d.index, l + 1, cell_bounds(d, l).hi), 1e-7);
                if (d.index < p.domain_count()) {
                    EXPECT_LE(boundary_jump(g, d.index, d.cell_count, d.index + 1, 1, d.bounds.hi), 1e-7);
                }
            }
        }
}

TEST(BuildGlobalBasis, AgreesWithSinglePassIntegration) {
    const auto p = three_domains();
    const double e = 1.1;
    const auto g = build_global_basis(p, e);
    const auto span = integrate_span(p, e, p.region(), unit_initial_conditions(p.region().lo), 1e-11);
    // xi = A phi for a constant A fixed at x_0
    const auto xi0 = eval_global(g, p.region().lo);
    Mat2 A;
    A << xi0[0].value, xi0[0].derivative, xi0[1].value, xi0[1].derivative;
    for (double x = -1.0; x <= 5.7; x += 0.173) {
        const auto xi = eval_global(g, x);
        const auto phi = span.eval(x);
        const Vec2 v = A * Vec2(phi[0].value, phi[1].value);
        for (int m = 0; m < 2; ++m)
            EXPECT_LE(std::abs(xi[m].value - v(m)), 1e-7 * std::max(1.0, std::abs(v(m)))) << "x=" << x;
    }
}

TEST(EvalGlobal, ReferenceDomainEqualsChi) {
    const auto p = three_domains();
    const auto g = build_global_basis(p, 0.9, 2);
    for (double x : {1.2, 2.5, 4.8}) {
        const auto xi = eval_global(g, x);
        const auto chi = propagate_chi(g.branch(2).lsb, locate_cell(p.domain(2), x), x);
        EXPECT_LE(std::abs(xi[0].value - chi[0].value), 1e-14);
        EXPECT_LE(std::abs(xi[1].derivative - chi[1].derivative), 1e-14);
    }
}

TEST(EvalGlobal, OutsideRegionRaises) {
    const auto g = build_global_basis(three_domains(), 0.9);
    EXPECT_THROW(eval_global(g, -1.5), InputError);
    EXPECT_THROW(eval_global(g, 6.0), InputError);
}

TEST(EvalGlobal, LatticeCellFourIsScaledFirstCell) {
    const auto p = testpot::cosine_lattice(6);
    const auto g = build_global_basis(p, 2.4);
    const auto& lsb = g.branch(1).lsb;
    ASSERT_EQ(lsb.transform.classification.kind, DomainClass::BlochPropagating);
    const auto span = integrate_span(p, 2.4, {0.0, 6.0}, unit_initial_conditions(0.0));
    for (double f : {0.2, 0.6}) {
        const auto xi = eval_global(g, 3.0 + f);
        const auto first = eval_global(g, f);
        const cplx z3 = std::pow(lsb.transform.z_plus, 3);
        EXPECT_LE(std::abs(xi[0].value - z3 * first[0].value), 1e-12);
        EXPECT_NEAR(std::abs(xi[0].value), std::abs(first[0].value), 1e-12);
        const auto phi = span.eval(3.0 + f);
        const cplx direct = lsb.S(0, 0) * phi[0].value + lsb.S(0, 1) * phi[1].value;
        EXPECT_LE(std::abs(xi[0].value - direct), 1e-8);
    }
}

TEST(DomainQXi, ReferenceDomainIsDiagonal) {
    const auto p = three_domains();
    const auto g = build_global_basis(p, 1.4, 2);
    EXPECT_TRUE(domain_q_xi(g, 2).isApprox(g.branch(2).lsb.q_chi, 1e-14));
    EXPECT_THROW(domain_q_xi(g, 3), InputError);
}

TEST(DomainQXi, SimilarityPreservesTraceAndDeterminant) {
    const auto p = three_domains();
    const auto g = build_global_basis(p, 1.4, 3);
    for (int d : {1, 2}) {
        const Mat2 q = domain_q_xi(g, d), qc = g.branch(d).lsb.q_chi;
        EXPECT_LE(std::abs(q.trace() - qc.trace()), 1e-9);
        EXPECT_LE(std::abs(q.determinant() - qc.determinant()), 1e-9);
    }
}

TEST(DomainQXi, MapsXiAcrossSymmetricDomains) {
    const auto p = three_domains();
    const auto g = build_global_basis(p, 1.4, 3);
    for (int d : {1, 2}) {
        const auto& dom = p.domain(d);
        const Mat2 q = domain_q_xi(g, d);
        const Interval r = transform_region(dom);
        for (int i = 0; i < 20; ++i) {
            const double x = r.lo + r.length() * (i + 0.5) / 20.0;
            const double xb = transform_point(dom.transform, x);
            const auto a = eval_global(g, x), b = eval_global(g, xb);
            const Vec2 m = q * Vec2(a[0].value, a[1].value);
            for (int k = 0; k < 2; ++k) EXPECT_LE(std::abs(m(k) - b[k].value), 1e-7 * std::max(1.0, std::abs(b[k].value)));
        }
    }
}

TEST(AssemblyProperties, ForwardAndBackwardBasesSpanTheSameSpace) {
    const auto p = three_domains();
    const auto g1 = build_global_basis(p, 0.7, 1), g3 = build_global_basis(p, 0.7, 3);
    // xi3 = A xi1 with A from Wronskian ratios; A must be position independent
    auto coeffs = [&](double x) {
        const auto a = eval_global(g1, x), b = eval_global(g3, x);
        const cplx w = wronskian(a[0], a[1]);
        Mat2 A;
        for (int m = 0; m < 2; ++m) {
            A(m, 0) = wronskian(b[m], a[1]) / w;
            A(m, 1) = wronskian(a[0], b[m]) / w;
        }
        return A;
    };
    const Mat2 A0 = coeffs(-0.9);
    for (double x : {-0.2, 0.8, 2.3, 4.4, 5.5}) EXPECT_LE((coeffs(x) - A0).cwiseAbs().maxCoeff(), 1e-7 * A0.cwiseAbs().maxCoeff());
    EXPECT_GT(std::abs(A0.determinant()), 1e-8);
}

TEST(AssemblyProperties, OdeWorkIndependentOfCellCount) {
    const auto small = build_global_basis(testpot::gauss_pair_lattice(4), 1.9);
    const auto large = build_global_basis(testpot::gauss_pair_lattice(256), 1.9);
    EXPECT_EQ(small.ode_steps(), large.ode_steps());
}

TEST(AssemblyProperties, DeterminantOfPropagationMatrices) {
    const auto p = three_domains();
    for (int ref : {1, 3}) {
        const auto g = build_global_basis(p, 1.9, ref);
        for (const auto& d : p.domains()) {
            const auto& b = g.branch(d.index);
            for (int l = 1; l <= d.cell_count; ++l) {
                const double sign = (d.sigma() == -1 && (l - b.anchor) % 2 != 0) ? -1.0 : 1.0;
                EXPECT_LE(std::abs(g.propagation_matrix(d.index, l).determinant() - b.matcher.determinant() * sign),
                          1e-9 * std::abs(b.matcher.determinant()));
            }
        }
    }
}

TEST(AssemblyProperties, ReferenceDomainOutOfRangeRaises) {
    EXPECT_THROW(build_global_basis(three_domains(), 1.0, 4), InputError);
    EXPECT_THROW(build_global_basis(three_domains(), 1.0, 0), InputError);
}

TEST(AssemblyProperties, ParallelDomainBuildsMatchSequential) {
    BuildOptions opt;
    opt.parallel_domains = true;
    const auto a = build_global_basis(three_domains(), 1.2, 2, opt);
    const auto b = build_global_basis(three_domains(), 1.2, 2);
    for (double x : {-0.5, 3.3, 5.6}) EXPECT_EQ(eval_global(a, x)[0].value, eval_global(b, x)[0].value);
}
