#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "qha/cohen.hpp"
#include "test_support.hpp"

using namespace qha;
using qha::testing::random_matrix;
using qha::testing::random_vector;
using qha::testing::rel;

namespace {

Vec unit(Vec v) { return v / v.norm(); }

double max_abs_diff(const GroupFunction& a, const GroupFunction& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(const GroupFunction& a) {
    double m = 0.0;
    for (const auto& v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

// Basis centred on omega = 16 so that moderate shifts never reach the truncation edge.
struct Centered {
    Representation rep = Representation::affine(HilbertBasis::affine_default());
    GridPtr grid = rep.lattice_grid(Box::chart(-1, 1, -1, 1), 16);
    Vec psi = log_gaussian(rep.basis(), 16.0, 0.3, 0.2);
    Vec phi = log_gaussian(rep.basis(), 18.0, 0.25, -0.4);
    Vec xi = log_gaussian(rep.basis(), 14.0, 0.35, 0.1);
};

}  // namespace

TEST(CohenMap, RankOneWindowGivesSpectrogram) {
    Centered c;
    const auto q = cohen_map(rank_one(c.rep.basis(), c.xi, c.xi), c.psi, c.psi, c.grid, c.rep).values;
    for (std::size_t i = 0; i < c.grid->size(); ++i) {
        const double expected = std::norm(inner(c.psi, c.rep.apply_adjoint(c.grid->node(i), c.xi)));
        EXPECT_NEAR(q[i].real(), expected, 1e-12);
        EXPECT_NEAR(q[i].imag(), 0.0, 1e-12);
    }

    const auto cyc = Representation::cyclic(12);
    const auto full = full_cyclic_grid(12);
    const Vec a = cyclic_gaussian(cyc.basis(), 4, 2), b = cyclic_gaussian(cyc.basis(), 7, 1.5, 3);
    const auto qc = cohen_map(rank_one(cyc.basis(), b, b), a, a, full, cyc).values;
    for (std::size_t i = 0; i < full->size(); ++i)
        EXPECT_NEAR(qc[i].real(), std::norm(inner(a, cyc.apply_adjoint(full->node(i), b))), 1e-13);
}

TEST(CohenMap, ZeroVectorGivesZero) {
    std::mt19937_64 rng(51);
    Centered c;
    const Operator s(c.rep.basis(), random_matrix(rng, 256, 256));
    const auto q = cohen_map(s, Vec::Zero(256), c.phi, c.grid, c.rep).values;
    EXPECT_EQ(max_abs(q), 0.0);
    EXPECT_EQ(cohen_map(s, Vec::Zero(256), c.phi, c.grid, c.rep).sup_bound, 0.0);
}

TEST(CohenMap, SupBound) {
    std::mt19937_64 rng(52);
    Centered c;
    const Operator s(c.rep.basis(), random_matrix(rng, 256, 256));
    const auto m = cohen_map(s, c.psi, c.phi, c.grid, c.rep);
    EXPECT_LE(max_abs(m.values), m.sup_bound + 1e-9);

    const auto cyc = Representation::cyclic(10);
    const Operator sc(cyc.basis(), random_matrix(rng, 10, 10));
    const auto mc = cohen_map(sc, random_vector(rng, 10), random_vector(rng, 10), full_cyclic_grid(10), cyc);
    EXPECT_LE(max_abs(mc.values), mc.sup_bound + 1e-9);
}

TEST(CohenMap, TotalMassOnDefaultGrid) {
    const auto rep = Representation::affine(HilbertBasis::affine_default());
    const auto& b = rep.basis();
    const auto grid = rep.lattice_grid(Box::affine(-4, 4, std::exp(-2.0), std::exp(2.0)), 128);
    const Vec a1 = log_gaussian(b, 1.2, 0.3, 0.1), a2 = log_gaussian(b, 1.4, 0.28, -0.2);
    const Operator s = rank_one(b, a1, a1) + 0.5 * rank_one(b, a2, a2);
    const Vec psi = 1.7 * log_gaussian(b, 1.3, 0.3, 0.0);
    const cplx mass = cohen_map(s, psi, psi, grid, rep).values.integral_r();
    const cplx expected = psi.squaredNorm() * trace(rep.apply_duflo_inv(s));
    EXPECT_LT(rel(mass, expected), 2e-2);

    std::mt19937_64 rng(53);
    const auto cyc = Representation::cyclic(16);
    const Operator sc(cyc.basis(), random_matrix(rng, 16, 16));
    const Vec u = random_vector(rng, 16), v = random_vector(rng, 16);
    const cplx mc = cohen_map(sc, u, v, full_cyclic_grid(16), cyc).values.integral_r();
    EXPECT_LT(rel(mc, inner(u, v) * trace(sc)), 1e-10);
}

TEST(Scalogram, NonnegativeAndMatchesDirectInnerProducts) {
    Centered c;
    const auto q = scalogram(c.xi, c.psi, c.grid, c.rep).values;
    const auto direct = scalogram_direct(c.xi, c.psi, c.grid, c.rep);
    for (std::size_t i = 0; i < q.size(); ++i) {
        EXPECT_GE(q[i].real(), -1e-15);
        EXPECT_NEAR(q[i].real(), direct[i].real(), 1e-12);
    }
    EXPECT_THROW(scalogram(Vec::Zero(256), c.psi, c.grid, c.rep), Error);
}

TEST(Scalogram, CovarianceOnLatticeShifts) {
    Centered c;
    const auto& group = c.rep.group();
    for (const auto& x : {GroupPoint::affine_chart(0.3, 2 * c.rep.basis().delta()),
                          GroupPoint::affine_chart(-0.7, -5 * c.rep.basis().delta())}) {
        const auto moved = scalogram(c.xi, c.rep.apply(x, c.psi), c.grid, c.rep).values;
        double worst = 0.0;
        for (std::size_t i = 0; i < c.grid->size(); ++i) {
            const auto yx = group.compose(c.grid->node(i), x);
            const double expected = std::norm(inner(c.xi, c.rep.apply(yx, c.psi)));
            worst = std::max(worst, std::abs(moved[i].real() - expected));
        }
        EXPECT_LE(worst, 1e-8);
    }

    const auto cyc = Representation::cyclic(9);
    const auto full = full_cyclic_grid(9);
    const Vec a = cyclic_gaussian(cyc.basis(), 2, 1.5), b = cyclic_gaussian(cyc.basis(), 6, 2, 1);
    const auto x = GroupPoint::cyclic(4, 7, 9);
    const auto moved = scalogram(b, cyc.apply(x, a), full, cyc).values;
    const auto base = scalogram(b, a, full, cyc).values;
    for (std::size_t i = 0; i < full->size(); ++i) {
        const auto yx = cyc.group().compose(full->node(i), x);
        EXPECT_NEAR(moved[i].real(), base[full->index(yx.j(), yx.k())].real(), 1e-13);
    }
}

TEST(PositiveExpansion, RankOneHasSingleTerm) {
    Centered c;
    const auto e = positive_expansion(rank_one(c.rep.basis(), c.xi, c.xi), c.psi, c.grid, c.rep);
    ASSERT_EQ(e.terms.size(), 1u);
    EXPECT_NEAR(e.weights[0], c.xi.squaredNorm(), 1e-12);
}

TEST(PositiveExpansion, WeightsSumToTraceAndTermsRecombine) {
    Centered c;
    const auto& b = c.rep.basis();
    const Operator s = 0.7 * rank_one(b, c.xi, c.xi) + 0.3 * rank_one(b, c.phi, c.phi);
    const auto e = positive_expansion(s, c.psi, c.grid, c.rep);
    ASSERT_EQ(e.terms.size(), 2u);
    double total = 0.0;
    for (double w : e.weights) total += w;
    EXPECT_NEAR(total, trace(s).real(), 1e-10);
    EXPECT_LE(max_abs_diff(e.total, cohen_map(s, c.psi, c.psi, c.grid, c.rep).values), 1e-9);

    std::mt19937_64 rng(54);
    const auto cyc = Representation::cyclic(8);
    const Operator sc = qha::testing::random_positive(rng, cyc.basis(), 3);
    const auto ec = positive_expansion(sc, random_vector(rng, 8), full_cyclic_grid(8), cyc);
    total = 0.0;
    for (double w : ec.weights) total += w;
    EXPECT_NEAR(total, trace(sc).real(), 1e-10 * trace(sc).real());

    EXPECT_THROW(positive_expansion(-1.0 * s, c.psi, c.grid, c.rep), Error);
}

TEST(CohenMap, LinearInWindow) {
    std::mt19937_64 rng(55);
    Centered c;
    const Operator s(c.rep.basis(), random_matrix(rng, 256, 256)), t(c.rep.basis(), random_matrix(rng, 256, 256));
    const cplx a(0.3, -1.1), bb(2.0, 0.5);
    const auto lhs = cohen_map(a * s + bb * t, c.psi, c.phi, c.grid, c.rep).values;
    auto rhs = cohen_map(s, c.psi, c.phi, c.grid, c.rep).values;
    rhs *= a;
    auto rt = cohen_map(t, c.psi, c.phi, c.grid, c.rep).values;
    rt *= bb;
    rhs += rt;
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12 * std::max(1.0, max_abs(lhs)));
}

TEST(CohenMap, RealityAndPositivityFollowTheWindow) {
    std::mt19937_64 rng(56);
    Centered c;
    const Mat h = random_matrix(rng, 256, 256);
    const Operator herm(c.rep.basis(), h + h.adjoint());
    const auto q = cohen_map(herm, c.psi, c.psi, c.grid, c.rep).values;
    const double scale = std::max(1.0, max_abs(q));
    for (const auto& v : q.values()) EXPECT_LE(std::abs(v.imag()), 1e-12 * scale);

    const auto pos = qha::testing::random_positive(rng, c.rep.basis(), 5);
    const auto qp = cohen_map(pos, c.psi, c.psi, c.grid, c.rep).values;
    for (const auto& v : qp.values()) EXPECT_GE(v.real(), -1e-12 * std::max(1.0, max_abs(qp)));
}

TEST(CohenMap, RandomProbeDetectsIndefiniteWindow) {
    // Finite falsification probe for the converse: an operator with a negative
    // eigenvalue yields a negative distribution value for some random vector.
    std::mt19937_64 rng(57);
    const auto cyc = Representation::cyclic(8);
    const auto full = full_cyclic_grid(8);
    Mat d = Mat::Zero(8, 8);
    d.diagonal() << 1, 1, 1, 1, 1, 1, 1, -0.5;
    const Mat u = Eigen::HouseholderQR<Mat>(random_matrix(rng, 8, 8)).householderQ();
    const Operator s(cyc.basis(), u * d * u.adjoint());
    double lowest = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 64; ++trial) {
        const Vec psi = random_vector(rng, 8);
        for (const auto& v : cohen_map(s, psi, psi, full, cyc).values.values()) lowest = std::min(lowest, v.real());
    }
    EXPECT_LT(lowest, 0.0);
}

TEST(CohenMap, ConvolvedWindowIsReflectedFunctionConvolution) {
    // Q_{f*S}(x) = sum_y w_y f(y) Q_S(y x), which is f~ * Q_S with f~(y) = f(y^-1);
    // for symmetric f this is f * Q_S.
    std::mt19937_64 rng(58);
    const long n = 10;
    const auto cyc = Representation::cyclic(n);
    const auto full = full_cyclic_grid(n);
    const auto& group = cyc.group();
    const Operator s(cyc.basis(), random_matrix(rng, n, n));
    const Vec psi = random_vector(rng, n), phi = random_vector(rng, n);
    std::normal_distribution<double> g;
    const auto f = GroupFunction::sample(full, [&](const GroupPoint&) { return cplx(g(rng), g(rng)); });
    const auto reflected = GroupFunction::sample(full, [&](const GroupPoint& p) { return f.eval(group.inverse(p)); });

    const auto base = cohen_map(s, psi, phi, full, cyc).values;
    const auto lhs = cohen_map(func_op_convolve(f, s, cyc), psi, phi, full, cyc).values;
    EXPECT_LE(max_abs_diff(lhs, convolve_functions(reflected, base)), 1e-10 * max_abs(lhs));

    auto sym = f;
    sym += reflected;
    const auto lhs_sym = cohen_map(func_op_convolve(sym, s, cyc), psi, phi, full, cyc).values;
    EXPECT_LE(max_abs_diff(lhs_sym, convolve_functions(sym, base)), 1e-10 * max_abs(lhs_sym));
}

TEST(Uncertainty, FullWindowHoldsTrivially) {
    Centered c;
    const auto r = uncertainty_check(rank_one(c.rep.basis(), c.xi, c.xi), c.psi, c.grid->window(), c.grid, c.rep);
    EXPECT_TRUE(r.bound_holds);
    EXPECT_NEAR(r.measure, c.grid->total_weight(), 1e-12);
    EXPECT_THROW(uncertainty_check(rank_one(c.rep.basis(), c.xi, c.xi), 2.0 * c.psi, c.grid->window(), c.grid, c.rep),
                 Error);
}

TEST(Uncertainty, ShrinkingBoxSweep) {
    const auto rep = Representation::affine(HilbertBasis::affine_default());
    const auto& b = rep.basis();
    const auto grid = rep.lattice_grid(Box::affine(-4, 4, std::exp(-2.0), std::exp(2.0)), 128);
    const Vec xi = log_gaussian(b, 1.2, 0.3), psi = log_gaussian(b, 1.2, 0.3, 0.1);
    const Operator s = rank_one(b, xi, xi);
    std::vector<Box> boxes;
    for (int step = 0; step < 10; ++step) {
        const double h = 2.0 * std::pow(0.7, step);
        boxes.push_back(Box::chart(-h, h, -h, h));
    }
    const auto reports = uncertainty_sweep(s, psi, boxes, grid, rep);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        EXPECT_TRUE(reports[i].bound_holds) << "step " << i;
        EXPECT_GE(reports[i].epsilon, -1e-9);
        if (i > 0) {
            EXPECT_LE(reports[i].measure, reports[i - 1].measure);
        }
    }
    EXPECT_NEAR(uncertainty_check(s, psi, boxes[4], grid, rep).mass, reports[4].mass, 1e-14);
}

TEST(Uncertainty, CyclicProjectionExactCount) {
    const long n = 12;
    const auto cyc = Representation::cyclic(n);
    const auto full = full_cyclic_grid(n);
    const Vec xi = unit(cyclic_gaussian(cyc.basis(), 3, 1.2)), psi = unit(cyclic_gaussian(cyc.basis(), 3, 1.2, 1));
    const Operator s = rank_one(cyc.basis(), xi, xi);
    for (long h = n - 1; h >= 0; --h) {
        const auto r = uncertainty_check(s, psi, Box::chart(0, static_cast<double>(h), 0, static_cast<double>(h)), full, cyc);
        EXPECT_NEAR(r.measure, static_cast<double>((h + 1) * (h + 1)) / static_cast<double>(n), 1e-12);
        EXPECT_TRUE(r.bound_holds);
    }
}
