#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "qha/group.hpp"

using namespace qha;

namespace {

GroupPoint random_affine(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> x(-3, 3), u(-2, 2);
    return GroupPoint::affine(x(rng), std::exp(u(rng)));
}

void expect_near(const GroupPoint& p, double c0, double c1, double tol) {
    EXPECT_NEAR(p.coords[0], c0, tol);
    EXPECT_NEAR(p.coords[1], c1, tol);
}

}  // namespace

TEST(AffineGroup, IdentityIsNeutral) {
    const auto g = GroupModel::affine();
    const auto p = GroupPoint::affine(-2.5, 0.3);
    EXPECT_EQ(g.compose(g.identity(), p), p);
    EXPECT_EQ(g.compose(p, g.identity()), p);
}

TEST(AffineGroup, ComposeFollowsLaw) {
    const auto g = GroupModel::affine();
    expect_near(g.compose(GroupPoint::affine(1, 2), GroupPoint::affine(3, 4)), 7, 8, 0);
}

TEST(AffineGroup, InverseCancels) {
    const auto g = GroupModel::affine();
    std::mt19937_64 rng(1);
    for (int t = 0; t < 32; ++t) {
        const auto p = random_affine(rng);
        expect_near(g.compose(p, GroupPoint::affine(-p.x() / p.a(), 1 / p.a())), 0, 1, 1e-12);
        expect_near(g.compose(p, g.inverse(p)), 0, 1, 1e-12);
        expect_near(g.compose(g.inverse(p), p), 0, 1, 1e-12);
    }
}

TEST(AffineGroup, Associative) {
    const auto g = GroupModel::affine();
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        const auto a = random_affine(rng), b = random_affine(rng), c = random_affine(rng);
        const auto l = g.compose(g.compose(a, b), c);
        const auto r = g.compose(a, g.compose(b, c));
        EXPECT_NEAR(l.x(), r.x(), 1e-10);
        EXPECT_NEAR(l.a(), r.a(), 1e-10 * l.a());
    }
}

TEST(AffineGroup, DensityIdentityAndModular) {
    const auto g = GroupModel::affine();
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const auto p = random_affine(rng);
        // d mu_r(p) = Delta(p^-1) d mu_l(p)
        EXPECT_NEAR(g.right_haar_density(p), g.modular(g.inverse(p)) * g.left_haar_density(p),
                    1e-12 * g.right_haar_density(p));
        EXPECT_DOUBLE_EQ(g.right_haar_density(p), 1 / p.a());
        EXPECT_DOUBLE_EQ(g.left_haar_density(p), 1 / (p.a() * p.a()));
    }
    // Delta is a homomorphism into the positive reals.
    const auto a = GroupPoint::affine(1, 3), b = GroupPoint::affine(-2, 0.25);
    EXPECT_NEAR(g.modular(g.compose(a, b)), g.modular(a) * g.modular(b), 1e-15);
}

TEST(AffineGroup, RightHaarMeasureOfBoxes) {
    const auto g = GroupModel::affine();
    EXPECT_NEAR(g.right_haar_measure(Box::affine(0, 1, 1, std::exp(1.0))), 1.0, 1e-15);
    EXPECT_EQ(g.right_haar_measure(Box::empty()), 0.0);
    EXPECT_EQ(g.right_haar_measure(Box::affine(0, 0, 1, 2)), 0.0);
    const Box omega = Box::affine(-0.5, 1.5, 0.5, 3.0);
    for (double r : {1.0, 2.0, 4.0, 8.0, 0.5})
        EXPECT_NEAR(g.right_haar_measure(g.scale_set(omega, r)), r * r * g.right_haar_measure(omega), 1e-12);
}

TEST(AffineGroup, ScaleSet) {
    const auto g = GroupModel::affine();
    const Box omega = Box::affine(0, 1, 1, std::exp(1.0));
    EXPECT_EQ(g.scale_set(omega, 1.0), omega);
    const Box twice = g.scale_set(omega, 2.0);
    EXPECT_DOUBLE_EQ(twice.x1, 2.0);
    EXPECT_NEAR(std::exp(twice.u1), std::exp(2.0), 1e-12);
    EXPECT_NEAR(g.right_haar_measure(twice), 4.0, 1e-12);
    const Box back = g.scale_set(g.scale_set(omega, 3.0), 1.0 / 3.0);
    EXPECT_NEAR(back.x0, omega.x0, 1e-15);
    EXPECT_NEAR(back.x1, omega.x1, 1e-15);
    EXPECT_NEAR(back.u0, omega.u0, 1e-15);
    EXPECT_NEAR(back.u1, omega.u1, 1e-15);
    EXPECT_THROW(g.scale_set(omega, -1.0), Error);
}

TEST(AffineGroup, ScaleMapMatchesBoxImage) {
    const auto g = GroupModel::affine();
    const auto p = g.scale_map(GroupPoint::affine(0.5, std::exp(0.25)), 4.0);
    EXPECT_NEAR(p.x(), 2.0, 1e-15);
    EXPECT_NEAR(p.u(), 1.0, 1e-15);
}

TEST(AffineGroup, MetricIsSymmetricAndSatisfiesTriangle) {
    const auto g = GroupModel::affine();
    std::mt19937_64 rng(4);
    for (int t = 0; t < 200; ++t) {
        const auto a = random_affine(rng), b = random_affine(rng), c = random_affine(rng);
        EXPECT_DOUBLE_EQ(g.metric(a, b), g.metric(b, a));
        EXPECT_EQ(g.metric(a, a), 0.0);
        EXPECT_LE(g.metric(a, c), g.metric(a, b) + g.metric(b, c) + 1e-12);
    }
}

TEST(AffineGroup, RejectsInvalidPoints) {
    EXPECT_THROW(GroupPoint::affine(0, 0), Error);
    EXPECT_THROW(GroupPoint::affine(0, -1), Error);
    EXPECT_THROW(Box::affine(0, 1, -1, 2), Error);
}

TEST(CyclicPhaseSpace, LawIsExact) {
    const auto g = GroupModel::cyclic(32);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<long> d(-100, 100);
    for (int t = 0; t < 100; ++t) {
        const auto a = GroupPoint::cyclic(d(rng), d(rng), 32);
        const auto b = GroupPoint::cyclic(d(rng), d(rng), 32);
        const auto c = GroupPoint::cyclic(d(rng), d(rng), 32);
        EXPECT_EQ(g.compose(g.compose(a, b), c), g.compose(a, g.compose(b, c)));
        EXPECT_EQ(g.compose(a, g.inverse(a)), g.identity());
        EXPECT_EQ(g.compose(a, g.identity()), a);
        EXPECT_EQ(g.modular(a), 1.0);
        EXPECT_EQ(g.right_haar_density(a), g.left_haar_density(a));
    }
}

TEST(CyclicPhaseSpace, CanonicalIndices) {
    const auto p = GroupPoint::cyclic(-1, 65, 32);
    EXPECT_EQ(p.j(), 31);
    EXPECT_EQ(p.k(), 1);
}

TEST(CyclicPhaseSpace, BoxMeasureCountsPoints) {
    const auto g = GroupModel::cyclic(32);
    EXPECT_DOUBLE_EQ(g.right_haar_measure(Box::chart(0, 31, 0, 31)), 32.0);
    EXPECT_DOUBLE_EQ(g.right_haar_measure(Box::chart(2, 5, 0, 0)), 4.0 / 32.0);
    EXPECT_DOUBLE_EQ(g.right_haar_measure(Box::chart(3, 2, 0, 0)), 0.0);
}

TEST(CyclicPhaseSpace, AffineOnlyOperationsAreUnsupported) {
    const auto g = GroupModel::cyclic(8);
    try {
        g.scale_set(Box::chart(0, 1, 0, 1), 2.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::unsupported);
    }
}

TEST(GroupModel, BackendMismatchIsAnError) {
    const auto g = GroupModel::affine();
    try {
        g.compose(GroupPoint::cyclic(1, 1, 8), GroupPoint::affine(0, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::backend_mismatch);
    }
}
