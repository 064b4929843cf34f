#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qha/grid.hpp"

using namespace qha;

TEST(HaarGrid, AffineUnitBoxWeightsSumToMeasure) {
    const auto grid = build_grid(Box::affine(0, 1, 1, std::exp(1.0)), 64, GroupModel::affine());
    EXPECT_EQ(grid->size(), 64u * 64u);
    EXPECT_NEAR(grid->total_weight(), 1.0, 1e-3);
    for (double w : grid->weights_r()) EXPECT_GE(w, 0.0);
}

TEST(HaarGrid, AffineNodesAreGeometricInA) {
    const auto grid = build_grid(Box::affine(-1, 1, 0.5, 2), 8, 4, GroupModel::affine());
    const double ratio = grid->node(grid->index(0, 1)).a() / grid->node(grid->index(0, 0)).a();
    for (std::size_t iu = 1; iu < grid->nu(); ++iu)
        EXPECT_NEAR(grid->node(grid->index(3, iu)).a() / grid->node(grid->index(3, iu - 1)).a(), ratio, 1e-12);
}

TEST(HaarGrid, CyclicFullLattice) {
    const auto grid = full_cyclic_grid(32);
    EXPECT_EQ(grid->size(), 32u * 32u);
    // Haar weight 1/N per point.
    EXPECT_NEAR(grid->total_weight(), 32.0, 1e-12);
}

TEST(HaarGrid, RejectsDegenerateResolution) {
    EXPECT_THROW(build_grid(Box::affine(0, 1, 1, 2), 1, 8, GroupModel::affine()), Error);
    EXPECT_THROW(build_grid(Box::affine(0, 1, 1, 2), 8, 1, GroupModel::affine()), Error);
    EXPECT_THROW(build_grid(Box::chart(0, 1, 0, 0), 8, GroupModel::affine()), Error);
    EXPECT_THROW(build_grid(Box::chart(0, 1, 0, std::nan("")), 8, GroupModel::affine()), Error);
}

TEST(HaarGrid, LeftWeightsFromModularFunction) {
    const auto grid = build_grid(Box::affine(-2, 3, 0.2, 5), 20, 30, GroupModel::affine());
    const auto derived = grid->weights_l();
    const auto direct = grid->weights_l_direct();
    for (std::size_t i = 0; i < grid->size(); ++i) {
        EXPECT_NEAR(derived[i], direct[i], 1e-10 * direct[i]);
        EXPECT_NEAR(derived[i] / grid->weight_r(i), 1.0 / grid->node(i).a(), 1e-12 / grid->node(i).a());
    }
}

TEST(HaarGrid, RightInvariantQuadrature) {
    const auto group = GroupModel::affine();
    const auto grid = build_grid(Box::chart(-6, 6, -3, 3), 192, 192, group);
    auto bump = [](const GroupPoint& p) {
        const double x = p.x() - 0.3, u = p.u() + 0.2;
        return std::exp(-x * x / 0.5 - u * u / 0.3);
    };
    double plain = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) plain += grid->weight_r(i) * bump(grid->node(i));
    for (const auto& h : {GroupPoint::affine(0.4, std::exp(2 * grid->hu())), GroupPoint::affine(-0.25, 1.0),
                          GroupPoint::affine(0.0, std::exp(-5 * grid->hu()))}) {
        double shifted = 0.0;
        for (std::size_t i = 0; i < grid->size(); ++i)
            shifted += grid->weight_r(i) * bump(group.compose(grid->node(i), h));
        EXPECT_NEAR(shifted, plain, 1e-3 * plain);
    }
}

TEST(Indicator, FullAndEmptyWindows) {
    const auto grid = build_grid(Box::affine(-1, 1, 0.5, 2), 16, GroupModel::affine());
    const auto all = indicator(grid->window(), grid);
    for (auto v : all.values()) EXPECT_EQ(v, cplx(1.0));
    const auto none = indicator(Box::empty(), grid);
    for (auto v : none.values()) EXPECT_EQ(v, cplx(0.0));
}

TEST(Indicator, UnitBoxMass) {
    const auto grid = build_grid(Box::affine(-1, 2, 0.5, 4), 96, 128, GroupModel::affine());
    const auto chi = indicator(Box::affine(0, 1, 1, std::exp(1.0)), grid);
    EXPECT_NEAR(chi.integral_r().real(), 1.0, 1e-2);
    const auto fine = build_grid(Box::affine(-1, 2, 0.5, 4), 960, 1280, GroupModel::affine());
    EXPECT_NEAR(indicator(Box::affine(0, 1, 1, std::exp(1.0)), fine).integral_r().real(), 1.0, 1e-3);
}

TEST(Convolution, ZeroFunction) {
    const auto grid = build_grid(Box::affine(-1, 1, 0.5, 2), 12, GroupModel::affine());
    const GroupFunction zero(grid);
    const auto g = indicator(Box::affine(0, 1, 1, 2), grid);
    const auto out = convolve_functions(zero, g);
    for (auto v : out.values()) EXPECT_EQ(v, cplx(0.0));
}

TEST(Convolution, CyclicDeltaIsNeutral) {
    const long n = 16;
    const auto grid = full_cyclic_grid(n);
    GroupFunction delta(grid);
    delta[grid->index(0, 0)] = static_cast<double>(n);  // unit mass at the identity
    const auto out = convolve_functions(delta, delta);
    for (std::size_t i = 0; i < grid->size(); ++i) EXPECT_NEAR(std::abs(out[i] - delta[i]), 0.0, 1e-12);
}

TEST(Convolution, CyclicMatchesDirectSum) {
    const long n = 8;
    const auto grid = full_cyclic_grid(n);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> d;
    auto f = GroupFunction::sample(grid, [&](const GroupPoint&) { return cplx(d(rng), d(rng)); });
    auto g = GroupFunction::sample(grid, [&](const GroupPoint&) { return cplx(d(rng), d(rng)); });
    const auto out = convolve_functions(f, g);
    for (long j = 0; j < n; ++j)
        for (long k = 0; k < n; ++k) {
            cplx acc = 0;
            for (long jj = 0; jj < n; ++jj)
                for (long kk = 0; kk < n; ++kk)
                    acc += f[grid->index(jj, kk)] * g[grid->index(((j - jj) % n + n) % n, ((k - kk) % n + n) % n)] /
                           static_cast<double>(n);
            EXPECT_NEAR(std::abs(out[grid->index(j, k)] - acc), 0.0, 1e-12);
        }
}

TEST(Convolution, AffineBoxesObeyYoung) {
    const auto group = GroupModel::affine();
    const Box window = Box::chart(-2, 4, -1.5, 2.5);
    const Box a = Box::chart(0, 1, 0, 0.75);
    const Box b = Box::chart(-0.5, 0.5, -0.25, 0.5);
    const auto grid = build_grid(window, 96, 64, group);
    const auto f = indicator(a, grid);
    const auto g = indicator(b, grid);
    const auto conv = convolve_functions(f, g);
    const double lhs = conv.norm_r(1.0);
    const double bound = f.norm_r(1.0) * g.norm_r(1.0);
    EXPECT_LE(lhs, bound * (1 + 1e-3));

    // Nonnegative integrands: Young's bound is an equality for the exact integral.
    EXPECT_NEAR(lhs, group.right_haar_measure(a) * group.right_haar_measure(b), 1e-3);

    // Independent oracle: double quadrature with exact box membership at twice
    // the resolution (first order in the cell size because of the box edges).
    const auto fine = build_grid(window, 192, 128, group);
    double oracle = 0.0;
    std::vector<std::size_t> in_a;
    for (std::size_t i = 0; i < fine->size(); ++i) {
        const auto c = fine->chart(i);
        if (a.contains(c[0], c[1])) in_a.push_back(i);
    }
    for (std::size_t xi = 0; xi < fine->size(); ++xi) {
        const auto& x = fine->node(xi);
        double acc = 0.0;
        for (auto yi : in_a) {
            const auto z = group.compose(x, group.inverse(fine->node(yi)));
            if (b.contains(z.x(), z.u())) acc += fine->weight_r(yi);
        }
        oracle += fine->weight_r(xi) * acc;
    }
    EXPECT_NEAR(lhs, oracle, 5e-2 * oracle);
}

TEST(Convolution, GridMismatchIsAnError) {
    const auto g1 = build_grid(Box::affine(-1, 1, 0.5, 2), 12, GroupModel::affine());
    const auto g2 = build_grid(Box::affine(-1, 1, 0.5, 2), 12, GroupModel::affine());
    EXPECT_THROW(convolve_functions(GroupFunction(g1), GroupFunction(g2)), Error);
}

TEST(GridCsv, RoundTrip) {
    const auto grid = build_grid(Box::affine(-1, 1, 0.5, 2), 5, 3, GroupModel::affine());
    std::stringstream buf;
    grid->write_csv(buf);
    const auto rows = read_grid_csv(buf);
    ASSERT_EQ(rows.size(), grid->size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].c0, grid->node(i).x());
        EXPECT_EQ(rows[i].c1, grid->node(i).a());
        EXPECT_EQ(rows[i].weight, grid->weight_r(i));
    }
    std::stringstream bad("x,a,weight\n1,2\n");
    EXPECT_THROW(read_grid_csv(bad), Error);
}
