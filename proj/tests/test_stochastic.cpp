#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "torsionlab/stochastic.hpp"

using namespace torsionlab;

TEST(Wos, DiskCentreIsExact) {
    // the first sphere is the boundary itself
    const DomainSpec disk(Disk{{0.0, 0.0}, 1.0});
    const Point x{0.0, 0.0};
    const auto est = wos_torsion(disk, x, 2000, default_eps_shell(disk), 7);
    EXPECT_EQ(est.n_walks, 2000u);
    EXPECT_EQ(est.discarded, 0u);
    EXPECT_NEAR(est.mean, 0.25, 1e-15);
}

TEST(Wos, OffCentreDisk) {
    const DomainSpec disk(Disk{{0.0, 0.0}, 1.0});
    const Point x{0.5, 0.3};
    const auto est = wos_torsion(disk, x, 20000, 1e-4, 3);
    const double exact = (1 - 0.25 - 0.09) / 4;
    EXPECT_LT(std::abs(est.mean - exact), 3 * est.stderr_ + 1e-3);
}

TEST(Wos, BallCentre) {
    const DomainSpec ball(Disk{{0.0, 0.0, 0.0}, 2.0});
    const Point x{0.0, 0.0, 0.0};
    const auto est = wos_torsion(ball, x, 20000, 1e-4, 5);
    EXPECT_LT(std::abs(est.mean - 4.0 / 6.0), 3 * est.stderr_ + 1e-3);
}

TEST(Wos, WideShellStopsAfterOneStep) {
    const DomainSpec disk(Disk{{0.0, 0.0}, 1.0});
    const Point x{0.0, 0.0};
    const auto est = wos_torsion(disk, x, 100, 1.0, 1);
    EXPECT_DOUBLE_EQ(est.mean, 0.25);
    EXPECT_DOUBLE_EQ(est.mean_steps, 1.0);
    EXPECT_DOUBLE_EQ(est.stderr_, 0.0);
}

TEST(Wos, DeterministicAcrossThreadCounts) {
    const DomainSpec sq(Box{{1.0, 1.0}});
    const Point x{0.3, 0.6};
    const auto a = wos_torsion(sq, x, 5000, 1e-4, 99, {100000, 1});
    const auto b = wos_torsion(sq, x, 5000, 1e-4, 99, {100000, 4});
    const auto c = wos_torsion(sq, x, 5000, 1e-4, 99, {100000, 1});
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.stderr_, b.stderr_);
    EXPECT_EQ(a.mean, c.mean);
    const auto d = wos_torsion(sq, x, 5000, 1e-4, 100);
    EXPECT_NE(a.mean, d.mean);
}

TEST(Wos, StepCapDiscardsWalks) {
    const DomainSpec sq(Box{{1.0, 1.0}});
    const Point x{0.5, 0.5};
    const auto est = wos_torsion(sq, x, 200, 1e-6, 1, {12, 1});
    EXPECT_GT(est.discarded, 0u);
    EXPECT_GT(est.n_walks, 0u);
    EXPECT_EQ(est.discarded + est.n_walks, 200u);
    EXPECT_THROW((void)wos_torsion(sq, x, 200, 1e-12, 1, {1, 1}), ConvergenceError);
}

TEST(Wos, RejectsBadInput) {
    const DomainSpec disk(Disk{{0.0, 0.0}, 1.0});
    EXPECT_THROW((void)wos_torsion(disk, Point{2.0, 0.0}, 10, 1e-3, 1), InvalidArgument);
    EXPECT_THROW((void)wos_torsion(disk, Point{0.0, 0.0}, 10, 0.0, 1), InvalidArgument);
    EXPECT_THROW((void)wos_torsion(disk, Point{0.0, 0.0}, 0, 1e-3, 1), InvalidArgument);
}

TEST(Survival, SquareMatchesFiniteDifference) {
    const DomainSpec sq(Box{{1.0, 1.0}});
    const Point x{0.5, 0.5};
    const double h = 1.0 / 64;
    const auto s = survival_torsion(sq, x, h, 1e-3, 1.0);
    const auto tor = solve_torsion(assemble_dirichlet(build_grid(sq, h)), SolverOptions{});
    const auto op = assemble_dirichlet(build_grid(sq, h));
    const auto k = *op.grid->nearest_node(x);
    EXPECT_NEAR(s.value, tor.values[k], 0.01 * tor.values[k]);
    EXPECT_NEAR(s.value, 0.0736713, 0.01 * 0.0736713);
    EXPECT_LT(s.tail, 0.05 * s.value);
}

TEST(Survival, CurveIsMonotone) {
    const DomainSpec sq(Box{{1.0, 1.0}});
    const auto s = survival_torsion(sq, Point{0.25, 0.5}, 1.0 / 32, 2e-3, 1.0);
    ASSERT_EQ(s.t.size(), s.u.size());
    ASSERT_EQ(s.t.size(), s.steps + 1);
    EXPECT_DOUBLE_EQ(s.u.front(), 1.0);
    for (std::size_t i = 1; i < s.u.size(); ++i) {
        EXPECT_LE(s.u[i], s.u[i - 1] + 1e-12);
        EXPECT_GE(s.u[i], -1e-12);
    }
}

TEST(Survival, SlenderRectangle) {
    const DomainSpec rect(Box{{1.0, 10.0}});
    const auto s = survival_torsion(rect, Point{0.5, 5.0}, 1.0 / 32, 1e-3, 0.5);
    EXPECT_NEAR(s.value, 0.125, 0.02 * 0.125);
}

TEST(Survival, ZeroHorizonIsPureTail) {
    const DomainSpec sq(Box{{1.0, 1.0}});
    SurvivalOptions o;
    o.max_tail_fraction = 1.0;
    const auto s = survival_torsion(sq, Point{0.5, 0.5}, 1.0 / 16, 1e-3, 0.0, o);
    EXPECT_DOUBLE_EQ(s.integral, 0.0);
    EXPECT_NEAR(s.value, 1.0 / s.lambda, 1e-14);
    EXPECT_THROW((void)survival_torsion(sq, Point{0.5, 0.5}, 1.0 / 16, 1e-3, 0.0), InvalidArgument);
}

TEST(Survival, TailCorrectionAndLongHorizon) {
    // the quadrature telescopes, so a long horizon reproduces the discrete
    // torsion to round-off plus the (tiny) tail
    const DomainSpec sq(Box{{1.0, 1.0}});
    const double h = 1.0 / 16, dt = 0.01, tmax = 0.3;
    const auto op = assemble_dirichlet(build_grid(sq, h));
    SurvivalOptions o;
    o.max_tail_fraction = 1.0;
    const auto a = survival_torsion(sq, Point{0.5, 0.5}, h, dt, tmax, o);
    const auto b = survival_torsion(sq, Point{0.5, 0.5}, h, dt, 3.0, o);
    const auto tor = solve_torsion(op, SolverOptions{});
    const double v = tor.values[*op.grid->nearest_node(Point{0.5, 0.5})];
    EXPECT_LT(std::abs(b.value - v), 1e-4 * v);
    // tail correction removes nearly all of the truncation error
    EXPECT_LT(std::abs(a.value - v), 0.02 * v);
    EXPECT_GT(std::abs(a.integral - v), std::abs(a.value - v));
}

TEST(Survival, CsvOutput) {
    const DomainSpec sq(Box{{1.0, 1.0}});
    const auto s = survival_torsion(sq, Point{0.5, 0.5}, 1.0 / 8, 0.05, 1.0);
    std::ostringstream os;
    write_survival_csv(os, s);
    EXPECT_EQ(os.str().substr(0, 4), "t,u\n");
}

TEST(Survival, RejectsBadInput) {
    const DomainSpec sq(Box{{1.0, 1.0}});
    EXPECT_THROW((void)survival_torsion(sq, Point{0.5, 0.5}, 1.0 / 8, 0.03, 1.0), InvalidArgument);
    EXPECT_THROW((void)survival_torsion(sq, Point{1.5, 0.5}, 1.0 / 8, 0.05, 1.0), InvalidArgument);
    EXPECT_THROW((void)survival_torsion(sq, Point{0.5, 0.5}, 1.0 / 8, -1.0, 1.0), InvalidArgument);
}
