#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "torsionlab/discretize.hpp"

using namespace torsionlab;

namespace {

void expect_symmetric(const SparseOperator& op) {
    for (std::size_t i = 0; i < op.n; ++i)
        for (std::size_t p = op.row_ptr[i]; p < op.row_ptr[i + 1]; ++p) {
            const auto j = static_cast<std::size_t>(op.col[p]);
            ASSERT_NEAR(op.val[p], op.at(j, i), 1e-12 * std::abs(op.val[p])) << i << "," << j;
        }
}

double fold_group_order(int m) {
    double g = std::ldexp(1.0, m);
    for (int k = 2; k <= m; ++k) g *= k;
    return g;
}

} // namespace

TEST(BuildGrid, UnitSquareQuarterSpacing) {
    const auto g = build_grid(DomainSpec(Box{{1.0, 1.0}}), 0.25);
    ASSERT_EQ(g.size(), 9u);
    for (double t : g.theta) EXPECT_DOUBLE_EQ(t, 1.0);
    const auto op = assemble_dirichlet(g);
    // centre node couples to four neighbours
    const auto c = *g.nearest_node(Point{0.5, 0.5});
    EXPECT_DOUBLE_EQ(op.at(c, c), 64.0);
    EXPECT_EQ(op.row_ptr[c + 1] - op.row_ptr[c], 5u);
    const auto corner = *g.nearest_node(Point{0.25, 0.25});
    EXPECT_DOUBLE_EQ(op.at(corner, corner), 64.0);
    EXPECT_FALSE(g.folded());
    expect_symmetric(op);
}

TEST(BuildGrid, DiskCutCells) {
    const auto g = build_grid(DomainSpec(Disk{{0.0, 0.0}, 1.0}), 0.5);
    ASSERT_EQ(g.size(), 9u);
    const auto i = *g.nearest_node(Point{0.5, 0.5});
    // +x arm reaches the circle at sqrt(3)/2
    EXPECT_NEAR(g.theta[i * 4 + 1], (std::sqrt(0.75) - 0.5) / 0.5, 1e-14);
    EXPECT_TRUE(g.boundary_adjacent(i));
    const auto op = assemble_dirichlet(g);
    expect_symmetric(op);
    const double th = (std::sqrt(0.75) - 0.5) / 0.5;
    EXPECT_NEAR(op.at(i, i), 4.0 * (2.0 + 2.0 / th), 1e-12);

    const auto single = assemble_dirichlet(build_grid(DomainSpec(Disk{{0.0, 0.0}, 0.5}), 0.5));
    ASSERT_EQ(single.n, 1u);
    EXPECT_DOUBLE_EQ(single.at(0, 0), 16.0);
}

TEST(BuildGrid, ThetaFloorDropsNearBoundaryNodes) {
    EXPECT_EQ(build_grid(DomainSpec(Box{{1.0 + 1e-9, 1.0}}), 0.25).size(), 9u);
    const auto g = build_grid(DomainSpec(Box{{1.0 + 1e-3, 1.0}}), 0.25);
    ASSERT_EQ(g.size(), 12u);
    const auto i = *g.nearest_node(Point{1.0, 0.5});
    EXPECT_NEAR(g.theta[i * 4 + 1], 1e-3 / 0.25, 1e-9);
}

TEST(BuildGrid, DiscreteSquareEigenvalueMatchesClosedForm) {
    // 5-point Laplacian on the unit square, h = 1/4: lowest eigenvector is
    // sin(pi x) sin(pi y), eigenvalue (8/h^2) sin^2(pi h / 2).
    const double h = 0.25;
    const auto op = assemble_dirichlet(build_grid(DomainSpec(Box{{1.0, 1.0}}), h));
    std::vector<double> u(op.n);
    for (std::size_t i = 0; i < op.n; ++i) {
        const auto x = op.grid->position(i);
        u[i] = std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]);
    }
    const auto au = op.apply_physical(u);
    const double lam = 8.0 / (h * h) * std::pow(std::sin(std::numbers::pi * h / 2), 2);
    for (std::size_t i = 0; i < op.n; ++i) EXPECT_NEAR(au[i], lam * u[i], 1e-12);
}

TEST(BuildGrid, QuadraticConsistencyAwayFromBoundary) {
    const auto op = assemble_dirichlet(build_grid(DomainSpec(Disk{{0.1, -0.2}, 1.0}), 1.0 / 16));
    std::vector<double> u(op.n);
    for (std::size_t i = 0; i < op.n; ++i) {
        const auto x = op.grid->position(i);
        u[i] = x[0] * x[0] + 3 * x[1] * x[1];
    }
    const auto au = op.apply_physical(u);
    for (std::size_t i = 0; i < op.n; ++i)
        if (!op.grid->boundary_adjacent(i)) EXPECT_NEAR(au[i], -8.0, 1e-9);
}

TEST(BuildGrid, UnresolvableHoles) {
    const auto perf = make_perforated_cube(2, 1.0, 4, 0.01);
    try {
        (void)build_grid(perf, 0.003);
        FAIL() << "expected UnresolvableFeature";
    } catch (const UnresolvableFeature& e) {
        EXPECT_NEAR(e.max_admissible_h(), 0.0025, 1e-15);
    }
    EXPECT_NO_THROW((void)build_grid(perf, 0.0025));
    EXPECT_THROW((void)build_grid(DomainSpec(Box{{1.0, 1.0}}), 0.25, GridOptions{true}), InvalidArgument);
    EXPECT_THROW((void)build_grid(DomainSpec(Box{{1.0, 1.0}}), 0.0), InvalidArgument);
}

TEST(FoldedGrid, OrbitWeightsCountUnfoldedNodes) {
    for (int m : {2, 3}) {
        const auto perf = make_perforated_cube(m, 1.0, 2, 0.1);
        const double h = m == 2 ? 0.02 : 0.025;
        const auto full = build_grid(perf, h);
        const auto fold = build_grid(perf, h, GridOptions{true});
        EXPECT_TRUE(fold.folded());
        double count = 0.0;
        for (double w : fold.weight) count += w * fold_group_order(m);
        EXPECT_NEAR(count, static_cast<double>(full.size()), 1e-9) << "m=" << m;
        EXPECT_LT(fold.size() * 4, full.size());
        expect_symmetric(assemble_dirichlet(fold));
    }
}

// The folded operator restricted to symmetric vectors acts like the full one.
TEST(FoldedGrid, ActsLikeFullOperatorOnSymmetricFunctions) {
    const auto perf = make_perforated_cube(2, 1.0, 2, 0.08);
    const double h = 0.02;
    const auto full = assemble_dirichlet(build_grid(perf, h));
    const auto fold = assemble_dirichlet(build_grid(perf, h, GridOptions{true}));
    const auto f = [](const Point& x) { return std::cos(3 * x[0]) * std::cos(3 * x[1]) + x[0] * x[0] * x[1] * x[1]; };
    std::vector<double> uf(full.n), uc(fold.n);
    for (std::size_t i = 0; i < full.n; ++i) uf[i] = f(full.grid->position(i));
    for (std::size_t i = 0; i < fold.n; ++i) uc[i] = f(fold.grid->position(i));
    const auto af = full.apply_physical(uf);
    const auto ac = fold.apply_physical(uc);
    for (std::size_t i = 0; i < fold.n; ++i) {
        const auto j = *full.grid->nearest_node(fold.grid->position(i));
        EXPECT_NEAR(ac[i], af[j], 1e-9 * std::abs(af[j]) + 1e-9);
    }
}

TEST(UnitCell, SpacingRoundsToFaces) {
    EXPECT_DOUBLE_EQ(unit_cell_spacing(1.0, 0.3), 0.25);
    EXPECT_DOUBLE_EQ(unit_cell_spacing(1.0, 0.25), 0.25);
    EXPECT_DOUBLE_EQ(unit_cell_spacing(0.1, 0.001), 0.001);
}

TEST(UnitCell, PureNeumannHasConstantNullVector) {
    for (bool fold : {false, true}) {
        const auto op = assemble_unit_cell(2, 1.0, 0.0, 0.1, GridOptions{fold});
        EXPECT_EQ(op.kind, BoundaryKind::mixed_neumann_dirichlet);
        expect_symmetric(op);
        const auto r = op.apply(op.sqrt_weight);
        for (double v : r) EXPECT_NEAR(v, 0.0, 1e-9);
    }
    // 11 x 11 nodes including the faces
    EXPECT_EQ(build_unit_cell_grid(2, 1.0, 0.0, 0.1).size(), 121u);
}

TEST(UnitCell, FoldMatchesFullWeights) {
    const auto full = build_unit_cell_grid(3, 1.0, 0.2, 0.05);
    const auto fold = build_unit_cell_grid(3, 1.0, 0.2, 0.05, GridOptions{true});
    double count = 0.0;
    for (double w : fold.weight) count += w * fold_group_order(3);
    double full_count = 0.0;
    for (double w : full.weight) full_count += w;
    EXPECT_NEAR(count, full_count, 1e-9);
}

TEST(UnitCell, RejectsBadParameters) {
    EXPECT_THROW((void)build_unit_cell_grid(2, 1.0, 0.5, 0.01), InvalidArgument);
    EXPECT_THROW((void)build_unit_cell_grid(2, 1.0, 0.01, 0.1), UnresolvableFeature);
    EXPECT_THROW((void)build_unit_cell_grid(1, 1.0, 0.1, 0.01), InvalidArgument);
}

TEST(Export, MatrixMarketAndGridCsv) {
    const auto op = assemble_dirichlet(build_grid(DomainSpec(Box{{1.0, 1.0}}), 0.25));
    std::ostringstream mm;
    write_matrix_market(mm, op);
    std::istringstream in(mm.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "%%MatrixMarket matrix coordinate real symmetric");
    std::getline(in, line);
    std::size_t rows, cols, nnz;
    in >> rows >> cols >> nnz;
    EXPECT_EQ(rows, 9u);
    EXPECT_EQ(nnz, 9u + 12u);

    std::ostringstream csv;
    write_grid_csv(csv, *op.grid);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "node,x0,x1,weight,theta0m,theta0p,theta1m,theta1p");
}
