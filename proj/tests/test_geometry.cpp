#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "torsionlab/geometry.hpp"

using namespace torsionlab;

namespace {

constexpr double pi = std::numbers::pi;

// Brute-force distance to an ellipse: dense angle scan followed by golden
// section refinement on the parametrisation.
double ellipse_distance_scan(double a, double b, double x, double y) {
    const auto f = [&](double t) { return std::hypot(a * std::cos(t) - x, b * std::sin(t) - y); };
    const int n = 20000;
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (f(2 * pi * i / n) < f(2 * pi * best / n)) best = i;
    double lo = 2 * pi * (best - 1) / n, hi = 2 * pi * (best + 1) / n;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 200; ++it) {
        const double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
        if (f(c) < f(d)) hi = d;
        else lo = c;
    }
    return f((lo + hi) / 2);
}

// Support-function width scan over directions.
double width_scan(const ConvexPolygon& p) {
    const auto extent = [&](double t) {
        const double ux = std::cos(t), uy = std::sin(t);
        double lo = 1e300, hi = -1e300;
        for (const auto& v : p.vertices) {
            lo = std::min(lo, v[0] * ux + v[1] * uy);
            hi = std::max(hi, v[0] * ux + v[1] * uy);
        }
        return hi - lo;
    };
    double w = 1e300;
    const int n = 200000;
    for (int i = 0; i < n; ++i) w = std::min(w, extent(pi * i / n));
    return w;
}

// Minimum over edges of the farthest vertex from the edge line.
double width_edges(const ConvexPolygon& p) {
    const auto& v = p.vertices;
    double w = 1e300;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& a = v[i];
        const auto& b = v[(i + 1) % v.size()];
        const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
        double far = 0.0;
        for (const auto& q : v)
            far = std::max(far, std::abs((b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])) / len);
        w = std::min(w, far);
    }
    return w;
}

ConvexPolygon regular_polygon(int k, double r) {
    ConvexPolygon p;
    for (int i = 0; i < k; ++i) p.vertices.push_back({r * std::cos(2 * pi * i / k), r * std::sin(2 * pi * i / k)});
    return p;
}

} // namespace

TEST(DomainSpec, RejectsInvalidShapes) {
    EXPECT_THROW(DomainSpec(Box{{1.0}}), InvalidArgument);
    EXPECT_THROW(DomainSpec(Box{{1.0, -1.0}}), InvalidArgument);
    EXPECT_THROW(DomainSpec(Disk{{0.0, 0.0}, 0.0}), InvalidArgument);
    EXPECT_THROW(DomainSpec(Ellipse{{0, 0}, 0.5, 1.0}), InvalidArgument);
    EXPECT_THROW(DomainSpec(ConvexPolygon{{{0, 0}, {1, 0}}}), InvalidArgument);
    // clockwise
    EXPECT_THROW(DomainSpec(ConvexPolygon{{{0, 0}, {0, 1}, {1, 0}}}), InvalidArgument);
    // reflex vertex
    EXPECT_THROW(DomainSpec(ConvexPolygon{{{0, 0}, {2, 0}, {1, 0.2}, {2, 2}, {0, 2}}}), InvalidArgument);
    EXPECT_THROW(make_perforated_cube(2, 1.0, 4, 0.125), InvalidArgument);
    EXPECT_THROW(make_perforated_cube(1, 1.0, 4, 0.01), InvalidArgument);
    EXPECT_NO_THROW(make_perforated_cube(2, 1.0, 4, 0.1249));
}

TEST(DomainSpec, VariantNamesAndDimension) {
    EXPECT_EQ(DomainSpec(Box{{1, 2, 3}}).dimension(), 3);
    EXPECT_EQ(DomainSpec(Box{{1, 2}}).variant_name(), "box");
    EXPECT_EQ(DomainSpec(Disk{{0, 0, 0, 0}, 1}).dimension(), 4);
    EXPECT_EQ(make_perforated_cube(3, 1, 2, 0.1).variant_name(), "perforated_cube");
    EXPECT_FALSE(make_perforated_cube(3, 1, 2, 0.1).is_convex());
}

TEST(Contains, OpenSets) {
    const DomainSpec box(Box{{1.0, 2.0}});
    EXPECT_TRUE(contains(box, Point{0.5, 1.9}));
    EXPECT_FALSE(contains(box, Point{0.0, 1.0}));
    EXPECT_FALSE(contains(box, Point{1.0, 1.0}));
    const DomainSpec disk(Disk{{0.0, 0.0}, 1.0});
    EXPECT_FALSE(contains(disk, Point{1.0, 0.0}));
    EXPECT_TRUE(contains(disk, Point{0.7, 0.7}));
    const auto perf = make_perforated_cube(2, 1.0, 2, 0.1);
    EXPECT_FALSE(contains(perf, Point{0.25, 0.25}));
    EXPECT_FALSE(contains(perf, Point{0.35, 0.25}));  // on the hole boundary
    EXPECT_TRUE(contains(perf, Point{0.36, 0.25}));
    EXPECT_TRUE(contains(perf, Point{0.0, 0.0}));
    EXPECT_THROW((void)contains(perf, Point{0.0, 0.0, 0.0}), InvalidArgument);
}

TEST(DistanceToBoundary, ClosedForms) {
    EXPECT_DOUBLE_EQ(distance_to_boundary(DomainSpec(Box{{1.0, 3.0}}), Point{0.3, 2.5}), 0.3);
    EXPECT_NEAR(distance_to_boundary(DomainSpec(Disk{{1.0, 1.0}, 2.0}), Point{1.5, 1.0}), 1.5, 1e-15);
    const auto perf = make_perforated_cube(2, 1.0, 2, 0.1);
    // centre of the cube: distance to each of the four holes is sqrt(2)/4
    EXPECT_NEAR(distance_to_boundary(perf, Point{0.0, 0.0}), std::sqrt(2.0) / 4 - 0.1, 1e-15);
    EXPECT_NEAR(distance_to_boundary(perf, Point{0.49, 0.25}), 0.01, 1e-15);
    EXPECT_THROW((void)distance_to_boundary(perf, Point{0.25, 0.25}), InvalidArgument);
    // equilateral triangle of side 1: inradius at the centroid
    const DomainSpec tri(ConvexPolygon{{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}}});
    EXPECT_NEAR(distance_to_boundary(tri, Point{0.5, std::sqrt(3.0) / 6}), std::sqrt(3.0) / 6, 1e-15);
}

TEST(DistanceToBoundary, EllipseMatchesParametricScan) {
    const double a = 2.5, b = 0.5;
    const DomainSpec e(Ellipse{{0.3, -0.2}, a, b});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int tested = 0;
    while (tested < 40) {
        const double x = a * U(rng), y = b * U(rng);
        if ((x / a) * (x / a) + (y / b) * (y / b) >= 1.0) continue;
        ++tested;
        const double oracle = ellipse_distance_scan(a, b, x, y);
        EXPECT_NEAR(distance_to_boundary(e, Point{x + 0.3, y - 0.2}), oracle, 1e-10) << x << "," << y;
    }
    // centre: distance is the minor semi-axis
    EXPECT_NEAR(distance_to_boundary(e, Point{0.3, -0.2}), b, 1e-14);
}

TEST(AxisBoundaryHit, FindsFirstCrossing) {
    const DomainSpec box(Box{{1.0, 1.0}});
    EXPECT_NEAR(*axis_boundary_hit(box, Point{0.3, 0.5}, 0, -1, 0.5), 0.3, 1e-15);
    EXPECT_FALSE(axis_boundary_hit(box, Point{0.3, 0.5}, 0, -1, 0.25));
    const DomainSpec disk(Disk{{0.0, 0.0}, 1.0});
    EXPECT_NEAR(*axis_boundary_hit(disk, Point{0.0, 0.6}, 0, 1, 1.0), 0.8, 1e-15);
    const auto perf = make_perforated_cube(2, 1.0, 2, 0.1);
    // from the cube centre heading along +x at height 0.25, hit the hole at (0.25, 0.25)
    EXPECT_NEAR(*axis_boundary_hit(perf, Point{0.0, 0.25}, 0, 1, 1.0), 0.15, 1e-15);
    EXPECT_NEAR(*axis_boundary_hit(perf, Point{0.0, 0.25}, 0, -1, 1.0), 0.15, 1e-15);
    EXPECT_NEAR(*axis_boundary_hit(perf, Point{0.0, 0.0}, 1, 1, 1.0), 0.5, 1e-15);
    const DomainSpec e(Ellipse{{0, 0}, 2.0, 1.0});
    EXPECT_NEAR(*axis_boundary_hit(e, Point{0.0, 0.0}, 0, 1, 5.0), 2.0, 1e-15);
    EXPECT_NEAR(*axis_boundary_hit(e, Point{1.0, 0.0}, 1, -1, 5.0), std::sqrt(0.75), 1e-15);
}

TEST(PerforatedCube, HoleCentresLexicographic) {
    const auto c = hole_centers(PerforatedCubeParams{2, 1.0, 2, 0.1});
    ASSERT_EQ(c.size(), 4u);
    EXPECT_EQ(c[0], (Point{-0.25, -0.25}));
    EXPECT_EQ(c[1], (Point{-0.25, 0.25}));
    EXPECT_EQ(c[2], (Point{0.25, -0.25}));
    EXPECT_EQ(c[3], (Point{0.25, 0.25}));
    EXPECT_EQ(hole_centers(PerforatedCubeParams{3, 2.0, 3, 0.1}).size(), 27u);
}

TEST(DeltaStar, PlanarValuesAndRegime) {
    // (L/2N) exp(-N^{2/3}) for alpha = 4/3
    EXPECT_NEAR(delta_star(2, 4.0 / 3, 2, 1.0).value, 0.25 * std::exp(-std::cbrt(4.0)), 1e-15);
    EXPECT_NEAR(delta_star(2, 4.0 / 3, 2, 1.0).value, 0.0511141, 1e-7);
    EXPECT_NEAR(delta_star(2, 4.0 / 3, 6, 1.0).value, 0.00306768, 1e-8);
    const auto d1 = delta_star(2, 4.0 / 3, 1, 1.0);
    EXPECT_FALSE(d1.valid);
    EXPECT_EQ(d1.smallest_valid_n, 2);
    EXPECT_THROW((void)d1.require(), RegimeError);
    try {
        (void)d1.require();
    } catch (const RegimeError& e) {
        EXPECT_EQ(e.smallest_admissible_n(), 2);
    }
    EXPECT_TRUE(delta_star(2, 4.0 / 3, 2, 1.0).valid);
}

TEST(DeltaStar, SpatialRegimeThreshold) {
    // m = 3: kappa = 4 pi and validity N^{2-alpha} >= 16 kappa
    const double alpha = 1.5;
    const auto d = delta_star(3, alpha, 10, 1.0);
    EXPECT_NEAR(d.value, std::pow(10.0, alpha - 3.0), 1e-15);
    long n = 1;
    while (std::sqrt(static_cast<double>(n)) < 64 * pi) ++n;
    EXPECT_EQ(d.smallest_valid_n, n);
    EXPECT_FALSE(delta_star(3, alpha, n - 1, 1.0).valid);
    EXPECT_TRUE(delta_star(3, alpha, n, 1.0).valid);
}

TEST(CapacityConstant, KnownDimensions) {
    EXPECT_EQ(capacity_constant(2), 0.0);
    EXPECT_NEAR(capacity_constant(3), 4 * pi, 1e-13);
    EXPECT_NEAR(capacity_constant(4), 4 * pi * pi, 1e-12);
}

TEST(ConvexMeasure, ClosedForms) {
    const auto sq = measure_convex(ConvexPolygon{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}});
    EXPECT_NEAR(sq.width, 1.0, 1e-15);
    EXPECT_NEAR(sq.diameter, std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(sq.chord, 1.0, 1e-15);

    const auto tri = measure_convex(ConvexPolygon{{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}}});
    EXPECT_NEAR(tri.width, std::sqrt(3.0) / 2, 1e-15);
    EXPECT_NEAR(tri.diameter, 1.0, 1e-15);
    EXPECT_NEAR(tri.chord, 1.0, 1e-15);

    const auto rect = measure_convex(ConvexPolygon{{{0, 0}, {10, 0}, {10, 1}, {0, 1}}});
    EXPECT_NEAR(rect.width, 1.0, 1e-15);
    EXPECT_NEAR(rect.diameter, std::sqrt(101.0), 1e-14);
    EXPECT_NEAR(rect.chord, 10.0, 1e-14);
    EXPECT_NEAR(std::abs(rect.width_direction[1]), 1.0, 1e-15);

    // regular hexagon of circumradius 1: width sqrt(3), diameter 2
    const auto hex = measure_convex(regular_polygon(6, 1.0));
    EXPECT_NEAR(hex.width, std::sqrt(3.0), 1e-14);
    EXPECT_NEAR(hex.diameter, 2.0, 1e-14);
    EXPECT_NEAR(hex.chord, 2.0, 1e-14);
}

TEST(ConvexMeasure, SmoothShapes) {
    const auto e = convex_measurements(DomainSpec(Ellipse{{0, 0}, 2.5, 0.5}));
    EXPECT_DOUBLE_EQ(e.width, 1.0);
    EXPECT_DOUBLE_EQ(e.diameter, 5.0);
    const auto r = convex_measurements(DomainSpec(Box{{1.0, 20.0}}));
    EXPECT_DOUBLE_EQ(r.width, 1.0);
    EXPECT_DOUBLE_EQ(r.chord, 20.0);
    EXPECT_THROW((void)convex_measurements(make_perforated_cube(2, 1, 2, 0.1)), InvalidArgument);
}

// Random convex polygons: width agrees with a direction scan, and the
// width <= chord <= diameter <= 3 chord chain holds.
TEST(ConvexMeasure, RandomPolygonsProperty) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> G(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<Vec2> pts;
        const double sx = std::exp(G(rng)), sy = std::exp(G(rng));
        for (int i = 0; i < 12; ++i) pts.push_back({sx * G(rng), sy * G(rng)});
        const auto poly = convex_hull(pts);
        const auto cm = measure_convex(poly);
        const double wscan = width_scan(poly);
        EXPECT_LE(cm.width, wscan * (1 + 1e-12));
        EXPECT_NEAR(cm.width, width_edges(poly), 1e-12 * wscan);
        EXPECT_NEAR(cm.width, wscan, 1e-4 * wscan);
        EXPECT_LE(cm.width, cm.chord * (1 + 1e-12));
        EXPECT_LE(cm.chord, cm.diameter * (1 + 1e-12));
        EXPECT_LE(cm.diameter, 3.0 * cm.chord);
        // scale equivariance
        const auto big = measure_convex(std::get<ConvexPolygon>(scaled(DomainSpec(poly), 3.0).shape()));
        EXPECT_NEAR(big.width, 3 * cm.width, 1e-12 * big.width);
        EXPECT_NEAR(big.diameter, 3 * cm.diameter, 1e-12 * big.diameter);
    }
}

TEST(ConvexHull, DropsCollinearAndInteriorPoints) {
    const auto h = convex_hull({{0, 0}, {1, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 1}});
    EXPECT_EQ(h.vertices.size(), 4u);
    EXPECT_NO_THROW(DomainSpec{h});
}

TEST(InscribedRectangle, MinimisesEigenvalueSum) {
    // minimise 1/x^2 + 1/y^2 over rectangles with x/w + y/c = 1
    const double w = 1.0, c = 8.0;
    const double h = inscribed_rectangle_height(w, c);
    double best = 1e300, arg = 0;
    for (int i = 1; i < 100000; ++i) {
        const double y = c * i / 100000.0;
        const double x = w * (1 - y / c);
        const double v = 1 / (x * x) + 1 / (y * y);
        if (v < best) best = v, arg = x;
    }
    EXPECT_NEAR(h, arg, 1e-4);
}

TEST(Scaled, ScalesPerforatedCube) {
    const auto s = scaled(make_perforated_cube(2, 1.0, 4, 0.01), 2.0);
    const auto* p = s.get_if<PerforatedCubeParams>();
    ASSERT_NE(p, nullptr);
    EXPECT_DOUBLE_EQ(p->L, 2.0);
    EXPECT_DOUBLE_EQ(p->delta, 0.02);
    EXPECT_DOUBLE_EQ(diameter(s), 2.0 * std::sqrt(2.0));
}
