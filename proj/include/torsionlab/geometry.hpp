#pragma once

// Exact domain descriptions: membership, boundary distance, axis-ray boundary
// hits, the perforated cube family and planar convex measurements.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "torsionlab/errors.hpp"

namespace torsionlab {

using Point = std::vector<double>;
using Vec2 = std::array<double, 2>;

/// Axis-aligned box with lower corner at the origin.
struct Box {
    std::vector<double> sides;
};

/// Open ball; its dimension is the length of `center`.
struct Disk {
    Point center;
    double radius = 1.0;
};

/// Axis-aligned planar ellipse, semi-axis `a` along x, `a >= b`.
struct Ellipse {
    Vec2 center{0.0, 0.0};
    double a = 1.0;
    double b = 1.0;
};

/// Strictly convex planar polygon, vertices counterclockwise.
struct ConvexPolygon {
    std::vector<Vec2> vertices;
};

/// Cube (-L/2, L/2)^m with a closed ball of radius delta removed from the
/// centre of each of the N^m subcubes of side L/N.
struct PerforatedCubeParams {
    int m = 2;
    double L = 1.0;
    long N = 1;
    double delta = 0.0;

    double cell() const { return L / static_cast<double>(N); }
    std::size_t hole_count() const {
        std::size_t c = 1;
        for (int a = 0; a < m; ++a) c *= static_cast<std::size_t>(N);
        return c;
    }
};

namespace detail {

inline double sq(double x) { return x * x; }

inline double cross(const Vec2& o, const Vec2& p, const Vec2& q) {
    return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]);
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument(msg);
}

inline void validate_polygon(const ConvexPolygon& p) {
    const auto& v = p.vertices;
    const std::size_t n = v.size();
    require(n >= 3, "convex polygon needs at least 3 vertices");
    for (const auto& q : v)
        require(std::isfinite(q[0]) && std::isfinite(q[1]), "polygon vertex not finite");
    double area2 = 0.0;
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % n];
        const Vec2& c = v[(i + 2) % n];
        require(a != b, "polygon has repeated consecutive vertices");
        area2 += a[0] * b[1] - b[0] * a[1];
        const double cr = cross(a, b, c);
        require(cr > 0.0, "polygon is not strictly convex and counterclockwise");
        const double e1x = b[0] - a[0], e1y = b[1] - a[1];
        const double e2x = c[0] - b[0], e2y = c[1] - b[1];
        turning += std::atan2(e1x * e2y - e1y * e2x, e1x * e2x + e1y * e2y);
    }
    require(area2 > 0.0, "degenerate polygon (zero area)");
    require(std::abs(turning - 2.0 * std::numbers::pi) < 1e-6,
            "polygon winds more than once; not simple");
}

} // namespace detail

/// Tagged union of the supported domains. Construction validates invariants.
class DomainSpec {
public:
    using Shape = std::variant<Box, Disk, Ellipse, ConvexPolygon, PerforatedCubeParams>;

    DomainSpec(Shape shape) : shape_(std::move(shape)) { validate(); }

    const Shape& shape() const { return shape_; }

    template <class T>
    const T* get_if() const { return std::get_if<T>(&shape_); }

    int dimension() const {
        return std::visit(
            [](const auto& s) -> int {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>) return static_cast<int>(s.sides.size());
                else if constexpr (std::is_same_v<T, Disk>) return static_cast<int>(s.center.size());
                else if constexpr (std::is_same_v<T, PerforatedCubeParams>) return s.m;
                else return 2;
            },
            shape_);
    }

    std::string variant_name() const {
        static constexpr const char* names[] = {"box", "disk", "ellipse", "convex_polygon",
                                                "perforated_cube"};
        return names[shape_.index()];
    }

    bool is_convex() const { return !std::holds_alternative<PerforatedCubeParams>(shape_); }

private:
    void validate() const {
        using detail::require;
        std::visit(
            [](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>) {
                    require(s.sides.size() >= 2, "box dimension must be >= 2");
                    for (double x : s.sides) require(x > 0.0 && std::isfinite(x), "box sides must be > 0");
                } else if constexpr (std::is_same_v<T, Disk>) {
                    require(s.center.size() >= 2, "disk dimension must be >= 2");
                    require(s.radius > 0.0 && std::isfinite(s.radius), "disk radius must be > 0");
                } else if constexpr (std::is_same_v<T, Ellipse>) {
                    require(s.b > 0.0 && s.a >= s.b && std::isfinite(s.a),
                            "ellipse needs semi-axes a >= b > 0");
                } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                    detail::validate_polygon(s);
                } else {
                    require(s.m >= 2, "perforated cube dimension must be >= 2");
                    require(s.L > 0.0 && std::isfinite(s.L), "perforated cube side must be > 0");
                    require(s.N >= 1, "perforated cube needs N >= 1");
                    require(s.delta > 0.0, "hole radius must be > 0");
                    require(s.delta < s.L / (2.0 * static_cast<double>(s.N)),
                            "hole radius must satisfy delta < L/(2N)");
                }
            },
            shape_);
    }

    Shape shape_;
};

// ---------------------------------------------------------------------------
// Perforated cube

inline DomainSpec make_perforated_cube(int m, double L, long N, double delta) {
    return DomainSpec(PerforatedCubeParams{m, L, N, delta});
}

/// Hole centres in lexicographic subcube order (first axis slowest).
inline std::vector<Point> hole_centers(const PerforatedCubeParams& p) {
    std::vector<Point> out;
    out.reserve(p.hole_count());
    std::vector<long> idx(static_cast<std::size_t>(p.m), 0);
    const double c = p.cell();
    for (std::size_t k = 0; k < p.hole_count(); ++k) {
        Point x(static_cast<std::size_t>(p.m));
        for (int a = 0; a < p.m; ++a)
            x[static_cast<std::size_t>(a)] = -p.L / 2.0 + (static_cast<double>(idx[static_cast<std::size_t>(a)]) + 0.5) * c;
        out.push_back(std::move(x));
        for (int a = p.m - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < p.N) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return out;
}

namespace detail {

inline long nearest_hole_index(const PerforatedCubeParams& p, double x) {
    const long i = static_cast<long>(std::floor((x + p.L / 2.0) / p.cell()));
    return std::clamp(i, 0L, p.N - 1);
}

inline double hole_coord(const PerforatedCubeParams& p, long i) {
    return -p.L / 2.0 + (static_cast<double>(i) + 0.5) * p.cell();
}

inline double nearest_hole_distance(const PerforatedCubeParams& p, std::span<const double> x) {
    double d2 = 0.0;
    for (int a = 0; a < p.m; ++a) {
        const double xa = x[static_cast<std::size_t>(a)];
        d2 += sq(xa - hole_coord(p, nearest_hole_index(p, xa)));
    }
    return std::sqrt(d2);
}

// Eberly's robust bisection for the closest point on an ellipse, first
// quadrant, e0 >= e1 > 0, (y0, y1) >= 0.
inline double ellipse_root(double r0, double z0, double z1, double g) {
    const double n0 = r0 * z0;
    double s0 = z1 - 1.0;
    double s1 = (g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0);
    double s = 0.0;
    for (int i = 0; i < 1100; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) break;
        const double q0 = n0 / (s + r0);
        const double q1 = z1 / (s + 1.0);
        g = q0 * q0 + q1 * q1 - 1.0;
        if (g > 0.0) s0 = s;
        else if (g < 0.0) s1 = s;
        else break;
    }
    return s;
}

inline double ellipse_distance_quadrant(double e0, double e1, double y0, double y1) {
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0, z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1.0;
            if (g == 0.0) return 0.0;
            const double r0 = sq(e0 / e1);
            const double s = ellipse_root(r0, z0, z1, g);
            const double x0 = r0 * y0 / (s + r0);
            const double x1 = y1 / (s + 1.0);
            return std::hypot(x0 - y0, x1 - y1);
        }
        return std::abs(y1 - e1);
    }
    const double numer0 = e0 * y0;
    const double denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
        const double xde0 = numer0 / denom0;
        const double x0 = e0 * xde0;
        const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
        return std::hypot(x0 - y0, x1);
    }
    return std::abs(y0 - e0);
}

// Smallest positive root of |d + t u|^2 = r^2 for |d| != r, u a unit axis
// vector with component `s` (+-1) on axis `a`.
inline std::optional<double> sphere_entry(std::span<const double> d, std::size_t a, double s,
                                          double r) {
    double dd = 0.0;
    for (double v : d) dd += v * v;
    const double b = s * d[a];
    const double c = dd - r * r;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double sq_disc = std::sqrt(disc);
    if (c > 0.0) {
        // Outside: entry point, needs b < 0.
        const double t = -b - sq_disc;
        if (t > 0.0) return t;
        return std::nullopt;
    }
    return -b + sq_disc; // inside: exit point
}

} // namespace detail

// ---------------------------------------------------------------------------
// Membership, distance, ray hits

inline void check_dimension(const DomainSpec& spec, std::span<const double> x) {
    if (static_cast<int>(x.size()) != spec.dimension())
        throw InvalidArgument("point dimension " + std::to_string(x.size()) +
                              " does not match domain dimension " +
                              std::to_string(spec.dimension()));
}

/// True iff x lies in the open set; boundary points are excluded.
inline bool contains(const DomainSpec& spec, std::span<const double> x) {
    check_dimension(spec, x);
    return std::visit(
        [&](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                for (std::size_t a = 0; a < s.sides.size(); ++a)
                    if (!(x[a] > 0.0 && x[a] < s.sides[a])) return false;
                return true;
            } else if constexpr (std::is_same_v<T, Disk>) {
                double d2 = 0.0;
                for (std::size_t a = 0; a < x.size(); ++a) d2 += detail::sq(x[a] - s.center[a]);
                return d2 < s.radius * s.radius;
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return detail::sq((x[0] - s.center[0]) / s.a) + detail::sq((x[1] - s.center[1]) / s.b) < 1.0;
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                const auto& v = s.vertices;
                const Vec2 p{x[0], x[1]};
                for (std::size_t i = 0; i < v.size(); ++i)
                    if (!(detail::cross(v[i], v[(i + 1) % v.size()], p) > 0.0)) return false;
                return true;
            } else {
                for (std::size_t a = 0; a < x.size(); ++a)
                    if (!(std::abs(x[a]) < s.L / 2.0)) return false;
                return detail::nearest_hole_distance(s, x) > s.delta;
            }
        },
        spec.shape());
}

/// Exact Euclidean distance from an interior point to the boundary.
inline double distance_to_boundary(const DomainSpec& spec, std::span<const double> x) {
    if (!contains(spec, x)) throw InvalidArgument("distance_to_boundary: point outside domain");
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                double d = std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < s.sides.size(); ++a)
                    d = std::min({d, x[a], s.sides[a] - x[a]});
                return d;
            } else if constexpr (std::is_same_v<T, Disk>) {
                double d2 = 0.0;
                for (std::size_t a = 0; a < x.size(); ++a) d2 += detail::sq(x[a] - s.center[a]);
                return s.radius - std::sqrt(d2);
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return detail::ellipse_distance_quadrant(s.a, s.b, std::abs(x[0] - s.center[0]),
                                                         std::abs(x[1] - s.center[1]));
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                const auto& v = s.vertices;
                double d = std::numeric_limits<double>::infinity();
                const Vec2 p{x[0], x[1]};
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const Vec2& a = v[i];
                    const Vec2& b = v[(i + 1) % v.size()];
                    d = std::min(d, detail::cross(a, b, p) / std::hypot(b[0] - a[0], b[1] - a[1]));
                }
                return d;
            } else {
                double d = std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < x.size(); ++a) d = std::min(d, s.L / 2.0 - std::abs(x[a]));
                return std::min(d, detail::nearest_hole_distance(s, x) - s.delta);
            }
        },
        spec.shape());
}

/// Distance t in (0, max_len] along x + t*sign*e_axis to the first boundary
/// crossing, or nullopt when the segment stays inside. `x` must be interior.
inline std::optional<double> axis_boundary_hit(const DomainSpec& spec, std::span<const double> x,
                                               std::size_t axis, int sign, double max_len) {
    const double s = sign > 0 ? 1.0 : -1.0;
    const auto within = [&](double t) -> std::optional<double> {
        if (t > 0.0 && t <= max_len) return t;
        return std::nullopt;
    };
    return std::visit(
        [&](const auto& sh) -> std::optional<double> {
            using T = std::decay_t<decltype(sh)>;
            if constexpr (std::is_same_v<T, Box>) {
                return within(s > 0 ? sh.sides[axis] - x[axis] : x[axis]);
            } else if constexpr (std::is_same_v<T, Disk>) {
                std::vector<double> d(x.size());
                for (std::size_t a = 0; a < x.size(); ++a) d[a] = x[a] - sh.center[a];
                const auto t = detail::sphere_entry(d, axis, s, sh.radius);
                return t ? within(*t) : std::nullopt;
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                const double dx = x[0] - sh.center[0], dy = x[1] - sh.center[1];
                double t;
                if (axis == 0) t = sh.a * std::sqrt(std::max(0.0, 1.0 - detail::sq(dy / sh.b))) - s * dx;
                else t = sh.b * std::sqrt(std::max(0.0, 1.0 - detail::sq(dx / sh.a))) - s * dy;
                return within(t);
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                const auto& v = sh.vertices;
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const Vec2& a = v[i];
                    const Vec2& b = v[(i + 1) % v.size()];
                    // outward normal of a CCW edge
                    const double nx = b[1] - a[1], ny = -(b[0] - a[0]);
                    const double nd = (axis == 0 ? nx : ny) * s;
                    if (nd <= 0.0) continue;
                    const double t = (nx * (a[0] - x[0]) + ny * (a[1] - x[1])) / nd;
                    best = std::min(best, t);
                }
                return within(best);
            } else {
                double best = sh.L / 2.0 - s * x[axis];
                const double c = sh.cell();
                const std::size_t m = x.size();
                // Candidate hole index ranges per axis.
                std::vector<long> lo(m), hi(m);
                for (std::size_t a = 0; a < m; ++a) {
                    double from = x[a] - sh.delta, to = x[a] + sh.delta;
                    if (a == axis) {
                        if (s > 0) to += max_len;
                        else from -= max_len;
                    }
                    lo[a] = std::max(0L, static_cast<long>(std::floor((from + sh.L / 2.0) / c - 0.5)));
                    hi[a] = std::min(sh.N - 1, static_cast<long>(std::ceil((to + sh.L / 2.0) / c - 0.5)));
                    if (lo[a] > hi[a]) return within(best);
                }
                std::vector<long> idx(lo);
                std::vector<double> d(m);
                while (true) {
                    for (std::size_t a = 0; a < m; ++a) d[a] = x[a] - detail::hole_coord(sh, idx[a]);
                    if (const auto t = detail::sphere_entry(d, axis, s, sh.delta)) best = std::min(best, *t);
                    std::size_t a = 0;
                    for (; a < m; ++a) {
                        if (++idx[a] <= hi[a]) break;
                        idx[a] = lo[a];
                    }
                    if (a == m) break;
                }
                return within(best);
            }
        },
        spec.shape());
}

/// Axis-aligned bounding box (lower, upper) of the closure.
inline std::pair<Point, Point> bounding_box(const DomainSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::pair<Point, Point> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                return {Point(s.sides.size(), 0.0), s.sides};
            } else if constexpr (std::is_same_v<T, Disk>) {
                Point lo = s.center, hi = s.center;
                for (auto& v : lo) v -= s.radius;
                for (auto& v : hi) v += s.radius;
                return {lo, hi};
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return {{s.center[0] - s.a, s.center[1] - s.b}, {s.center[0] + s.a, s.center[1] + s.b}};
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                Point lo{s.vertices[0][0], s.vertices[0][1]}, hi = lo;
                for (const auto& v : s.vertices)
                    for (std::size_t a = 0; a < 2; ++a) {
                        lo[a] = std::min(lo[a], v[a]);
                        hi[a] = std::max(hi[a], v[a]);
                    }
                return {lo, hi};
            } else {
                return {Point(static_cast<std::size_t>(s.m), -s.L / 2.0),
                        Point(static_cast<std::size_t>(s.m), s.L / 2.0)};
            }
        },
        spec.shape());
}

/// Point the node lattice is anchored to: the box corner, the centre of
/// disks, ellipses and perforated cubes, the first vertex of a polygon.
inline Point lattice_anchor(const DomainSpec& spec) {
    return std::visit(
        [](const auto& s) -> Point {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) return Point(s.sides.size(), 0.0);
            else if constexpr (std::is_same_v<T, Disk>) return s.center;
            else if constexpr (std::is_same_v<T, Ellipse>) return {s.center[0], s.center[1]};
            else if constexpr (std::is_same_v<T, ConvexPolygon>) return {s.vertices[0][0], s.vertices[0][1]};
            else return Point(static_cast<std::size_t>(s.m), 0.0);
        },
        spec.shape());
}

inline double diameter(const DomainSpec& spec) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                double d2 = 0.0;
                for (double x : s.sides) d2 += x * x;
                return std::sqrt(d2);
            } else if constexpr (std::is_same_v<T, Disk>) {
                return 2.0 * s.radius;
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return 2.0 * s.a;
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                double d = 0.0;
                for (const auto& p : s.vertices)
                    for (const auto& q : s.vertices) d = std::max(d, std::hypot(p[0] - q[0], p[1] - q[1]));
                return d;
            } else {
                return s.L * std::sqrt(static_cast<double>(s.m));
            }
        },
        spec.shape());
}

/// The domain dilated by s > 0 about the origin.
inline DomainSpec scaled(const DomainSpec& spec, double s) {
    detail::require(s > 0.0, "scale factor must be > 0");
    return std::visit(
        [s](auto sh) -> DomainSpec {
            using T = std::decay_t<decltype(sh)>;
            if constexpr (std::is_same_v<T, Box>) {
                for (auto& x : sh.sides) x *= s;
            } else if constexpr (std::is_same_v<T, Disk>) {
                for (auto& x : sh.center) x *= s;
                sh.radius *= s;
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                sh.center = {sh.center[0] * s, sh.center[1] * s};
                sh.a *= s;
                sh.b *= s;
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                for (auto& v : sh.vertices) v = {v[0] * s, v[1] * s};
            } else {
                sh.L *= s;
                sh.delta *= s;
            }
            return DomainSpec(sh);
        },
        spec.shape());
}

// ---------------------------------------------------------------------------
// Hole radius formulas

/// Newtonian capacity of the unit ball for the generator Laplacian,
/// (m-2)|S^{m-1}|; zero in the plane.
inline double capacity_constant(int m) {
    detail::require(m >= 2, "capacity_constant: m >= 2");
    const double half = static_cast<double>(m) / 2.0;
    return static_cast<double>(m - 2) * 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

struct DeltaStar {
    double value = 0.0;
    bool valid = false;       // regime condition holds at this N
    long smallest_valid_n = 0; // first N for which it holds

    double require() const {
        if (!valid)
            throw RegimeError("N below regime threshold; smallest admissible N is " +
                                  std::to_string(smallest_valid_n),
                              smallest_valid_n);
        return value;
    }
};

/// Hole radius that puts the unit-cell eigenvalue on the N^alpha scale:
/// (L/2N) exp(-N^{2-alpha}) in the plane, L N^{(alpha-m)/(m-2)} for m >= 3.
inline DeltaStar delta_star(int m, double alpha, long N, double L) {
    detail::require(m >= 2, "delta_star: m >= 2");
    detail::require(alpha > 1.0 && alpha < 2.0, "delta_star: need 1 < alpha < 2");
    detail::require(N >= 1, "delta_star: N >= 1");
    detail::require(L > 0.0, "delta_star: L > 0");
    const double n = static_cast<double>(N);
    DeltaStar out;
    if (m == 2) {
        out.value = L / (2.0 * n) * std::exp(-std::pow(n, 2.0 - alpha));
        out.valid = out.value < L / (6.0 * n);
        // delta* < L/(6N)  <=>  N^{2-alpha} > log 3
        long k = std::max(1L, static_cast<long>(std::floor(std::pow(std::log(3.0), 1.0 / (2.0 - alpha)))));
        while (std::pow(static_cast<double>(k), 2.0 - alpha) <= std::log(3.0)) ++k;
        while (k > 1 && std::pow(static_cast<double>(k - 1), 2.0 - alpha) > std::log(3.0)) --k;
        out.smallest_valid_n = k;
    } else {
        const double kappa = capacity_constant(m);
        out.value = L * std::pow(n, (alpha - m) / static_cast<double>(m - 2));
        out.valid = kappa * std::pow(out.value, m - 2) <= std::pow(L / n, m - 2) / 16.0;
        // equivalent to N^{2-alpha} >= 16 kappa
        const double target = 16.0 * kappa;
        long k = std::max(1L, static_cast<long>(std::floor(std::pow(target, 1.0 / (2.0 - alpha)))));
        while (std::pow(static_cast<double>(k), 2.0 - alpha) < target) ++k;
        while (k > 1 && std::pow(static_cast<double>(k - 1), 2.0 - alpha) >= target) --k;
        out.smallest_valid_n = k;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Planar convex measurements

struct ConvexMeasurements {
    double width = 0.0;
    double diameter = 0.0;
    double chord = 0.0;          // longest chord perpendicular to the width direction
    Vec2 width_direction{0.0, 1.0};
};

namespace detail {

// Length of the intersection of the polygon with {p : p.u = s}.
inline double chord_at(const std::vector<Vec2>& v, const Vec2& u, double s) {
    const Vec2 t{-u[1], u[0]};
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % n];
        const double fa = a[0] * u[0] + a[1] * u[1] - s;
        const double fb = b[0] * u[0] + b[1] * u[1] - s;
        const double ta = a[0] * t[0] + a[1] * t[1];
        const double tb = b[0] * t[0] + b[1] * t[1];
        if (fa == 0.0) {
            lo = std::min(lo, ta);
            hi = std::max(hi, ta);
        }
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
            const double tau = ta + (tb - ta) * fa / (fa - fb);
            lo = std::min(lo, tau);
            hi = std::max(hi, tau);
        }
    }
    return hi > lo ? hi - lo : 0.0;
}

} // namespace detail

/// Width by edge-antipodal rotating calipers (ties to the smallest edge
/// index), diameter by vertex pairs, and the longest chord perpendicular to
/// the width direction.
inline ConvexMeasurements measure_convex(const ConvexPolygon& poly) {
    detail::validate_polygon(poly);
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    const auto height = [&](std::size_t e, std::size_t k) {
        const Vec2& a = v[e];
        const Vec2& b = v[(e + 1) % n];
        return detail::cross(a, b, v[k % n]) / std::hypot(b[0] - a[0], b[1] - a[1]);
    };

    ConvexMeasurements out;
    out.width = std::numeric_limits<double>::infinity();
    std::size_t j = 1;
    for (std::size_t k = 2; k < n; ++k)
        if (height(0, k) > height(0, j)) j = k;
    for (std::size_t e = 0; e < n; ++e) {
        while (height(e, j + 1) > height(e, j)) j = (j + 1) % n;
        const double w = height(e, j);
        if (w < out.width) {
            out.width = w;
            const Vec2& a = v[e];
            const Vec2& b = v[(e + 1) % n];
            const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
            out.width_direction = {-(b[1] - a[1]) / len, (b[0] - a[0]) / len}; // inward normal
        }
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k < n; ++k)
            out.diameter = std::max(out.diameter, std::hypot(v[i][0] - v[k][0], v[i][1] - v[k][1]));

    // Chord length along a fixed direction is concave and piecewise linear in
    // the offset, so its maximum sits at a vertex projection.
    const Vec2& u = out.width_direction;
    for (const auto& p : v)
        out.chord = std::max(out.chord, detail::chord_at(v, u, p[0] * u[0] + p[1] * u[1]));
    return out;
}

/// Convex measurements for any planar convex domain.
inline ConvexMeasurements convex_measurements(const DomainSpec& spec) {
    detail::require(spec.is_convex() && spec.dimension() == 2,
                    "convex measurements need a planar convex domain");
    return std::visit(
        [](const auto& s) -> ConvexMeasurements {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                const double w = std::min(s.sides[0], s.sides[1]);
                const double l = std::max(s.sides[0], s.sides[1]);
                const Vec2 dir = s.sides[0] <= s.sides[1] ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
                return {w, std::hypot(s.sides[0], s.sides[1]), l, dir};
            } else if constexpr (std::is_same_v<T, Disk>) {
                return {2.0 * s.radius, 2.0 * s.radius, 2.0 * s.radius, {0.0, 1.0}};
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return {2.0 * s.b, 2.0 * s.a, 2.0 * s.a, {0.0, 1.0}};
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                return measure_convex(s);
            } else {
                throw InvalidArgument("unreachable");
            }
        },
        spec.shape());
}

/// Height of the rectangle inscribed in the width/chord quadrilateral that
/// minimises the sum of its two Dirichlet eigenvalue contributions.
inline double inscribed_rectangle_height(double w, double chord) {
    detail::require(w > 0.0 && chord >= w, "inscribed_rectangle_height: need 0 < w <= chord");
    return std::cbrt(w * chord * chord) / (1.0 + std::pow(chord / w, 2.0 / 3.0));
}

/// Andrew's monotone chain; returns the strictly convex hull counterclockwise.
inline ConvexPolygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) throw InvalidArgument("convex_hull: fewer than 3 distinct points");
    std::vector<Vec2> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && detail::cross(h[k - 2], h[k - 1], p) <= 0.0) --k;
        h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && detail::cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return ConvexPolygon{std::move(h)};
}

} // namespace torsionlab
