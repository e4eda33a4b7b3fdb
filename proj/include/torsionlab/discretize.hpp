#pragma once

// Node-centred finite differences for -Laplace on a uniform lattice.
//
// Boundary arms that cut the domain boundary at a fraction theta of the
// spacing use the symmetric Shortley-Weller (ghost-fluid) row: the arm adds
// 1/(theta h^2) to the diagonal and nothing off the diagonal. Mirror planes
// (Neumann faces, symmetry planes) and the diagonal fold of a cube are handled
// by mapping lattice indices into a fundamental region; the resulting rows are
// symmetrised by the diagonal similarity W^{1/2} A W^{-1/2}, W = orbit weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "torsionlab/errors.hpp"
#include "torsionlab/geometry.hpp"

namespace torsionlab {

enum class BoundaryKind { dirichlet, mixed_neumann_dirichlet };

inline const char* to_string(BoundaryKind k) {
    return k == BoundaryKind::dirichlet ? "dirichlet" : "mixed_neumann_dirichlet";
}

/// Nodes closer than this fraction of h to the boundary are dropped.
inline constexpr double theta_floor = 1e-6;

/// Minimum number of cells across a hole diameter.
inline constexpr double min_cells_per_hole = 8.0;

struct GridOptions {
    /// Solve on the fundamental region of the hyperoctahedral symmetry
    /// (perforated cubes and unit cells only).
    bool fold_symmetry = false;
};

/// Integer lattice origin + k*h, k in [lo, hi] per axis, with optional mirror
/// planes at integer indices and an optional axis-permutation fold.
struct Lattice {
    int m = 2;
    double h = 0.0;
    Point origin;
    std::vector<long> lo, hi;
    std::vector<std::optional<long>> mirror_lo, mirror_hi;
    bool diagonal = false;

    std::size_t extent(std::size_t a) const { return static_cast<std::size_t>(hi[a] - lo[a] + 1); }

    std::size_t volume() const {
        std::size_t v = 1;
        for (std::size_t a = 0; a < lo.size(); ++a) v *= extent(a);
        return v;
    }

    /// Map an index into the fundamental region; false if it falls outside the lattice.
    bool canonicalize(std::span<long> k) const {
        for (std::size_t a = 0; a < k.size(); ++a) {
            if (mirror_lo[a] && k[a] < *mirror_lo[a]) k[a] = 2 * *mirror_lo[a] - k[a];
            if (mirror_hi[a] && k[a] > *mirror_hi[a]) k[a] = 2 * *mirror_hi[a] - k[a];
        }
        if (diagonal) std::sort(k.begin(), k.end(), std::greater<>());
        for (std::size_t a = 0; a < k.size(); ++a)
            if (k[a] < lo[a] || k[a] > hi[a]) return false;
        return true;
    }

    bool is_canonical(std::span<const long> k) const {
        if (!diagonal) return true;
        for (std::size_t a = 1; a < k.size(); ++a)
            if (k[a - 1] < k[a]) return false;
        return true;
    }

    std::size_t flat(std::span<const long> k) const {
        std::size_t f = 0;
        for (std::size_t a = 0; a < k.size(); ++a) f = f * extent(a) + static_cast<std::size_t>(k[a] - lo[a]);
        return f;
    }

    /// Relative orbit size of a node under the fold group.
    double orbit_weight(std::span<const long> k) const {
        double w = 1.0;
        for (std::size_t a = 0; a < k.size(); ++a) {
            if ((mirror_lo[a] && k[a] == *mirror_lo[a]) || (mirror_hi[a] && k[a] == *mirror_hi[a])) w *= 0.5;
        }
        if (diagonal) {
            // distinct permutations / m!
            std::vector<long> s(k.begin(), k.end());
            std::sort(s.begin(), s.end());
            double perms = 1.0;
            std::size_t run = 1;
            for (std::size_t a = 1; a <= s.size(); ++a) {
                if (a < s.size() && s[a] == s[a - 1]) {
                    ++run;
                } else {
                    for (std::size_t r = 2; r <= run; ++r) perms *= static_cast<double>(r);
                    run = 1;
                }
            }
            w /= perms;
        }
        return w;
    }
};

/// Interior lattice nodes of a domain with per-arm boundary fractions.
///
/// Arms are ordered (axis 0, -), (axis 0, +), (axis 1, -), ...; `theta` is 1
/// for arms that reach a neighbouring unknown or a node on the boundary.
struct GridDomain {
    Lattice lattice;
    BoundaryKind kind = BoundaryKind::dirichlet;
    Point extent_lo, extent_hi;
    std::vector<long> coords;        // n*m lattice indices
    std::vector<double> theta;       // n*2m
    std::vector<std::int32_t> neighbor; // n*2m, -1 for a boundary arm
    std::vector<double> weight;      // orbit weight per node
    std::vector<std::int32_t> lookup; // flat lattice index -> node id or -1

    int dim() const { return lattice.m; }
    double h() const { return lattice.h; }
    std::size_t size() const { return weight.size(); }
    std::size_t arms() const { return 2 * static_cast<std::size_t>(lattice.m); }
    bool folded() const {
        if (lattice.diagonal) return true;
        for (std::size_t a = 0; a < lattice.mirror_lo.size(); ++a)
            if (lattice.mirror_lo[a] || lattice.mirror_hi[a]) return true;
        return false;
    }

    std::span<const long> index(std::size_t i) const {
        const auto m = static_cast<std::size_t>(lattice.m);
        return {coords.data() + i * m, m};
    }

    Point position(std::size_t i) const {
        Point x(static_cast<std::size_t>(lattice.m));
        const auto k = index(i);
        for (std::size_t a = 0; a < x.size(); ++a) x[a] = lattice.origin[a] + static_cast<double>(k[a]) * lattice.h;
        return x;
    }

    std::optional<std::size_t> find(std::vector<long> k) const {
        if (!lattice.canonicalize(k)) return std::nullopt;
        const auto id = lookup[lattice.flat(k)];
        if (id < 0) return std::nullopt;
        return static_cast<std::size_t>(id);
    }

    /// Node whose lattice position is nearest to x (after folding).
    std::optional<std::size_t> nearest_node(std::span<const double> x) const {
        std::vector<long> k(x.size());
        for (std::size_t a = 0; a < x.size(); ++a)
            k[a] = std::lround((x[a] - lattice.origin[a]) / lattice.h);
        return find(std::move(k));
    }

    bool boundary_adjacent(std::size_t i) const {
        for (std::size_t r = 0; r < arms(); ++r)
            if (neighbor[i * arms() + r] < 0) return true;
        return false;
    }
};

namespace detail {

struct SpecGeometry {
    const DomainSpec& spec;
    bool inside(std::span<const double> x) const { return contains(spec, x); }
    std::optional<double> hit(std::span<const double> x, std::size_t a, int s, double len) const {
        return axis_boundary_hit(spec, x, a, s, len);
    }
};

// Closed cube [-half, half]^m minus the closed ball of radius delta. The cube
// faces are mirrors, so only the ball can be hit.
struct UnitCellGeometry {
    double half;
    double delta;
    bool inside(std::span<const double> x) const {
        double r2 = 0.0;
        for (double v : x) {
            if (std::abs(v) > half * (1.0 + 1e-12)) return false;
            r2 += v * v;
        }
        return delta <= 0.0 || r2 > delta * delta;
    }
    std::optional<double> hit(std::span<const double> x, std::size_t a, int s, double len) const {
        if (delta <= 0.0) return std::nullopt;
        const auto t = sphere_entry(x, a, s > 0 ? 1.0 : -1.0, delta);
        if (t && *t > 0.0 && *t <= len) return t;
        return std::nullopt;
    }
};

template <class Geometry>
GridDomain build_lattice_grid(const Geometry& geo, Lattice lat, BoundaryKind kind) {
    const auto m = static_cast<std::size_t>(lat.m);
    const double h = lat.h;
    const std::size_t arms = 2 * m;

    GridDomain g;
    g.kind = kind;
    g.lookup.assign(lat.volume(), -1);

    std::vector<long> k(lat.lo);
    Point x(m);
    std::vector<double> hits(arms);
    std::vector<double> node_hits; // n*arms, negative = no hit
    const std::size_t total = lat.volume();
    for (std::size_t f = 0; f < total; ++f) {
        if (lat.is_canonical(k)) {
            for (std::size_t a = 0; a < m; ++a) x[a] = lat.origin[a] + static_cast<double>(k[a]) * h;
            if (geo.inside(x)) {
                bool keep = true;
                for (std::size_t a = 0; a < m && keep; ++a)
                    for (int s : {-1, 1}) {
                        const auto t = geo.hit(x, a, s, h);
                        const std::size_t r = 2 * a + (s > 0 ? 1 : 0);
                        hits[r] = t ? *t : -1.0;
                        if (t && *t < theta_floor * h) keep = false;
                    }
                if (keep) {
                    g.lookup[f] = static_cast<std::int32_t>(g.weight.size());
                    g.coords.insert(g.coords.end(), k.begin(), k.end());
                    g.weight.push_back(lat.orbit_weight(k));
                    node_hits.insert(node_hits.end(), hits.begin(), hits.end());
                }
            }
        }
        for (std::size_t a = m; a-- > 0;) {
            if (++k[a] <= lat.hi[a]) break;
            k[a] = lat.lo[a];
        }
    }

    const std::size_t n = g.weight.size();
    if (n == 0) throw InvalidArgument("grid has no interior nodes at h = " + std::to_string(h));
    if (n > static_cast<std::size_t>(INT32_MAX)) throw InvalidArgument("grid too large");

    g.theta.assign(n * arms, 1.0);
    g.neighbor.assign(n * arms, -1);
    std::vector<long> kn(m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < arms; ++r) {
            const double t = node_hits[i * arms + r];
            if (t > 0.0) {
                g.theta[i * arms + r] = std::min(1.0, t / h);
                continue;
            }
            std::copy_n(g.coords.begin() + static_cast<std::ptrdiff_t>(i * m), m, kn.begin());
            kn[r / 2] += (r % 2 == 1) ? 1 : -1;
            if (lat.canonicalize(kn)) g.neighbor[i * arms + r] = g.lookup[lat.flat(kn)];
        }
    }
    g.lattice = std::move(lat);
    return g;
}

} // namespace detail

/// Interior nodes and boundary fractions of `spec` on a lattice of spacing h.
inline GridDomain build_grid(const DomainSpec& spec, double h, GridOptions opts = {}) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing must be > 0");
    const auto m = static_cast<std::size_t>(spec.dimension());
    const auto* perf = spec.get_if<PerforatedCubeParams>();
    if (perf) {
        const double max_h = 2.0 * perf->delta / min_cells_per_hole;
        if (h > max_h * (1.0 + 1e-9))
            throw UnresolvableFeature("unresolvable feature: hole diameter spans fewer than 8 cells; "
                                      "maximum admissible h is " + std::to_string(max_h),
                                      max_h);
    }

    Lattice lat;
    lat.m = static_cast<int>(m);
    lat.h = h;
    lat.mirror_lo.assign(m, std::nullopt);
    lat.mirror_hi.assign(m, std::nullopt);
    const auto [blo, bhi] = bounding_box(spec);
    if (opts.fold_symmetry) {
        if (!perf) throw InvalidArgument("symmetry folding is only available for perforated cubes");
        lat.origin.assign(m, 0.0);
        lat.lo.assign(m, 0);
        lat.hi.assign(m, static_cast<long>(std::ceil(perf->L / (2.0 * h))));
        lat.mirror_lo.assign(m, 0L);
        lat.diagonal = true;
    } else {
        lat.origin = lattice_anchor(spec);
        lat.lo.resize(m);
        lat.hi.resize(m);
        for (std::size_t a = 0; a < m; ++a) {
            lat.lo[a] = static_cast<long>(std::floor((blo[a] - lat.origin[a]) / h));
            lat.hi[a] = static_cast<long>(std::ceil((bhi[a] - lat.origin[a]) / h));
        }
    }
    auto g = detail::build_lattice_grid(detail::SpecGeometry{spec}, std::move(lat), BoundaryKind::dirichlet);
    g.extent_lo = blo;
    g.extent_hi = bhi;
    return g;
}

/// Spacing actually used for a unit cell: the largest h' <= h with the cell
/// faces on lattice nodes.
inline double unit_cell_spacing(double Lcell, double h) {
    const long half = std::max(1L, static_cast<long>(std::ceil(Lcell / (2.0 * h) - 1e-9)));
    return Lcell / (2.0 * static_cast<double>(half));
}

/// Grid for the cube of side Lcell centred at the origin with Neumann faces
/// and a Dirichlet ball of radius delta at its centre (delta = 0: no ball).
inline GridDomain build_unit_cell_grid(int m, double Lcell, double delta, double h, GridOptions opts = {}) {
    if (m < 2) throw InvalidArgument("unit cell dimension must be >= 2");
    if (!(Lcell > 0.0)) throw InvalidArgument("unit cell side must be > 0");
    if (!(delta >= 0.0 && delta < Lcell / 2.0)) throw InvalidArgument("unit cell needs 0 <= delta < Lcell/2");
    if (!(h > 0.0)) throw InvalidArgument("grid spacing must be > 0");
    const double he = unit_cell_spacing(Lcell, h);
    if (delta > 0.0) {
        const double max_h = 2.0 * delta / min_cells_per_hole;
        if (he > max_h * (1.0 + 1e-9))
            throw UnresolvableFeature("unresolvable feature: ball diameter spans fewer than 8 cells; "
                                      "maximum admissible h is " + std::to_string(max_h),
                                      max_h);
    }
    const auto mm = static_cast<std::size_t>(m);
    const long half = std::lround(Lcell / (2.0 * he));
    Lattice lat;
    lat.m = m;
    lat.h = he;
    lat.origin.assign(mm, 0.0);
    lat.hi.assign(mm, half);
    lat.mirror_hi.assign(mm, half);
    if (opts.fold_symmetry) {
        lat.lo.assign(mm, 0);
        lat.mirror_lo.assign(mm, 0L);
        lat.diagonal = true;
    } else {
        lat.lo.assign(mm, -half);
        lat.mirror_lo.assign(mm, -half);
    }
    auto g = detail::build_lattice_grid(detail::UnitCellGeometry{Lcell / 2.0, delta}, std::move(lat),
                                        BoundaryKind::mixed_neumann_dirichlet);
    g.extent_lo.assign(mm, -Lcell / 2.0);
    g.extent_hi.assign(mm, Lcell / 2.0);
    return g;
}

// ---------------------------------------------------------------------------

/// Symmetric positive (semi)definite B = W^{1/2} A W^{-1/2} in CSR form, A the
/// discrete -Laplacian acting on nodal values.
struct SparseOperator {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<double> val;
    std::vector<double> weight;       // W
    std::vector<double> sqrt_weight;  // W^{1/2}
    BoundaryKind kind = BoundaryKind::dirichlet;
    double h = 0.0;
    std::shared_ptr<const GridDomain> grid;

    std::size_t nonzeros() const { return val.size(); }

    void apply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += val[p] * x[static_cast<std::size_t>(col[p])];
            y[i] = s;
        }
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(n);
        apply(x, y);
        return y;
    }

    /// A x for nodal values x.
    std::vector<double> apply_physical(std::span<const double> x) const {
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = sqrt_weight[i] * x[i];
        auto y = apply(t);
        for (std::size_t i = 0; i < n; ++i) y[i] /= sqrt_weight[i];
        return y;
    }

    double at(std::size_t i, std::size_t j) const {
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
            if (static_cast<std::size_t>(col[p]) == j) return val[p];
        return 0.0;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) d[i] = at(i, i);
        return d;
    }

    /// Max absolute row sum.
    double norm_inf() const {
        double mx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += std::abs(val[p]);
            mx = std::max(mx, s);
        }
        return mx;
    }
};

/// Assemble the symmetrised operator for any grid.
inline SparseOperator assemble(std::shared_ptr<const GridDomain> grid) {
    const GridDomain& g = *grid;
    const std::size_t n = g.size();
    const std::size_t arms = g.arms();
    const double ih2 = 1.0 / (g.h() * g.h());

    SparseOperator op;
    op.n = n;
    op.kind = g.kind;
    op.h = g.h();
    op.weight = g.weight;
    op.sqrt_weight.resize(n);
    for (std::size_t i = 0; i < n; ++i) op.sqrt_weight[i] = std::sqrt(g.weight[i]);
    op.row_ptr.assign(n + 1, 0);
    op.col.reserve(n * (arms + 1));
    op.val.reserve(n * (arms + 1));

    std::vector<std::pair<std::int32_t, double>> row;
    for (std::size_t i = 0; i < n; ++i) {
        row.clear();
        double diag = 0.0;
        for (std::size_t r = 0; r < arms; ++r) {
            const auto j = g.neighbor[i * arms + r];
            if (j >= 0) {
                diag += ih2;
                row.emplace_back(j, -ih2);
            } else {
                diag += ih2 / g.theta[i * arms + r];
            }
        }
        row.emplace_back(static_cast<std::int32_t>(i), diag);
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t start = op.col.size();
        for (const auto& [j, v] : row) {
            if (op.col.size() > start && op.col.back() == j) {
                op.val.back() += v;
            } else {
                op.col.push_back(j);
                op.val.push_back(v);
            }
        }
        for (std::size_t p = start; p < op.col.size(); ++p) {
            const auto j = static_cast<std::size_t>(op.col[p]);
            if (j != i) op.val[p] *= op.sqrt_weight[i] / op.sqrt_weight[j];
        }
        op.row_ptr[i + 1] = op.col.size();
    }
    op.grid = std::move(grid);
    return op;
}

/// Pure Dirichlet operator for a grid built from a DomainSpec.
inline SparseOperator assemble_dirichlet(const GridDomain& grid) {
    if (grid.kind != BoundaryKind::dirichlet) throw InvalidArgument("assemble_dirichlet: grid is not pure Dirichlet");
    return assemble(std::make_shared<const GridDomain>(grid));
}

inline SparseOperator assemble_dirichlet(GridDomain&& grid) {
    if (grid.kind != BoundaryKind::dirichlet) throw InvalidArgument("assemble_dirichlet: grid is not pure Dirichlet");
    return assemble(std::make_shared<const GridDomain>(std::move(grid)));
}

/// Neumann-cube / Dirichlet-ball operator whose lowest eigenvalue approximates
/// the unit-cell eigenvalue of the perforated cube.
inline SparseOperator assemble_unit_cell(int m, double Lcell, double delta, double h, GridOptions opts = {}) {
    return assemble(std::make_shared<const GridDomain>(build_unit_cell_grid(m, Lcell, delta, h, opts)));
}

// ---------------------------------------------------------------------------
// Export

/// Matrix Market coordinate real symmetric (lower triangle) of B.
inline void write_matrix_market(std::ostream& os, const SparseOperator& op) {
    std::size_t lower = 0;
    for (std::size_t i = 0; i < op.n; ++i)
        for (std::size_t p = op.row_ptr[i]; p < op.row_ptr[i + 1]; ++p)
            if (static_cast<std::size_t>(op.col[p]) <= i) ++lower;
    os << "%%MatrixMarket matrix coordinate real symmetric\n";
    os << "% boundary=" << to_string(op.kind) << " h=" << std::setprecision(17) << op.h << "\n";
    os << op.n << ' ' << op.n << ' ' << lower << '\n';
    for (std::size_t i = 0; i < op.n; ++i)
        for (std::size_t p = op.row_ptr[i]; p < op.row_ptr[i + 1]; ++p)
            if (static_cast<std::size_t>(op.col[p]) <= i)
                os << i + 1 << ' ' << op.col[p] + 1 << ' ' << op.val[p] << '\n';
}

/// CSV: node, x0..x{m-1}, weight, then theta per arm (axis-major, - before +).
inline void write_grid_csv(std::ostream& os, const GridDomain& g) {
    const auto m = static_cast<std::size_t>(g.dim());
    os << "node";
    for (std::size_t a = 0; a < m; ++a) os << ",x" << a;
    os << ",weight";
    for (std::size_t a = 0; a < m; ++a) os << ",theta" << a << "m,theta" << a << "p";
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < g.size(); ++i) {
        os << i;
        for (double v : g.position(i)) os << ',' << v;
        os << ',' << g.weight[i];
        for (std::size_t r = 0; r < g.arms(); ++r) os << ',' << g.theta[i * g.arms() + r];
        os << '\n';
    }
}

} // namespace torsionlab
