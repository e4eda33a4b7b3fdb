#pragma once

// Closed-form inequalities relating lambda, |v|_inf and their product, and a
// checker that confronts them with computed values.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "torsionlab/errors.hpp"
#include "torsionlab/geometry.hpp"
#include "torsionlab/solvers.hpp"

namespace torsionlab {

namespace detail {
inline void require_dim(int m) {
    if (m < 2) throw InvalidArgument("dimension must be >= 2");
}
inline void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw InvalidArgument(std::string(what) + " must be > 0");
}
} // namespace detail

struct UniversalBounds {
    double lower = 1.0;
    double upper_coef = 0.0;
};

/// 1 <= lambda |v|_inf <= 4 + 3 m log 2 for every open set with lambda > 0.
inline UniversalBounds universal_product_bounds(int m) {
    detail::require_dim(m);
    return {1.0, 4.0 + 3.0 * m * std::numbers::ln2};
}

/// Improved universal upper constant (m + c sqrt(m) + 8)/8, c = sqrt(5(4 + log 2)).
inline double hv_constant(int m) {
    detail::require_dim(m);
    const double c = std::sqrt(5.0 * (4.0 + std::numbers::ln2));
    return (m + c * std::sqrt(static_cast<double>(m)) + 8.0) / 8.0;
}

/// Lower bound of the product for convex sets; attained by the slab.
inline double payne_lower() { return std::numbers::pi * std::numbers::pi / 8.0; }

/// Upper bound of the product for planar convex sets of width w and diameter diam.
inline double convex_product_upper(double w, double diam) {
    detail::require_positive(w, "width");
    if (!(diam >= w)) throw InvalidArgument("need 0 < w <= diam");
    return payne_lower() * (1.0 + 7.0 * std::pow(3.0, 2.0 / 3.0) * std::pow(w / diam, 2.0 / 3.0));
}

struct LambdaConvexUpper {
    double sharp = 0.0;   // pi^2/w^2 (1 + (w/L)^{2/3})^3
    double relaxed = 0.0; // pi^2/w^2 (1 + 7 (w/L)^{2/3})
};

/// Eigenvalue of the best rectangle inscribed in the width/chord quadrilateral.
inline LambdaConvexUpper lambda_convex_upper(double w, double chord) {
    detail::require_positive(w, "width");
    if (!(chord >= w)) throw InvalidArgument("need 0 < w <= chord");
    const double x = std::pow(w / chord, 2.0 / 3.0);
    const double base = std::numbers::pi * std::numbers::pi / (w * w);
    return {base * std::pow(1.0 + x, 3), base * (1.0 + 7.0 * x)};
}

/// Slab comparison: |v|_inf <= w^2/8.
inline double torsion_convex_upper(double w) {
    detail::require_positive(w, "width");
    return w * w / 8.0;
}

/// diam <= 3 * (longest chord perpendicular to the width direction).
inline double diameter_chord_upper(double chord) {
    detail::require_positive(chord, "chord");
    return 3.0 * chord;
}

// ---------------------------------------------------------------------------
// Perforated cube

struct BoundValue {
    double rhs = 0.0;
    bool valid = false;
};

inline double perforated_coefficient(int m) { return 32.0 * m * std::pow(1.25, m); }

/// lambda(perforated cube) <= mu1 + 32 m (5/4)^m (N/L^2 + mu1/sqrt(N)); needs
/// N >= 10, N/L^2 <= mu1 and delta <= L/(4N) (checked when delta is given).
inline BoundValue perforated_eigenvalue_upper(double mu1, int m, long N, double L,
                                              std::optional<double> delta = std::nullopt) {
    detail::require_dim(m);
    detail::require_positive(mu1, "mu1");
    detail::require_positive(L, "L");
    if (N < 1) throw InvalidArgument("N >= 1");
    const double n = static_cast<double>(N);
    BoundValue b;
    b.rhs = mu1 + perforated_coefficient(m) * (n / (L * L) + mu1 / std::sqrt(n));
    b.valid = N >= 10 && n / (L * L) <= mu1 && (!delta || *delta <= L / (4.0 * n));
    return b;
}

/// The same eigenvalue bound before the N >= 10 simplification:
/// mu1 + (N^m - (N-2)^m)/(N-2)^m ((4N/L)^2 + (8 sqrt(N) + 1) mu1). Needs N >= 3.
inline BoundValue perforated_eigenvalue_upper_unsimplified(double mu1, int m, long N, double L,
                                                           std::optional<double> delta = std::nullopt) {
    detail::require_dim(m);
    detail::require_positive(mu1, "mu1");
    detail::require_positive(L, "L");
    BoundValue b;
    if (N < 3) return {std::numeric_limits<double>::infinity(), false};
    const double n = static_cast<double>(N);
    const double inner = std::pow(n - 2.0, m);
    const double ratio = (std::pow(n, m) - inner) / inner;
    b.rhs = mu1 + ratio * (std::pow(4.0 * n / L, 2) + (8.0 * std::sqrt(n) + 1.0) * mu1);
    b.valid = n / (L * L) <= mu1 && (!delta || *delta <= L / (4.0 * n));
    return b;
}

/// Upper end of the mu1 range where the torsion bound applies.
inline double perforated_torsion_threshold(int m, long N, double L) {
    const double n = static_cast<double>(N);
    return 3.0 * std::numbers::e * n * n / (16.0 * m * L * L);
}

/// |v|_inf <= 1/mu1 + sqrt(2m) L/(sqrt(mu1) N) + (4/3)^m L^2/N^2, valid for
/// mu1 <= 3 e N^2/(16 m L^2).
inline BoundValue perforated_torsion_upper(double mu1, int m, long N, double L) {
    detail::require_dim(m);
    detail::require_positive(mu1, "mu1");
    detail::require_positive(L, "L");
    if (N < 1) throw InvalidArgument("N >= 1");
    const double n = static_cast<double>(N);
    BoundValue b;
    b.rhs = 1.0 / mu1 + std::sqrt(2.0 * m) * L / (std::sqrt(mu1) * n) + std::pow(4.0 / 3.0, m) * L * L / (n * n);
    b.valid = mu1 <= perforated_torsion_threshold(m, N, L);
    return b;
}

/// Product of the eigenvalue and torsion bounds; valid on N/L^2 <= mu1 <= 3eN^2/(16mL^2), N >= 10.
inline BoundValue perforated_product_upper(double mu1, int m, long N, double L,
                                           std::optional<double> delta = std::nullopt) {
    const auto a = perforated_eigenvalue_upper(mu1, m, N, L, delta);
    const auto b = perforated_torsion_upper(mu1, m, N, L);
    return {a.rhs * b.rhs, a.valid && b.valid};
}

struct EigenWindow {
    double lo = 0.0;
    double hi = 0.0;
    bool valid = false;
};

/// Constant of the planar cell-eigenvalue window, max{100, 8 pi/(4 - pi)}.
inline double cell_window_constant_planar() {
    return std::max(100.0, 8.0 * std::numbers::pi / (4.0 - std::numbers::pi));
}

/// Planar unit-cell eigenvalue window
/// N^2/(100 L^2) / log(L/(2 delta N)) <= mu1 <= 8 pi N^2/((4 - pi) L^2) / log(L/(2 delta N)),
/// valid for delta < L/(6N).
inline EigenWindow cell_eigenvalue_window_planar(double delta, long N, double L) {
    detail::require_positive(delta, "delta");
    detail::require_positive(L, "L");
    if (N < 1) throw InvalidArgument("N >= 1");
    const double n = static_cast<double>(N);
    EigenWindow w;
    w.valid = delta < L / (6.0 * n);
    const double lg = std::log(L / (2.0 * delta * n));
    const double scale = n * n / (L * L);
    if (lg <= 0.0) return {0.0, std::numeric_limits<double>::infinity(), false};
    w.lo = scale / 100.0 / lg;
    w.hi = 8.0 * std::numbers::pi / (4.0 - std::numbers::pi) * scale / lg;
    return w;
}

/// Capacity window C^{-1} (N/L)^m delta^{m-2} <= mu1 <= C (N/L)^m delta^{m-2} for
/// m >= 3, valid when kappa_m delta^{m-2} <= (L/N)^{m-2}/16. C is supplied by the caller.
inline EigenWindow cell_eigenvalue_window_capacity(double delta, long N, double L, int m, double C) {
    if (m < 3) throw InvalidArgument("capacity window needs m >= 3");
    detail::require_positive(delta, "delta");
    detail::require_positive(L, "L");
    if (!(C >= 1.0)) throw InvalidArgument("window constant C must be >= 1");
    const double n = static_cast<double>(N);
    const double centre = std::pow(n / L, m) * std::pow(delta, m - 2);
    EigenWindow w{centre / C, centre * C, false};
    w.valid = capacity_constant(m) * std::pow(delta, m - 2) <= std::pow(L / n, m - 2) / 16.0;
    return w;
}

/// Largest delta satisfying the capacity-window hypothesis.
inline double cell_window_capacity_max_delta(long N, double L, int m) {
    if (m < 3) throw InvalidArgument("m >= 3");
    return std::pow(std::pow(L / static_cast<double>(N), m - 2) / (16.0 * capacity_constant(m)), 1.0 / (m - 2));
}

/// 1 + 2 calC N^{-1/3}: decay of the product along the alpha = 4/3 family.
inline double product_decay_rate(long N, double calC) {
    detail::require_positive(calC, "calC");
    if (N < 1) throw InvalidArgument("N >= 1");
    return 1.0 + 2.0 * calC * std::pow(static_cast<double>(N), -1.0 / 3.0);
}

// ---------------------------------------------------------------------------
// Report

struct BoundEntry {
    std::string name;
    std::string relation;
    double lhs = 0.0;
    double rhs = 0.0;
    bool valid = true;       // preconditions met
    bool satisfied = false;
    double margin = 0.0;     // (rhs - lhs)/rhs
    double rel_error = 0.0;  // relative error estimate feeding the tolerance
    double tolerance = 0.0;  // absolute slack used
    std::string note;

    bool failed() const { return valid && !satisfied; }
};

/// lhs <= rhs + 3 err max(|lhs|, |rhs|).
inline BoundEntry make_entry(std::string name, std::string relation, double lhs, double rhs, double rel_error,
                             bool valid = true, std::string note = {}) {
    BoundEntry e;
    e.name = std::move(name);
    e.relation = std::move(relation);
    e.lhs = lhs;
    e.rhs = rhs;
    e.valid = valid;
    e.rel_error = rel_error;
    e.tolerance = 3.0 * rel_error * std::max(std::abs(lhs), std::abs(rhs));
    e.satisfied = std::isfinite(lhs) && lhs <= rhs + e.tolerance;
    e.margin = rhs != 0.0 && std::isfinite(rhs) ? (rhs - lhs) / rhs : 0.0;
    e.note = std::move(note);
    return e;
}

/// Unit-cell data needed by the perforated entries.
struct PerforatedAux {
    double mu1 = 0.0;
    double mu1_error = 0.0;
    std::optional<double> cell_torsion_sup;  // Neumann-cell torsion maximum
    double cell_torsion_error = 0.0;
};

/// Constants the inequalities leave unspecified; entries needing an absent
/// constant are reported with valid = false.
struct BoundConstants {
    std::optional<double> window_C; // capacity window, m >= 3
    std::optional<double> decay_C;  // decay-rate constant
};

struct BoundReport {
    std::string domain;
    double h = 0.0;
    QuantityEstimates error;
    std::vector<BoundEntry> entries;

    std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                      [](const BoundEntry& e) { return e.failed(); }));
    }
    const BoundEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
};

inline BoundReport check_all(const SpectralResult& r, const DomainSpec& spec,
                             const std::optional<PerforatedAux>& aux = std::nullopt,
                             const BoundConstants& constants = {}) {
    BoundReport rep;
    rep.domain = spec.variant_name();
    rep.h = r.h;
    rep.error = r.error;
    const int m = spec.dimension();
    const auto& err = r.error;
    const double product = r.lambda1 * r.sup_norm;
    auto& E = rep.entries;

    const auto ub = universal_product_bounds(m);
    E.push_back(make_entry("universal_lower", "1 <= lambda*|v|_inf", ub.lower, product, err.product));
    E.push_back(make_entry("universal_upper", "lambda*|v|_inf <= 4 + 3m log 2", product, ub.upper_coef, err.product));
    E.push_back(make_entry("hv_upper", "lambda*|v|_inf <= (m + c sqrt(m) + 8)/8", product, hv_constant(m),
                           err.product));

    if (spec.is_convex() && m == 2) {
        const auto cm = convex_measurements(spec);
        E.push_back(make_entry("payne_lower", "pi^2/8 <= lambda*|v|_inf", payne_lower(), product, err.product));
        E.push_back(make_entry("convex_product_upper",
                               "lambda*|v|_inf <= (pi^2/8)(1 + 7*3^(2/3)(w/diam)^(2/3))", product,
                               convex_product_upper(cm.width, cm.diameter), err.product));
        E.push_back(make_entry("torsion_convex_upper", "|v|_inf <= w^2/8", r.sup_norm,
                               torsion_convex_upper(cm.width), err.sup));
        const auto lc = lambda_convex_upper(cm.width, cm.chord);
        E.push_back(make_entry("lambda_convex_upper", "lambda <= pi^2/w^2 (1 + (w/chord)^(2/3))^3", r.lambda1,
                               lc.sharp, err.lambda));
        E.push_back(make_entry("lambda_convex_upper_relaxed", "lambda <= pi^2/w^2 (1 + 7(w/chord)^(2/3))",
                               r.lambda1, lc.relaxed, err.lambda));
        E.push_back(make_entry("diameter_chord", "diam <= 3 chord", cm.diameter, diameter_chord_upper(cm.chord), 0.0));
    }

    if (const auto* p = spec.get_if<PerforatedCubeParams>()) {
        const long N = p->N;
        const double L = p->L;
        if (!aux) {
            for (const char* name : {"perforated_eigenvalue_upper", "perforated_torsion_upper",
                                     "perforated_product_upper", "cell_eigenvalue_window_lower",
                                     "cell_eigenvalue_window_upper"})
                E.push_back(make_entry(name, "needs the unit-cell eigenvalue", 0.0, 0.0, 0.0, false,
                                       "unit-cell data not supplied"));
            return rep;
        }
        const double mu1 = aux->mu1;
        const double lam_err = std::hypot(err.lambda, aux->mu1_error);
        const double sup_err = err.sup;
        const double prod_err = std::hypot(err.product, aux->mu1_error);

        const auto eu = perforated_eigenvalue_upper(mu1, m, N, L, p->delta);
        E.push_back(make_entry("perforated_eigenvalue_upper", "lambda <= mu1 + 32m(5/4)^m (N/L^2 + mu1/sqrt(N))",
                               r.lambda1, eu.rhs, lam_err, eu.valid,
                               eu.valid ? "" : "needs N >= 10, N/L^2 <= mu1, delta <= L/(4N)"));
        const auto ev = perforated_eigenvalue_upper_unsimplified(mu1, m, N, L, p->delta);
        E.push_back(make_entry("perforated_eigenvalue_upper_unsimplified",
                               "lambda <= mu1 + (N^m-(N-2)^m)/(N-2)^m ((4N/L)^2 + (8 sqrt(N)+1) mu1)", r.lambda1,
                               ev.rhs, lam_err, ev.valid,
                               ev.valid ? "" : "needs N >= 3, N/L^2 <= mu1, delta <= L/(4N)"));
        const auto tu = perforated_torsion_upper(mu1, m, N, L);
        E.push_back(make_entry("perforated_torsion_upper", "|v|_inf <= 1/mu1 + sqrt(2m) L/(sqrt(mu1) N) + (4/3)^m L^2/N^2",
                               r.sup_norm, tu.rhs, std::hypot(sup_err, aux->mu1_error), tu.valid,
                               tu.valid ? "" : "needs mu1 <= 3eN^2/(16mL^2) = " +
                                                   std::to_string(perforated_torsion_threshold(m, N, L))));
        if (aux->cell_torsion_sup)
            E.push_back(make_entry("cell_torsion_upper", "|v|_inf <= sup of the Neumann-cell torsion", r.sup_norm,
                                   *aux->cell_torsion_sup, std::hypot(sup_err, aux->cell_torsion_error)));
        const auto pu = perforated_product_upper(mu1, m, N, L, p->delta);
        E.push_back(make_entry("perforated_product_upper", "lambda*|v|_inf <= (eigenvalue bound)(torsion bound)",
                               product, pu.rhs, prod_err, pu.valid,
                               pu.valid ? "" : "needs N >= 10 and N/L^2 <= mu1 <= 3eN^2/(16mL^2)"));

        EigenWindow win;
        std::string why;
        if (m == 2) {
            win = cell_eigenvalue_window_planar(p->delta, N, L);
            if (!win.valid) why = "needs delta < L/(6N)";
        } else if (constants.window_C) {
            win = cell_eigenvalue_window_capacity(p->delta, N, L, m, *constants.window_C);
            if (!win.valid) why = "needs kappa_m delta^(m-2) <= (L/N)^(m-2)/16";
        } else {
            win = {0.0, std::numeric_limits<double>::infinity(), false};
            why = "window constant C not supplied";
        }
        E.push_back(make_entry("cell_eigenvalue_window_lower", "window lower end <= mu1", win.lo, mu1, aux->mu1_error,
                               win.valid, why));
        E.push_back(make_entry("cell_eigenvalue_window_upper", "mu1 <= window upper end", mu1, win.hi, aux->mu1_error,
                               win.valid, why));

        if (constants.decay_C) {
            E.push_back(make_entry("product_decay_rate", "lambda*|v|_inf <= 1 + 2 calC N^(-1/3)", product,
                                   product_decay_rate(N, *constants.decay_C), prod_err, pu.valid,
                                   pu.valid ? "" : "holds only where the product bound applies"));
        }
    }
    return rep;
}

/// Fixed-column CSV: name, relation, lhs, rhs, valid, satisfied, margin.
inline void write_bound_csv_header(std::ostream& os) { os << "name,relation,lhs,rhs,valid,satisfied,margin"; }

inline void write_bound_csv_row(std::ostream& os, const BoundEntry& e) {
    os << e.name << ",\"" << e.relation << "\"," << std::setprecision(12) << e.lhs << ',' << e.rhs << ','
       << (e.valid ? "true" : "false") << ',' << (e.satisfied ? "true" : "false") << ',' << e.margin;
}

inline void write_bound_csv(std::ostream& os, const BoundReport& rep) {
    write_bound_csv_header(os);
    os << '\n';
    for (const auto& e : rep.entries) {
        write_bound_csv_row(os, e);
        os << '\n';
    }
}

} // namespace torsionlab
