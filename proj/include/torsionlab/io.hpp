#pragma once

// JSON and CSV serialization of domains, results and reports.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "torsionlab/bounds.hpp"
#include "torsionlab/errors.hpp"
#include "torsionlab/geometry.hpp"
#include "torsionlab/solvers.hpp"
#include "torsionlab/stochastic.hpp"

#ifndef TORSIONLAB_VERSION
#define TORSIONLAB_VERSION "0.1.0"
#endif

namespace torsionlab {

using json = nlohmann::json;

inline constexpr const char* version = TORSIONLAB_VERSION;

namespace detail {

// Non-finite values become null so the output stays valid JSON.
inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double read_number(const json& j, const char* key) {
    if (!j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw InvalidArgument(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

} // namespace detail

// ---------------------------------------------------------------------------
// Domains

inline json domain_to_json(const DomainSpec& spec) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                return {{"variant", "box"}, {"sides", s.sides}};
            } else if constexpr (std::is_same_v<T, Disk>) {
                return {{"variant", "disk"}, {"center", s.center}, {"radius", s.radius}};
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return {{"variant", "ellipse"}, {"center", s.center}, {"a", s.a}, {"b", s.b}};
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                return {{"variant", "convex_polygon"}, {"vertices", s.vertices}};
            } else {
                return {{"variant", "perforated_cube"}, {"m", s.m}, {"L", s.L}, {"N", s.N}, {"delta", s.delta}};
            }
        },
        spec.shape());
}

/// Accepts the output of domain_to_json; "type" is read as an alias of
/// "variant". A perforated cube may give "alpha" instead of "delta", in which
/// case delta = delta*(alpha, N, L).
inline DomainSpec domain_from_json(const json& j) {
    try {
        const auto type = (j.contains("variant") ? j.at("variant") : j.at("type")).get<std::string>();
        if (type == "box") return DomainSpec(Box{j.at("sides").get<std::vector<double>>()});
        if (type == "disk")
            return DomainSpec(Disk{j.value("center", Point{0.0, 0.0}), j.at("radius").get<double>()});
        if (type == "ellipse")
            return DomainSpec(Ellipse{j.value("center", Vec2{0.0, 0.0}), j.at("a").get<double>(),
                                      j.at("b").get<double>()});
        if (type == "convex_polygon" || type == "polygon")
            return DomainSpec(ConvexPolygon{j.at("vertices").get<std::vector<Vec2>>()});
        if (type == "perforated_cube") {
            const int m = j.value("m", 2);
            const double L = j.value("L", 1.0);
            const long N = j.at("N").get<long>();
            if (j.contains("delta")) return make_perforated_cube(m, L, N, j.at("delta").get<double>());
            if (j.contains("alpha"))
                return make_perforated_cube(m, L, N, delta_star(m, j.at("alpha").get<double>(), N, L).require());
            throw InvalidArgument("perforated_cube needs 'delta' or 'alpha'");
        }
        throw InvalidArgument("unknown domain type '" + type + "'");
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed domain: ") + e.what());
    }
}

/// Short human-readable label, e.g. "box 1x10" or "perforated_cube m=2 N=4".
inline std::string domain_label(const DomainSpec& spec) {
    std::ostringstream os;
    os << std::setprecision(6);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
                os << "box ";
                for (std::size_t a = 0; a < s.sides.size(); ++a) os << (a ? "x" : "") << s.sides[a];
            } else if constexpr (std::is_same_v<T, Disk>) {
                os << "disk r=" << s.radius << " m=" << s.center.size();
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                os << "ellipse a=" << s.a << " b=" << s.b;
            } else if constexpr (std::is_same_v<T, ConvexPolygon>) {
                os << "polygon n=" << s.vertices.size();
            } else {
                os << "perforated_cube m=" << s.m << " L=" << s.L << " N=" << s.N << " delta=" << s.delta;
            }
        },
        spec.shape());
    return os.str();
}

// ---------------------------------------------------------------------------
// Results

inline json to_json(const QuantityEstimates& q) {
    return {{"lambda", detail::number(q.lambda)}, {"sup", detail::number(q.sup)},
            {"product", detail::number(q.product)}};
}

inline QuantityEstimates quantities_from_json(const json& j) {
    return {detail::read_number(j, "lambda"), detail::read_number(j, "sup"), detail::read_number(j, "product")};
}

/// Scalar summary of a spectral solve; fields are written separately as CSV.
inline json to_json(const SpectralResult& r) {
    json j{{"h", r.h},
           {"unknowns", r.unknowns},
           {"lambda", detail::number(r.lambda1)},
           {"sup", detail::number(r.sup_norm)},
           {"product", detail::number(r.product)},
           {"argmax", r.argmax},
           {"torsion_iterations", r.torsion_stats.iterations},
           {"torsion_residual", detail::number(r.torsion_stats.rel_residual)},
           {"eigen_iterations", r.eigen_iterations},
           {"eigen_inner_iterations", r.eigen_inner_iterations},
           {"eigen_residual", detail::number(r.eigen_residual)},
           {"eigen_rel_change", detail::number(r.eigen_rel_change)},
           {"gap_ratio", detail::number(r.gap_ratio)},
           {"slow_convergence", r.slow_convergence},
           {"has_error_estimate", r.has_error_estimate}};
    if (r.has_error_estimate) {
        j["coarse_h"] = r.coarse_h;
        j["coarse"] = to_json(r.coarse);
        j["extrapolated"] = to_json(r.extrapolated);
        j["error"] = to_json(r.error);
    }
    return j;
}

/// Rebuilds the scalar part of a SpectralResult (fields stay empty).
inline SpectralResult spectral_from_json(const json& j) {
    SpectralResult r;
    r.h = j.value("h", 0.0);
    r.unknowns = j.value("unknowns", std::size_t{0});
    r.lambda1 = detail::read_number(j, "lambda");
    r.sup_norm = detail::read_number(j, "sup");
    r.product = j.contains("product") ? detail::read_number(j, "product") : r.lambda1 * r.sup_norm;
    r.argmax = j.value("argmax", Point{});
    r.has_error_estimate = j.value("has_error_estimate", false);
    if (r.has_error_estimate) {
        r.coarse_h = j.value("coarse_h", 0.0);
        r.coarse = quantities_from_json(j.at("coarse"));
        r.extrapolated = quantities_from_json(j.at("extrapolated"));
        r.error = quantities_from_json(j.at("error"));
    }
    return r;
}

/// One row per stored node: coordinates, fold weight, torsion, eigenvector.
inline void write_field_csv(std::ostream& os, const SpectralResult& r) {
    if (!r.grid) throw InvalidArgument("result carries no grid");
    const auto& g = *r.grid;
    const int m = g.dim();
    for (int a = 0; a < m; ++a) os << 'x' << a << ',';
    os << "weight,v,psi\n" << std::setprecision(12);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.position(i);
        for (int a = 0; a < m; ++a) os << p[static_cast<std::size_t>(a)] << ',';
        os << g.weight[i] << ',' << (i < r.torsion.size() ? r.torsion[i] : 0.0) << ','
           << (i < r.eigvec.size() ? r.eigvec[i] : 0.0) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const BoundEntry& e) {
    json j{{"name", e.name},
           {"relation", e.relation},
           {"lhs", detail::number(e.lhs)},
           {"rhs", detail::number(e.rhs)},
           {"valid", e.valid},
           {"satisfied", e.satisfied},
           {"margin", detail::number(e.margin)},
           {"rel_error", detail::number(e.rel_error)},
           {"tolerance", detail::number(e.tolerance)}};
    if (!e.note.empty()) j["note"] = e.note;
    return j;
}

inline json to_json(const BoundReport& rep) {
    json entries = json::array();
    for (const auto& e : rep.entries) entries.push_back(to_json(e));
    return {{"domain", rep.domain},
            {"h", rep.h},
            {"error", to_json(rep.error)},
            {"failures", rep.failures()},
            {"entries", std::move(entries)}};
}

inline json to_json(const WosEstimate& w) {
    return {{"mean", w.mean},         {"stderr", w.stderr_}, {"nWalks", w.n_walks},
            {"discarded", w.discarded}, {"seed", w.seed},    {"epsShell", w.eps_shell},
            {"meanSteps", w.mean_steps}};
}

inline json to_json(const SurvivalResult& s) {
    return {{"value", s.value},   {"integral", s.integral}, {"tail", s.tail},
            {"lambda", s.lambda}, {"probe", s.probe},       {"steps", s.steps}};
}

// ---------------------------------------------------------------------------
// Files

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw InvalidArgument("cannot parse '" + path + "': " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    out << text;
    if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

} // namespace torsionlab
