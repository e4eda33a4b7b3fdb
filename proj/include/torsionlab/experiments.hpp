#pragma once

// Batch experiments: configuration, resolution rule, sweeps, bound
// verification and oracle cross-checks. Each runner returns rows in sweep
// order and writes CSV/JSON files under the configured output directory.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "torsionlab/bounds.hpp"
#include "torsionlab/discretize.hpp"
#include "torsionlab/errors.hpp"
#include "torsionlab/geometry.hpp"
#include "torsionlab/io.hpp"
#include "torsionlab/solvers.hpp"
#include "torsionlab/stochastic.hpp"

namespace torsionlab {

/// Raised for configurations that cannot be run as given.
class ConfigError : public Error {
public:
    using Error::Error;
};

inline constexpr double tolerance_factor = 3.0;

struct ProbeSpec {
    DomainSpec domain;
    Point x;
};

struct PerforatedCase {
    long N = 10;
    std::optional<double> delta;            // explicit hole radius
    std::optional<double> delta_over_cell;  // or a fraction of the cell side
};

struct ExperimentConfig {
    std::string experiment;
    std::optional<DomainSpec> domain;
    std::vector<DomainSpec> corpus;
    bool corpus_given = false;

    // resolution
    std::optional<double> h;
    double cells_per_width = 128.0;         // convex: h = w/128
    double cells_per_hole_radius = 8.0;     // perforated: h = min(delta/8, L/(64N))
    double cells_per_cube_cell = 64.0;
    bool richardson = true;
    bool fold_symmetry = true;
    SolverOptions solver = [] {
        SolverOptions s;
        s.backend = LinearBackend::cholesky;
        return s;
    }();

    // convex sweep
    std::vector<double> aspects{1.0, 2.0, 5.0, 10.0, 20.0};
    std::vector<std::string> families{"rectangle", "ellipse", "polygons"};

    // perforated sweep
    int m = 2;
    double alpha = 4.0 / 3.0;
    double L = 1.0;
    std::vector<long> N_list{2, 3, 4, 6};
    std::vector<PerforatedCase> extra_cases{PerforatedCase{10, std::nullopt, 0.125}};
    std::size_t max_unknowns = 4000000;
    BoundConstants constants;

    // stochastic
    std::optional<Point> x;
    std::vector<ProbeSpec> probes;
    std::uint64_t seed = 1;
    std::size_t n_walks = 100000;
    std::optional<double> eps_shell;
    std::size_t max_steps = 100000;
    std::optional<double> dt;
    std::optional<double> t_max;
    double wos_bias_allowance = 1e-3;
    double survival_rel_tol = 0.01;

    // output
    std::string out = "out";
    unsigned threads = 1;
    std::optional<std::string> replay;
    bool write_fields = true;
    bool quiet = false;
};

inline const std::vector<std::string>& experiment_tags() {
    static const std::vector<std::string> tags{"torsion",         "eig",           "product", "convex-sweep",
                                               "perforated-sweep", "verify-bounds", "wos",     "survival",
                                               "oracle-check"};
    return tags;
}

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown config field '" + k + "' in " + where);
}

inline LinearBackend parse_backend(const std::string& s) {
    if (s == "cg") return LinearBackend::cg;
    if (s == "cholesky") return LinearBackend::cholesky;
    throw ConfigError("solver backend must be 'cg' or 'cholesky'");
}

inline EigenMethod parse_eigen_method(const std::string& s) {
    if (s == "lanczos") return EigenMethod::lanczos;
    if (s == "inverse_iteration") return EigenMethod::inverse_iteration;
    throw ConfigError("eigen method must be 'lanczos' or 'inverse_iteration'");
}

inline DomainSpec parse_domain(const json& j) {
    try {
        return domain_from_json(j);
    } catch (const RegimeError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

} // namespace detail

/// Parse a declarative config. Unknown keys are rejected so typos surface.
inline ExperimentConfig config_from_json(const json& j) {
    using detail::get_or;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown(j,
                           {"experiment", "domain", "corpus", "h", "resolution", "richardson", "fold_symmetry",
                            "solver", "convex", "perforated", "constants", "x", "probes", "seed", "wos",
                            "survival", "out", "threads", "replay", "write_fields", "quiet"},
                           "top level");
    ExperimentConfig c;
    c.experiment = get_or<std::string>(j, "experiment", "");
    if (!c.experiment.empty() &&
        std::find(experiment_tags().begin(), experiment_tags().end(), c.experiment) == experiment_tags().end())
        throw ConfigError("unknown experiment '" + c.experiment + "'");
    if (j.contains("domain")) c.domain = detail::parse_domain(j.at("domain"));
    if (j.contains("corpus")) {
        c.corpus_given = true;
        if (!j.at("corpus").is_array()) throw ConfigError("'corpus' must be an array");
        for (const auto& d : j.at("corpus")) c.corpus.push_back(detail::parse_domain(d));
    }
    if (j.contains("h")) c.h = get_or<double>(j, "h", 0.0);
    if (j.contains("resolution")) {
        const auto& r = j.at("resolution");
        detail::reject_unknown(r, {"cells_per_width", "cells_per_hole_radius", "cells_per_cube_cell"}, "resolution");
        c.cells_per_width = get_or(r, "cells_per_width", c.cells_per_width);
        c.cells_per_hole_radius = get_or(r, "cells_per_hole_radius", c.cells_per_hole_radius);
        c.cells_per_cube_cell = get_or(r, "cells_per_cube_cell", c.cells_per_cube_cell);
    }
    c.richardson = get_or(j, "richardson", c.richardson);
    c.fold_symmetry = get_or(j, "fold_symmetry", c.fold_symmetry);
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::reject_unknown(s, {"backend", "eigen_method", "cg_tol", "inner_tol", "cg_max_iter", "eig_tol",
                                   "eig_residual_tol", "eig_max_iter"},
                               "solver");
        if (s.contains("backend")) c.solver.backend = detail::parse_backend(s.at("backend").get<std::string>());
        if (s.contains("eigen_method"))
            c.solver.eigen_method = detail::parse_eigen_method(s.at("eigen_method").get<std::string>());
        c.solver.cg_tol = get_or(s, "cg_tol", c.solver.cg_tol);
        c.solver.inner_tol = get_or(s, "inner_tol", c.solver.inner_tol);
        c.solver.cg_max_iter = get_or(s, "cg_max_iter", c.solver.cg_max_iter);
        c.solver.eig_tol = get_or(s, "eig_tol", c.solver.eig_tol);
        c.solver.eig_residual_tol = get_or(s, "eig_residual_tol", c.solver.eig_residual_tol);
        c.solver.eig_max_iter = get_or(s, "eig_max_iter", c.solver.eig_max_iter);
    }
    if (j.contains("convex")) {
        const auto& s = j.at("convex");
        detail::reject_unknown(s, {"aspects", "families"}, "convex");
        c.aspects = get_or(s, "aspects", c.aspects);
        c.families = get_or(s, "families", c.families);
    }
    if (j.contains("perforated")) {
        const auto& s = j.at("perforated");
        detail::reject_unknown(s, {"m", "alpha", "L", "N", "extra_cases", "max_unknowns"}, "perforated");
        c.m = get_or(s, "m", c.m);
        c.alpha = get_or(s, "alpha", c.alpha);
        c.L = get_or(s, "L", c.L);
        c.N_list = get_or(s, "N", c.N_list);
        c.max_unknowns = get_or(s, "max_unknowns", c.max_unknowns);
        if (s.contains("extra_cases")) {
            c.extra_cases.clear();
            for (const auto& e : s.at("extra_cases")) {
                detail::reject_unknown(e, {"N", "delta", "delta_over_cell"}, "extra_cases");
                PerforatedCase pc;
                pc.N = get_or<long>(e, "N", 0);
                if (e.contains("delta")) pc.delta = get_or<double>(e, "delta", 0.0);
                if (e.contains("delta_over_cell")) pc.delta_over_cell = get_or<double>(e, "delta_over_cell", 0.0);
                if (pc.delta.has_value() == pc.delta_over_cell.has_value())
                    throw ConfigError("extra case needs exactly one of 'delta' and 'delta_over_cell'");
                c.extra_cases.push_back(pc);
            }
        }
    }
    if (j.contains("constants")) {
        const auto& s = j.at("constants");
        detail::reject_unknown(s, {"window_C", "decay_C"}, "constants");
        if (s.contains("window_C")) c.constants.window_C = get_or<double>(s, "window_C", 1.0);
        if (s.contains("decay_C")) c.constants.decay_C = get_or<double>(s, "decay_C", 1.0);
    }
    if (j.contains("x")) c.x = get_or<Point>(j, "x", Point{});
    if (j.contains("probes")) {
        for (const auto& p : j.at("probes")) {
            detail::reject_unknown(p, {"domain", "x"}, "probes");
            if (!p.contains("domain") || !p.contains("x")) throw ConfigError("probe needs 'domain' and 'x'");
            c.probes.push_back({detail::parse_domain(p.at("domain")), get_or<Point>(p, "x", Point{})});
        }
    }
    c.seed = get_or(j, "seed", c.seed);
    if (j.contains("wos")) {
        const auto& s = j.at("wos");
        detail::reject_unknown(s, {"n_walks", "eps_shell", "max_steps", "bias_allowance"}, "wos");
        c.n_walks = get_or(s, "n_walks", c.n_walks);
        if (s.contains("eps_shell")) c.eps_shell = get_or<double>(s, "eps_shell", 0.0);
        c.max_steps = get_or(s, "max_steps", c.max_steps);
        c.wos_bias_allowance = get_or(s, "bias_allowance", c.wos_bias_allowance);
    }
    if (j.contains("survival")) {
        const auto& s = j.at("survival");
        detail::reject_unknown(s, {"dt", "t_max", "rel_tol"}, "survival");
        if (s.contains("dt")) c.dt = get_or<double>(s, "dt", 0.0);
        if (s.contains("t_max")) c.t_max = get_or<double>(s, "t_max", 0.0);
        c.survival_rel_tol = get_or(s, "rel_tol", c.survival_rel_tol);
    }
    c.out = get_or(j, "out", c.out);
    c.threads = get_or(j, "threads", c.threads);
    if (j.contains("replay")) c.replay = get_or<std::string>(j, "replay", "");
    c.write_fields = get_or(j, "write_fields", c.write_fields);
    c.quiet = get_or(j, "quiet", c.quiet);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    try {
        return config_from_json(load_json_file(path));
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

// ---------------------------------------------------------------------------
// Resolution rule

/// Grid spacing for a domain: the configured h if any, else
/// min(delta/8, L/(64N)) for perforated cubes and w/128 for convex sets
/// (w the width; for m >= 3 the smallest side or the diameter of the ball).
inline double select_h(const DomainSpec& spec, const ExperimentConfig& cfg) {
    if (cfg.h) {
        if (!(*cfg.h > 0.0)) throw ConfigError("h must be > 0");
        return *cfg.h;
    }
    if (const auto* p = spec.get_if<PerforatedCubeParams>())
        return std::min(p->delta / cfg.cells_per_hole_radius, p->L / (cfg.cells_per_cube_cell * p->N));
    double w = 0.0;
    if (spec.dimension() == 2) {
        w = convex_measurements(spec).width;
    } else if (const auto* b = spec.get_if<Box>()) {
        w = *std::min_element(b->sides.begin(), b->sides.end());
    } else if (const auto* d = spec.get_if<Disk>()) {
        w = 2.0 * d->radius;
    }
    return w / cfg.cells_per_width;
}

inline GridOptions grid_options_for(const DomainSpec& spec, const ExperimentConfig& cfg) {
    GridOptions g;
    g.fold_symmetry = cfg.fold_symmetry && spec.get_if<PerforatedCubeParams>() != nullptr;
    return g;
}

/// Rough count of stored unknowns, used to refuse runs that would not fit.
inline double estimated_unknowns(const DomainSpec& spec, double h, bool folded) {
    const auto [lo, hi] = bounding_box(spec);
    double n = 1.0;
    for (std::size_t a = 0; a < lo.size(); ++a) n *= (hi[a] - lo[a]) / h + 1.0;
    if (folded) {
        const int m = spec.dimension();
        double f = std::ldexp(1.0, m);
        for (int k = 2; k <= m; ++k) f *= k;
        n /= f;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Shared pieces

namespace detail {

inline void log(const ExperimentConfig& cfg, const std::string& msg) {
    if (cfg.quiet) return;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    std::clog << "[torsionlab] " << msg << std::endl;
}

/// Runs job(i) for i in [0, n) on up to `threads` workers; the first
/// exception (by index) is rethrown after all workers finish.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& job) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned nt = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < nt; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::string fmt(double x, int prec = 10) {
    if (!std::isfinite(x)) return "nan";
    std::ostringstream os;
    os << std::setprecision(prec) << x;
    return os.str();
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::filesystem::path prepare_out(const ExperimentConfig& cfg) {
    std::filesystem::path p(cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory '" + cfg.out + "': " + ec.message());
    return p;
}

inline json provenance(const ExperimentConfig& cfg) {
    return {{"version", version},
            {"seed", cfg.seed},
            {"tolerance_factor", tolerance_factor},
            {"backend", to_string(cfg.solver.backend)},
            {"eigen_method", to_string(cfg.solver.eigen_method)},
            {"richardson", cfg.richardson},
            {"fold_symmetry", cfg.fold_symmetry}};
}

} // namespace detail

/// Spectral solve of one domain with the configured options and resolution.
inline SpectralResult solve_domain(const DomainSpec& spec, const ExperimentConfig& cfg,
                                   std::optional<double> h = std::nullopt) {
    ProductOptions po;
    po.solver = cfg.solver;
    po.grid = grid_options_for(spec, cfg);
    po.richardson = cfg.richardson;
    return spectral_product(spec, h ? *h : select_h(spec, cfg), po);
}

struct UnitCellResult {
    double h = 0.0;          // spacing actually used
    std::size_t unknowns = 0;
    double mu1 = 0.0;
    double mu1_error = 0.0;
    double torsion_sup = 0.0;
    double torsion_error = 0.0;
};

/// Eigenvalue and torsion maximum of the cell of side L/N with Neumann faces
/// and a Dirichlet ball of radius delta, with a 2h companion for the error.
inline UnitCellResult solve_unit_cell(const PerforatedCubeParams& p, double h, const ExperimentConfig& cfg) {
    GridOptions g;
    g.fold_symmetry = cfg.fold_symmetry;
    const auto run = [&](double hh) {
        const auto op = assemble_unit_cell(p.m, p.cell(), p.delta, hh, g);
        const auto r = spectral_product(op, cfg.solver);
        return std::tuple{op.h, op.n, r.lambda1, r.sup_norm};
    };
    UnitCellResult out;
    const auto [hf, nf, mu, sup] = run(h);
    out.h = hf;
    out.unknowns = nf;
    out.mu1 = mu;
    out.torsion_sup = sup;
    if (cfg.richardson) {
        const auto [hc, nc, muc, supc] = run(2.0 * h);
        // the companion may round to a different spacing; use the actual ratio
        const double ratio = hc / hf;
        const auto rich = [&](double coarse, double fine) {
            const double ext = (ratio * ratio * fine - coarse) / (ratio * ratio - 1.0);
            return ext != 0.0 ? std::abs(fine - ext) / std::abs(ext) : 0.0;
        };
        out.mu1_error = rich(muc, mu);
        out.torsion_error = rich(supc, sup);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Single-domain experiments

struct RunOutcome {
    int exit_code = 0;
    std::vector<std::string> files;
    std::string summary;
};

inline RunOutcome run_single(const ExperimentConfig& cfg) {
    if (!cfg.domain) throw ConfigError("experiment '" + cfg.experiment + "' needs a 'domain'");
    const auto& spec = *cfg.domain;
    const double h = select_h(spec, cfg);
    const auto out = detail::prepare_out(cfg);
    RunOutcome res;
    json j = detail::provenance(cfg);
    j["experiment"] = cfg.experiment;
    j["domain"] = domain_to_json(spec);
    j["h"] = h;

    if (cfg.experiment == "torsion") {
        const auto op = assemble_dirichlet(build_grid(spec, h, grid_options_for(spec, cfg)));
        const auto t = solve_torsion(op, cfg.solver);
        const auto it = std::max_element(t.values.begin(), t.values.end());
        j["unknowns"] = op.n;
        j["sup"] = *it;
        j["argmax"] = op.grid->position(static_cast<std::size_t>(it - t.values.begin()));
        j["iterations"] = t.stats.iterations;
        j["residual"] = t.stats.rel_residual;
        res.summary = "sup v = " + detail::fmt(*it);
        if (cfg.write_fields) {
            SpectralResult r;
            r.grid = op.grid;
            r.torsion = t.values;
            std::ostringstream os;
            write_field_csv(os, r);
            write_text_file((out / "torsion_field.csv").string(), os.str());
            res.files.push_back((out / "torsion_field.csv").string());
        }
    } else if (cfg.experiment == "eig") {
        const auto op = assemble_dirichlet(build_grid(spec, h, grid_options_for(spec, cfg)));
        const auto e = principal_eigenvalue(op, cfg.solver);
        j["unknowns"] = op.n;
        j["lambda"] = e.lambda;
        j["iterations"] = e.iterations;
        j["residual"] = e.residual;
        j["gap_ratio"] = e.gap_ratio;
        j["slow_convergence"] = e.slow_convergence;
        res.summary = "lambda = " + detail::fmt(e.lambda);
    } else {
        const auto r = solve_domain(spec, cfg, h);
        j["result"] = to_json(r);
        res.summary = "lambda = " + detail::fmt(r.lambda1) + ", sup v = " + detail::fmt(r.sup_norm) +
                      ", product = " + detail::fmt(r.product);
        if (r.has_error_estimate) res.summary += " (rel. error " + detail::fmt(r.error.product, 3) + ")";
        if (cfg.write_fields) {
            std::ostringstream os;
            write_field_csv(os, r);
            write_text_file((out / "product_field.csv").string(), os.str());
            res.files.push_back((out / "product_field.csv").string());
        }
    }
    const auto path = (out / (cfg.experiment + ".json")).string();
    write_text_file(path, j.dump(2) + "\n");
    res.files.insert(res.files.begin(), path);
    return res;
}

// ---------------------------------------------------------------------------
// Convex sweep

struct ConvexRow {
    std::string family;
    double aspect = 0.0;
    DomainSpec spec;
    ConvexMeasurements cm;
    SpectralResult result;
    BoundReport report;
};

/// Rectangles w x A and ellipses of width w and length A w, plus three fixed polygons.
inline std::vector<std::pair<std::string, std::pair<double, DomainSpec>>> convex_members(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::pair<double, DomainSpec>>> out;
    for (const auto& fam : cfg.families) {
        if (fam == "rectangle" || fam == "ellipse") {
            for (double A : cfg.aspects) {
                if (!(A >= 1.0)) throw ConfigError("aspect ratios must be >= 1");
                if (fam == "rectangle") out.push_back({fam, {A, DomainSpec(Box{{1.0, A}})}});
                else out.push_back({fam, {A, DomainSpec(Ellipse{{0.0, 0.0}, A / 2.0, 0.5})}});
            }
        } else if (fam == "polygons") {
            const double s3 = std::sqrt(3.0);
            out.push_back({"triangle", {2.0 / s3, DomainSpec(ConvexPolygon{{{0, 0}, {1, 0}, {0.5, s3 / 2}}})}});
            ConvexPolygon hex;
            for (int k = 0; k < 6; ++k) {
                const double t = k * std::numbers::pi / 3.0;
                hex.vertices.push_back({0.5 * std::cos(t), 0.5 * std::sin(t)});
            }
            out.push_back({"hexagon", {2.0 / s3, DomainSpec(hex)}});
            out.push_back({"trapezoid", {3.0, DomainSpec(ConvexPolygon{{{0, 0}, {3, 0}, {2, 1}, {1, 1}}})}});
        } else {
            throw ConfigError("unknown convex family '" + fam + "'");
        }
    }
    if (out.empty()) throw ConfigError("convex sweep has no members");
    return out;
}

inline std::vector<ConvexRow> convex_sweep_rows(const ExperimentConfig& cfg) {
    const auto members = convex_members(cfg);
    for (const auto& [fam, m] : members) {
        const double h = select_h(m.second, cfg);
        if (estimated_unknowns(m.second, h, false) > static_cast<double>(cfg.max_unknowns))
            throw ConfigError("convex sweep member '" + fam + "' would need more than " +
                              std::to_string(cfg.max_unknowns) + " unknowns at h = " + detail::fmt(h));
    }
    std::vector<std::optional<ConvexRow>> rows(members.size());
    detail::parallel_for(members.size(), cfg.threads, [&](std::size_t i) {
        const auto& [fam, m] = members[i];
        const auto t0 = std::chrono::steady_clock::now();
        auto r = solve_domain(m.second, cfg);
        r.eigvec.clear();
        r.torsion.clear();
        auto rep = check_all(r, m.second, std::nullopt, cfg.constants);
        rep.domain = domain_label(m.second);
        rows[i] = ConvexRow{fam, m.first, m.second, convex_measurements(m.second), std::move(r), std::move(rep)};
        detail::log(cfg, "convex " + domain_label(m.second) + ": product " + detail::fmt(rows[i]->result.product, 7) +
                             " (" + detail::fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 3) +
                             " s)");
    });
    std::vector<ConvexRow> out;
    for (auto& r : rows) out.push_back(std::move(*r));
    return out;
}

inline RunOutcome run_convex_sweep(const ExperimentConfig& cfg) {
    const auto rows = convex_sweep_rows(cfg);
    const auto out = detail::prepare_out(cfg);
    std::ostringstream csv;
    csv << "family,aspect,domain,h,width,diameter,chord,lambda,sup,product,err_lambda,err_sup,err_product,"
           "payne_lower,payne_ok,convex_product_upper,convex_product_ok,torsion_width_upper,torsion_width_ok,"
           "lambda_upper,lambda_upper_ok,lambda_upper_relaxed,lambda_upper_relaxed_ok,tolerance_factor,seed,version\n";
    json jrows = json::array();
    std::size_t failures = 0;
    const auto ok = [](const BoundEntry* e) { return e && e->satisfied ? "true" : "false"; };
    for (const auto& r : rows) {
        const auto& rep = r.report;
        const auto* pl = rep.find("payne_lower");
        const auto* cu = rep.find("convex_product_upper");
        const auto* tw = rep.find("torsion_convex_upper");
        const auto* lu = rep.find("lambda_convex_upper");
        const auto* lr = rep.find("lambda_convex_upper_relaxed");
        csv << r.family << ',' << detail::fmt(r.aspect) << ',' << detail::csv_quote(rep.domain) << ','
            << detail::fmt(r.result.h) << ',' << detail::fmt(r.cm.width) << ',' << detail::fmt(r.cm.diameter) << ','
            << detail::fmt(r.cm.chord) << ',' << detail::fmt(r.result.lambda1) << ',' << detail::fmt(r.result.sup_norm)
            << ',' << detail::fmt(r.result.product) << ',' << detail::fmt(r.result.error.lambda, 4) << ','
            << detail::fmt(r.result.error.sup, 4) << ',' << detail::fmt(r.result.error.product, 4) << ','
            << detail::fmt(payne_lower()) << ',' << ok(pl) << ',' << detail::fmt(cu->rhs) << ',' << ok(cu) << ','
            << detail::fmt(tw->rhs) << ',' << ok(tw) << ',' << detail::fmt(lu->rhs) << ',' << ok(lu) << ','
            << detail::fmt(lr->rhs) << ',' << ok(lr) << ',' << tolerance_factor << ',' << cfg.seed << ','
            << version << '\n';
        failures += rep.failures();
        json jr = to_json(rep);
        jr["family"] = r.family;
        jr["aspect"] = r.aspect;
        jr["spec"] = domain_to_json(r.spec);
        jr["result"] = to_json(r.result);
        jr["width"] = r.cm.width;
        jr["diameter"] = r.cm.diameter;
        jr["chord"] = r.cm.chord;
        jrows.push_back(std::move(jr));
    }
    // rectangles should approach the slab value from above
    json trend = json::object();
    std::vector<const ConvexRow*> rect;
    for (const auto& r : rows)
        if (r.family == "rectangle") rect.push_back(&r);
    if (!rect.empty()) {
        bool decreasing = true;
        for (std::size_t i = 1; i < rect.size(); ++i)
            if (rect[i]->aspect > rect[i - 1]->aspect && !(rect[i]->result.product < rect[i - 1]->result.product))
                decreasing = false;
        const auto* last = *std::max_element(rect.begin(), rect.end(), [](auto* a, auto* b) { return a->aspect < b->aspect; });
        trend = {{"rectangles_decreasing", decreasing},
                 {"most_elongated_aspect", last->aspect},
                 {"most_elongated_product", last->result.product},
                 {"relative_gap_to_slab", last->result.product / payne_lower() - 1.0}};
    }
    json report = detail::provenance(cfg);
    report["experiment"] = "convex-sweep";
    report["rows"] = std::move(jrows);
    report["rectangle_trend"] = std::move(trend);
    report["failures"] = failures;
    const auto pc = (out / "convex_sweep.csv").string(), pj = (out / "convex_sweep.json").string();
    write_text_file(pc, csv.str());
    write_text_file(pj, report.dump(2) + "\n");
    RunOutcome res{failures ? 1 : 0, {pc, pj}, std::to_string(rows.size()) + " shapes, " +
                                                    std::to_string(failures) + " bound failures"};
    return res;
}

// ---------------------------------------------------------------------------
// Perforated sweep

struct PerforatedRow {
    std::string kind;  // "sweep" (delta = delta*) or "extra"
    PerforatedCubeParams params;
    bool delta_star_valid = true;
    double h = 0.0;
    SpectralResult result;
    UnitCellResult cell;
    BoundReport report;
};

struct PerforatedPlanItem {
    std::string kind;
    PerforatedCubeParams params;
    bool delta_star_valid = true;
    double h = 0.0;
    double unknowns = 0.0;
};

/// Sweep members with their spacing; refuses before any solve if a member is
/// unresolvable or too large, naming the largest feasible N.
inline std::vector<PerforatedPlanItem> plan_perforated_sweep(const ExperimentConfig& cfg) {
    if (cfg.N_list.empty()) throw ConfigError("perforated sweep needs a nonempty N list");
    if (cfg.m < 2) throw ConfigError("perforated sweep needs m >= 2");
    std::vector<PerforatedPlanItem> plan;
    const auto add = [&](const std::string& kind, long N, double delta, bool valid) {
        PerforatedPlanItem it{kind, PerforatedCubeParams{cfg.m, cfg.L, N, delta}, valid, 0.0, 0.0};
        if (!(delta > 0.0))
            throw UnresolvableFeature("N = " + std::to_string(N) + ": hole radius underflows to zero", 0.0);
        const DomainSpec spec(it.params);
        it.h = select_h(spec, cfg);
        it.unknowns = estimated_unknowns(spec, it.h, cfg.fold_symmetry);
        plan.push_back(it);
    };
    for (long N : cfg.N_list) {
        if (N < 1) throw ConfigError("N must be >= 1");
        const auto ds = delta_star(cfg.m, cfg.alpha, N, cfg.L);
        add("sweep", N, ds.value, ds.valid);
    }
    for (const auto& e : cfg.extra_cases) {
        if (e.N < 1) throw ConfigError("N must be >= 1");
        const double d = e.delta ? *e.delta : *e.delta_over_cell * cfg.L / static_cast<double>(e.N);
        add("extra", e.N, d, true);
    }
    std::string problem;
    for (const auto& it : plan) {
        const double max_h = 2.0 * it.params.delta / min_cells_per_hole;
        std::string why;
        if (it.h > max_h * (1.0 + 1e-9))
            why = "hole diameter spans fewer than 8 cells at h = " + detail::fmt(it.h) + " (need h <= " +
                  detail::fmt(max_h) + ")";
        else if (it.unknowns > static_cast<double>(cfg.max_unknowns))
            why = "about " + detail::fmt(it.unknowns, 3) + " unknowns at h = " + detail::fmt(it.h, 4) +
                  " exceeds max_unknowns = " + std::to_string(cfg.max_unknowns);
        if (!why.empty() && problem.empty()) {
            problem = "N = " + std::to_string(it.params.N) + " (delta = " + detail::fmt(it.params.delta, 6) +
                      ") is not resolvable: " + why;
        }
    }
    if (!problem.empty()) {
        // largest N of the sweep family that would still be feasible
        long feasible = 0;
        for (long N = 1; N <= 4096; ++N) {
            const auto ds = delta_star(cfg.m, cfg.alpha, N, cfg.L);
            if (!(ds.value > 0.0)) break;
            const DomainSpec spec(PerforatedCubeParams{cfg.m, cfg.L, N, ds.value});
            const double h = select_h(spec, cfg);
            if (h > 2.0 * ds.value / min_cells_per_hole * (1.0 + 1e-9)) break;
            if (estimated_unknowns(spec, h, cfg.fold_symmetry) > static_cast<double>(cfg.max_unknowns)) break;
            feasible = N;
        }
        throw UnresolvableFeature(problem + "; largest feasible N for this family is " + std::to_string(feasible) +
                                  (cfg.h ? " at the configured h" : " under the h-selection rule"),
                              static_cast<double>(feasible));
    }
    return plan;
}

inline std::vector<PerforatedRow> perforated_sweep_rows(const ExperimentConfig& cfg) {
    const auto plan = plan_perforated_sweep(cfg);
    std::vector<std::optional<PerforatedRow>> rows(plan.size());
    detail::parallel_for(plan.size(), cfg.threads, [&](std::size_t i) {
        const auto& it = plan[i];
        const auto t0 = std::chrono::steady_clock::now();
        const DomainSpec spec(it.params);
        auto r = solve_domain(spec, cfg, it.h);
        r.eigvec.clear();
        r.torsion.clear();
        const auto cell = solve_unit_cell(it.params, it.h, cfg);
        PerforatedAux aux{cell.mu1, cell.mu1_error, cell.torsion_sup, cell.torsion_error};
        auto rep = check_all(r, spec, aux, cfg.constants);
        rep.domain = domain_label(spec);
        rows[i] = PerforatedRow{it.kind, it.params, it.delta_star_valid, it.h, std::move(r), cell, std::move(rep)};
        detail::log(cfg, "perforated N=" + std::to_string(it.params.N) + " (" + it.kind + "): product " +
                             detail::fmt(rows[i]->result.product, 7) + ", " +
                             std::to_string(rows[i]->result.unknowns) + " unknowns (" +
                             detail::fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 3) +
                             " s)");
    });
    std::vector<PerforatedRow> out;
    for (auto& r : rows) out.push_back(std::move(*r));
    return out;
}

struct TrendCheck {
    bool decreasing = true;
    bool above_lower = true;
    bool below_square = true;
    double square_product = 0.0;
    std::vector<std::string> violations;
};

/// Product strictly decreasing in N (up to the combined tolerance), each value
/// at least 1 - 3 err, and each below the product of the square.
inline TrendCheck perforated_trend(const std::vector<PerforatedRow>& rows, double square_product) {
    TrendCheck t;
    t.square_product = square_product;
    std::vector<const PerforatedRow*> s;
    for (const auto& r : rows)
        if (r.kind == "sweep") s.push_back(&r);
    std::sort(s.begin(), s.end(), [](auto* a, auto* b) { return a->params.N < b->params.N; });
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& r = s[i]->result;
        const double err = r.error.product;
        if (!(r.product >= 1.0 - tolerance_factor * err * r.product)) {
            t.above_lower = false;
            t.violations.push_back("N = " + std::to_string(s[i]->params.N) + ": product below 1");
        }
        if (!(r.product < square_product)) {
            t.below_square = false;
            t.violations.push_back("N = " + std::to_string(s[i]->params.N) + ": product " + detail::fmt(r.product, 6) +
                                   " is not below the square's " + detail::fmt(square_product, 6));
        }
        if (i > 0) {
            const auto& p = s[i - 1]->result;
            const double tol = tolerance_factor * std::hypot(p.error.product * p.product, err * r.product);
            // an increase smaller than the combined tolerance is not resolved
            if (!(r.product < p.product + tol)) {
                t.decreasing = false;
                t.violations.push_back("N = " + std::to_string(s[i - 1]->params.N) + " -> " +
                                       std::to_string(s[i]->params.N) + ": product " + detail::fmt(p.product, 6) +
                                       " -> " + detail::fmt(r.product, 6) + " (tolerance " + detail::fmt(tol, 3) +
                                       ")");
            }
        }
    }
    return t;
}

/// Bound evaluations along the alpha family for N far beyond the resolvable
/// range: the cell-eigenvalue window for delta = delta* has log term N^(2-alpha),
/// and the product bound is evaluated at both ends of the window.
inline json perforated_formula_table(const ExperimentConfig& cfg) {
    json out = json::array();
    if (cfg.m != 2) return out;
    const double c_hi = 8.0 * std::numbers::pi / (4.0 - std::numbers::pi);
    for (double Nd : {1e2, 1e3, 1e4, 1e6, 1e9, 1e12}) {
        const auto N = static_cast<long>(Nd);
        const double lg = std::pow(Nd, 2.0 - cfg.alpha);
        const double scale = Nd * Nd / (cfg.L * cfg.L);
        const double lo = scale / 100.0 / lg, hi = c_hi * scale / lg;
        const auto plo = perforated_product_upper(lo, cfg.m, N, cfg.L);
        const auto phi = perforated_product_upper(hi, cfg.m, N, cfg.L);
        json row{{"N", N},
                 {"mu1_window", {lo, hi}},
                 {"product_upper_at_window_low", plo.rhs},
                 {"product_upper_at_window_low_valid", plo.valid},
                 {"product_upper_at_window_high", phi.rhs},
                 {"product_upper_at_window_high_valid", phi.valid}};
        if (cfg.constants.decay_C) row["decay_rate"] = product_decay_rate(N, *cfg.constants.decay_C);
        out.push_back(std::move(row));
    }
    return out;
}

inline RunOutcome run_perforated_sweep(const ExperimentConfig& cfg) {
    const auto rows = perforated_sweep_rows(cfg);
    // reference: the cube itself at the sweep's finest spacing
    double finest = rows.front().h;
    for (const auto& r : rows) finest = std::min(finest, r.h);
    ExperimentConfig sq_cfg = cfg;
    sq_cfg.fold_symmetry = false;
    const DomainSpec cube(Box{std::vector<double>(static_cast<std::size_t>(cfg.m), cfg.L)});
    const double h_sq = cfg.h ? *cfg.h : cfg.L / cfg.cells_per_width;
    const auto sq = solve_domain(cube, sq_cfg, h_sq);
    const auto trend = perforated_trend(rows, sq.product);

    const auto out = detail::prepare_out(cfg);
    std::ostringstream csv;
    csv << "kind,m,alpha,L,N,delta,delta_star_valid,h,unknowns,cell_h,mu1,err_mu1,cell_torsion_sup,lambda,sup,"
           "product,err_lambda,err_sup,err_product,window_lo,window_hi,window_valid,window_ok,"
           "eigenvalue_upper,eigenvalue_upper_valid,eigenvalue_upper_ok,eigenvalue_upper_unsimplified,"
           "eigenvalue_upper_unsimplified_valid,eigenvalue_upper_unsimplified_ok,torsion_upper,torsion_upper_valid,"
           "torsion_upper_ok,cell_torsion_ok,product_upper,product_upper_valid,product_upper_ok,tolerance_factor,seed,"
           "version\n";
    json jrows = json::array();
    std::size_t failures = 0;
    const auto b = [](bool x) { return x ? "true" : "false"; };
    for (const auto& r : rows) {
        const auto& rep = r.report;
        const auto* wl = rep.find("cell_eigenvalue_window_lower");
        const auto* wu = rep.find("cell_eigenvalue_window_upper");
        const auto* eu = rep.find("perforated_eigenvalue_upper");
        const auto* ev = rep.find("perforated_eigenvalue_upper_unsimplified");
        const auto* tu = rep.find("perforated_torsion_upper");
        const auto* ct = rep.find("cell_torsion_upper");
        const auto* pu = rep.find("perforated_product_upper");
        csv << r.kind << ',' << r.params.m << ',' << detail::fmt(cfg.alpha) << ',' << detail::fmt(r.params.L) << ','
            << r.params.N << ',' << detail::fmt(r.params.delta) << ',' << b(r.delta_star_valid) << ','
            << detail::fmt(r.h) << ',' << r.result.unknowns << ',' << detail::fmt(r.cell.h) << ','
            << detail::fmt(r.cell.mu1) << ',' << detail::fmt(r.cell.mu1_error, 4) << ','
            << detail::fmt(r.cell.torsion_sup) << ',' << detail::fmt(r.result.lambda1) << ','
            << detail::fmt(r.result.sup_norm) << ',' << detail::fmt(r.result.product) << ','
            << detail::fmt(r.result.error.lambda, 4) << ',' << detail::fmt(r.result.error.sup, 4) << ','
            << detail::fmt(r.result.error.product, 4) << ',' << detail::fmt(wl->lhs) << ',' << detail::fmt(wu->rhs)
            << ',' << b(wl->valid) << ',' << b(wl->satisfied && wu->satisfied) << ',' << detail::fmt(eu->rhs) << ','
            << b(eu->valid) << ',' << b(eu->satisfied) << ',' << detail::fmt(ev->rhs) << ',' << b(ev->valid) << ','
            << b(ev->satisfied) << ',' << detail::fmt(tu->rhs) << ',' << b(tu->valid) << ',' << b(tu->satisfied)
            << ',' << b(ct && ct->satisfied) << ',' << detail::fmt(pu->rhs) << ',' << b(pu->valid) << ','
            << b(pu->satisfied) << ',' << tolerance_factor << ',' << cfg.seed << ',' << version << '\n';
        failures += rep.failures();
        json jr = to_json(rep);
        jr["kind"] = r.kind;
        jr["N"] = r.params.N;
        jr["delta"] = r.params.delta;
        jr["delta_star_valid"] = r.delta_star_valid;
        jr["result"] = to_json(r.result);
        jr["unit_cell"] = {{"h", r.cell.h},
                           {"unknowns", r.cell.unknowns},
                           {"mu1", r.cell.mu1},
                           {"mu1_error", r.cell.mu1_error},
                           {"torsion_sup", r.cell.torsion_sup},
                           {"torsion_error", r.cell.torsion_error}};
        jrows.push_back(std::move(jr));
    }
    json report = detail::provenance(cfg);
    report["experiment"] = "perforated-sweep";
    report["family"] = {{"m", cfg.m}, {"alpha", cfg.alpha}, {"L", cfg.L}, {"N", cfg.N_list}};
    report["rows"] = std::move(jrows);
    report["square"] = {{"h", sq.h}, {"product", sq.product}, {"error", sq.error.product}};
    report["trend"] = {{"strictly_decreasing", trend.decreasing},
                       {"all_at_least_one", trend.above_lower},
                       {"all_below_square", trend.below_square},
                       {"violations", trend.violations}};
    report["formula_table"] = perforated_formula_table(cfg);
    report["notes"] = json::array(
        {"Products approaching 1 + eps for small eps are out of reach: delta* = L/(2N) exp(-N^(2-alpha)) shrinks "
         "exponentially and the grid must resolve every hole, so only small N are computed.",
         "The torsion bound requires mu1 <= 3eN^2/(16mL^2); for resolvable holes the computed mu1 is far above this "
         "threshold, so those entries are reported with valid = false. The cell_torsion_upper entry compares with "
         "the Neumann-cell torsion maximum instead.",
         "formula_table evaluates the product bound at both ends of the cell-eigenvalue window for N beyond the "
         "resolvable range."});
    report["failures"] = failures;
    const auto pc = (out / "perforated_sweep.csv").string(), pj = (out / "perforated_sweep.json").string();
    write_text_file(pc, csv.str());
    write_text_file(pj, report.dump(2) + "\n");
    std::string summary = std::to_string(rows.size()) + " members, " + std::to_string(failures) +
                          " bound failures; trend " +
                          (trend.decreasing && trend.above_lower && trend.below_square ? "holds" : "violated");
    for (const auto& v : trend.violations) summary += "\n  " + v;
    return {failures ? 1 : 0, {pc, pj}, summary};
}

// ---------------------------------------------------------------------------
// Bound verification

inline std::vector<DomainSpec> default_corpus() {
    return {DomainSpec(Box{{1.0, 1.0}}), DomainSpec(Disk{{0.0, 0.0}, 1.0}), DomainSpec(Box{{1.0, 10.0}}),
            DomainSpec(Ellipse{{0.0, 0.0}, 2.5, 0.5}),
            make_perforated_cube(2, 1.0, 4, delta_star(2, 4.0 / 3.0, 4, 1.0).value)};
}

struct VerifyItem {
    DomainSpec spec;
    SpectralResult result;
    std::optional<PerforatedAux> aux;
    BoundReport report;
};

inline json to_json(const PerforatedAux& a) {
    json j{{"mu1", a.mu1}, {"mu1_error", a.mu1_error}, {"cell_torsion_error", a.cell_torsion_error}};
    if (a.cell_torsion_sup) j["cell_torsion_sup"] = *a.cell_torsion_sup;
    return j;
}

inline PerforatedAux aux_from_json(const json& j) {
    PerforatedAux a;
    a.mu1 = detail::read_number(j, "mu1");
    a.mu1_error = j.value("mu1_error", 0.0);
    a.cell_torsion_error = j.value("cell_torsion_error", 0.0);
    if (j.contains("cell_torsion_sup")) a.cell_torsion_sup = j.at("cell_torsion_sup").get<double>();
    return a;
}

inline std::vector<VerifyItem> verify_items(const ExperimentConfig& cfg) {
    std::vector<VerifyItem> items;
    if (cfg.replay) {
        const auto j = load_json_file(*cfg.replay);
        if (!j.contains("results") || !j.at("results").is_array())
            throw ConfigError("replay file needs a 'results' array");
        for (const auto& e : j.at("results")) {
            VerifyItem it{detail::parse_domain(e.at("domain")), spectral_from_json(e.at("result")), std::nullopt, {}};
            if (e.contains("aux")) it.aux = aux_from_json(e.at("aux"));
            items.push_back(std::move(it));
        }
        if (items.empty()) throw ConfigError("no domains configured");
        return items;
    }
    const auto corpus = cfg.corpus_given ? cfg.corpus : default_corpus();
    if (corpus.empty()) throw ConfigError("no domains configured");
    for (const auto& d : corpus)
        if (const auto* p = d.get_if<PerforatedCubeParams>()) {
            const double h = select_h(d, cfg);
            if (h > 2.0 * p->delta / min_cells_per_hole * (1.0 + 1e-9))
                throw UnresolvableFeature("perforated corpus member N = " + std::to_string(p->N) +
                                          " is not resolvable at h = " + detail::fmt(h),
                                      2.0 * p->delta / min_cells_per_hole);
        }
    std::vector<std::optional<VerifyItem>> slots(corpus.size());
    detail::parallel_for(corpus.size(), cfg.threads, [&](std::size_t i) {
        const auto& d = corpus[i];
        auto r = solve_domain(d, cfg);
        r.eigvec.clear();
        r.torsion.clear();
        std::optional<PerforatedAux> aux;
        if (const auto* p = d.get_if<PerforatedCubeParams>()) {
            const auto cell = solve_unit_cell(*p, r.h, cfg);
            aux = PerforatedAux{cell.mu1, cell.mu1_error, cell.torsion_sup, cell.torsion_error};
        }
        slots[i] = VerifyItem{d, std::move(r), aux, {}};
        detail::log(cfg, "verify " + domain_label(d) + ": product " + detail::fmt(slots[i]->result.product, 7));
    });
    for (auto& s : slots) items.push_back(std::move(*s));
    return items;
}

inline RunOutcome run_verify_bounds(const ExperimentConfig& cfg) {
    auto items = verify_items(cfg);
    const auto out = detail::prepare_out(cfg);
    std::size_t failures = 0;
    json reports = json::array(), results = json::array();
    std::ostringstream csv;
    csv << "domain,";
    write_bound_csv_header(csv);
    csv << ",h,rel_error,tolerance,tolerance_factor,seed,version\n";
    for (auto& it : items) {
        it.report = check_all(it.result, it.spec, it.aux, cfg.constants);
        it.report.domain = domain_label(it.spec);
        failures += it.report.failures();
        json jr = to_json(it.report);
        jr["spec"] = domain_to_json(it.spec);
        reports.push_back(std::move(jr));
        json res{{"domain", domain_to_json(it.spec)}, {"result", to_json(it.result)}};
        if (it.aux) res["aux"] = to_json(*it.aux);
        results.push_back(std::move(res));
        for (const auto& e : it.report.entries) {
            csv << detail::csv_quote(it.report.domain) << ',';
            write_bound_csv_row(csv, e);
            csv << ',' << detail::fmt(it.result.h) << ',' << detail::fmt(e.rel_error, 4) << ','
                << detail::fmt(e.tolerance, 4) << ',' << tolerance_factor << ',' << cfg.seed << ',' << version << '\n';
        }
    }
    json report = detail::provenance(cfg);
    report["experiment"] = "verify-bounds";
    report["replayed"] = cfg.replay.has_value();
    report["reports"] = std::move(reports);
    report["failures"] = failures;
    json replay = detail::provenance(cfg);
    replay["results"] = std::move(results);
    const auto pj = (out / "bound_report.json").string(), pc = (out / "bound_report.csv").string();
    const auto pr = (out / "verify_results.json").string();
    write_text_file(pj, report.dump(2) + "\n");
    write_text_file(pc, csv.str());
    std::vector<std::string> files{pj, pc};
    if (!cfg.replay) {
        write_text_file(pr, replay.dump(2) + "\n");
        files.push_back(pr);
    }
    std::string summary = std::to_string(items.size()) + " domains, " + std::to_string(failures) + " failures";
    for (const auto& it : items)
        for (const auto& e : it.report.entries)
            if (e.failed())
                summary += "\n  " + it.report.domain + ": " + e.name + " (" + detail::fmt(e.lhs, 6) + " vs " +
                           detail::fmt(e.rhs, 6) + ")";
    return {failures ? 1 : 0, files, summary};
}

// ---------------------------------------------------------------------------
// Stochastic experiments and oracle cross-check

inline double eps_shell_for(const DomainSpec& spec, const ExperimentConfig& cfg) {
    return cfg.eps_shell ? *cfg.eps_shell : default_eps_shell(spec);
}

/// Horizon and step for the survival integral: if unset, tMax = 6/lambda and
/// dt = tMax/1000 (tMax rounded to a multiple of dt).
inline std::pair<double, double> survival_times(double lambda, const ExperimentConfig& cfg) {
    double tmax = cfg.t_max ? *cfg.t_max : 6.0 / lambda;
    const double dt = cfg.dt ? *cfg.dt : tmax / 1000.0;
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    tmax = dt * std::ceil(tmax / dt - 1e-9);
    return {dt, tmax};
}

inline RunOutcome run_wos(const ExperimentConfig& cfg) {
    if (!cfg.domain || !cfg.x) throw ConfigError("wos needs 'domain' and 'x'");
    const auto est = wos_torsion(*cfg.domain, *cfg.x, cfg.n_walks, eps_shell_for(*cfg.domain, cfg), cfg.seed,
                                 {cfg.max_steps, cfg.threads});
    json j = to_json(est);
    j["domain"] = domain_to_json(*cfg.domain);
    j["x"] = *cfg.x;
    j["version"] = version;
    const auto out = detail::prepare_out(cfg);
    const auto p = (out / "wos.json").string();
    write_text_file(p, j.dump(2) + "\n");
    return {0, {p}, "v(x) ~ " + detail::fmt(est.mean, 8) + " +- " + detail::fmt(est.stderr_, 3)};
}

inline RunOutcome run_survival(const ExperimentConfig& cfg) {
    if (!cfg.domain || !cfg.x) throw ConfigError("survival needs 'domain' and 'x'");
    const auto& spec = *cfg.domain;
    const double h = select_h(spec, cfg);
    SurvivalOptions so;
    so.grid = grid_options_for(spec, cfg);
    so.solver = cfg.solver;
    double lambda = 0.0;
    if (!cfg.t_max || !cfg.dt)
        lambda = principal_eigenvalue(assemble_dirichlet(build_grid(spec, h, so.grid)), cfg.solver).lambda;
    const auto [dt, tmax] = survival_times(lambda, cfg);
    const auto s = survival_torsion(spec, *cfg.x, h, dt, tmax, so);
    json j = to_json(s);
    j["domain"] = domain_to_json(spec);
    j["x"] = *cfg.x;
    j["h"] = h;
    j["dt"] = dt;
    j["t_max"] = tmax;
    j["version"] = version;
    const auto out = detail::prepare_out(cfg);
    const auto pj = (out / "survival.json").string(), pc = (out / "survival.csv").string();
    write_text_file(pj, j.dump(2) + "\n");
    std::ostringstream csv;
    write_survival_csv(csv, s);
    write_text_file(pc, csv.str());
    return {0, {pj, pc}, "v(x) ~ " + detail::fmt(s.value, 8) + " (tail " + detail::fmt(s.tail / s.value, 3) + ")"};
}

struct OracleRow {
    DomainSpec spec;
    Point x;
    Point node;          // grid node used by the FD and survival values
    double h = 0.0;
    double fd = 0.0;
    WosEstimate wos;
    double survival = 0.0;
    double survival_tail = 0.0;
    bool wos_agrees = false;
    bool survival_agrees = false;
};

inline std::vector<ProbeSpec> default_probes() {
    return {{DomainSpec(Disk{{0.0, 0.0}, 1.0}), {0.0, 0.0}},
            {DomainSpec(Box{{1.0, 1.0}}), {0.5, 0.5}},
            {make_perforated_cube(2, 1.0, 2, delta_star(2, 4.0 / 3.0, 2, 1.0).value), {0.0, 0.0}}};
}

inline OracleRow oracle_probe(const ProbeSpec& p, const ExperimentConfig& cfg) {
    OracleRow row{p.domain, p.x, {}, select_h(p.domain, cfg), 0.0, {}, 0.0, 0.0, false, false};
    const auto go = grid_options_for(p.domain, cfg);
    const auto op = assemble_dirichlet(build_grid(p.domain, row.h, go));
    const auto node = op.grid->nearest_node(p.x);
    if (!node) throw ConfigError("probe point has no grid node nearby");
    row.node = op.grid->position(*node);
    const auto tor = solve_torsion(op, cfg.solver);
    row.fd = tor.values[*node];
    const double lambda = principal_eigenvalue(op, cfg.solver).lambda;

    // WoS at the node, so the three methods see the same point
    row.wos = wos_torsion(p.domain, row.node, cfg.n_walks, eps_shell_for(p.domain, cfg), cfg.seed,
                          {cfg.max_steps, 1});
    row.wos_agrees = std::abs(row.wos.mean - row.fd) <= 3.0 * row.wos.stderr_ + cfg.wos_bias_allowance;

    SurvivalOptions so;
    so.grid = go;
    so.solver = cfg.solver;
    const auto [dt, tmax] = survival_times(lambda, cfg);
    const auto s = survival_torsion(p.domain, row.node, row.h, dt, tmax, so);
    row.survival = s.value;
    row.survival_tail = s.tail;
    row.survival_agrees = std::abs(s.value - row.fd) <= cfg.survival_rel_tol * std::abs(row.fd);
    return row;
}

inline RunOutcome run_oracle_check(const ExperimentConfig& cfg) {
    const auto probes = cfg.probes.empty() ? default_probes() : cfg.probes;
    std::vector<std::optional<OracleRow>> slots(probes.size());
    detail::parallel_for(probes.size(), cfg.threads, [&](std::size_t i) { slots[i] = oracle_probe(probes[i], cfg); });
    const auto out = detail::prepare_out(cfg);
    std::ostringstream csv;
    csv << "domain,x,node,h,fd,wos_mean,wos_stderr,wos_walks,eps_shell,survival,survival_tail,wos_agrees,"
           "survival_agrees,tolerance_factor,seed,version\n";
    json rows = json::array();
    std::size_t disagreements = 0;
    const auto pt = [](const Point& p) {
        std::string s;
        for (std::size_t a = 0; a < p.size(); ++a) s += (a ? " " : "") + detail::fmt(p[a]);
        return s;
    };
    for (const auto& r : slots) {
        const auto label = domain_label(r->spec);
        csv << detail::csv_quote(label) << ',' << pt(r->x) << ',' << pt(r->node) << ',' << detail::fmt(r->h) << ','
            << detail::fmt(r->fd) << ',' << detail::fmt(r->wos.mean) << ',' << detail::fmt(r->wos.stderr_, 4) << ','
            << r->wos.n_walks << ',' << detail::fmt(r->wos.eps_shell, 4) << ',' << detail::fmt(r->survival) << ','
            << detail::fmt(r->survival_tail, 4) << ',' << (r->wos_agrees ? "true" : "false") << ','
            << (r->survival_agrees ? "true" : "false") << ',' << tolerance_factor << ',' << cfg.seed << ','
            << version << '\n';
        disagreements += !r->wos_agrees + !r->survival_agrees;
        rows.push_back({{"domain", domain_to_json(r->spec)},
                        {"x", r->x},
                        {"node", r->node},
                        {"h", r->h},
                        {"fd", r->fd},
                        {"wos", to_json(r->wos)},
                        {"survival", r->survival},
                        {"survival_tail", r->survival_tail},
                        {"wos_agrees", r->wos_agrees},
                        {"survival_agrees", r->survival_agrees}});
    }
    json report = detail::provenance(cfg);
    report["experiment"] = "oracle-check";
    report["wos_bias_allowance"] = cfg.wos_bias_allowance;
    report["survival_rel_tol"] = cfg.survival_rel_tol;
    report["rows"] = std::move(rows);
    report["disagreements"] = disagreements;
    const auto pc = (out / "oracle_check.csv").string(), pj = (out / "oracle_check.json").string();
    write_text_file(pc, csv.str());
    write_text_file(pj, report.dump(2) + "\n");
    return {disagreements ? 1 : 0, {pc, pj},
            std::to_string(slots.size()) + " probes, " + std::to_string(disagreements) + " disagreements"};
}

/// Dispatch on cfg.experiment.
inline RunOutcome run_experiment(const ExperimentConfig& cfg) {
    const auto& e = cfg.experiment;
    if (e == "torsion" || e == "eig" || e == "product") return run_single(cfg);
    if (e == "convex-sweep") return run_convex_sweep(cfg);
    if (e == "perforated-sweep") return run_perforated_sweep(cfg);
    if (e == "verify-bounds") return run_verify_bounds(cfg);
    if (e == "wos") return run_wos(cfg);
    if (e == "survival") return run_survival(cfg);
    if (e == "oracle-check") return run_oracle_check(cfg);
    throw ConfigError(e.empty() ? "no experiment given" : "unknown experiment '" + e + "'");
}

} // namespace torsionlab
