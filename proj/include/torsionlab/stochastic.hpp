#pragma once

// Probabilistic cross-checks of the torsion function: walk-on-spheres for the
// expected exit time, and the time integral of the survival probability.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "torsionlab/discretize.hpp"
#include "torsionlab/errors.hpp"
#include "torsionlab/geometry.hpp"
#include "torsionlab/solvers.hpp"

namespace torsionlab {

struct WosEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n_walks = 0;     // walks that reached the shell
    std::size_t discarded = 0;   // walks that hit the step cap
    double eps_shell = 0.0;
    std::uint64_t seed = 0;
    double mean_steps = 0.0;
};

struct WosOptions {
    std::size_t max_steps = 100000;
    unsigned threads = 1;
};

/// Default absorption shell, 1e-4 times the diameter.
inline double default_eps_shell(const DomainSpec& spec) { return 1e-4 * diameter(spec); }

namespace detail {

struct WalkBlock {
    double sum = 0.0, sum_sq = 0.0, steps = 0.0;
    std::size_t done = 0, discarded = 0;
};

inline double safe_distance(const DomainSpec& spec, std::span<const double> p) {
    return contains(spec, p) ? distance_to_boundary(spec, p) : 0.0;
}

// One walk; returns the accumulated time or a negative value when capped.
inline double walk_once(const DomainSpec& spec, std::span<const double> x, double eps, std::size_t max_steps,
                        std::mt19937_64& rng, std::size_t& steps) {
    const std::size_t m = x.size();
    const double per = 1.0 / (2.0 * static_cast<double>(m));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Point p(x.begin(), x.end());
    Point dir(m);
    double t = 0.0;
    double r = safe_distance(spec, p);
    steps = 0;
    do {
        if (steps == max_steps) return -1.0;
        t += r * r * per;
        double nrm = 0.0;
        do {
            nrm = 0.0;
            for (auto& d : dir) {
                d = gauss(rng);
                nrm += d * d;
            }
        } while (nrm == 0.0);
        nrm = std::sqrt(nrm);
        for (std::size_t a = 0; a < m; ++a) p[a] += r * dir[a] / nrm;
        ++steps;
        r = safe_distance(spec, p);
    } while (r >= eps);
    return t;
}

} // namespace detail

/// Walk-on-spheres estimate of v(x) = E_x[exit time] for Brownian motion with
/// generator Laplace: each jump to the inscribed sphere of radius r adds
/// r^2/(2m). Walk i draws from a generator keyed by (seed, i); partial sums
/// over fixed blocks of walks are merged in block order, so the estimate does
/// not depend on the thread count.
inline WosEstimate wos_torsion(const DomainSpec& spec, std::span<const double> x, std::size_t n_walks,
                               double eps_shell, std::uint64_t seed, const WosOptions& opts = {}) {
    if (!contains(spec, x)) throw InvalidArgument("wos_torsion: start point outside the domain");
    if (!(eps_shell > 0.0)) throw InvalidArgument("wos_torsion: epsShell must be > 0");
    if (n_walks < 1) throw InvalidArgument("wos_torsion: nWalks must be >= 1");

    constexpr std::size_t block = 1024;
    const std::size_t nblocks = (n_walks + block - 1) / block;
    std::vector<detail::WalkBlock> blocks(nblocks);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t b = next++; b < nblocks; b = next++) {
            auto& B = blocks[b];
            for (std::size_t i = b * block; i < std::min(n_walks, (b + 1) * block); ++i) {
                std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                                  static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
                std::mt19937_64 rng(seq);
                std::size_t steps = 0;
                const double t = detail::walk_once(spec, x, eps_shell, opts.max_steps, rng, steps);
                if (t < 0.0) {
                    ++B.discarded;
                    continue;
                }
                B.sum += t;
                B.sum_sq += t * t;
                B.steps += static_cast<double>(steps);
                ++B.done;
            }
        }
    };
    const unsigned nt = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(nblocks)));
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < nt; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    WosEstimate est;
    est.eps_shell = eps_shell;
    est.seed = seed;
    double sum = 0.0, sum_sq = 0.0, steps = 0.0;
    for (const auto& B : blocks) {
        sum += B.sum;
        sum_sq += B.sum_sq;
        steps += B.steps;
        est.n_walks += B.done;
        est.discarded += B.discarded;
    }
    if (est.n_walks == 0) throw ConvergenceError("every walk hit the step cap", opts.max_steps, 0.0);
    const double n = static_cast<double>(est.n_walks);
    est.mean = sum / n;
    est.mean_steps = steps / n;
    if (est.n_walks > 1) {
        const double var = std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0));
        est.stderr_ = std::sqrt(var / n);
    }
    return est;
}

// ---------------------------------------------------------------------------
// Survival probability

struct SurvivalOptions {
    /// Backward-Euler half steps replacing the first Crank-Nicolson steps
    /// (damps the incompatible initial data); must be even.
    int startup_half_steps = 4;
    /// Largest admissible share of the analytic tail in the result.
    double max_tail_fraction = 0.05;
    SolverOptions solver = [] {
        SolverOptions s;
        s.backend = LinearBackend::cholesky;
        return s;
    }();
    GridOptions grid;
    /// Store u(x; t) after every step.
    bool record_curve = true;
};

struct SurvivalResult {
    double value = 0.0;     // integral + tail
    double integral = 0.0;  // quadrature over [0, tMax]
    double tail = 0.0;      // u(x; tMax)/lambda
    double lambda = 0.0;
    Point probe;            // node actually sampled
    std::size_t steps = 0;
    std::vector<double> t, u;
};

/// v(x) = int_0^inf P_x[T > t] dt with P_x[T > t] = u(x; t), u_t = Laplace u,
/// u(., 0) = 1 and zero boundary values. Crank-Nicolson after a short
/// backward-Euler start; the quadrature uses the rule matched to each step so
/// that A * (sum) = 1 - u(tMax) holds exactly on the grid.
inline SurvivalResult survival_torsion(const DomainSpec& spec, std::span<const double> x, double h, double dt,
                                       double t_max, const SurvivalOptions& opts = {}) {
    if (!contains(spec, x)) throw InvalidArgument("survival_torsion: probe outside the domain");
    if (!(dt > 0.0)) throw InvalidArgument("survival_torsion: dt must be > 0");
    if (!(t_max >= 0.0)) throw InvalidArgument("survival_torsion: tMax must be >= 0");
    if (opts.startup_half_steps < 0 || opts.startup_half_steps % 2 != 0)
        throw InvalidArgument("survival_torsion: startup half steps must be even and >= 0");

    const auto op = assemble_dirichlet(build_grid(spec, h, opts.grid));
    const auto node = op.grid->nearest_node(x);
    if (!node) throw InvalidArgument("survival_torsion: probe has no nearby grid node");
    const std::size_t k = *node;

    SurvivalResult res;
    res.probe = op.grid->position(k);
    const LinearSolver implicit(op, opts.solver.backend, 1.0, 0.5 * dt, opts.solver.cg_max_iter);

    // y = W^{1/2} u
    std::vector<double> y(op.sqrt_weight), rhs(op.n), by(op.n);
    const auto probe = [&] { return y[k] / op.sqrt_weight[k]; };
    const auto record = [&](double t) {
        if (!opts.record_curve) return;
        res.t.push_back(t);
        res.u.push_back(probe());
    };
    const auto step = [&](const std::vector<double>& b) {
        const auto st = implicit.solve(b, y, opts.solver.inner_tol);
        if (!(st.rel_residual <= opts.solver.inner_tol * 10.0))
            throw ConvergenceError("implicit time step did not converge", st.iterations, st.rel_residual);
    };

    const auto n_steps = static_cast<std::size_t>(std::llround(t_max / dt));
    if (std::abs(static_cast<double>(n_steps) * dt - t_max) > 1e-9 * std::max(1.0, t_max))
        throw InvalidArgument("survival_torsion: tMax must be a multiple of dt");
    record(0.0);
    double t = 0.0;
    std::size_t done = 0;
    // Backward Euler with step dt/2: (I + dt/2 B) y+ = y, right-endpoint rule.
    const std::size_t be_full = std::min<std::size_t>(n_steps, static_cast<std::size_t>(opts.startup_half_steps / 2));
    for (; done < be_full; ++done) {
        for (int half = 0; half < 2; ++half) {
            rhs = y;
            step(rhs);
            res.integral += 0.5 * dt * probe();
        }
        t += dt;
        record(t);
    }
    // Crank-Nicolson: (I + dt/2 B) y+ = (I - dt/2 B) y, trapezoid rule.
    for (; done < n_steps; ++done) {
        const double before = probe();
        op.apply(y, by);
        for (std::size_t i = 0; i < op.n; ++i) rhs[i] = y[i] - 0.5 * dt * by[i];
        step(rhs);
        res.integral += 0.5 * dt * (before + probe());
        t += dt;
        record(t);
    }
    res.steps = n_steps;

    res.lambda = principal_eigenvalue(op, opts.solver).lambda;
    res.tail = probe() / res.lambda;
    res.value = res.integral + res.tail;
    if (res.tail > opts.max_tail_fraction * res.value)
        throw InvalidArgument("survival_torsion: tail is " + std::to_string(res.tail / res.value * 100.0) +
                              "% of the total; increase tMax");
    return res;
}

/// CSV with columns t,u.
inline void write_survival_csv(std::ostream& os, const SurvivalResult& r) {
    os << "t,u\n" << std::setprecision(17);
    for (std::size_t i = 0; i < r.t.size(); ++i) os << r.t[i] << ',' << r.u[i] << '\n';
}

} // namespace torsionlab
