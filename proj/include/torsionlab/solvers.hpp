#pragma once

// Torsion solve, principal eigenvalue and the spectral product lambda*|v|_inf.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "torsionlab/discretize.hpp"
#include "torsionlab/errors.hpp"
#include "torsionlab/geometry.hpp"

namespace torsionlab {

enum class LinearBackend { cg, cholesky };
enum class EigenMethod { lanczos, inverse_iteration };

inline const char* to_string(LinearBackend b) { return b == LinearBackend::cg ? "cg" : "cholesky"; }
inline const char* to_string(EigenMethod e) { return e == EigenMethod::lanczos ? "lanczos" : "inverse_iteration"; }

struct SolverOptions {
    double cg_tol = 1e-10;        // relative residual of the torsion solve
    double inner_tol = 1e-12;     // relative residual of solves inside the eigen iteration
    std::size_t cg_max_iter = 0;  // 0: automatic
    double eig_tol = 1e-9;        // relative eigenvalue change at convergence
    double eig_residual_tol = 1e-8; // |B psi - lambda psi| / (|B|_inf |psi|)
    std::size_t eig_max_iter = 2000;
    LinearBackend backend = LinearBackend::cg;
    EigenMethod eigen_method = EigenMethod::lanczos;
};

struct LinearStats {
    std::size_t iterations = 0;
    double rel_residual = 0.0;
};

// ---------------------------------------------------------------------------
// Vector kernels; dot products use a fixed blocking so results do not depend
// on scheduling.

inline double dot(std::span<const double> a, std::span<const double> b) {
    constexpr std::size_t block = 1024;
    double total = 0.0;
    for (std::size_t s = 0; s < a.size(); s += block) {
        const std::size_t e = std::min(a.size(), s + block);
        double part = 0.0;
        for (std::size_t i = s; i < e; ++i) part += a[i] * b[i];
        total += part;
    }
    return total;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// Jacobi-preconditioned conjugate gradients. `x` holds the initial guess.
template <class Apply>
LinearStats conjugate_gradient(Apply&& apply, std::span<const double> inv_diag, std::span<const double> b,
                               std::span<double> x, double tol, std::size_t max_iter) {
    const std::size_t n = b.size();
    LinearStats st;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return st;
    }
    std::vector<double> r(n), z(n), p(n), q(n);
    for (int restart = 0; restart < 4; ++restart) {
        apply(std::span<const double>(x), std::span<double>(q));
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
        double rn = norm2(r);
        st.rel_residual = rn / bnorm;
        if (st.rel_residual <= tol) return st;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] = inv_diag[i] * r[i];
        double rz = dot(r, z);
        while (st.iterations < max_iter) {
            apply(std::span<const double>(p), std::span<double>(q));
            const double alpha = rz / dot(p, q);
            axpy(alpha, p, x);
            axpy(-alpha, q, r);
            ++st.iterations;
            rn = norm2(r);
            if (rn / bnorm <= tol) break;
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
        if (st.iterations >= max_iter) break;
        // loop back to confirm with the true residual
    }
    apply(std::span<const double>(x), std::span<double>(q));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    st.rel_residual = norm2(r) / bnorm;
    return st;
}

/// Solver for (shift I + scale B) y = rhs with B the symmetric operator.
class LinearSolver {
public:
    LinearSolver(const SparseOperator& op, LinearBackend backend, double shift = 0.0, double scale = 1.0,
                 std::size_t max_iter = 0)
        : op_(&op), backend_(backend), shift_(shift), scale_(scale) {
        max_iter_ = max_iter ? max_iter : std::clamp<std::size_t>(op.n, 5000, 500000);
        const auto d = op.diagonal();
        inv_diag_.resize(op.n);
        for (std::size_t i = 0; i < op.n; ++i) inv_diag_[i] = 1.0 / (shift_ + scale_ * d[i]);
        if (backend_ == LinearBackend::cholesky) factorize();
    }

    LinearBackend backend() const { return backend_; }

    void apply(std::span<const double> x, std::span<double> y) const {
        op_->apply(x, y);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = shift_ * x[i] + scale_ * y[i];
    }

    /// Solve to relative residual `tol`; `x` is the initial guess on entry.
    LinearStats solve(std::span<const double> rhs, std::span<double> x, double tol) const {
        const auto fn = [this](std::span<const double> in, std::span<double> out) { apply(in, out); };
        if (backend_ == LinearBackend::cg) return conjugate_gradient(fn, inv_diag_, rhs, x, tol, max_iter_);

        Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        Eigen::Map<Eigen::VectorXd> xm(x.data(), static_cast<Eigen::Index>(x.size()));
        xm = ldlt_->solve(b);
        // Iterative refinement against the unfactored operator.
        LinearStats st;
        const double bnorm = b.norm();
        Eigen::VectorXd r(b.size());
        for (;;) {
            fn(x, std::span<double>(r.data(), x.size()));
            r = b - r;
            st.rel_residual = bnorm > 0.0 ? r.norm() / bnorm : 0.0;
            if (st.rel_residual <= tol || st.iterations >= 5) break;
            xm += ldlt_->solve(r);
            ++st.iterations;
        }
        return st;
    }

private:
    void factorize() {
        const auto& op = *op_;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(op.nonzeros() / 2 + op.n);
        for (std::size_t i = 0; i < op.n; ++i)
            for (std::size_t p = op.row_ptr[i]; p < op.row_ptr[i + 1]; ++p) {
                const auto j = static_cast<std::size_t>(op.col[p]);
                if (j > i) continue;
                double v = scale_ * op.val[p];
                if (j == i) v += shift_;
                trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
            }
        Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(op.n), static_cast<Eigen::Index>(op.n));
        m.setFromTriplets(trip.begin(), trip.end());
        trip.clear();
        trip.shrink_to_fit();
        ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower>>();
        ldlt_->compute(m);
        if (ldlt_->info() != Eigen::Success) throw Error("sparse Cholesky factorisation failed");
        const auto& dvec = ldlt_->vectorD();
        if ((dvec.array() <= 0.0).any()) throw Error("operator is not positive definite");
    }

    const SparseOperator* op_;
    LinearBackend backend_;
    double shift_, scale_;
    std::size_t max_iter_ = 0;
    std::vector<double> inv_diag_;
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower>> ldlt_;
};

// ---------------------------------------------------------------------------
// Torsion

struct TorsionSolution {
    std::vector<double> values; // nodal torsion v
    LinearStats stats;
};

/// Solve A v = 1 with the given solver for B.
inline TorsionSolution solve_torsion(const SparseOperator& op, const LinearSolver& solver, double tol) {
    std::vector<double> rhs(op.sqrt_weight);
    std::vector<double> y(op.n, 0.0);
    TorsionSolution out;
    out.stats = solver.solve(rhs, y, tol);
    if (!(out.stats.rel_residual <= tol))
        throw ConvergenceError("torsion solve did not converge: " + std::to_string(out.stats.iterations) +
                                   " iterations, relative residual " + std::to_string(out.stats.rel_residual),
                               out.stats.iterations, out.stats.rel_residual);
    out.values.resize(op.n);
    for (std::size_t i = 0; i < op.n; ++i) out.values[i] = y[i] / op.sqrt_weight[i];
    return out;
}

inline TorsionSolution solve_torsion(const SparseOperator& op, const SolverOptions& opts = {}) {
    if (op.kind != BoundaryKind::dirichlet && op.kind != BoundaryKind::mixed_neumann_dirichlet)
        throw InvalidArgument("solve_torsion: unsupported operator");
    const LinearSolver solver(op, opts.backend, 0.0, 1.0, opts.cg_max_iter);
    return solve_torsion(op, solver, opts.cg_tol);
}

// ---------------------------------------------------------------------------
// Eigenvalues

struct EigenOptions {
    double shift = 0.0;                           // iterate with (B + shift I)^{-1}
    std::vector<std::vector<double>> deflate;     // orthonormal vectors in B-space to project out
    std::vector<double> start;                    // nodal start vector; default constant
};

struct EigenSolution {
    double lambda = 0.0;            // Rayleigh quotient of the returned vector
    double ritz = 0.0;              // value from the iteration itself
    std::vector<double> eigvec;     // nodal values, nonnegative, unit weighted norm
    std::size_t iterations = 0;     // outer iterations (solves)
    std::size_t inner_iterations = 0;
    double rel_change = 0.0;
    double residual = 0.0;          // |B psi - lambda psi| / |psi|
    double gap_ratio = 0.0;         // estimate of lambda_1 / lambda_2
    bool slow_convergence = false;
};

namespace detail {

inline void project_out(const std::vector<std::vector<double>>& basis, std::span<double> v) {
    for (const auto& q : basis) axpy(-dot(q, v), q, v);
}

inline double rayleigh(const SparseOperator& op, std::span<const double> psi, std::vector<double>& tmp) {
    tmp.resize(op.n);
    op.apply(psi, tmp);
    return dot(psi, tmp) / dot(psi, psi);
}

inline double eigen_residual(const SparseOperator& op, std::span<const double> psi, double lambda) {
    std::vector<double> r(op.n);
    op.apply(psi, r);
    axpy(-lambda, psi, r);
    return norm2(r) / norm2(psi);
}

inline EigenSolution finish_eigen(const SparseOperator& op, std::vector<double> psi, EigenSolution out) {
    const double nrm = norm2(psi);
    double sum = 0.0;
    for (double v : psi) sum += v;
    const double sign = sum < 0.0 ? -1.0 : 1.0;
    for (auto& v : psi) v *= sign / nrm;
    std::vector<double> tmp;
    out.lambda = rayleigh(op, psi, tmp);
    out.residual = eigen_residual(op, psi, out.lambda);
    out.eigvec.resize(op.n);
    for (std::size_t i = 0; i < op.n; ++i) out.eigvec[i] = psi[i] / op.sqrt_weight[i];
    return out;
}

inline std::vector<double> start_vector(const SparseOperator& op, const EigenOptions& eo) {
    std::vector<double> q(op.n);
    for (std::size_t i = 0; i < op.n; ++i) q[i] = (eo.start.empty() ? 1.0 : eo.start[i]) * op.sqrt_weight[i];
    project_out(eo.deflate, q);
    const double nq = norm2(q);
    if (nq == 0.0) throw InvalidArgument("eigen start vector vanishes after deflation");
    for (auto& v : q) v /= nq;
    return q;
}

} // namespace detail

/// Plain inverse power iteration with warm-started inner solves.
inline EigenSolution inverse_iteration(const SparseOperator& op, const LinearSolver& solver,
                                       const SolverOptions& opts, const EigenOptions& eo = {}) {
    EigenSolution out;
    std::vector<double> x = detail::start_vector(op, eo);
    std::vector<double> y(op.n, 0.0), tmp;
    double lam = detail::rayleigh(op, x, tmp);
    double prev_delta = 0.0;
    for (std::size_t k = 1; k <= opts.eig_max_iter; ++k) {
        for (std::size_t i = 0; i < op.n; ++i) y[i] = x[i] / (lam + eo.shift);
        const auto st = solver.solve(x, y, opts.inner_tol);
        out.inner_iterations += st.iterations;
        detail::project_out(eo.deflate, y);
        const double ny = norm2(y);
        for (std::size_t i = 0; i < op.n; ++i) x[i] = y[i] / ny;
        const double lam_new = detail::rayleigh(op, x, tmp);
        const double delta = std::abs(lam_new - lam);
        out.iterations = k;
        out.rel_change = delta / std::abs(lam_new);
        if (prev_delta > 0.0 && delta > 0.0) {
            // successive eigenvalue corrections shrink by (lambda1/lambda2)^2
            const double rate = delta / prev_delta;
            if (rate > 0.0 && rate < 1.0) out.gap_ratio = std::sqrt(rate);
        }
        prev_delta = delta;
        lam = lam_new;
        if (out.rel_change <= opts.eig_tol) {
            const double res = detail::eigen_residual(op, x, lam);
            if (res <= opts.eig_residual_tol * op.norm_inf()) break;
        }
    }
    out.ritz = lam;
    out.slow_convergence = out.gap_ratio > 0.9;
    if (out.rel_change > opts.eig_tol)
        throw ConvergenceError("inverse iteration did not converge (lambda1/lambda2 ~ " +
                                   std::to_string(out.gap_ratio) + ")",
                               out.iterations, out.rel_change);
    return detail::finish_eigen(op, std::move(x), out);
}

/// Lanczos on (B + shift)^{-1} with full reorthogonalisation. The Krylov space
/// contains every inverse-iteration iterate from the same start vector, so
/// the Ritz value is never worse than plain inverse iteration.
inline EigenSolution inverse_lanczos(const SparseOperator& op, const LinearSolver& solver,
                                     const SolverOptions& opts, const EigenOptions& eo = {}) {
    EigenSolution out;
    std::vector<std::vector<double>> Q;
    Q.push_back(detail::start_vector(op, eo));
    std::vector<double> alpha, beta;
    std::vector<double> w(op.n);
    double theta_prev = 0.0;
    const double res_target = opts.eig_residual_tol * op.norm_inf();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    const std::size_t max_steps = std::min<std::size_t>(opts.eig_max_iter, op.n);

    for (std::size_t k = 0; k < max_steps; ++k) {
        std::fill(w.begin(), w.end(), 0.0);
        const auto st = solver.solve(Q[k], w, opts.inner_tol);
        out.inner_iterations += st.iterations;
        if (k > 0) axpy(-beta[k - 1], Q[k - 1], w);
        const double a = dot(Q[k], w);
        alpha.push_back(a);
        axpy(-a, Q[k], w);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : Q) axpy(-dot(q, w), q, w);
            detail::project_out(eo.deflate, w);
        }
        const double b = norm2(w);
        out.iterations = k + 1;

        const auto dim = static_cast<Eigen::Index>(alpha.size());
        Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), dim);
        Eigen::VectorXd sub = dim > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), dim - 1))
                                      : Eigen::VectorXd();
        tri.computeFromTridiagonal(d, sub, Eigen::ComputeEigenvectors);
        const double theta = tri.eigenvalues()(dim - 1);
        const double lam = 1.0 / theta - eo.shift;
        if (dim > 1) out.gap_ratio = (1.0 / theta - eo.shift) / (1.0 / tri.eigenvalues()(dim - 2) - eo.shift);
        out.rel_change = k > 0 ? std::abs(lam - (1.0 / theta_prev - eo.shift)) / std::abs(lam) : 1.0;
        theta_prev = theta;
        out.ritz = lam;

        const bool exhausted = b <= 1e-14 * std::abs(theta) || k + 1 == max_steps;
        const double est = std::abs(b * tri.eigenvectors()(dim - 1, dim - 1)) / theta;
        if ((k > 0 && out.rel_change <= opts.eig_tol && est < 1e-6) || exhausted) {
            std::vector<double> psi(op.n, 0.0);
            for (Eigen::Index j = 0; j < dim; ++j) axpy(tri.eigenvectors()(j, dim - 1), Q[static_cast<std::size_t>(j)], psi);
            std::vector<double> tmp;
            const double rq = detail::rayleigh(op, psi, tmp);
            const double res = detail::eigen_residual(op, psi, rq);
            if (res <= res_target || exhausted) {
                if (res > res_target)
                    throw ConvergenceError("Lanczos did not converge: residual " + std::to_string(res),
                                           out.iterations, res);
                out.slow_convergence = out.gap_ratio > 0.9 && out.iterations > 50;
                return detail::finish_eigen(op, std::move(psi), out);
            }
        }
        beta.push_back(b);
        for (auto& v : w) v /= b;
        Q.push_back(w);
    }
    throw ConvergenceError("Lanczos did not converge", out.iterations, out.rel_change);
}

inline EigenSolution principal_eigenvalue(const SparseOperator& op, const LinearSolver& solver,
                                          const SolverOptions& opts, const EigenOptions& eo = {}) {
    return opts.eigen_method == EigenMethod::lanczos ? inverse_lanczos(op, solver, opts, eo)
                                                     : inverse_iteration(op, solver, opts, eo);
}

/// Lowest eigenpair of the operator (Dirichlet, or mixed with a nonempty hole).
inline EigenSolution principal_eigenvalue(const SparseOperator& op, const SolverOptions& opts = {},
                                          const EigenOptions& eo = {}) {
    const LinearSolver solver(op, opts.backend, eo.shift, 1.0, opts.cg_max_iter);
    return principal_eigenvalue(op, solver, opts, eo);
}

/// Extreme Ritz values of B after `steps` plain Lanczos steps from a
/// deterministic pseudo-random start vector.
inline std::pair<double, double> lanczos_extreme_ritz(const SparseOperator& op, std::size_t steps = 50) {
    std::vector<std::vector<double>> Q;
    std::vector<double> q(op.n);
    std::uint64_t s = 0x9E3779B97F4A7C15ULL;
    for (auto& v : q) {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        v = static_cast<double>(s >> 11) * 0x1.0p-53 + 0.5;
    }
    const double nq = norm2(q);
    for (auto& v : q) v /= nq;
    Q.push_back(q);
    std::vector<double> alpha, beta, w(op.n);
    steps = std::min(steps, op.n);
    for (std::size_t k = 0; k < steps; ++k) {
        op.apply(Q[k], w);
        if (k > 0) axpy(-beta[k - 1], Q[k - 1], w);
        const double a = dot(Q[k], w);
        alpha.push_back(a);
        axpy(-a, Q[k], w);
        for (const auto& v : Q) axpy(-dot(v, w), v, w);
        const double b = norm2(w);
        if (k + 1 == steps || b < 1e-14 * std::abs(a)) break;
        beta.push_back(b);
        for (auto& v : w) v /= b;
        Q.push_back(w);
    }
    const auto dim = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), dim);
    Eigen::VectorXd sub = Eigen::VectorXd::Zero(std::max<Eigen::Index>(0, dim - 1));
    for (Eigen::Index i = 0; i + 1 < dim; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(d, sub, Eigen::EigenvaluesOnly);
    return {tri.eigenvalues()(0), tri.eigenvalues()(dim - 1)};
}

// ---------------------------------------------------------------------------
// Richardson

struct RichardsonResult {
    double extrapolated = 0.0;
    double error_estimate = 0.0; // |fine - extrapolated| / |extrapolated|
};

/// Extrapolate from a coarse value (spacing h) and a fine value (h/2).
inline RichardsonResult richardson(double value_h, double value_h2, int order = 2) {
    if (order < 1) throw InvalidArgument("richardson: order >= 1");
    if (value_h == value_h2) return {value_h2, 0.0};
    const double r = std::ldexp(1.0, order);
    const double ext = (r * value_h2 - value_h) / (r - 1.0);
    if (ext == 0.0) return {ext, 0.0};
    return {ext, std::abs(value_h2 - ext) / std::abs(ext)};
}

// ---------------------------------------------------------------------------
// Spectral product

struct QuantityEstimates {
    double lambda = 0.0;
    double sup = 0.0;
    double product = 0.0;
};

struct SpectralResult {
    double h = 0.0;
    std::size_t unknowns = 0;
    double lambda1 = 0.0;
    std::vector<double> eigvec;
    std::vector<double> torsion;
    double sup_norm = 0.0;
    double product = 0.0;
    Point argmax;
    LinearStats torsion_stats;
    std::size_t eigen_iterations = 0;
    std::size_t eigen_inner_iterations = 0;
    double eigen_residual = 0.0;
    double eigen_rel_change = 0.0;
    double gap_ratio = 0.0;
    bool slow_convergence = false;

    bool has_error_estimate = false;
    double coarse_h = 0.0;
    QuantityEstimates coarse;        // values on the companion grid
    QuantityEstimates extrapolated;
    QuantityEstimates error;         // relative Richardson estimates
    std::shared_ptr<const GridDomain> grid;

    double error_estimate() const { return error.product; }
};

struct ProductOptions {
    SolverOptions solver;
    GridOptions grid;
    /// Also solve on the companion grid of spacing 2h and attach Richardson
    /// estimates for the values at h.
    bool richardson = false;
};

namespace detail {

inline SpectralResult solve_spectral(const SparseOperator& op, const SolverOptions& so) {
    const LinearSolver solver(op, so.backend, 0.0, 1.0, so.cg_max_iter);
    SpectralResult r;
    r.h = op.h;
    r.unknowns = op.n;
    r.grid = op.grid;
    auto tor = solve_torsion(op, solver, so.cg_tol);
    r.torsion_stats = tor.stats;
    r.torsion = std::move(tor.values);
    const auto it = std::max_element(r.torsion.begin(), r.torsion.end());
    r.sup_norm = *it;
    if (op.grid) r.argmax = op.grid->position(static_cast<std::size_t>(it - r.torsion.begin()));

    EigenOptions eo;
    eo.start = r.torsion; // first inverse-iteration iterate of the constant vector
    auto eig = principal_eigenvalue(op, solver, so, eo);
    r.lambda1 = eig.lambda;
    r.eigvec = std::move(eig.eigvec);
    r.eigen_iterations = eig.iterations;
    r.eigen_inner_iterations = eig.inner_iterations;
    r.eigen_residual = eig.residual;
    r.eigen_rel_change = eig.rel_change;
    r.gap_ratio = eig.gap_ratio;
    r.slow_convergence = eig.slow_convergence;
    r.product = r.lambda1 * r.sup_norm;
    return r;
}

} // namespace detail

/// lambda, torsion and their product for an assembled operator.
inline SpectralResult spectral_product(const SparseOperator& op, const SolverOptions& so = {}) {
    return detail::solve_spectral(op, so);
}

inline void attach_richardson(SpectralResult& fine, const SpectralResult& coarse) {
    fine.has_error_estimate = true;
    fine.coarse_h = coarse.h;
    fine.coarse = {coarse.lambda1, coarse.sup_norm, coarse.product};
    const auto rl = richardson(coarse.lambda1, fine.lambda1);
    const auto rs = richardson(coarse.sup_norm, fine.sup_norm);
    const auto rp = richardson(coarse.product, fine.product);
    fine.extrapolated = {rl.extrapolated, rs.extrapolated, rp.extrapolated};
    fine.error = {rl.error_estimate, rs.error_estimate, rp.error_estimate};
}

/// Assemble on spacing h, solve both problems and form the product.
inline SpectralResult spectral_product(const DomainSpec& spec, double h, const ProductOptions& opts = {}) {
    auto fine = detail::solve_spectral(assemble_dirichlet(build_grid(spec, h, opts.grid)), opts.solver);
    if (opts.richardson) {
        const auto coarse = detail::solve_spectral(assemble_dirichlet(build_grid(spec, 2.0 * h, opts.grid)),
                                                   opts.solver);
        attach_richardson(fine, coarse);
    }
    return fine;
}

} // namespace torsionlab
