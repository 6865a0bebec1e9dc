#pragma once

///
/// \file newton.hpp
///
/// Newton iteration c <- c - JF(c)^{-1} F(c) on the Galerkin coefficients,
/// and the Sylvester solve for the fully linear case.
///

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mmg/errors.hpp"
#include "mmg/galerkin.hpp"
#include "mmg/linalg.hpp"
#include "mmg/problem.hpp"

namespace mmg {

enum class LinearBackend
{
    dense_lu,
    pseudoinverse,
    block_tridiagonal,
    automatic,
};

inline std::string to_string(LinearBackend b)
{
    switch (b) {
    case LinearBackend::dense_lu: return "dense_lu";
    case LinearBackend::pseudoinverse: return "pseudoinverse";
    case LinearBackend::block_tridiagonal: return "block_tridiagonal";
    case LinearBackend::automatic: return "auto";
    }
    return "?";
}

inline LinearBackend parse_backend(const std::string& s)
{
    if (s == "dense_lu")
        return LinearBackend::dense_lu;
    if (s == "pseudoinverse")
        return LinearBackend::pseudoinverse;
    if (s == "block_tridiagonal")
        return LinearBackend::block_tridiagonal;
    if (s == "auto")
        return LinearBackend::automatic;
    throw InvalidArgument("unknown linear backend '" + s + "'");
}

struct SolverOptions
{
    double tol_F_l1 = 1e-7;
    int max_iter = 300;
    LinearBackend backend = LinearBackend::automatic;
    double rank_cutoff = 1e-10;
    /// Step length multiplier; 1 is plain Newton.
    double damping = 1.0;
    /// Relative LU pivot below which a Jacobian counts as singular.
    double singular_pivot_tol = 1e-12;
    /// Abort when ||F||_1 exceeds this multiple of its initial value.
    /// Off by default: plain Newton runs out its iteration budget.
    double divergence_factor = std::numeric_limits<double>::infinity();
    /// Consecutive non-decreasing pseudoinverse steps before giving up.
    int stall_limit = 5;
    std::optional<Vector> initial_guess;

    void validate() const
    {
        if (!(tol_F_l1 > 0.0))
            throw InvalidArgument("SolverOptions: tol_F_l1 must be positive");
        if (max_iter < 1)
            throw InvalidArgument("SolverOptions: max_iter must be >= 1");
        if (!(rank_cutoff > 0.0 && rank_cutoff < 1.0))
            throw InvalidArgument("SolverOptions: rank_cutoff must lie in (0, 1)");
        if (!(damping > 0.0 && damping <= 1.0))
            throw InvalidArgument("SolverOptions: damping must lie in (0, 1]");
        if (!(divergence_factor > 1.0))
            throw InvalidArgument("SolverOptions: divergence_factor must exceed 1");
        if (stall_limit < 1)
            throw InvalidArgument("SolverOptions: stall_limit must be >= 1");
    }
};

enum class Termination
{
    converged,
    max_iterations,
    diverged,
    singular_jacobian,
};

inline std::string to_string(Termination t)
{
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iterations: return "max_iterations";
    case Termination::diverged: return "diverged";
    case Termination::singular_jacobian: return "singular_jacobian";
    }
    return "?";
}

struct Solution
{
    Vector c;
    int n = 0;
    Eigen::Index N = 0;
    int iterations = 0;
    std::vector<double> residual_history; ///< ||F||_1 at every iterate, including c^0
    bool converged = false;
    Termination termination = Termination::max_iterations;
    LinearBackend backend_used = LinearBackend::automatic;

    Eigen::Map<const Matrix> blocks() const { return {c.data(), N, n}; }
};

inline void require_converged(const Solution& sol)
{
    if (!sol.converged)
        throw NotConverged("Newton iteration did not converge (" + to_string(sol.termination) +
                               " after " + std::to_string(sol.iterations) + " iterations)",
                           sol.residual_history);
}

///
/// Solves JF delta = F with the requested backend. \c automatic means
/// block_tridiagonal for block storage and dense_lu otherwise; no
/// fallback happens here.
///
inline Vector newton_step(const JacobianMatrix& J, const Vector& F, LinearBackend backend,
                          double rank_cutoff = 1e-10, double pivot_rel_tol = 1e-12)
{
    const bool is_block = std::holds_alternative<BlockTridiagonal>(J);
    if (backend == LinearBackend::automatic)
        backend = is_block ? LinearBackend::block_tridiagonal : LinearBackend::dense_lu;
    switch (backend) {
    case LinearBackend::block_tridiagonal:
        if (!is_block)
            throw InvalidArgument("newton_step: block_tridiagonal backend needs block storage");
        return block_tridiagonal_solve(std::get<BlockTridiagonal>(J), F, pivot_rel_tol);
    case LinearBackend::dense_lu:
        if (is_block)
            return lu_solve(std::get<BlockTridiagonal>(J).to_dense(), F, pivot_rel_tol);
        return lu_solve(std::get<Matrix>(J), F, pivot_rel_tol);
    case LinearBackend::pseudoinverse:
        if (is_block)
            return pseudoinverse_solve(std::get<BlockTridiagonal>(J).to_dense(), F, rank_cutoff);
        return pseudoinverse_solve(std::get<Matrix>(J), F, rank_cutoff);
    case LinearBackend::automatic: break;
    }
    throw InvalidArgument("newton_step: unresolved backend");
}

///
/// Plain Newton iteration until ||F||_1 <= tol_F_l1 or max_iter steps.
///
/// Non-convergence is reported through Solution::termination, not thrown;
/// call require_converged() to turn it into NotConverged.
///
inline Solution solve_invariance(const Problem& pb, const GalerkinOperators& ops,
                                 const SolverOptions& opts = {})
{
    opts.validate();
    const auto N = ops.size();
    const int n = pb.system.n;
    if (ops.basis.dim() != pb.generator.d)
        throw InvalidArgument("solve_invariance: operators were assembled for another dimension");

    Solution sol;
    sol.n = n;
    sol.N = N;
    sol.c = opts.initial_guess ? *opts.initial_guess : Vector::Zero(N * n);
    check_coefficients(pb, ops, sol.c);

    const bool chain = uses_chain_path(pb, ops);
    LinearBackend backend = opts.backend;
    bool may_fall_back = false;
    if (backend == LinearBackend::automatic) {
        backend = chain ? LinearBackend::block_tridiagonal : LinearBackend::dense_lu;
        may_fall_back = true;
    }
    if (backend == LinearBackend::block_tridiagonal && !chain)
        throw InvalidArgument("solve_invariance: block_tridiagonal backend requires a chain_cubic "
                              "problem with assembled tensors");
    sol.backend_used = backend;

    double initial = 0.0;
    int stalled = 0;
    for (;;) {
        Vector F;
        try {
            F = residual_F(pb, ops, sol.c);
        } catch (const NonFiniteValue&) {
            sol.termination = Termination::diverged;
            break;
        }
        const double r = F.lpNorm<1>();
        if (!std::isfinite(r)) {
            sol.termination = Termination::diverged;
            break;
        }
        if (sol.residual_history.empty())
            initial = r;
        else if (backend == LinearBackend::pseudoinverse)
            stalled = r >= sol.residual_history.back() ? stalled + 1 : 0;
        sol.residual_history.push_back(r);

        if (r <= opts.tol_F_l1) {
            sol.converged = true;
            sol.termination = Termination::converged;
            break;
        }
        if (initial > 0.0 && r > opts.divergence_factor * initial) {
            sol.termination = Termination::diverged;
            break;
        }
        if (stalled >= opts.stall_limit) {
            sol.termination = Termination::singular_jacobian;
            break;
        }
        if (sol.iterations >= opts.max_iter) {
            sol.termination = Termination::max_iterations;
            break;
        }

        Vector delta;
        try {
            const auto J = jacobian_JF(pb, ops, sol.c);
            try {
                delta = newton_step(J, F, backend, opts.rank_cutoff, opts.singular_pivot_tol);
            } catch (const SingularMatrix&) {
                if (!may_fall_back || backend != LinearBackend::dense_lu)
                    throw;
                backend = LinearBackend::pseudoinverse;
                sol.backend_used = backend;
                delta = newton_step(J, F, backend, opts.rank_cutoff, opts.singular_pivot_tol);
            }
        } catch (const SingularMatrix&) {
            sol.termination = Termination::singular_jacobian;
            break;
        } catch (const NonFiniteValue&) {
            sol.termination = Termination::diverged;
            break;
        }
        sol.c -= opts.damping * delta;
        ++sol.iterations;
    }
    return sol;
}

///
/// Solves \f$\Pi S = A\Pi + BL\f$ for \f$\Pi\in\mathbb{R}^{n\times d}\f$
/// through the vectorized system
/// \f$(S^\top\otimes I_n - I_d\otimes A)\,\mathrm{vec}\,\Pi = \mathrm{vec}(BL)\f$.
///
inline Matrix solve_sylvester(const Matrix& S, const Matrix& L, const Matrix& A, const Matrix& B)
{
    const auto d = S.rows();
    const auto n = A.rows();
    if (S.cols() != d || A.cols() != n || L.cols() != d || B.rows() != n || B.cols() != L.rows())
        throw InvalidArgument("solve_sylvester: inconsistent dimensions");
    Matrix K = Matrix::Zero(n * d, n * d);
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) {
            auto blk = K.block(a * n, b * n, n, n);
            if (S(b, a) != 0.0)
                blk.diagonal().array() += S(b, a);
            if (a == b)
                blk -= A;
        }
    const Matrix rhs = B * L;
    Vector x;
    try {
        x = lu_solve(K, Eigen::Map<const Vector>(rhs.data(), rhs.size()));
    } catch (const SingularMatrix&) {
        throw SingularMatrix("solve_sylvester: singular system (spectra of S and A overlap)");
    }
    return Eigen::Map<const Matrix>(x.data(), n, d);
}

} // namespace mmg
