#pragma once

///
/// \file linalg.hpp
///
/// Dense and block-tridiagonal linear solves used by the Newton iteration.
///

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mmg/errors.hpp"
#include "mmg/polybasis.hpp"

namespace mmg {

///
/// Square block-tridiagonal matrix with \c blocks() diagonal blocks of
/// size \c block_size(). \c lower[i] is block (i+1, i) and \c upper[i] is
/// block (i, i+1).
///
struct BlockTridiagonal
{
    std::vector<Matrix> lower;
    std::vector<Matrix> diag;
    std::vector<Matrix> upper;

    Eigen::Index blocks() const noexcept { return static_cast<Eigen::Index>(diag.size()); }
    Eigen::Index block_size() const noexcept { return diag.empty() ? 0 : diag.front().rows(); }
    Eigen::Index rows() const noexcept { return blocks() * block_size(); }

    Matrix to_dense() const
    {
        const auto nb = blocks();
        const auto bs = block_size();
        Matrix out = Matrix::Zero(nb * bs, nb * bs);
        for (Eigen::Index i = 0; i < nb; ++i) {
            out.block(i * bs, i * bs, bs, bs) = diag[static_cast<std::size_t>(i)];
            if (i + 1 < nb) {
                out.block((i + 1) * bs, i * bs, bs, bs) = lower[static_cast<std::size_t>(i)];
                out.block(i * bs, (i + 1) * bs, bs, bs) = upper[static_cast<std::size_t>(i)];
            }
        }
        return out;
    }

    Vector operator*(const Vector& x) const
    {
        const auto nb = blocks();
        const auto bs = block_size();
        Vector y(x.size());
        for (Eigen::Index i = 0; i < nb; ++i) {
            auto yi = y.segment(i * bs, bs);
            yi = diag[static_cast<std::size_t>(i)] * x.segment(i * bs, bs);
            if (i > 0)
                yi += lower[static_cast<std::size_t>(i - 1)] * x.segment((i - 1) * bs, bs);
            if (i + 1 < nb)
                yi += upper[static_cast<std::size_t>(i)] * x.segment((i + 1) * bs, bs);
        }
        return y;
    }
};

/// Jacobian storage: dense, or block-tridiagonal for chain-structured problems.
using JacobianMatrix = std::variant<Matrix, BlockTridiagonal>;

inline Matrix to_dense(const JacobianMatrix& J)
{
    if (const auto* m = std::get_if<Matrix>(&J))
        return *m;
    return std::get<BlockTridiagonal>(J).to_dense();
}

namespace detail {

// LU with partial pivoting; singular when some |U_ii| < rel_tol * max |U_ii|.
inline Eigen::PartialPivLU<Matrix> checked_lu(const Matrix& a, double rel_tol, const char* who)
{
    if (a.rows() != a.cols())
        throw InvalidArgument(std::string(who) + ": matrix is not square");
    Eigen::PartialPivLU<Matrix> lu(a);
    const auto diag = lu.matrixLU().diagonal().cwiseAbs();
    const double max_pivot = diag.size() ? diag.maxCoeff() : 0.0;
    const double min_pivot = diag.size() ? diag.minCoeff() : 0.0;
    if (!(max_pivot > 0.0) || !std::isfinite(max_pivot) || min_pivot < rel_tol * max_pivot)
        throw SingularMatrix(std::string(who) + ": matrix is numerically singular (min pivot " +
                             std::to_string(min_pivot) + ", max pivot " +
                             std::to_string(max_pivot) + ")");
    return lu;
}

} // namespace detail

/// Solves a x = b by LU; throws SingularMatrix on a relatively tiny pivot.
inline Vector lu_solve(const Matrix& a, const Vector& b, double pivot_rel_tol = 1e-12)
{
    return detail::checked_lu(a, pivot_rel_tol, "lu_solve").solve(b);
}

/// x = a^+ b with singular values below rank_cutoff * sigma_max dropped.
inline Vector pseudoinverse_solve(const Matrix& a, const Vector& b, double rank_cutoff = 1e-10)
{
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || !(sv(0) > 0.0))
        throw SingularMatrix("pseudoinverse_solve: zero matrix");
    if (!std::isfinite(sv(0)))
        throw SingularMatrix("pseudoinverse_solve: non-finite singular values");
    const double cut = rank_cutoff * sv(0);
    Vector utb = svd.matrixU().transpose() * b;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        utb(i) = sv(i) > cut ? utb(i) / sv(i) : 0.0;
    return svd.matrixV() * utb;
}

///
/// Block Thomas elimination. Each pivot block is factored by LU with the
/// same relative pivot test as lu_solve; a singular pivot block throws.
///
inline Vector block_tridiagonal_solve(const BlockTridiagonal& J, const Vector& rhs,
                                      double pivot_rel_tol = 1e-12)
{
    const auto nb = J.blocks();
    const auto bs = J.block_size();
    if (nb == 0 || rhs.size() != nb * bs)
        throw InvalidArgument("block_tridiagonal_solve: size mismatch");

    // forward sweep: D'_i = D_i - L_{i-1} D'_{i-1}^{-1} U_{i-1}
    std::vector<Eigen::PartialPivLU<Matrix>> piv;
    std::vector<Matrix> c_star; // D'_i^{-1} U_i
    piv.reserve(static_cast<std::size_t>(nb));
    c_star.reserve(static_cast<std::size_t>(nb));
    Vector d_star(rhs.size());

    for (Eigen::Index i = 0; i < nb; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        Matrix dprime = J.diag[ui];
        Vector r = rhs.segment(i * bs, bs);
        if (i > 0) {
            dprime.noalias() -= J.lower[ui - 1] * c_star[ui - 1];
            r.noalias() -= J.lower[ui - 1] * d_star.segment((i - 1) * bs, bs);
        }
        try {
            piv.push_back(detail::checked_lu(dprime, pivot_rel_tol, "block_tridiagonal_solve"));
        } catch (const SingularMatrix&) {
            throw SingularMatrix("block_tridiagonal_solve: pivot block " + std::to_string(i) +
                                 " is singular");
        }
        if (i + 1 < nb)
            c_star.push_back(piv.back().solve(J.upper[ui]));
        d_star.segment(i * bs, bs) = piv.back().solve(r);
    }

    Vector x(rhs.size());
    x.segment((nb - 1) * bs, bs) = d_star.segment((nb - 1) * bs, bs);
    for (Eigen::Index i = nb - 2; i >= 0; --i)
        x.segment(i * bs, bs) = d_star.segment(i * bs, bs) -
                                c_star[static_cast<std::size_t>(i)] * x.segment((i + 1) * bs, bs);
    return x;
}

} // namespace mmg
