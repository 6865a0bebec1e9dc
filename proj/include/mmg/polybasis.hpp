#pragma once

///
/// \file polybasis.hpp
///
/// Multivariate monomial basis without constant term, truncated at a maximum
/// total degree, and evaluation of expansions in that basis.
///

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmg/errors.hpp"

namespace mmg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

///
/// Exponent vector \f$(\nu_1,\dots,\nu_d)\f$ of the monomial
/// \f$\prod_j \omega_j^{\nu_j}\f$.
///
class MultiIndex
{
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> exponents) : exps_(std::move(exponents))
    {
        for (int e : exps_)
            if (e < 0)
                throw InvalidArgument("MultiIndex: negative exponent");
    }

    int dim() const noexcept { return static_cast<int>(exps_.size()); }
    int degree() const noexcept { return std::accumulate(exps_.begin(), exps_.end(), 0); }
    int operator[](int j) const { return exps_[static_cast<std::size_t>(j)]; }
    const std::vector<int>& exponents() const noexcept { return exps_; }

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

private:
    std::vector<int> exps_;
};

namespace detail {

// C(n, k); nullopt when the result exceeds size_t.
inline std::optional<std::size_t> checked_binomial(std::size_t n, std::size_t k)
{
    if (k > n)
        return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        // r * (n-k+i) / i is exact; divide out gcd first so the product
        // only overflows when the result does.
        const std::size_t g = std::gcd(r, i);
        const std::size_t t = (n - k + i) / (i / g);
        if ((r / g) > std::numeric_limits<std::size_t>::max() / t)
            return std::nullopt;
        r = (r / g) * t;
    }
    return r;
}

// Compositions of `total` into `parts` non-negative parts, first part
// descending, recursively.
inline void append_compositions(int total, int parts, std::vector<int>& scratch,
                                std::vector<MultiIndex>& out)
{
    const auto pos = scratch.size();
    if (parts == 1) {
        scratch.push_back(total);
        out.emplace_back(scratch);
        scratch.pop_back();
        return;
    }
    for (int e = total; e >= 0; --e) {
        scratch.push_back(e);
        append_compositions(total - e, parts - 1, scratch, out);
        scratch.resize(pos);
    }
}

} // namespace detail

///
/// Number of monomials in \p d variables with total degree in [1, M],
/// \f$N=\sum_{m=1}^{M}\binom{d+m-1}{m}\f$.
///
/// Throws Overflow rather than wrapping.
///
inline std::size_t basis_count(int d, int M)
{
    if (d < 1 || M < 1)
        throw InvalidArgument("basis_count: d and M must be >= 1");
    std::size_t total = 0;
    for (int m = 1; m <= M; ++m) {
        auto term = detail::checked_binomial(static_cast<std::size_t>(d + m - 1),
                                             static_cast<std::size_t>(m));
        if (!term || total > std::numeric_limits<std::size_t>::max() - *term)
            throw Overflow("basis_count: count overflows size_t for d=" + std::to_string(d) +
                           ", M=" + std::to_string(M));
        total += *term;
    }
    return total;
}

///
/// Ordered monomial basis \f$\Phi^N\f$. Immutable once generated.
///
/// Ordering is graded: ascending total degree, and within one degree the
/// exponent vectors run in descending lexicographic order, so for d = 2
/// the sequence is w1, w2, w1^2, w1 w2, w2^2, ...  Coefficient files and
/// the Jacobian block layout depend on this order.
///
class Basis
{
public:
    int dim() const noexcept { return d_; }
    int max_degree() const noexcept { return M_; }
    std::size_t size() const noexcept { return indices_.size(); }
    const MultiIndex& operator[](std::size_t k) const { return indices_[k]; }
    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }
    const std::vector<MultiIndex>& indices() const noexcept { return indices_; }

    /// Position of \p exps in the basis, if present.
    std::optional<std::size_t> find(const std::vector<int>& exps) const
    {
        for (std::size_t k = 0; k < indices_.size(); ++k)
            if (indices_[k].exponents() == exps)
                return k;
        return std::nullopt;
    }

    friend bool operator==(const Basis& a, const Basis& b)
    {
        return a.d_ == b.d_ && a.M_ == b.M_ && a.indices_ == b.indices_;
    }

    friend Basis generate_basis(int d, int M);

private:
    int d_ = 0;
    int M_ = 0;
    std::vector<MultiIndex> indices_;
};

inline Basis generate_basis(int d, int M)
{
    if (d < 1)
        throw InvalidArgument("generate_basis: dimension d must be >= 1");
    if (M < 1)
        throw InvalidArgument("generate_basis: maximum degree M must be >= 1");
    Basis b;
    b.d_ = d;
    b.M_ = M;
    b.indices_.reserve(basis_count(d, M));
    std::vector<int> scratch;
    for (int m = 1; m <= M; ++m)
        detail::append_compositions(m, d, scratch, b.indices_);
    return b;
}

namespace detail {

// powers(j, e) = w_j^e for e = 0..M, by repeated multiplication.
inline Matrix power_table(int M, std::span<const double> w)
{
    Matrix p(static_cast<Eigen::Index>(w.size()), M + 1);
    for (std::size_t j = 0; j < w.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        p(jj, 0) = 1.0;
        for (int e = 1; e <= M; ++e)
            p(jj, e) = p(jj, e - 1) * w[j];
    }
    return p;
}

inline void check_point(const Basis& basis, std::span<const double> w)
{
    if (static_cast<int>(w.size()) != basis.dim())
        throw InvalidArgument("basis evaluation: point has dimension " + std::to_string(w.size()) +
                              ", basis has " + std::to_string(basis.dim()));
}

} // namespace detail

/// Values \f$\phi_k(\omega)\f$, k = 0..N-1.
inline Vector eval_basis(const Basis& basis, std::span<const double> w)
{
    detail::check_point(basis, w);
    const Matrix p = detail::power_table(basis.max_degree(), w);
    Vector out(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
        double v = 1.0;
        for (int j = 0; j < basis.dim(); ++j)
            v *= p(j, basis[k][j]);
        out(static_cast<Eigen::Index>(k)) = v;
    }
    return out;
}

inline Vector eval_basis(const Basis& basis, const Vector& w)
{
    return eval_basis(basis, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
}

/// N x d matrix of partial derivatives \f$\partial\phi_k/\partial\omega_j\f$.
inline Matrix eval_basis_gradient(const Basis& basis, std::span<const double> w)
{
    detail::check_point(basis, w);
    const Matrix p = detail::power_table(basis.max_degree(), w);
    const int d = basis.dim();
    Matrix g(static_cast<Eigen::Index>(basis.size()), d);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto& nu = basis[k];
        for (int j = 0; j < d; ++j) {
            if (nu[j] == 0) {
                g(static_cast<Eigen::Index>(k), j) = 0.0;
                continue;
            }
            double v = nu[j] * p(j, nu[j] - 1);
            for (int i = 0; i < d; ++i)
                if (i != j)
                    v *= p(i, nu[i]);
            g(static_cast<Eigen::Index>(k), j) = v;
        }
    }
    return g;
}

inline Matrix eval_basis_gradient(const Basis& basis, const Vector& w)
{
    return eval_basis_gradient(
        basis, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
}

/// \f$\pi_i^N(\omega) = \Phi^N(\omega)\, c_i\f$.
inline double eval_expansion(const Basis& basis, const Vector& coeffs, std::span<const double> w)
{
    if (static_cast<std::size_t>(coeffs.size()) != basis.size())
        throw InvalidArgument("eval_expansion: coefficient vector has length " +
                              std::to_string(coeffs.size()) + ", basis has " +
                              std::to_string(basis.size()));
    return eval_basis(basis, w).dot(coeffs);
}

inline double eval_expansion(const Basis& basis, const Vector& coeffs, const Vector& w)
{
    return eval_expansion(basis, coeffs,
                          std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
}

} // namespace mmg
