#pragma once

///
/// \file galerkin.hpp
///
/// Galerkin projection of the invariance equation
/// \f[ \frac{\partial\pi}{\partial\omega}s(\omega) = f(\pi(\omega),\ell(\omega)) \f]
/// onto the monomial basis. With the expansion \f$\pi_i^N = \Phi^N c_i\f$
/// the residual is
/// \f[ F_i(c) = A c_i + G_i(c), \qquad
///     G_i(c) = -\langle f_i(\Phi c_1,\dots,\Phi c_n, \ell), \Phi\rangle_\Omega \f]
/// and the Jacobian blocks are
/// \f$ JF_{ij} = \delta_{ij} A - \langle (\partial f_i/\partial x_j)\,\Phi, \Phi\rangle_\Omega \f$.
///
/// Two evaluation paths are provided: a generic one that integrates \f$f\f$
/// by tensor quadrature, and an exact tensor path for chain-structured
/// cubic systems whose Jacobian is block tridiagonal.
///

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmg/errors.hpp"
#include "mmg/linalg.hpp"
#include "mmg/polybasis.hpp"
#include "mmg/problem.hpp"
#include "mmg/quadrature.hpp"

namespace mmg {

/// Dense cubic array of extent N in every index, row-major.
class DenseTensor
{
public:
    DenseTensor() = default;
    DenseTensor(int rank, Eigen::Index extent)
        : rank_(rank), extent_(extent), data_(static_cast<std::size_t>(ipow(extent, rank)), 0.0)
    {
    }

    int rank() const noexcept { return rank_; }
    Eigen::Index extent() const noexcept { return extent_; }
    const double* data() const noexcept { return data_.data(); }
    double* data() noexcept { return data_.data(); }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k)
    {
        return data_[static_cast<std::size_t>((i * extent_ + j) * extent_ + k)];
    }
    double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const
    {
        return data_[static_cast<std::size_t>((i * extent_ + j) * extent_ + k)];
    }
    double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l)
    {
        return data_[static_cast<std::size_t>(((i * extent_ + j) * extent_ + k) * extent_ + l)];
    }
    double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const
    {
        return data_[static_cast<std::size_t>(((i * extent_ + j) * extent_ + k) * extent_ + l)];
    }

private:
    static Eigen::Index ipow(Eigen::Index b, int e)
    {
        Eigen::Index r = 1;
        for (int i = 0; i < e; ++i)
            r *= b;
        return r;
    }

    int rank_ = 0;
    Eigen::Index extent_ = 0;
    std::vector<double> data_;
};

///
/// Precomputed inner products over \f$\Omega\f$.
///
struct GalerkinOperators
{
    Basis basis;
    BoxDomain domain;
    QuadratureRule rule;

    Matrix A;     ///< A(i,j) = <(dphi_j/dw) . s, phi_i>
    Matrix mass;  ///< <phi_i, phi_j>
    Matrix P;     ///< <w_1 phi_i, phi_j>
    Matrix gamma; ///< N x m, gamma(j, r) = <l_r, phi_j>

    std::optional<DenseTensor> N3; ///< <phi_i phi_j phi_k>
    std::optional<DenseTensor> O4; ///< <phi_i phi_j phi_k phi_l>

    Matrix phi_nodes; ///< quadrature nodes x N
    Matrix ell_nodes; ///< quadrature nodes x m

    bool exact_linear_terms = false; ///< A and gamma from closed-form integrals

    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(basis.size()); }
};

struct AssemblyOptions
{
    enum class Tensors
    {
        automatic, ///< only for chain_cubic systems
        always,
        never,
    };
    Tensors tensors = Tensors::automatic;
};

///
/// Quadrature points per dimension: exact for polynomial problems
/// (coordinate degree of the G and dG integrands), 32 otherwise.
///
inline int default_quadrature_order(const Problem& pb, int M)
{
    if (pb.generator.is_polynomial() && pb.system.f_poly) {
        int deg_f = 1;
        for (const auto& fi : *pb.system.f_poly)
            deg_f = std::max(deg_f, fi.degree());
        int deg_l = 1;
        for (const auto& li : *pb.generator.ell_poly)
            deg_l = std::max(deg_l, li.degree());
        // phi_j f(pi, l) bounds the dG integrand phi_k phi_l df/dx as well
        const int need = M + deg_f * std::max(M, deg_l);
        return std::max({2 * M + 1, 10, (need + 2) / 2});
    }
    return 32;
}

namespace detail {

inline void check_finite(const Matrix& m, const char* what)
{
    if (!m.allFinite())
        throw NonFiniteValue(std::string("assemble_operators: ") + what + " has non-finite entries",
                             {});
}

inline std::vector<int> add_exps(const std::vector<int>& a, const std::vector<int>& b)
{
    std::vector<int> r(a.size());
    for (std::size_t j = 0; j < a.size(); ++j)
        r[j] = a[j] + b[j];
    return r;
}

inline Vector row_vec(const Matrix& m, Eigen::Index k) { return m.row(k).transpose(); }

} // namespace detail

///
/// Assembles A, mass, P, gamma, and optionally the N and O tensors.
/// Closed-form monomial integrals are used whenever s and l are
/// polynomial; tensor quadrature with \p rule otherwise.
///
inline GalerkinOperators assemble_operators(const Problem& pb, const Basis& basis,
                                            const BoxDomain& domain, const QuadratureRule& rule,
                                            AssemblyOptions opts = {})
{
    pb.validate();
    domain.validate();
    const int d = pb.generator.d;
    const int m = pb.generator.m;
    if (basis.dim() != d || domain.dim() != d || rule.nodes.cols() != d)
        throw InvalidArgument("assemble_operators: basis, domain and rule must have dimension d = " +
                              std::to_string(d));
    if (!domain.contains_origin())
        warn("domain " + domain.to_string() + " does not contain the origin");

    GalerkinOperators ops;
    ops.basis = basis;
    ops.domain = domain;
    ops.rule = rule;
    const auto N = static_cast<Eigen::Index>(basis.size());
    const int M = basis.max_degree();

    int s_deg = 0;
    int l_deg = 0;
    if (pb.generator.is_polynomial()) {
        for (const auto& p : *pb.generator.s_poly)
            s_deg = std::max(s_deg, p.max_exponent());
        for (const auto& p : *pb.generator.ell_poly)
            l_deg = std::max(l_deg, p.max_exponent());
    }
    const detail::MomentTable moments(domain, std::max({4 * M, 2 * M + 1 + s_deg, M + l_deg}));

    // mass and P
    ops.mass.resize(N, N);
    ops.P.resize(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) {
            auto e = detail::add_exps(basis[static_cast<std::size_t>(i)].exponents(),
                                      basis[static_cast<std::size_t>(j)].exponents());
            ops.mass(i, j) = moments(e);
            e[0] += 1;
            ops.P(i, j) = moments(e);
        }
    }

    // node tables
    const auto nodes = rule.size();
    ops.phi_nodes.resize(nodes, N);
    ops.ell_nodes.resize(nodes, m);
    for (Eigen::Index k = 0; k < nodes; ++k) {
        const Vector w = detail::row_vec(rule.nodes, k);
        ops.phi_nodes.row(k) = eval_basis(basis, w).transpose();
        const Vector lv = pb.generator.ell(w);
        if (!lv.allFinite())
            throw NonFiniteValue("assemble_operators: l is not finite at quadrature node " +
                                     std::to_string(k),
                                 std::vector<double>(w.data(), w.data() + w.size()));
        ops.ell_nodes.row(k) = lv.transpose();
    }

    if (pb.generator.is_polynomial()) {
        ops.exact_linear_terms = true;
        // A(i,j) = sum_k sum_terms c nu_{j,k} int w^(nu_i + nu_j - e_k + e_term)
        ops.A = Matrix::Zero(N, N);
        const auto& s_poly = *pb.generator.s_poly;
        for (Eigen::Index i = 0; i < N; ++i) {
            const auto& nui = basis[static_cast<std::size_t>(i)].exponents();
            for (Eigen::Index j = 0; j < N; ++j) {
                const auto& nuj = basis[static_cast<std::size_t>(j)].exponents();
                double sum = 0.0;
                for (int k = 0; k < d; ++k) {
                    const auto uk = static_cast<std::size_t>(k);
                    if (nuj[uk] == 0)
                        continue;
                    auto base = detail::add_exps(nui, nuj);
                    base[uk] -= 1;
                    for (const auto& term : s_poly[uk].terms()) {
                        auto e = detail::add_exps(base, term.exponents);
                        sum += term.coefficient * nuj[uk] * moments(e);
                    }
                }
                ops.A(i, j) = sum;
            }
        }
        ops.gamma = Matrix::Zero(N, m);
        const auto& l_poly = *pb.generator.ell_poly;
        for (Eigen::Index j = 0; j < N; ++j)
            for (int r = 0; r < m; ++r)
                for (const auto& term : l_poly[static_cast<std::size_t>(r)].terms())
                    ops.gamma(j, r) +=
                        term.coefficient *
                        moments(detail::add_exps(basis[static_cast<std::size_t>(j)].exponents(),
                                                 term.exponents));
    } else {
        ops.A = Matrix::Zero(N, N);
        for (Eigen::Index k = 0; k < nodes; ++k) {
            const Vector w = detail::row_vec(rule.nodes, k);
            const Vector sv = pb.generator.s(w);
            if (!sv.allFinite())
                throw NonFiniteValue("assemble_operators: s is not finite at quadrature node " +
                                         std::to_string(k),
                                     std::vector<double>(w.data(), w.data() + w.size()));
            const Vector grad_s = eval_basis_gradient(basis, w) * sv;
            ops.A.noalias() += rule.weights(k) * ops.phi_nodes.row(k).transpose() * grad_s.transpose();
        }
        ops.gamma = ops.phi_nodes.transpose() * (rule.weights.asDiagonal() * ops.ell_nodes);
    }
    detail::check_finite(ops.A, "A");
    detail::check_finite(ops.gamma, "gamma");

    const bool want_tensors =
        opts.tensors == AssemblyOptions::Tensors::always ||
        (opts.tensors == AssemblyOptions::Tensors::automatic &&
         pb.system.structure == StructureTag::chain_cubic);
    if (want_tensors) {
        DenseTensor n3(3, N);
        DenseTensor o4(4, N);
        std::vector<int> eij(static_cast<std::size_t>(d));
        std::vector<int> eijk(static_cast<std::size_t>(d));
        std::vector<int> eijkl(static_cast<std::size_t>(d));
        for (Eigen::Index i = 0; i < N; ++i) {
            const auto& a = basis[static_cast<std::size_t>(i)].exponents();
            for (Eigen::Index j = 0; j < N; ++j) {
                const auto& b = basis[static_cast<std::size_t>(j)].exponents();
                for (int t = 0; t < d; ++t)
                    eij[static_cast<std::size_t>(t)] = a[static_cast<std::size_t>(t)] + b[static_cast<std::size_t>(t)];
                for (Eigen::Index k = 0; k < N; ++k) {
                    const auto& c = basis[static_cast<std::size_t>(k)].exponents();
                    for (int t = 0; t < d; ++t)
                        eijk[static_cast<std::size_t>(t)] = eij[static_cast<std::size_t>(t)] + c[static_cast<std::size_t>(t)];
                    n3(i, j, k) = moments(eijk);
                    for (Eigen::Index l = 0; l < N; ++l) {
                        const auto& e = basis[static_cast<std::size_t>(l)].exponents();
                        for (int t = 0; t < d; ++t)
                            eijkl[static_cast<std::size_t>(t)] = eijk[static_cast<std::size_t>(t)] + e[static_cast<std::size_t>(t)];
                        o4(i, j, k, l) = moments(eijkl);
                    }
                }
            }
        }
        ops.N3 = std::move(n3);
        ops.O4 = std::move(o4);
    }
    return ops;
}

/// Convenience overload building the tensor rule with \p q points per dimension
/// (default_quadrature_order when q <= 0).
inline GalerkinOperators assemble_operators(const Problem& pb, const Basis& basis,
                                            const BoxDomain& domain, int q = 0,
                                            AssemblyOptions opts = {})
{
    if (q <= 0)
        q = default_quadrature_order(pb, basis.max_degree());
    return assemble_operators(pb, basis, domain, tensor_rule(domain, q), opts);
}

//
// Coefficient block helpers. c = (c_1, ..., c_n), each of length N.
//

inline Eigen::Map<const Matrix> coefficient_matrix(const Vector& c, Eigen::Index N)
{
    if (N <= 0 || c.size() % N != 0)
        throw InvalidArgument("coefficient block length " + std::to_string(c.size()) +
                              " is not a multiple of N = " + std::to_string(N));
    return {c.data(), N, c.size() / N};
}

inline void check_coefficients(const Problem& pb, const GalerkinOperators& ops, const Vector& c)
{
    if (c.size() != ops.size() * pb.system.n)
        throw InvalidArgument("coefficient vector has length " + std::to_string(c.size()) +
                              ", expected N*n = " + std::to_string(ops.size() * pb.system.n));
    if (!c.allFinite())
        throw NonFiniteValue("coefficient vector is not finite", {});
}

//
// Generic quadrature path
//

inline Vector residual_F_generic(const Problem& pb, const GalerkinOperators& ops, const Vector& c)
{
    check_coefficients(pb, ops, c);
    const auto N = ops.size();
    const int n = pb.system.n;
    const auto C = coefficient_matrix(c, N);
    const Matrix pi_nodes = ops.phi_nodes * C; // nodes x n
    const auto nodes = ops.rule.size();

    Matrix fvals(nodes, n);
    for (Eigen::Index k = 0; k < nodes; ++k) {
        const Vector x = pi_nodes.row(k).transpose();
        const Vector u = ops.ell_nodes.row(k).transpose();
        const Vector fv = pb.system.f(x, u);
        if (!fv.allFinite()) {
            const Vector w = ops.rule.nodes.row(k).transpose();
            throw NonFiniteValue("residual_F: f is not finite at quadrature node " +
                                     std::to_string(k),
                                 std::vector<double>(w.data(), w.data() + w.size()));
        }
        fvals.row(k) = fv.transpose();
    }
    Matrix F = ops.A * C;
    F.noalias() -= ops.phi_nodes.transpose() * (ops.rule.weights.asDiagonal() * fvals);
    return Eigen::Map<const Vector>(F.data(), F.size());
}

inline Matrix jacobian_generic(const Problem& pb, const GalerkinOperators& ops, const Vector& c)
{
    check_coefficients(pb, ops, c);
    const auto N = ops.size();
    const int n = pb.system.n;
    const auto C = coefficient_matrix(c, N);
    const Matrix pi_nodes = ops.phi_nodes * C;
    const auto nodes = ops.rule.size();

    Matrix J = Matrix::Zero(N * n, N * n);
    Matrix outer(N, N);
    for (Eigen::Index k = 0; k < nodes; ++k) {
        const Vector x = pi_nodes.row(k).transpose();
        const Vector u = ops.ell_nodes.row(k).transpose();
        const Matrix Jx = pb.system.f_jacobian_x(x, u);
        if (!Jx.allFinite()) {
            const Vector w = ops.rule.nodes.row(k).transpose();
            throw NonFiniteValue("jacobian_JF: df/dx is not finite at quadrature node " +
                                     std::to_string(k),
                                 std::vector<double>(w.data(), w.data() + w.size()));
        }
        const auto phi = ops.phi_nodes.row(k);
        outer.noalias() = ops.rule.weights(k) * phi.transpose() * phi;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (Jx(i, j) != 0.0)
                    J.block(i * N, j * N, N, N).noalias() -= Jx(i, j) * outer;
    }
    for (int i = 0; i < n; ++i)
        J.block(i * N, i * N, N, N) += ops.A;
    return J;
}

//
// Chain-cubic tensor path
//

/// \f$\tilde N(v)_{ij} = \sum_k v_k N_{ijk}\f$
inline Matrix contract_N(const GalerkinOperators& ops, const Vector& v)
{
    if (!ops.N3)
        throw InvalidArgument("contract_N: N tensor was not assembled");
    const auto N = ops.size();
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> flat(ops.N3->data(), N * N, N);
    const Vector r = flat * v;
    return Eigen::Map<const RowMat>(r.data(), N, N);
}

/// \f$\tilde O(v)_{ij} = \sum_{k,l} v_k v_l O_{ijkl}\f$
inline Matrix contract_O(const GalerkinOperators& ops, const Vector& v)
{
    if (!ops.O4)
        throw InvalidArgument("contract_O: O tensor was not assembled");
    const auto N = ops.size();
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> flat4(ops.O4->data(), N * N * N, N);
    const Vector r3 = flat4 * v;
    const Eigen::Map<const RowMat> flat3(r3.data(), N * N, N);
    const Vector r2 = flat3 * v;
    return Eigen::Map<const RowMat>(r2.data(), N, N);
}

/// \f$P(v) = (A + 2\kappa M + \tfrac12\tilde N(v) + \tfrac13\tilde O(v))\,v\f$
inline Vector chain_P(const GalerkinOperators& ops, const Vector& v, double kappa)
{
    Matrix K = ops.A + 2.0 * kappa * ops.mass;
    K.noalias() += 0.5 * contract_N(ops, v);
    K.noalias() += (1.0 / 3.0) * contract_O(ops, v);
    return K * v;
}

/// \f$Q(v) = A + 2\kappa M + \tilde N(v) + \tilde O(v)\f$
inline Matrix chain_Q(const GalerkinOperators& ops, const Vector& v, double kappa)
{
    Matrix K = ops.A + 2.0 * kappa * ops.mass;
    K.noalias() += contract_N(ops, v);
    K.noalias() += contract_O(ops, v);
    return K;
}

///
/// \f$F_i = P(c_i) - [i>1] M c_{i-1} - [i<n] M c_{i+1} - [i=1]\gamma\f$.
/// The chain length is taken from the length of \p c.
///
inline Vector chain_F(const GalerkinOperators& ops, const Vector& c, double kappa)
{
    const auto N = ops.size();
    const auto C = coefficient_matrix(c, N);
    const auto n = C.cols();
    Matrix F(N, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector fi = chain_P(ops, C.col(i), kappa);
        if (i > 0)
            fi.noalias() -= ops.mass * C.col(i - 1);
        if (i + 1 < n)
            fi.noalias() -= ops.mass * C.col(i + 1);
        if (i == 0)
            fi -= ops.gamma.col(0);
        F.col(i) = fi;
    }
    return Eigen::Map<const Vector>(F.data(), F.size());
}

/// Block-tridiagonal Jacobian: Q(c_i) on the diagonal, -M off the diagonal.
inline BlockTridiagonal chain_jacobian(const GalerkinOperators& ops, const Vector& c, double kappa)
{
    const auto N = ops.size();
    const auto C = coefficient_matrix(c, N);
    const auto n = C.cols();
    BlockTridiagonal J;
    J.diag.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        J.diag.push_back(chain_Q(ops, C.col(i), kappa));
    J.lower.assign(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)), -ops.mass);
    J.upper = J.lower;
    return J;
}

//
// Dispatch
//

inline bool uses_chain_path(const Problem& pb, const GalerkinOperators& ops)
{
    return pb.system.structure == StructureTag::chain_cubic && ops.N3 && ops.O4;
}

inline Vector residual_F(const Problem& pb, const GalerkinOperators& ops, const Vector& c)
{
    if (uses_chain_path(pb, ops)) {
        check_coefficients(pb, ops, c);
        return chain_F(ops, c, pb.system.chain_kappa);
    }
    return residual_F_generic(pb, ops, c);
}

inline JacobianMatrix jacobian_JF(const Problem& pb, const GalerkinOperators& ops, const Vector& c)
{
    if (uses_chain_path(pb, ops)) {
        check_coefficients(pb, ops, c);
        return chain_jacobian(ops, c, pb.system.chain_kappa);
    }
    return jacobian_generic(pb, ops, c);
}

} // namespace mmg
