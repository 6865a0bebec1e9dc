#pragma once

///
/// \file residual.hpp
///
/// Pointwise residual of the invariance equation and its L2 norms over a
/// subdomain W.
///

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mmg/errors.hpp"
#include "mmg/galerkin.hpp"
#include "mmg/polybasis.hpp"
#include "mmg/problem.hpp"
#include "mmg/quadrature.hpp"

namespace mmg {

///
/// \f$R_i(c,\omega) = \nabla\pi_i^N(\omega)\cdot s(\omega) - f_i(\pi^N(\omega),\ell(\omega))\f$
///
inline Vector residual_at(const Problem& pb, const Basis& basis, const Vector& c,
                          std::span<const double> w)
{
    const auto N = static_cast<Eigen::Index>(basis.size());
    const auto C = coefficient_matrix(c, N);
    if (C.cols() != pb.system.n)
        throw InvalidArgument("residual_at: coefficient vector does not hold n blocks");
    const Vector wv = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    const Vector phi = eval_basis(basis, w);
    const Vector grad_s = eval_basis_gradient(basis, w) * pb.generator.s(wv);
    const Vector x = C.transpose() * phi;
    const Vector r = C.transpose() * grad_s - pb.system.f(x, pb.generator.ell(wv));
    if (!r.allFinite())
        throw NonFiniteValue("residual_at: dynamics are not finite", {w.begin(), w.end()});
    return r;
}

inline Vector residual_at(const Problem& pb, const Basis& basis, const Vector& c, const Vector& w)
{
    return residual_at(pb, basis, c, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
}

struct ResidualReport
{
    Vector per_component; ///< ||R_i||_(2,W)
    double weighted_norm = 0.0;
    BoxDomain subdomain;
    int q = 0;
};

///
/// \f$\|R_i\|_{(2,W)} = (\int_W R_i^2)^{1/2}\f$ by q-point tensor quadrature,
/// and the aggregate weighted by \f$\|c_i\|_2\f$:
/// \f$\|R\|_{(2,W)} = \sum_i \|c_i\|_2\|R_i\| / \sum_i \|c_i\|_2\f$.
///
/// Throws DegenerateInput when every coefficient block is zero.
///
inline ResidualReport residual_norm(const Problem& pb, const Basis& basis, const Vector& c,
                                    const BoxDomain& W, int q = 20,
                                    const std::optional<BoxDomain>& omega = std::nullopt)
{
    W.validate();
    if (W.dim() != pb.generator.d)
        throw InvalidArgument("residual_norm: subdomain dimension mismatch");
    if (omega && !W.inside(*omega))
        warn("residual subdomain " + W.to_string() + " is not contained in the fit domain " +
             omega->to_string());

    const auto N = static_cast<Eigen::Index>(basis.size());
    const auto C = coefficient_matrix(c, N);
    const int n = pb.system.n;
    if (C.cols() != n)
        throw InvalidArgument("residual_norm: coefficient vector does not hold n blocks");

    const Vector block_norms = C.colwise().norm().transpose();
    const double weight_sum = block_norms.sum();
    if (!(weight_sum > 0.0))
        throw DegenerateInput("residual_norm: all coefficient blocks are zero, weights undefined");

    const auto rule = tensor_rule(W, q);
    Vector sq = Vector::Zero(n);
    std::vector<double> buf;
    for (Eigen::Index k = 0; k < rule.size(); ++k) {
        const Vector r = residual_at(pb, basis, c, rule.node(k, buf));
        sq += rule.weights(k) * r.cwiseAbs2();
    }

    ResidualReport rep;
    rep.per_component = sq.cwiseSqrt();
    rep.weighted_norm = block_norms.dot(rep.per_component) / weight_sum;
    rep.subdomain = W;
    rep.q = q;
    return rep;
}

} // namespace mmg
