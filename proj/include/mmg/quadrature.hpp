#pragma once

///
/// \file quadrature.hpp
///
/// Rectangular domains, exact monomial integrals over them, and
/// tensor-product Gauss-Legendre rules.
///

#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmg/errors.hpp"
#include "mmg/polybasis.hpp"

namespace mmg {

///
/// Axis-aligned box \f$\prod_j [lo_j, hi_j]\f$.
///
struct BoxDomain
{
    std::vector<double> lo;
    std::vector<double> hi;

    BoxDomain() = default;
    BoxDomain(std::vector<double> lower, std::vector<double> upper)
        : lo(std::move(lower)), hi(std::move(upper))
    {
        validate();
    }

    /// [-h, h]^d
    static BoxDomain symmetric(int d, double half_width)
    {
        return BoxDomain(std::vector<double>(static_cast<std::size_t>(d), -half_width),
                         std::vector<double>(static_cast<std::size_t>(d), half_width));
    }

    int dim() const noexcept { return static_cast<int>(lo.size()); }

    void validate() const
    {
        if (lo.size() != hi.size() || lo.empty())
            throw InvalidArgument("BoxDomain: lo/hi must be non-empty and of equal length");
        for (std::size_t j = 0; j < lo.size(); ++j)
            if (!(lo[j] < hi[j]) || !std::isfinite(lo[j]) || !std::isfinite(hi[j]))
                throw InvalidArgument("BoxDomain: need finite lo < hi in every coordinate");
    }

    double volume() const
    {
        double v = 1.0;
        for (std::size_t j = 0; j < lo.size(); ++j)
            v *= hi[j] - lo[j];
        return v;
    }

    bool contains(std::span<const double> w, double slack = 0.0) const
    {
        for (std::size_t j = 0; j < lo.size(); ++j)
            if (w[j] < lo[j] - slack || w[j] > hi[j] + slack)
                return false;
        return true;
    }

    bool contains_origin() const
    {
        std::vector<double> zero(lo.size(), 0.0);
        return contains(zero);
    }

    /// True when this box lies inside \p outer.
    bool inside(const BoxDomain& outer) const
    {
        if (outer.dim() != dim())
            return false;
        for (std::size_t j = 0; j < lo.size(); ++j)
            if (lo[j] < outer.lo[j] || hi[j] > outer.hi[j])
                return false;
        return true;
    }

    std::string to_string() const
    {
        std::ostringstream os;
        os.precision(17);
        for (std::size_t j = 0; j < lo.size(); ++j)
            os << (j ? "x" : "") << '[' << lo[j] << ',' << hi[j] << ']';
        return os.str();
    }

    friend bool operator==(const BoxDomain&, const BoxDomain&) = default;
};

struct GaussLegendre1d
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

///
/// q-point Gauss-Legendre rule on [-1, 1]. Nodes are roots of \f$P_q\f$
/// found by Newton iteration from Chebyshev-like initial guesses.
///
inline GaussLegendre1d gauss_legendre_1d(int q)
{
    if (q < 1 || q > 256)
        throw InvalidArgument("gauss_legendre_1d: q must lie in [1, 256], got " + std::to_string(q));
    GaussLegendre1d rule;
    rule.nodes.resize(static_cast<std::size_t>(q));
    rule.weights.resize(static_cast<std::size_t>(q));
    const int half = (q + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // three-term recurrence for P_q(x) and P_q'(x)
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= q; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pq = (q == 1) ? x : p1;
            const double pqm1 = (q == 1) ? 1.0 : p0;
            dp = q * (x * pq - pqm1) / (x * x - 1.0);
            const double dx = pq / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-15)
                break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= q; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double pqm1 = (q == 1) ? 1.0 : p0;
        const double pq = (q == 1) ? x : p1;
        dp = q * (x * pq - pqm1) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(q - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (q % 2 == 1)
        rule.nodes[static_cast<std::size_t>(q / 2)] = 0.0;
    return rule;
}

///
/// Tensor-product rule mapped onto a box: q^d nodes, one per row of
/// \c nodes.
///
struct QuadratureRule
{
    Matrix nodes;   ///< count x d
    Vector weights; ///< count
    int points_per_dim = 0;

    Eigen::Index size() const noexcept { return weights.size(); }
    std::span<const double> node(Eigen::Index k, std::vector<double>& buf) const
    {
        buf.resize(static_cast<std::size_t>(nodes.cols()));
        for (Eigen::Index j = 0; j < nodes.cols(); ++j)
            buf[static_cast<std::size_t>(j)] = nodes(k, j);
        return buf;
    }
};

inline QuadratureRule tensor_rule(const BoxDomain& domain, int q)
{
    domain.validate();
    const auto base = gauss_legendre_1d(q);
    const int d = domain.dim();
    Eigen::Index count = 1;
    for (int j = 0; j < d; ++j)
        count *= q;

    QuadratureRule rule;
    rule.points_per_dim = q;
    rule.nodes.resize(count, d);
    rule.weights.resize(count);
    std::vector<int> digit(static_cast<std::size_t>(d), 0);
    for (Eigen::Index k = 0; k < count; ++k) {
        double w = 1.0;
        for (int j = 0; j < d; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double half = 0.5 * (domain.hi[uj] - domain.lo[uj]);
            const double mid = 0.5 * (domain.hi[uj] + domain.lo[uj]);
            const auto t = static_cast<std::size_t>(digit[uj]);
            rule.nodes(k, j) = mid + half * base.nodes[t];
            w *= half * base.weights[t];
        }
        rule.weights(k) = w;
        // odometer, last coordinate fastest
        for (int j = d - 1; j >= 0; --j) {
            if (++digit[static_cast<std::size_t>(j)] < q)
                break;
            digit[static_cast<std::size_t>(j)] = 0;
        }
    }
    return rule;
}

///
/// \f$\sum_k w_k\, g(\omega_k)\f$. Throws NonFiniteValue naming the node
/// at which \p g was not finite.
///
template <class Fn>
double integrate(const QuadratureRule& rule, Fn&& g)
{
    std::vector<double> buf;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < rule.size(); ++k) {
        const auto w = rule.node(k, buf);
        const double v = g(w);
        if (!std::isfinite(v))
            throw NonFiniteValue("integrate: integrand is not finite at node " + std::to_string(k),
                                 std::vector<double>(w.begin(), w.end()));
        sum += rule.weights(k) * v;
    }
    return sum;
}

/// \f$\int_{lo}^{hi} t^e\,dt\f$
inline double interval_moment(double lo, double hi, int e)
{
    const double hp = std::pow(hi, e + 1);
    const double lp = std::pow(lo, e + 1);
    return (hp - lp) / (e + 1);
}

/// Closed-form \f$\int_\Omega \prod_j \omega_j^{e_j}\,d\omega\f$; zero exponents allowed.
inline double monomial_integral_exact(const BoxDomain& domain, std::span<const int> exps)
{
    if (static_cast<int>(exps.size()) != domain.dim())
        throw InvalidArgument("monomial_integral_exact: exponent/domain dimension mismatch");
    double v = 1.0;
    for (std::size_t j = 0; j < exps.size(); ++j) {
        if (exps[j] < 0)
            throw InvalidArgument("monomial_integral_exact: negative exponent");
        v *= interval_moment(domain.lo[j], domain.hi[j], exps[j]);
    }
    return v;
}

inline double monomial_integral_exact(const BoxDomain& domain, const std::vector<int>& exps)
{
    return monomial_integral_exact(domain, std::span<const int>(exps));
}

namespace detail {

// Table of one-dimensional moments m(j, e) = int_{lo_j}^{hi_j} t^e dt for
// e = 0..max_e, so products of monomials integrate by lookup.
class MomentTable
{
public:
    MomentTable(const BoxDomain& domain, int max_e) : table_(domain.dim(), max_e + 1)
    {
        for (int j = 0; j < domain.dim(); ++j)
            for (int e = 0; e <= max_e; ++e)
                table_(j, e) = interval_moment(domain.lo[static_cast<std::size_t>(j)],
                                               domain.hi[static_cast<std::size_t>(j)], e);
    }

    int max_exponent() const noexcept { return static_cast<int>(table_.cols()) - 1; }

    template <class Exps>
    double operator()(const Exps& e) const
    {
        double v = 1.0;
        for (Eigen::Index j = 0; j < table_.rows(); ++j)
            v *= table_(j, e[static_cast<std::size_t>(j)]);
        return v;
    }

private:
    Matrix table_;
};

} // namespace detail

} // namespace mmg
