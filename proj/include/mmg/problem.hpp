#pragma once

///
/// \file problem.hpp
///
/// Problem data for the interconnection of a signal generator
///   w' = s(w),  v = l(w)
/// with a full-order system
///   x' = f(x, u),  y = h(x)
/// under u = v, together with the built-in benchmark problems.
///

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "mmg/errors.hpp"
#include "mmg/polybasis.hpp"
#include "mmg/polynomial.hpp"

namespace mmg {

enum class StructureTag
{
    generic,
    /// Tridiagonal linear coupling, componentwise -(x^2/2 + x^3/3)
    /// nonlinearity and a scalar input entering the first equation.
    chain_cubic,
};

struct SignalGenerator
{
    int d = 0;
    int m = 0;
    std::function<Vector(const Vector&)> s;
    std::function<Vector(const Vector&)> ell;
    std::function<Matrix(const Vector&)> s_jacobian;
    std::function<Matrix(const Vector&)> ell_jacobian;
    /// Present when s and l are polynomial; enables exact integration.
    std::optional<PolynomialMap> s_poly;
    std::optional<PolynomialMap> ell_poly;

    bool is_polynomial() const { return s_poly.has_value() && ell_poly.has_value(); }
};

struct FullOrderSystem
{
    int n = 0;
    int m = 0;
    int p = 0;
    std::function<Vector(const Vector& x, const Vector& u)> f;
    std::function<Vector(const Vector& x)> h;
    std::function<Matrix(const Vector& x, const Vector& u)> f_jacobian_x;
    std::function<Matrix(const Vector& x, const Vector& u)> f_jacobian_u;
    StructureTag structure = StructureTag::generic;
    double chain_kappa = 0.0; ///< meaningful for chain_cubic only
    std::optional<PolynomialMap> f_poly; ///< over (x, u), n + m variables
    std::optional<PolynomialMap> h_poly; ///< over x
};

struct Problem
{
    std::string name;
    SignalGenerator generator;
    FullOrderSystem system;
    std::map<std::string, double> params;

    int d() const noexcept { return generator.d; }
    int n() const noexcept { return system.n; }

    void validate() const
    {
        if (generator.d < 1 || system.n < 1)
            throw InvalidArgument("Problem: dimensions d and n must be positive");
        if (generator.m != system.m)
            throw InvalidArgument("Problem: generator output dimension " +
                                  std::to_string(generator.m) +
                                  " does not match system input dimension " +
                                  std::to_string(system.m));
        if (!generator.s || !generator.ell || !generator.s_jacobian || !generator.ell_jacobian ||
            !system.f || !system.h || !system.f_jacobian_x || !system.f_jacobian_u)
            throw InvalidArgument("Problem: all dynamics callables must be set");
        if (system.structure == StructureTag::chain_cubic && system.m != 1)
            throw InvalidArgument("Problem: chain_cubic structure requires a scalar input");
        const Vector w0 = Vector::Zero(generator.d);
        const Vector x0 = Vector::Zero(system.n);
        const Vector u0 = Vector::Zero(system.m);
        if (!generator.s(w0).isZero(0.0) || !generator.ell(w0).isZero(0.0))
            throw InvalidArgument("Problem: s(0) and l(0) must vanish");
        if (!system.f(x0, u0).isZero(0.0) || !system.h(x0).isZero(0.0))
            throw InvalidArgument("Problem: f(0, 0) and h(0) must vanish");
    }
};

namespace detail {

inline Vector eval_map(const PolynomialMap& map, std::span<const double> x)
{
    Vector out(static_cast<Eigen::Index>(map.size()));
    for (std::size_t i = 0; i < map.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = map[i](x);
    return out;
}

inline std::span<const double> as_span(const Vector& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// jac[i][j] = d map_i / d var_j
inline std::vector<PolynomialMap> jacobian_map(const PolynomialMap& map, int nvars)
{
    std::vector<PolynomialMap> jac(map.size());
    for (std::size_t i = 0; i < map.size(); ++i)
        for (int j = 0; j < nvars; ++j)
            jac[i].push_back(map[i].derivative(j));
    return jac;
}

inline Matrix eval_jacobian(const std::vector<PolynomialMap>& jac, std::span<const double> x,
                            int col_offset, int ncols)
{
    Matrix out(static_cast<Eigen::Index>(jac.size()), ncols);
    for (std::size_t i = 0; i < jac.size(); ++i)
        for (int j = 0; j < ncols; ++j)
            out(static_cast<Eigen::Index>(i), j) =
                jac[i][static_cast<std::size_t>(col_offset + j)](x);
    return out;
}

inline Polynomial monomial_poly(int nvars, std::vector<std::pair<std::vector<int>, double>> terms)
{
    std::vector<Term> t;
    for (auto& [e, c] : terms)
        t.push_back(Term{std::move(e), c});
    return Polynomial(nvars, std::move(t));
}

inline std::vector<int> unit_exps(int nvars, int var, int power = 1)
{
    std::vector<int> e(static_cast<std::size_t>(nvars), 0);
    e[static_cast<std::size_t>(var)] = power;
    return e;
}

} // namespace detail

///
/// Coefficient-table description of a fully polynomial problem.
/// \c s and \c ell are over w (d variables), \c f over (x, u) (n + m
/// variables), \c h over x.
///
struct PolynomialProblemSpec
{
    std::string name = "generic";
    int d = 0;
    int n = 0;
    int m = 0;
    int p = 0;
    PolynomialMap s;
    PolynomialMap ell;
    PolynomialMap f;
    PolynomialMap h;
};

inline SignalGenerator make_polynomial_generator(int d, int m, PolynomialMap s, PolynomialMap ell)
{
    if (static_cast<int>(s.size()) != d || static_cast<int>(ell.size()) != m)
        throw InvalidArgument("polynomial generator: s must have d components and l must have m");
    for (const auto& p : s)
        if (p.nvars() != d)
            throw InvalidArgument("polynomial generator: s components must have d variables");
    for (const auto& p : ell)
        if (p.nvars() != d)
            throw InvalidArgument("polynomial generator: l components must have d variables");

    SignalGenerator g;
    g.d = d;
    g.m = m;
    auto sj = detail::jacobian_map(s, d);
    auto lj = detail::jacobian_map(ell, d);
    g.s = [s](const Vector& w) { return detail::eval_map(s, detail::as_span(w)); };
    g.ell = [ell](const Vector& w) { return detail::eval_map(ell, detail::as_span(w)); };
    g.s_jacobian = [sj, d](const Vector& w) {
        return detail::eval_jacobian(sj, detail::as_span(w), 0, d);
    };
    g.ell_jacobian = [lj, d](const Vector& w) {
        return detail::eval_jacobian(lj, detail::as_span(w), 0, d);
    };
    g.s_poly = std::move(s);
    g.ell_poly = std::move(ell);
    return g;
}

inline FullOrderSystem make_polynomial_system(int n, int m, int p, PolynomialMap f, PolynomialMap h)
{
    if (static_cast<int>(f.size()) != n || static_cast<int>(h.size()) != p)
        throw InvalidArgument("polynomial system: f must have n components and h must have p");
    for (const auto& q : f)
        if (q.nvars() != n + m)
            throw InvalidArgument("polynomial system: f components must have n + m variables");
    for (const auto& q : h)
        if (q.nvars() != n)
            throw InvalidArgument("polynomial system: h components must have n variables");

    FullOrderSystem sys;
    sys.n = n;
    sys.m = m;
    sys.p = p;
    auto fj = detail::jacobian_map(f, n + m);
    auto join = [n, m](const Vector& x, const Vector& u) {
        std::vector<double> xu(static_cast<std::size_t>(n + m));
        for (int i = 0; i < n; ++i)
            xu[static_cast<std::size_t>(i)] = x(i);
        for (int i = 0; i < m; ++i)
            xu[static_cast<std::size_t>(n + i)] = u(i);
        return xu;
    };
    sys.f = [f, join](const Vector& x, const Vector& u) {
        const auto xu = join(x, u);
        return detail::eval_map(f, xu);
    };
    sys.h = [h](const Vector& x) { return detail::eval_map(h, detail::as_span(x)); };
    sys.f_jacobian_x = [fj, join, n](const Vector& x, const Vector& u) {
        const auto xu = join(x, u);
        return detail::eval_jacobian(fj, xu, 0, n);
    };
    sys.f_jacobian_u = [fj, join, n, m](const Vector& x, const Vector& u) {
        const auto xu = join(x, u);
        return detail::eval_jacobian(fj, xu, n, m);
    };
    sys.f_poly = std::move(f);
    sys.h_poly = std::move(h);
    return sys;
}

inline Problem make_polynomial_problem(const PolynomialProblemSpec& spec)
{
    Problem pb;
    pb.name = spec.name;
    pb.generator = make_polynomial_generator(spec.d, spec.m, spec.s, spec.ell);
    pb.system = make_polynomial_system(spec.n, spec.m, spec.p, spec.f, spec.h);
    pb.validate();
    return pb;
}

/// Coefficient tables of a problem whose data are all polynomial.
inline std::optional<PolynomialProblemSpec> polynomial_tables(const Problem& pb)
{
    if (!pb.generator.is_polynomial() || !pb.system.f_poly || !pb.system.h_poly)
        return std::nullopt;
    PolynomialProblemSpec spec;
    spec.name = pb.name;
    spec.d = pb.generator.d;
    spec.n = pb.system.n;
    spec.m = pb.system.m;
    spec.p = pb.system.p;
    spec.s = *pb.generator.s_poly;
    spec.ell = *pb.generator.ell_poly;
    spec.f = *pb.system.f_poly;
    spec.h = *pb.system.h_poly;
    return spec;
}

//
// Built-in signal generators
//

/// w' = (a w2, -a w1), v = w2.
inline SignalGenerator make_linear_oscillator(double a = 2.0)
{
    if (a == 0.0 || !std::isfinite(a))
        throw InvalidArgument("linear oscillator: a must be finite and nonzero");
    using detail::monomial_poly;
    PolynomialMap s{monomial_poly(2, {{{0, 1}, a}}), monomial_poly(2, {{{1, 0}, -a}})};
    PolynomialMap ell{monomial_poly(2, {{{0, 1}, 1.0}})};
    SignalGenerator g;
    g.d = 2;
    g.m = 1;
    g.s = [a](const Vector& w) { return Vector{{a * w(1), -a * w(0)}}; };
    g.ell = [](const Vector& w) { return Vector{{w(1)}}; };
    g.s_jacobian = [a](const Vector&) { return Matrix{{0.0, a}, {-a, 0.0}}; };
    g.ell_jacobian = [](const Vector&) { return Matrix{{0.0, 1.0}}; };
    g.s_poly = std::move(s);
    g.ell_poly = std::move(ell);
    return g;
}

/// Van der Pol: w' = (w2, -w1 + mu (1 - w1^2) w2), v = w2.
inline SignalGenerator make_van_der_pol(double mu = 0.25)
{
    if (!(mu > 0.0) || !std::isfinite(mu))
        throw InvalidArgument("Van der Pol generator: mu must be positive");
    using detail::monomial_poly;
    PolynomialMap s{monomial_poly(2, {{{0, 1}, 1.0}}),
                    monomial_poly(2, {{{1, 0}, -1.0}, {{0, 1}, mu}, {{2, 1}, -mu}})};
    PolynomialMap ell{monomial_poly(2, {{{0, 1}, 1.0}})};
    SignalGenerator g;
    g.d = 2;
    g.m = 1;
    g.s = [mu](const Vector& w) {
        return Vector{{w(1), -w(0) + mu * (1.0 - w(0) * w(0)) * w(1)}};
    };
    g.ell = [](const Vector& w) { return Vector{{w(1)}}; };
    g.s_jacobian = [mu](const Vector& w) {
        return Matrix{{0.0, 1.0}, {-1.0 - 2.0 * mu * w(0) * w(1), mu * (1.0 - w(0) * w(0))}};
    };
    g.ell_jacobian = [](const Vector&) { return Matrix{{0.0, 1.0}}; };
    g.s_poly = std::move(s);
    g.ell_poly = std::move(ell);
    return g;
}

//
// Built-in full-order systems and problems
//

///
/// Nonlinear RL ladder of \p n sections:
///   x_i' = -2 kappa x_i + x_{i-1} + x_{i+1} - (x_i^2/2 + x_i^3/3) + [i = 1] u,
///   y = x_1.
///
inline FullOrderSystem make_rl_ladder(int n, double kappa = 1.1)
{
    if (n < 2)
        throw InvalidArgument("RL ladder: n must be >= 2");
    if (!std::isfinite(kappa))
        throw InvalidArgument("RL ladder: kappa must be finite");

    FullOrderSystem sys;
    sys.n = n;
    sys.m = 1;
    sys.p = 1;
    sys.structure = StructureTag::chain_cubic;
    sys.chain_kappa = kappa;
    sys.f = [n, kappa](const Vector& x, const Vector& u) {
        Vector dx(n);
        for (int i = 0; i < n; ++i) {
            const double xi = x(i);
            double v = -2.0 * kappa * xi - (0.5 * xi * xi + xi * xi * xi / 3.0);
            if (i > 0)
                v += x(i - 1);
            if (i + 1 < n)
                v += x(i + 1);
            dx(i) = v;
        }
        dx(0) += u(0);
        return dx;
    };
    sys.h = [](const Vector& x) { return Vector{{x(0)}}; };
    sys.f_jacobian_x = [n, kappa](const Vector& x, const Vector&) {
        Matrix J = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            J(i, i) = -2.0 * kappa - x(i) - x(i) * x(i);
            if (i > 0)
                J(i, i - 1) = 1.0;
            if (i + 1 < n)
                J(i, i + 1) = 1.0;
        }
        return J;
    };
    sys.f_jacobian_u = [n](const Vector&, const Vector&) {
        Matrix B = Matrix::Zero(n, 1);
        B(0, 0) = 1.0;
        return B;
    };

    PolynomialMap f;
    const int nv = n + 1;
    for (int i = 0; i < n; ++i) {
        std::vector<Term> t;
        t.push_back({detail::unit_exps(nv, i), -2.0 * kappa});
        t.push_back({detail::unit_exps(nv, i, 2), -0.5});
        t.push_back({detail::unit_exps(nv, i, 3), -1.0 / 3.0});
        if (i > 0)
            t.push_back({detail::unit_exps(nv, i - 1), 1.0});
        if (i + 1 < n)
            t.push_back({detail::unit_exps(nv, i + 1), 1.0});
        if (i == 0)
            t.push_back({detail::unit_exps(nv, n), 1.0});
        f.emplace_back(nv, std::move(t));
    }
    sys.f_poly = std::move(f);
    sys.h_poly = PolynomialMap{Polynomial(n, {{detail::unit_exps(n, 0), 1.0}})};
    return sys;
}

/// Isidori's example: s = a (w2, -w1), l = w1, f = (-x1 + u, -x2 + x1 u), h = x1.
inline Problem make_test1(double a = 2.0)
{
    if (a == 0.0 || !std::isfinite(a))
        throw InvalidArgument("test1: a must be finite and nonzero");
    using detail::monomial_poly;

    Problem pb;
    pb.name = "test1";
    pb.params = {{"a", a}};

    auto& g = pb.generator;
    g.d = 2;
    g.m = 1;
    g.s = [a](const Vector& w) { return Vector{{a * w(1), -a * w(0)}}; };
    g.ell = [](const Vector& w) { return Vector{{w(0)}}; };
    g.s_jacobian = [a](const Vector&) { return Matrix{{0.0, a}, {-a, 0.0}}; };
    g.ell_jacobian = [](const Vector&) { return Matrix{{1.0, 0.0}}; };
    g.s_poly = PolynomialMap{monomial_poly(2, {{{0, 1}, a}}), monomial_poly(2, {{{1, 0}, -a}})};
    g.ell_poly = PolynomialMap{monomial_poly(2, {{{1, 0}, 1.0}})};

    auto& sys = pb.system;
    sys.n = 2;
    sys.m = 1;
    sys.p = 1;
    sys.f = [](const Vector& x, const Vector& u) {
        return Vector{{-x(0) + u(0), -x(1) + x(0) * u(0)}};
    };
    sys.h = [](const Vector& x) { return Vector{{x(0)}}; };
    sys.f_jacobian_x = [](const Vector&, const Vector& u) {
        return Matrix{{-1.0, 0.0}, {u(0), -1.0}};
    };
    sys.f_jacobian_u = [](const Vector& x, const Vector&) { return Matrix{{1.0}, {x(0)}}; };
    // variables (x1, x2, u)
    sys.f_poly = PolynomialMap{monomial_poly(3, {{{1, 0, 0}, -1.0}, {{0, 0, 1}, 1.0}}),
                               monomial_poly(3, {{{0, 1, 0}, -1.0}, {{1, 0, 1}, 1.0}})};
    sys.h_poly = PolynomialMap{monomial_poly(2, {{{1, 0}, 1.0}})};
    pb.validate();
    return pb;
}

///
/// Cart pendulum position control. Transcendental; no polynomial form.
///
inline Problem make_cart_pendulum(double a1 = 2.0, double a2 = 3.0, double k = -2.0 / 3.0)
{
    if (!(a1 > 0.0) || !(a2 > 0.0))
        throw InvalidArgument("cart pendulum: a1 and a2 must be positive");
    if (!(k < -1.0 / a2))
        throw InvalidArgument("cart pendulum: k must satisfy k < -1/a2");

    Problem pb;
    pb.name = "cart-pendulum";
    pb.params = {{"a1", a1}, {"a2", a2}, {"k", k}};

    auto& g = pb.generator;
    g.d = 2;
    g.m = 1;
    // s2 = a1 sin(w1) / (1 + k a2 cos(w1)),  l = k s2
    g.s = [a1, a2, k](const Vector& w) {
        const double den = 1.0 + k * a2 * std::cos(w(0));
        return Vector{{w(1), a1 * std::sin(w(0)) / den}};
    };
    g.ell = [a1, a2, k](const Vector& w) {
        const double den = 1.0 + k * a2 * std::cos(w(0));
        return Vector{{k * a1 * std::sin(w(0)) / den}};
    };
    auto dg = [a1, a2, k](double w1) {
        const double den = 1.0 + k * a2 * std::cos(w1);
        return a1 * (std::cos(w1) + k * a2) / (den * den);
    };
    g.s_jacobian = [dg](const Vector& w) { return Matrix{{0.0, 1.0}, {dg(w(0)), 0.0}}; };
    g.ell_jacobian = [dg, k](const Vector& w) { return Matrix{{k * dg(w(0)), 0.0}}; };

    auto& sys = pb.system;
    sys.n = 4;
    sys.m = 1;
    sys.p = 1;
    sys.f = [a1, a2](const Vector& x, const Vector& u) {
        return Vector{{x(2), x(3), a1 * std::sin(x(0)) - a2 * std::cos(x(0)) * u(0), u(0)}};
    };
    sys.h = [](const Vector& x) { return Vector{{x(0)}}; };
    sys.f_jacobian_x = [a1, a2](const Vector& x, const Vector& u) {
        Matrix J = Matrix::Zero(4, 4);
        J(0, 2) = 1.0;
        J(1, 3) = 1.0;
        J(2, 0) = a1 * std::cos(x(0)) + a2 * std::sin(x(0)) * u(0);
        return J;
    };
    sys.f_jacobian_u = [a2](const Vector& x, const Vector&) {
        return Matrix{{0.0}, {0.0}, {-a2 * std::cos(x(0))}, {1.0}};
    };
    pb.validate();
    return pb;
}

/// RL ladder driven by the linear oscillator.
inline Problem make_rl_oscillator(int n, double kappa = 1.1, double a = 2.0)
{
    Problem pb;
    pb.name = "rl-linear";
    pb.params = {{"n", n}, {"kappa", kappa}, {"a", a}};
    pb.generator = make_linear_oscillator(a);
    pb.system = make_rl_ladder(n, kappa);
    pb.validate();
    return pb;
}

/// RL ladder driven by the Van der Pol oscillator.
inline Problem make_rl_vdp(int n, double kappa = 1.1, double mu = 0.25)
{
    Problem pb;
    pb.name = "rl-vdp";
    pb.params = {{"n", n}, {"kappa", kappa}, {"mu", mu}};
    pb.generator = make_van_der_pol(mu);
    pb.system = make_rl_ladder(n, kappa);
    pb.validate();
    return pb;
}

//
// Linearization and assumption checks
//

struct Linearization
{
    Matrix S; ///< d x d, ds/dw at 0
    Matrix L; ///< m x d, dl/dw at 0
    Matrix A; ///< n x n, df/dx at (0, 0)
    Matrix B; ///< n x m, df/du at (0, 0)
};

inline Linearization linearize(const Problem& pb)
{
    const Vector w0 = Vector::Zero(pb.generator.d);
    const Vector x0 = Vector::Zero(pb.system.n);
    const Vector u0 = Vector::Zero(pb.system.m);
    return {pb.generator.s_jacobian(w0), pb.generator.ell_jacobian(w0),
            pb.system.f_jacobian_x(x0, u0), pb.system.f_jacobian_u(x0, u0)};
}

using ComplexVector = Eigen::VectorXcd;

inline ComplexVector eigenvalues_of(const Matrix& m)
{
    if (m.rows() == 0)
        return {};
    if (m.isApprox(m.transpose(), 0.0)) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cast<std::complex<double>>();
    }
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues();
}

struct AssumptionReport
{
    bool a1_necessary = false; ///< spectrum of S purely imaginary and simple
    bool a2 = false;           ///< A_sys Hurwitz
    ComplexVector eig_S;
    ComplexVector eig_A;
    std::string details;
};

inline AssumptionReport check_assumptions(const Problem& pb, double imag_tol = 1e-9)
{
    const auto lin = linearize(pb);
    AssumptionReport rep;
    rep.eig_S = eigenvalues_of(lin.S);
    rep.eig_A = eigenvalues_of(lin.A);

    bool imaginary = true;
    bool simple = true;
    for (Eigen::Index i = 0; i < rep.eig_S.size(); ++i) {
        if (std::abs(rep.eig_S(i).real()) > imag_tol)
            imaginary = false;
        for (Eigen::Index j = i + 1; j < rep.eig_S.size(); ++j)
            if (std::abs(rep.eig_S(i) - rep.eig_S(j)) <= imag_tol)
                simple = false;
    }
    rep.a1_necessary = imaginary && simple;

    double max_re = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < rep.eig_A.size(); ++i)
        max_re = std::max(max_re, rep.eig_A(i).real());
    rep.a2 = max_re < 0.0;

    std::ostringstream os;
    os.precision(6);
    os << "generator: spectrum of S is " << (imaginary ? "" : "not ") << "purely imaginary";
    if (!simple)
        os << " and has repeated eigenvalues";
    os << "; system: max real part of eig(A) = " << max_re;
    if (!rep.a1_necessary)
        os << ". The neutral-stability necessary condition fails at the linear level; the"
              " solver can still be run but the invariant manifold is not guaranteed.";
    rep.details = os.str();
    return rep;
}

} // namespace mmg
