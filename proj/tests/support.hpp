#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <random>

#include "mmg/problem.hpp"

namespace mmg::fixtures {

struct LinearCase
{
    Problem problem;
    Matrix S, L, A, B;
};

/// Random linear problem: skew S (d = 2), l = L w, stable A, f = A x + B u,
/// h = x_1. A is shifted so its spectral abscissa is at most -0.5.
inline LinearCase random_linear_problem(std::mt19937& rng, int n)
{
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_real_distribution<double> freq(0.5, 3.0);
    LinearCase lc;
    const double a = freq(rng);
    lc.S = Matrix{{0.0, a}, {-a, 0.0}};
    lc.L = Matrix{{U(rng), U(rng)}};
    lc.A = Matrix(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            lc.A(i, j) = U(rng);
    const double abscissa = eigenvalues_of(lc.A).real().maxCoeff();
    lc.A.diagonal().array() -= abscissa + 0.5;
    lc.B = Matrix(n, 1);
    for (int i = 0; i < n; ++i)
        lc.B(i, 0) = U(rng);

    auto lin = [](const Eigen::Ref<const Eigen::RowVectorXd>& row) {
        std::vector<Term> t;
        const int nv = static_cast<int>(row.size());
        for (int j = 0; j < nv; ++j)
            if (row(j) != 0.0)
                t.push_back({detail::unit_exps(nv, j), row(j)});
        return Polynomial(nv, std::move(t));
    };
    PolynomialProblemSpec spec;
    spec.name = "random-linear";
    spec.d = 2;
    spec.n = n;
    spec.m = 1;
    spec.p = 1;
    spec.s = {lin(lc.S.row(0)), lin(lc.S.row(1))};
    spec.ell = {lin(lc.L.row(0))};
    Matrix AB(n, n + 1);
    AB << lc.A, lc.B;
    for (int i = 0; i < n; ++i)
        spec.f.push_back(lin(AB.row(i)));
    spec.h = {Polynomial(n, {{detail::unit_exps(n, 0), 1.0}})};
    lc.problem = make_polynomial_problem(spec);
    return lc;
}

/// Closed-form Test 1 coefficients for a given a, laid out for the basis
/// of degree \p M in graded-lex order.
inline Vector test1_exact(double a, const Basis& basis)
{
    const auto N = static_cast<Eigen::Index>(basis.size());
    Vector c = Vector::Zero(2 * N);
    const double d1 = 1.0 + a * a;
    const double d2 = 1.0 + 5.0 * a * a + 4.0 * a * a * a * a;
    auto at = [&](std::vector<int> e) { return static_cast<Eigen::Index>(basis.find(e).value()); };
    c(at({1, 0})) = 1.0 / d1;
    c(at({0, 1})) = -a / d1;
    c(N + at({2, 0})) = (1.0 + a * a) / d2;
    c(N + at({1, 1})) = -3.0 * a / d2;
    c(N + at({0, 2})) = 3.0 * a * a / d2;
    return c;
}

} // namespace mmg::fixtures
