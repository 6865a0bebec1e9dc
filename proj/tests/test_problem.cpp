#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mmg/problem.hpp"

using namespace mmg;

namespace {

std::vector<Problem> builtins()
{
    return {make_test1(2.0),          make_cart_pendulum(2.0, 3.0, -2.0 / 3.0), make_rl_oscillator(2),
            make_rl_oscillator(5),    make_rl_vdp(2),                           make_rl_vdp(4, 1.1, 0.25)};
}

Vector random_vec(std::mt19937& rng, Eigen::Index n, double s = 0.8)
{
    std::uniform_real_distribution<double> U(-s, s);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = U(rng);
    return v;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h = 1e-6)
{
    const Vector f0 = f(x);
    Matrix J(f0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vector xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        J.col(j) = (f(xp) - f(xm)) / (2 * h);
    }
    return J;
}

void expect_close(const Matrix& a, const Matrix& b, double rel, const std::string& what)
{
    ASSERT_EQ(a.rows(), b.rows()) << what;
    ASSERT_EQ(a.cols(), b.cols()) << what;
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), rel * scale) << what;
}

} // namespace

TEST(Test1, Examples)
{
    const auto pb = make_test1(2.0);
    EXPECT_EQ(pb.generator.s(Vector{{1.0, 0.0}}), (Vector{{0.0, -2.0}}));
    EXPECT_EQ(pb.system.f(Vector::Zero(2), Vector{{1.0}}), (Vector{{1.0, 0.0}}));
    const auto lin = linearize(pb);
    EXPECT_TRUE(lin.A.isApprox(-Matrix::Identity(2, 2)));
}

TEST(Test1, RejectsNonPositiveA)
{
    EXPECT_THROW(make_test1(0.0), InvalidArgument);
}

TEST(CartPendulum, Examples)
{
    const auto pb = make_cart_pendulum(2.0, 3.0, -2.0 / 3.0);
    EXPECT_EQ(pb.generator.ell(Vector{{0.0, 0.37}})(0), 0.0);
    EXPECT_NEAR(pb.generator.s(Vector{{std::numbers::pi / 2, 0.0}})(1), 2.0, 1e-12);
}

TEST(CartPendulum, AnalyticalSolutionSatisfiesInvariance)
{
    // pi(w) = (w1, k w1, w2, k w2): d pi / dw s(w) = f(pi(w), l(w))
    const double k = -2.0 / 3.0;
    const auto pb = make_cart_pendulum(2.0, 3.0, k);
    std::mt19937 rng(11);
    for (int t = 0; t < 20; ++t) {
        const Vector w = random_vec(rng, 2, 1.0);
        const Vector x{{w(0), k * w(0), w(1), k * w(1)}};
        Matrix dpi = Matrix::Zero(4, 2);
        dpi(0, 0) = 1;
        dpi(1, 0) = k;
        dpi(2, 1) = 1;
        dpi(3, 1) = k;
        const Vector lhs = dpi * pb.generator.s(w);
        const Vector rhs = pb.system.f(x, pb.generator.ell(w));
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(CartPendulum, RejectsBadConstants)
{
    EXPECT_THROW(make_cart_pendulum(-1.0, 3.0, -2.0 / 3.0), InvalidArgument);
    EXPECT_THROW(make_cart_pendulum(2.0, 3.0, -0.1), InvalidArgument);
}

TEST(RlLadder, Examples)
{
    const auto pb = make_rl_oscillator(2, 1.1);
    const auto lin = linearize(pb);
    Matrix want(2, 2);
    want << -2.2, 1, 1, -2.2;
    EXPECT_TRUE(lin.A.isApprox(want, 1e-14));
    const auto ev = eigenvalues_of(lin.A);
    std::vector<double> re{ev(0).real(), ev(1).real()};
    std::sort(re.begin(), re.end());
    EXPECT_NEAR(re[0], -3.2, 1e-12);
    EXPECT_NEAR(re[1], -1.2, 1e-12);

    const auto pb5 = make_rl_oscillator(5, 1.1);
    Vector e = pb5.system.f(Vector::Zero(5), Vector{{1.0}});
    EXPECT_EQ(e, (Vector{{1, 0, 0, 0, 0}}));
    Vector x = Vector::Zero(5);
    x(0) = 1.0;
    EXPECT_NEAR(pb5.system.f(x, Vector::Zero(1))(0), -2 * 1.1 - 0.5 - 1.0 / 3.0, 1e-14);
}

TEST(RlLadder, ChainTagAndKappa)
{
    const auto pb = make_rl_ladder(3, 1.1);
    EXPECT_EQ(pb.structure, StructureTag::chain_cubic);
    EXPECT_DOUBLE_EQ(pb.chain_kappa, 1.1);
    EXPECT_THROW(make_rl_ladder(0, 1.1), InvalidArgument);
}

TEST(Generators, Examples)
{
    const auto osc = make_linear_oscillator(2.0);
    EXPECT_TRUE(osc.s(Vector{{0.1, 0.2}}).isApprox(Vector{{0.4, -0.2}}, 1e-15));
    const auto vdp = make_van_der_pol(0.25);
    EXPECT_TRUE(vdp.s(Vector{{0.0, 1.0}}).isApprox(Vector{{1.0, 0.25}}, 1e-15));
    EXPECT_TRUE(osc.s(Vector::Zero(2)).isZero(0.0));
    EXPECT_TRUE(vdp.s(Vector::Zero(2)).isZero(0.0));
}

TEST(Linearize, OscillatorSpectrum)
{
    const auto lin = linearize(make_rl_oscillator(2, 1.1, 2.0));
    Matrix S(2, 2);
    S << 0, 2, -2, 0;
    EXPECT_TRUE(lin.S.isApprox(S));
    const auto ev = eigenvalues_of(lin.S);
    EXPECT_NEAR(std::abs(ev(0).real()), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(ev(0).imag()), 2.0, 1e-14);
}

TEST(Assumptions, LadderA2)
{
    EXPECT_TRUE(check_assumptions(make_rl_oscillator(100, 1.1)).a2);
    EXPECT_TRUE(check_assumptions(make_rl_oscillator(10, 1.1)).a2);
    EXPECT_FALSE(check_assumptions(make_rl_oscillator(100, 0.9)).a2);
}

TEST(Assumptions, OscillatorA1AndVdpNote)
{
    EXPECT_TRUE(check_assumptions(make_rl_oscillator(2)).a1_necessary);
    const auto rep = check_assumptions(make_rl_vdp(2, 1.1, 0.25));
    EXPECT_FALSE(rep.a1_necessary);
    EXPECT_TRUE(rep.a2);
    EXPECT_NEAR(rep.eig_S(0).real(), 0.125, 1e-12);
    EXPECT_FALSE(rep.details.empty());
}

TEST(Jacobians, MatchFiniteDifferencesOnBuiltins)
{
    std::mt19937 rng(5);
    for (const auto& pb : builtins()) {
        for (int t = 0; t < 5; ++t) {
            const Vector w = random_vec(rng, pb.generator.d);
            const Vector x = random_vec(rng, pb.system.n);
            const Vector u = random_vec(rng, pb.system.m);
            expect_close(pb.generator.s_jacobian(w), fd_jacobian(pb.generator.s, w), 1e-5, pb.name + " ds");
            expect_close(pb.generator.ell_jacobian(w), fd_jacobian(pb.generator.ell, w), 1e-5, pb.name + " dl");
            expect_close(pb.system.f_jacobian_x(x, u),
                         fd_jacobian([&](const Vector& z) { return pb.system.f(z, u); }, x), 1e-5,
                         pb.name + " df/dx");
            expect_close(pb.system.f_jacobian_u(x, u),
                         fd_jacobian([&](const Vector& z) { return pb.system.f(x, z); }, u), 1e-5,
                         pb.name + " df/du");
        }
    }
}

TEST(PolynomialProblem, GenericMatchesBuiltinLadder)
{
    // RL ladder n=2 written out term by term.
    const double k = 1.1;
    auto P = [](int nv, std::vector<std::pair<std::vector<int>, double>> t) { return detail::monomial_poly(nv, t); };
    PolynomialProblemSpec spec;
    spec.name = "ladder2";
    spec.d = 2;
    spec.n = 2;
    spec.m = 1;
    spec.p = 1;
    spec.s = {P(2, {{{0, 1}, 2.0}}), P(2, {{{1, 0}, -2.0}})};
    spec.ell = {P(2, {{{0, 1}, 1.0}})};
    spec.f = {P(3, {{{1, 0, 0}, -2 * k},
                    {{2, 0, 0}, -0.5},
                    {{3, 0, 0}, -1.0 / 3},
                    {{0, 1, 0}, 1.0},
                    {{0, 0, 1}, 1.0}}),
              P(3, {{{0, 1, 0}, -2 * k}, {{1, 0, 0}, 1.0}, {{0, 2, 0}, -0.5}, {{0, 3, 0}, -1.0 / 3}})};
    spec.h = {P(2, {{{1, 0}, 1.0}})};
    const auto gen = make_polynomial_problem(spec);
    const auto ref = make_rl_oscillator(2, k, 2.0);
    std::mt19937 rng(9);
    for (int t = 0; t < 20; ++t) {
        const Vector x = random_vec(rng, 2);
        const Vector u = random_vec(rng, 1);
        const Vector w = random_vec(rng, 2);
        EXPECT_LT((gen.system.f(x, u) - ref.system.f(x, u)).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((gen.generator.s(w) - ref.generator.s(w)).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((gen.generator.ell(w) - ref.generator.ell(w)).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((gen.system.f_jacobian_x(x, u) - ref.system.f_jacobian_x(x, u)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(PolynomialProblem, RejectsConstantTermsAndBadDims)
{
    auto P = [](int nv, std::vector<std::pair<std::vector<int>, double>> t) { return detail::monomial_poly(nv, t); };
    PolynomialProblemSpec spec;
    spec.d = 1;
    spec.n = 1;
    spec.m = 1;
    spec.p = 1;
    spec.s = {P(1, {{{1}, 0.0}})};
    spec.ell = {P(1, {{{1}, 1.0}})};
    spec.f = {P(2, {{{1, 0}, -1.0}, {{0, 0}, 0.5}})};
    spec.h = {P(1, {{{1}, 1.0}})};
    EXPECT_THROW(make_polynomial_problem(spec), InvalidArgument);
    spec.f = {P(2, {{{1, 0}, -1.0}})};
    spec.n = 2;
    EXPECT_THROW(make_polynomial_problem(spec), InvalidArgument);
}
