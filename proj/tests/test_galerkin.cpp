#include <gtest/gtest.h>

#include <random>
#include <string>
#include <string_view>

#include "mmg/galerkin.hpp"

using namespace mmg;

namespace {

Vector random_vec(std::mt19937& rng, Eigen::Index n, double s)
{
    std::uniform_real_distribution<double> U(-s, s);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = U(rng);
    return v;
}

GalerkinOperators ops_for(const Problem& pb, int M, double h = 1.0,
                          AssemblyOptions::Tensors t = AssemblyOptions::Tensors::automatic)
{
    AssemblyOptions o;
    o.tensors = t;
    return assemble_operators(pb, generate_basis(pb.generator.d, M), BoxDomain::symmetric(pb.generator.d, h), 0,
                              o);
}

double max_rel(const Matrix& a, const Matrix& b)
{
    const double scale = std::max(1e-300, b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Test 1 closed form with a = 2 in graded-lex order at M = 2.
Vector test1_exact(Eigen::Index N)
{
    Vector c = Vector::Zero(2 * N);
    c(0) = 0.2;
    c(1) = -0.4;
    c(N + 2) = 5.0 / 85.0;
    c(N + 3) = -6.0 / 85.0;
    c(N + 4) = 12.0 / 85.0;
    return c;
}

} // namespace

TEST(Assembly, MassMatrixDegreeOne)
{
    const auto ops = ops_for(make_test1(), 1);
    Matrix want = Matrix::Zero(2, 2);
    want.diagonal().setConstant(4.0 / 3.0);
    EXPECT_LT((ops.mass - want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Assembly, OscillatorAEntryAndGamma)
{
    const double a = 2.0;
    const auto ops = ops_for(make_rl_oscillator(2, 1.1, a), 1);
    // phi_j = w1, phi_i = w2: <(d w1/dw) s, w2> = <a w2, w2> = 4a/3
    EXPECT_NEAR(ops.A(1, 0), 4.0 * a / 3.0, 1e-14);
    ASSERT_EQ(ops.gamma.rows(), 2);
    ASSERT_EQ(ops.gamma.cols(), 1);
    EXPECT_NEAR(ops.gamma(1, 0), 4.0 / 3.0, 1e-14);
    EXPECT_NEAR(ops.gamma(0, 0), 0.0, 1e-14);
}

TEST(Assembly, ExactAndQuadratureLinearTermsAgree)
{
    // Van der Pol generator is polynomial; the cart pendulum is not.
    const auto pb = make_rl_vdp(2);
    const auto basis = generate_basis(2, 4);
    const auto box = BoxDomain::symmetric(2, 1.5);
    const auto exact = assemble_operators(pb, basis, box, 0);
    EXPECT_TRUE(exact.exact_linear_terms);

    auto pb_q = pb;
    pb_q.generator.s_poly.reset();
    pb_q.generator.ell_poly.reset();
    const auto quad = assemble_operators(pb_q, basis, box, 20);
    EXPECT_FALSE(quad.exact_linear_terms);
    EXPECT_LT(max_rel(quad.A, exact.A), 1e-12);
    EXPECT_LT(max_rel(quad.gamma, exact.gamma), 1e-12);
    EXPECT_LT(max_rel(quad.mass, exact.mass), 1e-12);
}

TEST(Assembly, WarnsOnDomainWithoutOrigin)
{
    const auto pb = make_test1();
    std::string seen;
    set_warning_handler([&](std::string_view m) { seen = m; });
    assemble_operators(pb, generate_basis(2, 2), BoxDomain({0.5, 0.5}, {1.0, 1.0}), 0);
    set_warning_handler(nullptr);
    EXPECT_NE(seen.find("origin"), std::string::npos);
}

TEST(ResidualF, Test1ExactCoefficientsVanish)
{
    const auto pb = make_test1(2.0);
    const auto ops = ops_for(pb, 2);
    const Vector F = residual_F(pb, ops, test1_exact(ops.size()));
    EXPECT_LE(F.lpNorm<1>(), 1e-12);
}

TEST(ResidualF, Test1AtZero)
{
    const auto pb = make_test1(2.0);
    const auto ops = ops_for(pb, 3);
    const auto N = ops.size();
    const Vector F = residual_F(pb, ops, Vector::Zero(2 * N));
    EXPECT_LT((F.head(N) + ops.gamma.col(0)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_TRUE(F.tail(N).isZero(1e-15));
}

TEST(ResidualF, RejectsWrongLengthAndNonFinite)
{
    const auto pb = make_test1();
    const auto ops = ops_for(pb, 2);
    EXPECT_THROW(residual_F(pb, ops, Vector::Zero(7)), InvalidArgument);
    Vector c = Vector::Zero(10);
    c(3) = std::nan("");
    EXPECT_THROW(residual_F(pb, ops, c), NonFiniteValue);
}

TEST(JacobianJF, Test1BlockStructure)
{
    const auto pb = make_test1(2.0);
    const auto ops = ops_for(pb, 3);
    const auto N = ops.size();
    std::mt19937 rng(1);
    const Matrix J = to_dense(jacobian_JF(pb, ops, random_vec(rng, 2 * N, 0.5)));
    const Matrix AM = ops.A + ops.mass;
    EXPECT_LT((J.topLeftCorner(N, N) - AM).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((J.bottomRightCorner(N, N) - AM).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_TRUE(J.topRightCorner(N, N).isZero(1e-14));
    EXPECT_LT((J.bottomLeftCorner(N, N) + ops.P).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(JacobianJF, MatchesFiniteDifferences)
{
    std::mt19937 rng(2);
    const std::vector<Problem> problems{make_test1(), make_cart_pendulum(), make_rl_oscillator(2),
                                        make_rl_vdp(3)};
    for (const auto& pb : problems) {
        for (auto mode : {AssemblyOptions::Tensors::automatic, AssemblyOptions::Tensors::never}) {
            const auto ops = ops_for(pb, 3, 1.0, mode);
            const Vector c = random_vec(rng, ops.size() * pb.system.n, 0.3);
            const Matrix J = to_dense(jacobian_JF(pb, ops, c));
            const double h = 1e-6;
            Matrix fd(J.rows(), J.cols());
            for (Eigen::Index j = 0; j < c.size(); ++j) {
                Vector cp = c, cm = c;
                cp(j) += h;
                cm(j) -= h;
                fd.col(j) = (residual_F(pb, ops, cp) - residual_F(pb, ops, cm)) / (2 * h);
            }
            EXPECT_LT(max_rel(J, fd), 1e-6) << pb.name;
        }
    }
}

TEST(ChainPath, TridiagonalSparsity)
{
    const auto pb = make_rl_oscillator(3);
    const auto ops = ops_for(pb, 2);
    ASSERT_TRUE(uses_chain_path(pb, ops));
    std::mt19937 rng(3);
    const auto J = jacobian_JF(pb, ops, random_vec(rng, 3 * ops.size(), 0.5));
    ASSERT_TRUE(std::holds_alternative<BlockTridiagonal>(J));
    const Matrix D = to_dense(J);
    const auto N = ops.size();
    EXPECT_TRUE(D.block(0, 2 * N, N, N).isZero(0.0));
    EXPECT_TRUE(D.block(2 * N, 0, N, N).isZero(0.0));
}

TEST(ChainPath, QAtZeroAndContractionScaling)
{
    const auto pb = make_rl_oscillator(2);
    const auto ops = ops_for(pb, 3);
    const double kappa = pb.system.chain_kappa;
    const auto N = ops.size();
    EXPECT_LT((chain_Q(ops, Vector::Zero(N), kappa) - (ops.A + 2 * kappa * ops.mass)).cwiseAbs().maxCoeff(), 1e-15);
    std::mt19937 rng(4);
    const Vector v = random_vec(rng, N, 1.0);
    const double alpha = -1.7;
    EXPECT_LT(max_rel(contract_N(ops, alpha * v), alpha * contract_N(ops, v)), 1e-13);
    EXPECT_LT(max_rel(contract_O(ops, alpha * v), alpha * alpha * contract_O(ops, v)), 1e-13);
}

TEST(ChainPath, SingleSectionAndZero)
{
    const auto pb = make_rl_oscillator(3);
    const auto ops = ops_for(pb, 2);
    const double kappa = pb.system.chain_kappa;
    const auto N = ops.size();
    std::mt19937 rng(5);
    const Vector c1 = random_vec(rng, N, 0.5);
    EXPECT_LT((chain_F(ops, c1, kappa) - (chain_P(ops, c1, kappa) - ops.gamma.col(0))).cwiseAbs().maxCoeff(),
              1e-15);
    const Vector F0 = chain_F(ops, Vector::Zero(3 * N), kappa);
    EXPECT_LT((F0.head(N) + ops.gamma.col(0)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_TRUE(F0.tail(2 * N).isZero(0.0));
}

TEST(ChainPath, EquivalentToGenericQuadrature)
{
    std::mt19937 rng(6);
    for (int n = 2; n <= 4; ++n)
        for (int M = 1; M <= 3; ++M)
            for (auto make : {+[](int k) { return make_rl_oscillator(k); }, +[](int k) { return make_rl_vdp(k); }}) {
                const auto pb = make(n);
                const auto chain = ops_for(pb, M, 1.5);
                const auto generic = ops_for(pb, M, 1.5, AssemblyOptions::Tensors::never);
                ASSERT_TRUE(uses_chain_path(pb, chain));
                ASSERT_FALSE(uses_chain_path(pb, generic));
                for (int t = 0; t < 3; ++t) {
                    const Vector c = random_vec(rng, n * chain.size(), 0.6);
                    EXPECT_LT(max_rel(residual_F(pb, chain, c), residual_F(pb, generic, c)), 1e-10)
                        << "n=" << n << " M=" << M;
                    EXPECT_LT(max_rel(to_dense(jacobian_JF(pb, chain, c)), to_dense(jacobian_JF(pb, generic, c))),
                              1e-10);
                }
            }
}
