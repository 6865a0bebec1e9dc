#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "mmg/polybasis.hpp"

using namespace mmg;

namespace {

// Brute force: every exponent vector in [0, M]^d with total degree 1..M.
std::size_t enumerate_count(int d, int M)
{
    std::size_t count = 0;
    std::vector<int> e(static_cast<std::size_t>(d), 0);
    while (true) {
        int total = 0;
        for (int v : e)
            total += v;
        if (total >= 1 && total <= M)
            ++count;
        std::size_t j = 0;
        while (j < e.size() && e[j] == M) {
            e[j] = 0;
            ++j;
        }
        if (j == e.size())
            break;
        ++e[j];
    }
    return count;
}

std::vector<int> E(std::initializer_list<int> v) { return v; }

} // namespace

TEST(Basis, D2M2OrderingAndLength)
{
    const auto b = generate_basis(2, 2);
    ASSERT_EQ(b.size(), 5u);
    const std::vector<std::vector<int>> want{{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (std::size_t k = 0; k < want.size(); ++k)
        EXPECT_EQ(b[k].exponents(), want[k]) << "k = " << k;
}

TEST(Basis, OneDimensional)
{
    const auto b = generate_basis(1, 3);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[0].exponents(), E({1}));
    EXPECT_EQ(b[1].exponents(), E({2}));
    EXPECT_EQ(b[2].exponents(), E({3}));
}

TEST(Basis, KnownCounts)
{
    EXPECT_EQ(basis_count(2, 2), 5u);
    EXPECT_EQ(basis_count(2, 4), 14u);
    EXPECT_EQ(basis_count(2, 6), 27u);
    EXPECT_EQ(generate_basis(2, 6).size(), 27u);
}

TEST(Basis, CountFormulaMatchesEnumeration)
{
    for (int d = 1; d <= 4; ++d)
        for (int M = 1; M <= 8; ++M) {
            const auto b = generate_basis(d, M);
            EXPECT_EQ(basis_count(d, M), enumerate_count(d, M)) << "d=" << d << " M=" << M;
            EXPECT_EQ(b.size(), basis_count(d, M));
        }
}

TEST(Basis, DistinctAndGraded)
{
    for (int d = 1; d <= 4; ++d)
        for (int M = 1; M <= 6; ++M) {
            const auto b = generate_basis(d, M);
            std::set<std::vector<int>> seen;
            int prev = 0;
            for (const auto& mi : b) {
                EXPECT_TRUE(seen.insert(mi.exponents()).second);
                EXPECT_GE(mi.degree(), prev);
                EXPECT_GE(mi.degree(), 1);
                EXPECT_LE(mi.degree(), M);
                prev = mi.degree();
            }
        }
}

TEST(Basis, NestedAcrossDegrees)
{
    const auto lo = generate_basis(3, 3);
    const auto hi = generate_basis(3, 5);
    for (std::size_t k = 0; k < lo.size(); ++k)
        EXPECT_EQ(lo[k], hi[k]);
}

TEST(Basis, RejectsBadArguments)
{
    EXPECT_THROW(generate_basis(0, 2), InvalidArgument);
    EXPECT_THROW(generate_basis(2, 0), InvalidArgument);
    EXPECT_THROW(basis_count(-1, 2), InvalidArgument);
}

TEST(Basis, BinomialOverflowDetected)
{
    EXPECT_EQ(detail::checked_binomial(10, 3).value(), 120u);
    EXPECT_EQ(detail::checked_binomial(60, 30).value(), 118264581564861424ull);
    EXPECT_FALSE(detail::checked_binomial(200, 100).has_value());
}

TEST(Basis, Find)
{
    const auto b = generate_basis(2, 3);
    EXPECT_EQ(b.find({1, 1}).value(), 3u);
    EXPECT_FALSE(b.find({4, 0}).has_value());
}

TEST(EvalBasis, Examples)
{
    const auto b = generate_basis(2, 2);
    EXPECT_TRUE(eval_basis(b, Vector::Zero(2)).isZero(0.0));
    EXPECT_TRUE(eval_basis(b, Vector::Ones(2)).isOnes(0.0));
    const Vector v = eval_basis(b, Vector{{2.0, 3.0}});
    const Vector want{{2, 3, 4, 6, 9}};
    EXPECT_EQ(v, want);
}

TEST(EvalBasis, WrongDimensionThrows)
{
    const auto b = generate_basis(2, 2);
    EXPECT_THROW(eval_basis(b, Vector::Zero(3)), InvalidArgument);
}

TEST(EvalBasisGradient, Examples)
{
    const auto b = generate_basis(2, 2);
    const Matrix g = eval_basis_gradient(b, Vector{{2.0, 3.0}});
    ASSERT_EQ(g.rows(), 5);
    ASSERT_EQ(g.cols(), 2);
    EXPECT_DOUBLE_EQ(g(3, 0), 3.0);
    EXPECT_DOUBLE_EQ(g(3, 1), 2.0);
    EXPECT_DOUBLE_EQ(g(2, 0), 4.0);
    EXPECT_DOUBLE_EQ(g(2, 1), 0.0);
}

TEST(EvalBasisGradient, MatchesCentralDifferences)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double h = 1e-6;
    for (int d = 1; d <= 4; ++d) {
        const auto b = generate_basis(d, 6);
        for (int trial = 0; trial < 100; ++trial) {
            Vector w(d);
            for (int j = 0; j < d; ++j)
                w(j) = U(rng);
            const Matrix g = eval_basis_gradient(b, w);
            for (int j = 0; j < d; ++j) {
                Vector wp = w, wm = w;
                wp(j) += h;
                wm(j) -= h;
                const Vector fd = (eval_basis(b, wp) - eval_basis(b, wm)) / (2 * h);
                for (Eigen::Index k = 0; k < fd.size(); ++k) {
                    const double scale = std::max(1.0, std::abs(g(k, j)));
                    EXPECT_LT(std::abs(fd(k) - g(k, j)) / scale, 1e-5) << "d=" << d << " k=" << k;
                }
            }
        }
    }
}

TEST(EvalExpansion, Examples)
{
    const auto b = generate_basis(2, 2);
    const Vector w{{0.5, 0.7}};
    EXPECT_EQ(eval_expansion(b, Vector::Zero(5), w), 0.0);
    Vector e = Vector::Zero(5);
    e(0) = 1.0;
    EXPECT_DOUBLE_EQ(eval_expansion(b, e, w), 0.5);
}

TEST(EvalExpansion, Test1ClosedFormAtUnitPoint)
{
    // pi_1 = (w1 - a w2) / (1 + a^2) with a = 2
    const auto b = generate_basis(2, 2);
    const Vector c{{0.2, -0.4, 0.0, 0.0, 0.0}};
    EXPECT_DOUBLE_EQ(eval_expansion(b, c, Vector{{1.0, 0.0}}), 0.2);
}

TEST(EvalExpansion, LengthMismatchThrows)
{
    const auto b = generate_basis(2, 2);
    EXPECT_THROW(eval_expansion(b, Vector::Zero(4), Vector::Zero(2)), InvalidArgument);
}
