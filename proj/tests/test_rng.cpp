#include <gtest/gtest.h>

#include <cmath>
#include <bit>
#include <map>
#include <set>

#include "combu/error.hpp"
#include "combu/linalg.hpp"
#include "combu/rng.hpp"

using namespace combu;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
    Rng c(42), d(42);
    for (int i = 0; i < 10000; ++i) ASSERT_EQ(std::bit_cast<std::uint64_t>(c.normal()), std::bit_cast<std::uint64_t>(d.normal()));
}

TEST(Rng, ChildrenDiffer) {
    Rng root(7);
    std::set<std::uint64_t> firsts;
    for (std::uint64_t i = 0; i < 100; ++i) firsts.insert(root.child(i).next_u64());
    EXPECT_EQ(firsts.size(), 100u);
    EXPECT_EQ(root.child(3).next_u64(), Rng(7).child(3).next_u64());
    EXPECT_NE(Rng(7).child(0).next_u64(), Rng(8).child(0).next_u64());
}

TEST(Rng, Uniform01) {
    Rng rng(1);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
    Rng rng(2);
    const int n = 100000;
    const double mu = 3.0, sigma = 2.0;
    const Dist d = Dist::normal(mu, sigma);
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = sample(d, rng);
        s += v;
        ss += v * v;
    }
    const double mean = s / n;
    const double sd = std::sqrt(ss / n - mean * mean);
    EXPECT_NEAR(mean, mu, 3.0 * sigma / std::sqrt(n));
    EXPECT_NEAR(sd, sigma, 3.0 * sigma / std::sqrt(2.0 * n));
}

TEST(Rng, BelowIsUnbiasedAndInRange) {
    Rng rng(3);
    std::vector<int> hits(7);
    for (int i = 0; i < 70000; ++i) ++hits[rng.below(7)];
    for (int h : hits) EXPECT_NEAR(h, 10000, 500);
    EXPECT_THROW(rng.below(0), ParameterError);
}

TEST(Dist, Examples) {
    Rng rng(0);
    EXPECT_EQ(sample(Dist::uniform(2, 2), rng), 2.0);
    EXPECT_EQ(sample(Dist::discrete({5}, {1.0}), rng), 5.0);
    EXPECT_EQ(sample(Dist::exp_scaled(Dist::uniform(1, 1), Dist::int_uniform(3, 3)), rng), 1000.0);
}

TEST(Dist, IntUniformInclusive) {
    Rng rng(4);
    std::set<double> seen;
    for (int i = 0; i < 5000; ++i) seen.insert(sample(Dist::int_uniform(0, 10), rng));
    EXPECT_EQ(seen.size(), 11u);
    EXPECT_EQ(*seen.begin(), 0.0);
    EXPECT_EQ(*seen.rbegin(), 10.0);
}

TEST(Dist, ExpScaledRange) {
    Rng rng(5);
    const Dist d = Dist::exp_scaled(Dist::uniform(1, 10), Dist::int_uniform(-3, 1));
    for (int i = 0; i < 20000; ++i) {
        const double v = sample(d, rng);
        ASSERT_GE(v, 1e-3);
        ASSERT_LT(v, 1e2);
    }
}

TEST(Dist, DiscreteFrequencies) {
    Rng rng(6);
    const Dist d = Dist::discrete({-3, -2, -1, 0, 1}, {.1, .2, .4, .2, .1});
    std::map<double, int> count;
    for (int i = 0; i < 50000; ++i) ++count[sample(d, rng)];
    EXPECT_NEAR(count[-1] / 50000.0, 0.4, 0.01);
    EXPECT_NEAR(count[1] / 50000.0, 0.1, 0.01);
}

TEST(Dist, InvalidParameters) {
    EXPECT_THROW(Dist::uniform(2, 1), ParameterError);
    EXPECT_THROW(Dist::int_uniform(3, 2), ParameterError);
    EXPECT_THROW(Dist::normal(0, -1), ParameterError);
    EXPECT_THROW(Dist::discrete({1, 2}, {0.5, 0.6}), ParameterError);
    EXPECT_THROW(Dist::discrete({1, 2}, {1.5, -0.5}), ParameterError);
    EXPECT_THROW(Dist::discrete({1, 2}, {1.0}), ParameterError);
}

TEST(Linalg, AffineExamples) {
    EXPECT_EQ(affine(Vector{1, 2}, Matrix::identity(2), Vector{0, 0}), (Vector{1, 2}));
    EXPECT_EQ(affine(Vector{1, 1}, Matrix{{1}, {-1}}, Vector{3}), (Vector{3}));
}

TEST(Linalg, Matmul) {
    const Matrix p = matmul(Matrix(2, 3, 1.0), Matrix(3, 2, 1.0));
    EXPECT_EQ(p, Matrix(2, 2, 3.0));
    const Matrix a{{1, 2}, {3, 4}};
    EXPECT_EQ(matmul(a, Matrix::identity(2)), a);
    EXPECT_EQ(matmul(a, a), (Matrix{{7, 10}, {15, 22}}));
}

TEST(Linalg, ShapeErrors) {
    EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
    EXPECT_THROW(affine(Vector{1, 2, 3}, Matrix(2, 2), Vector{0, 0}), ShapeError);
    EXPECT_THROW(affine(Vector{1, 2}, Matrix(2, 2), Vector{0}), ShapeError);
    EXPECT_THROW(matvec(Matrix(2, 2), Vector{1}), ShapeError);
    EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Linalg, MatvecMatchesAffineOnTranspose) {
    const Matrix w{{1, 2, 3}, {4, 5, 6}};
    const Vector x{1, -1, 2};
    EXPECT_EQ(matvec(w, x), affine(x, w.transposed(), Vector{0, 0}));
    EXPECT_EQ(matvec(w, x), (Vector{5, 11}));
}
