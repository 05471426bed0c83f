#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numbers>

#include "combu/combu.hpp"
#include "combu/error.hpp"

using namespace combu;

namespace {

std::vector<std::size_t> counts_for(std::size_t d) { return dim_counts(default_ratios(), d); }

// the masked sum written out: every 0/1 mask times its activation, added up
Vector masked_sum(const ActivationAssignment& a, const Vector& x) {
    Vector out(x.size(), 0.0);
    for (std::size_t k = 0; k < a.kinds.size(); ++k) {
        const Vector m = a.mask(k);
        for (std::size_t d = 0; d < x.size(); ++d) {
            Vector g(x.size());
            g[d] = act_eval(a.kinds[k], x[d]);
            out[d] += m[d] * g[d];
        }
    }
    return out;
}

}  // namespace

TEST(CombU, CountExamples) {
    EXPECT_EQ(counts_for(8), (std::vector<std::size_t>{4, 2, 2}));
    EXPECT_EQ(counts_for(5), (std::vector<std::size_t>{3, 1, 1}));
    EXPECT_EQ(counts_for(4), (std::vector<std::size_t>{2, 1, 1}));
    EXPECT_EQ(counts_for(1), (std::vector<std::size_t>{1, 0, 0}));
    EXPECT_EQ(counts_for(100), (std::vector<std::size_t>{50, 25, 25}));
    EXPECT_EQ(counts_for(128), (std::vector<std::size_t>{64, 32, 32}));
}

TEST(CombU, SingleKind) {
    Rng rng(1);
    const auto a = assign_dims({{Activation::relu(), 1.0}}, 7, rng);
    EXPECT_EQ(a.dim(), 7u);
    for (std::size_t d = 0; d < 7; ++d) EXPECT_EQ(a.at(d), Activation::relu());
}

TEST(CombU, CountsSumToDim) {
    Rng rng(2);
    for (std::size_t d = 1; d <= 1000; ++d) {
        const auto c = counts_for(d);
        ASSERT_EQ(c[0] + c[1] + c[2], d);
        const auto a = assign_dims(default_ratios(), d, rng);
        ASSERT_EQ(a.counts(), c);
    }
}

TEST(CombU, RoundHalfToEven) {
    // 2.5 rounds to 2 and the spare dim goes to the first kind;
    // 3.5 rounds to 4 twice and the surplus comes off the first kind
    const Ratios half{{Activation::relu(), 0.5}, {Activation::elu(), 0.5}};
    EXPECT_EQ(dim_counts(half, 5), (std::vector<std::size_t>{3, 2}));
    EXPECT_EQ(dim_counts(half, 7), (std::vector<std::size_t>{3, 4}));
}

TEST(CombU, NegativeRemainderClampsAtZero) {
    // rounds to 1 + 1 + 1 = 3 > 2, the surplus comes off the first kind
    const Ratios thirds{{Activation::relu(), 1.0 / 3}, {Activation::elu(), 1.0 / 3}, {Activation::nlrelu(), 1.0 / 3}};
    EXPECT_EQ(dim_counts(thirds, 2), (std::vector<std::size_t>{0, 1, 1}));
    // 0.5 -> 0, 1.5 -> 2 three times: one too many, the empty first kind is skipped
    const Ratios skewed{{Activation::relu(), 0.1},
                        {Activation::elu(), 0.3},
                        {Activation::nlrelu(), 0.3},
                        {Activation::gelu(), 0.3}};
    EXPECT_EQ(dim_counts(skewed, 5), (std::vector<std::size_t>{0, 1, 2, 2}));
}

TEST(CombU, Errors) {
    Rng rng(3);
    EXPECT_THROW(assign_dims(default_ratios(), 0, rng), ParameterError);
    EXPECT_THROW(validate_ratios({{Activation::relu(), 0.5}, {Activation::elu(), 0.4}}), ParameterError);
    EXPECT_THROW(validate_ratios({{Activation::relu(), 0.5}, {Activation::relu(), 0.5}}), ParameterError);
    EXPECT_THROW(validate_ratios({{Activation::relu(), 1.5}, {Activation::elu(), -0.5}}), ParameterError);
    EXPECT_THROW(validate_ratios({}), ParameterError);
}

TEST(CombU, ForwardExamples) {
    ActivationAssignment a{{Activation::relu(), Activation::nlrelu()}, {0, 1}};
    const Vector y = combu_forward(a, Vector{-1.0, std::numbers::e - 1.0});
    EXPECT_EQ(y[0], 0.0);
    EXPECT_NEAR(y[1], 1.0, 1e-15);

    Rng rng(4);
    const auto mix = assign_dims(default_ratios(), 16, rng);
    for (double v : combu_forward(mix, Vector(16, 0.0))) EXPECT_EQ(v, 0.0);

    const auto all_relu = ActivationAssignment::uniform(Activation::relu(), 4);
    EXPECT_EQ(combu_forward(all_relu, Vector{-1, 2, -3, 4}), (Vector{0, 2, 0, 4}));
    EXPECT_THROW(combu_forward(all_relu, Vector{1, 2}), ShapeError);
}

TEST(CombU, ForwardEqualsMaskedSumBitwise) {
    Rng rng(5);
    for (std::size_t dim : {1u, 5u, 8u, 33u, 128u}) {
        const auto a = assign_dims(default_ratios(), dim, rng);
        for (int t = 0; t < 50; ++t) {
            Vector x(dim);
            for (double& v : x) v = rng.uniform(-5, 5);
            const Vector got = combu_forward(a, x);
            const Vector want = masked_sum(a, x);
            for (std::size_t d = 0; d < dim; ++d)
                ASSERT_EQ(std::bit_cast<std::uint64_t>(got[d]), std::bit_cast<std::uint64_t>(want[d]));
        }
    }
}

TEST(CombU, MasksPartition) {
    Rng rng(6);
    const auto a = assign_dims(default_ratios(), 50, rng);
    Vector total(50, 0.0);
    for (std::size_t k = 0; k < a.kinds.size(); ++k) {
        const Vector m = a.mask(k);
        for (std::size_t d = 0; d < 50; ++d) total[d] += m[d];
    }
    EXPECT_EQ(total, Vector(50, 1.0));
}

TEST(CombU, SameSeedSameAssignment) {
    const auto a = make_combu(default_ratios(), 64, 99);
    const auto b = make_combu(default_ratios(), 64, 99);
    const auto c = make_combu(default_ratios(), 64, 100);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a.assignment == c.assignment);
}

TEST(CombU, DefaultCombu) {
    Rng rng(7);
    const auto spec = default_combu(100, rng);
    EXPECT_EQ(spec.assignment.counts(), (std::vector<std::size_t>{50, 25, 25}));
    EXPECT_EQ(spec.ratios, default_ratios());
    EXPECT_EQ(make_combu(default_ratios(), 100, spec.seed), spec);
}

TEST(CombU, JsonRoundTrip) {
    Rng rng(8);
    const auto spec = default_combu(37, rng);
    const nlohmann::json j = spec;
    EXPECT_EQ(j.at("dim"), 37);
    EXPECT_EQ(j.at("assignment").size(), 37u);
    EXPECT_EQ(j.at("seed"), spec.seed);
    const auto back = j.get<CombUSpec>();
    EXPECT_EQ(back, spec);
    EXPECT_EQ(nlohmann::json::parse(j.dump()).get<CombUSpec>(), spec);

    const nlohmann::json aj = spec.assignment;
    EXPECT_EQ(aj.get<ActivationAssignment>(), spec.assignment);
}

TEST(CombU, AssignmentEqualityIsSemantic) {
    ActivationAssignment a{{Activation::relu(), Activation::elu()}, {0, 1, 0}};
    ActivationAssignment b{{Activation::elu(), Activation::relu(), Activation::gelu()}, {1, 0, 1}};
    EXPECT_EQ(a, b);
    b.per_dim[2] = 2;
    EXPECT_FALSE(a == b);
}
