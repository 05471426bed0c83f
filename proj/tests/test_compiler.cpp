#include <gtest/gtest.h>

#include <bit>
#include <cmath>

#include "combu/compiler.hpp"
#include "combu/error.hpp"
#include "random_ast.hpp"

using namespace combu;

namespace {

double run1(const LayeredNetwork& net, double x) { return forward(net, Vector{x})[0]; }

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

LayeredNetwork var_net() { return compile(expr::var(0), std::vector{Bounds::interval(-100, 100)}); }

}  // namespace

TEST(Gadget, ExpExamples) {
    const auto g = exp_gadget(5);
    EXPECT_EQ(g.depth(), 2u);
    EXPECT_EQ(run1(g, 0), 1.0);
    EXPECT_LE(rel(run1(g, 1), std::numbers::e), 1e-12);
    EXPECT_EQ(run1(g, 5), std::exp(5.0));
    EXPECT_EQ(run1(g, 7), std::exp(5.0));  // saturates above M
    EXPECT_THROW(exp_gadget(701), ConditioningError);
    EXPECT_THROW(exp_gadget(INFINITY), ConditioningError);
}

TEST(Gadget, ExpAbsoluteErrorBound) {
    const double m = 5;
    const auto g = exp_gadget(m);
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.uniform(-30, m);
        ASSERT_LE(std::abs(run1(g, x) - std::exp(x)), std::exp(m) * 1e-12);
    }
}

TEST(Gadget, LogExamples) {
    const auto g = log_gadget(0.01);
    EXPECT_NEAR(run1(g, 1.0), 0.0, 1e-12);
    EXPECT_NEAR(run1(g, 0.01), std::log(0.01), 1e-12);
    EXPECT_NEAR(run1(log_gadget(0.5), std::numbers::e), 1.0, 1e-12);
    EXPECT_THROW(log_gadget(0), ParameterError);
    EXPECT_THROW(log_gadget(-1), ParameterError);
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.uniform(0.01, 100);
        ASSERT_NEAR(run1(g, x), std::log(x), 1e-10);
    }
}

TEST(Gadget, Identity) {
    const auto g = identity_gadget();
    for (double z : {-5.0, 0.0, 3.25, -1e-300, 1e300}) EXPECT_EQ(run1(g, z), z);
}

TEST(Structure, PaddingPreservesBits) {
    const auto base = compile(parse_expr("(sum (term 1.5 (pow x1 2) (pow x2 -1)))"),
                              std::vector{Bounds::interval(1, 5), Bounds::interval(1, 5)});
    Rng rng(3);
    for (std::size_t k = 1; k <= 20; ++k) {
        const auto padded = pad_identity(base, k);
        EXPECT_EQ(padded.depth(), base.depth() + k);
        for (int i = 0; i < 20; ++i) {
            const Vector x{rng.uniform(1, 5), rng.uniform(1, 5)};
            ASSERT_EQ(std::bit_cast<std::uint64_t>(forward(padded, x)[0]),
                      std::bit_cast<std::uint64_t>(forward(base, x)[0]));
        }
    }
}

TEST(Structure, IdentityChainIsExact) {
    const auto chain = pad_identity(var_net(), 20);
    Rng rng(4);
    std::vector bounds{Bounds::interval(-100, 100)};
    EXPECT_EQ(verify(chain, *expr::var(0), bounds, 1000, rng), 0.0);
}

TEST(Structure, WidenInputs) {
    const auto g = widen_inputs(exp_gadget(3), 4);
    EXPECT_EQ(g.input_dim, 4u);
    EXPECT_EQ(forward(g, Vector{1, 100, -7, 42})[0], run1(exp_gadget(3), 1));
}

TEST(Structure, StackParallel) {
    const std::vector nets{exp_gadget(3), log_gadget(0.5)};
    const auto s = stack_parallel(nets);
    const Vector y = forward(s, Vector{2.0});
    EXPECT_EQ(y[0], run1(nets[0], 2.0));
    EXPECT_EQ(y[1], run1(nets[1], 2.0));
}

TEST(Structure, ComposeExamples) {
    const std::vector logs{log_gadget(1.0)};
    const auto el = compose(exp_gadget(std::log(10.0)), logs);
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(1, 10);
        ASSERT_LE(rel(run1(el, x), x), 1e-9);
    }

    const auto sq = compile(parse_expr("(exp (lin 2 (log x1)))"), std::vector{Bounds::interval(1, 5)});
    EXPECT_LE(rel(run1(sq, 3), 9.0), 1e-9);

    const std::vector vars{var_net()};
    const auto chain = compose(pad_identity(var_net(), 3), vars);
    EXPECT_EQ(run1(chain, -2.5), -2.5);
}

TEST(Structure, NegationPairsReconstruct) {
    // every (R(f), R(-f)) pair in a composed net differs by exactly f
    const auto inner = log_gadget(1.0);
    const std::vector inners{inner};
    const auto net = compose(exp_gadget(std::log(10.0)), inners);
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(1, 10);
        const double f = run1(inner, x);
        const auto hidden = hidden_activations(net, Vector{x});
        const Vector& pair = hidden[inner.depth() - 1];
        ASSERT_EQ(pair.size(), 2u);
        ASSERT_EQ(pair[0] - pair[1], f);
    }
}

TEST(Compile, Examples) {
    const auto q = compile(parse_expr("(sum (term 1 (pow x1 2) (pow x2 -1)))"),
                           std::vector{Bounds::interval(1, 5), Bounds::interval(1, 5)});
    EXPECT_LE(rel(forward(q, Vector{3, 1})[0], 9.0), 1e-9);

    const auto c = compile(expr::constant(2.5), std::vector{Bounds::interval(0, 1)});
    for (double x : {0.0, 0.3, 1.0}) EXPECT_EQ(run1(c, x), 2.5);

    const auto m = compile(parse_expr("(lin 1 (exp x1) -3 (log x1))"), std::vector{Bounds::interval(1, 4)});
    EXPECT_LE(rel(run1(m, 1), std::numbers::e), 1e-9);
}

TEST(Compile, OnlyCombuComponents) {
    Rng rng(7);
    for (int i = 0; i < 10; ++i) {
        const auto e = random_power_sum(rng, 2);
        EXPECT_TRUE(uses_only_combu_components(compile(e, std::vector(2, Bounds::interval(1, 10)))));
    }
    EXPECT_TRUE(uses_only_combu_components(exp_gadget(1)));
    Rng r2(8);
    EXPECT_FALSE(uses_only_combu_components(
        build_benchmark_mlp(2, 1, ModelSize::Small, ActivationScheme::uniform(Activation::gelu()), r2)));
}

TEST(Compile, ThreeTermSum) {
    const auto e = parse_expr("(sum (term 2 (pow x1 2) (pow x2 -1)) (term -1.5 (pow x1 0.5)) (term 3 (pow x2 3)))");
    const std::vector in{Bounds::interval(1, 10), Bounds::interval(2, 10)};
    Rng rng(9);
    EXPECT_LE(verify(compile(e, in), *e, in, 10000, rng), 1e-7);
}

TEST(Compile, RandomFamily) {
    Rng rng(10);
    for (int i = 0; i < 50; ++i) {
        const std::size_t d = 1 + rng.below(3);
        const auto e = random_power_sum(rng, d);
        const std::vector in(d, Bounds::interval(1, 10));
        const auto net = compile(e, in);
        Rng vr = rng.child(static_cast<std::uint64_t>(i));
        ASSERT_LE(verify(net, *e, in, 2000, vr), 1e-6) << to_sexpr(*e);
    }
}

TEST(Compile, MixedSignsStayAccurateAgainstTermScale) {
    // relative to the sum of |term| values, which does not vanish at roots
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        const auto base = random_power_sum(rng, 2);
        auto sum = std::get<ast::PolySum>(base->node);
        for (double& c : sum.coeffs)
            if (rng.bernoulli(0.5)) c = -c;
        const auto e = expr::poly_sum(sum.coeffs, sum.products);
        const std::vector in(2, Bounds::interval(1, 10));
        const auto net = compile(e, in);
        for (int k = 0; k < 500; ++k) {
            const Vector x = sample_domain(in, rng);
            double scale = 0.0;
            for (std::size_t t = 0; t < sum.products.size(); ++t) {
                const auto term = std::make_shared<const Expr>(Expr{sum.products[t]});
                scale += std::abs(sum.coeffs[t] * eval_expr(*term, x));
            }
            ASSERT_LE(std::abs(forward(net, x)[0] - eval_expr(*e, x)), 1e-6 * scale);
        }
    }
}

TEST(Compile, DomainErrors) {
    EXPECT_THROW(compile(parse_expr("(log x1)"), std::vector{Bounds::interval(-1, 1)}), DomainError);
    EXPECT_THROW(compile(parse_expr("(exp x1)"), std::vector{Bounds::interval(0, 705)}), ConditioningError);
    EXPECT_THROW(compile(parse_expr("(exp x1)"), std::vector{Bounds::interval(0, 800)}), BoundError);
}

TEST(Compile, SampleDomainRespectsDelta) {
    const std::vector in{Bounds{-2, 2, 0.5}};
    Rng rng(12);
    for (int i = 0; i < 2000; ++i) {
        const double v = sample_domain(in, rng)[0];
        ASSERT_TRUE(v == 0.0 || std::abs(v) >= 0.5);
        ASSERT_LE(std::abs(v), 2.0);
    }
}
