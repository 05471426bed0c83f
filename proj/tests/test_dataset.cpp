#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "combu/dataset.hpp"
#include "combu/error.hpp"
#include "oracles.hpp"

using namespace combu;

namespace {

double rel(double got, double want) { return want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want); }

std::vector<double> column(const TabularDataset& ds, const std::string& name) {
    const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
    const auto c = static_cast<std::size_t>(it - ds.feature_names.begin());
    std::vector<double> v(ds.rows());
    for (std::size_t r = 0; r < ds.rows(); ++r) v[r] = ds.features(r, c);
    return v;
}

}  // namespace

TEST(Formulas, Arrhenius) {
    EXPECT_EQ(arrhenius_rate(0, 3.7, 0, 1), 1.0);
    EXPECT_NEAR(arrhenius_rate(1, 1, 8.314, 1), std::exp(-1.0), 1e-15);
}

TEST(Formulas, VortexAtOrigin) {
    EXPECT_DOUBLE_EQ(vortex_speed(0.7, 2.0, 0, 0, 0), 0.7 / 4.0);
    EXPECT_EQ(vortex_speed(0.0, 2.0, 1, 3, 4), 0.0);
}

TEST(Formulas, GaussianTarget) {
    const std::vector<double> same(8, 3.0);
    EXPECT_FALSE(gaussian_target(same, 3.0).has_value());
    const std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8};
    double mean, sd;
    oracle::sample_stats(xs, mean, sd);
    EXPECT_NEAR(*gaussian_target(xs, 2.5), oracle::normal_pdf(2.5, mean, sd), 1e-15);
}

TEST(Formulas, BlackScholesLimits) {
    // enormous volatility: the call is worth the stock
    EXPECT_LE(std::abs(black_scholes_call(50, 40, 0.05, 30, 4) - 50), 1e-6 * 50);
    const double c = black_scholes_call(100, 90, 0.05, 0.2, 1);
    EXPECT_NEAR(c, oracle::bs_call(100, 90, 0.05, 0.2, 1), 1e-12);
    EXPECT_NEAR(black_scholes_put(100, 90, 0.05, 0.2, 1) - c, 90 * std::exp(-0.05) - 100, 1e-12);
}

TEST(Generators, GsRowsMatchOracle) {
    const auto ds = generate_formula("gs", 2000, 1);
    ASSERT_EQ(ds.features.cols(), 9u);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const auto row = ds.features.row(r);
        double mean, sd;
        oracle::sample_stats(row.first(8), mean, sd);
        const double want = oracle::normal_pdf(row[8], mean, sd);
        ASSERT_LE(rel(ds.target[r], want), 1e-12);
        ASSERT_GT(ds.target[r], 0.0);
        ASSERT_LE(ds.target[r], 1.0 / (sd * std::sqrt(2 * std::numbers::pi)) * (1 + 1e-12));
        ASSERT_EQ(ds.latent.at("xbar")[r], mean);
    }
}

TEST(Generators, GsLatentRanges) {
    const auto ds = generate_formula("gs", 10000, 2);
    const auto& mu = ds.latent.at("mu");
    const auto& sigma = ds.latent.at("sigma");
    double m = 0.0;
    for (double v : mu) m += v;
    EXPECT_NEAR(m / mu.size(), 0.0, 0.5);
    for (double s : sigma) {
        ASSERT_GE(s, 1.0);
        ASSERT_LE(s, 6.0);
    }
}

TEST(Generators, ArRows) {
    const auto ds = generate_formula("ar", 5000, 3);
    const auto n = column(ds, "n"), t = column(ds, "T"), ea = column(ds, "Ea"), a = column(ds, "A");
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        ASSERT_EQ(n[r], std::floor(n[r]));
        ASSERT_GE(n[r], 0);
        ASSERT_LE(n[r], 10);
        ASSERT_GT(a[r], 0.0);
        ASSERT_LT(a[r], 10.0);
        ASSERT_GE(t[r], 1.0);
        ASSERT_LT(t[r], 11.0);
        ASSERT_GT(ds.target[r], 0.0);
        ASSERT_LE(rel(ds.target[r], oracle::arrhenius(n[r], t[r], ea[r], a[r])), 1e-12);
    }
}

TEST(Generators, NsRows) {
    const auto ds = generate_formula("ns", 5000, 4);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const auto row = ds.features.row(r);
        for (std::size_t c = 1; c < 5; ++c) {
            ASSERT_GE(row[c], 1e-3);
            ASSERT_LT(row[c], 1e2);
        }
        ASSERT_GT(ds.target[r], 0.0);
        ASSERT_LE(rel(ds.target[r], oracle::vortex(row[0], row[1], row[2], row[3], row[4])), 1e-12);
    }
}

TEST(Generators, BsRows) {
    const auto ds = generate_formula("bs", 5000, 5);
    const auto& call = ds.latent.at("call");
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const auto row = ds.features.row(r);
        const double sigma = row[0], tau = row[1], s = row[2], k = row[3], rate = row[4];
        ASSERT_GT(sigma, 0.0);
        // S and K share their power of ten
        ASSERT_EQ(std::floor(std::log10(s)), std::floor(std::log10(k)));
        const double disc = k * std::exp(-rate * tau);
        ASSERT_LE(std::abs((ds.target[r] - call[r]) - (disc - s)), 4 * 2.2e-16 * std::max({s, disc, call[r]}));
        ASSERT_GE(call[r], std::max(0.0, s - disc) - 1e-9);
        ASSERT_LE(rel(call[r], oracle::bs_call(s, k, rate, sigma, tau)), 1e-12);
    }
}

TEST(Generators, Reproducible) {
    for (const auto& name : formula_names()) {
        EXPECT_EQ(csv_format(generate_formula(name, 300, 9)), csv_format(generate_formula(name, 300, 9)));
        EXPECT_NE(csv_format(generate_formula(name, 300, 9)), csv_format(generate_formula(name, 300, 10)));
    }
    EXPECT_THROW(generate_formula("xx", 10, 0), ParameterError);
    EXPECT_THROW(generate_formula("gs", 0, 0), ParameterError);
}

TEST(Classification, Examples) {
    TabularDataset ds;
    ds.feature_names = {"a"};
    ds.features = Matrix{{0}, {0}, {0}, {0}};
    ds.target = {1, 2, 3, 4};
    const auto c = make_classification(ds, 2);
    EXPECT_EQ(c.target, (Vector{0, 0, 1, 1}));
    EXPECT_EQ(c.n_classes, 2u);

    ds.target = {5, 5, 5, 5};
    EXPECT_THROW(make_classification(ds, 2), ParameterError);
    EXPECT_THROW(make_classification(ds, 1), ParameterError);
}

TEST(Classification, EqualFrequency) {
    const auto c = make_classification(generate_formula("gs", 5000, 6), 5);
    std::vector<int> counts(5);
    for (double t : c.target) ++counts[static_cast<std::size_t>(t)];
    for (int k : counts) EXPECT_NEAR(k, 1000, 1);
    for (std::size_t i = 1; i < c.bin_edges.size(); ++i) EXPECT_LT(c.bin_edges[i - 1], c.bin_edges[i]);
    EXPECT_NO_THROW(c.validate());
}

TEST(Classification, TiedMinimumFillsFirstBin) {
    const auto raw = generate_formula("bs", 5000, 7);
    const auto c = make_classification(raw, 5);
    std::vector<int> counts(5);
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        ++counts[static_cast<std::size_t>(c.target[i])];
        if (raw.target[i] == 0.0) {
            ASSERT_EQ(c.target[i], 0.0);
        }
    }
    for (int k : counts) EXPECT_GT(k, 0);
}

TEST(Split, SizesAndScaling) {
    const auto ds = generate_formula("ar", 5000, 7);
    Rng rng(1);
    const auto s = split_and_fit(ds, 0.2, rng);
    EXPECT_EQ(s.train.size(), 4000u);
    EXPECT_EQ(s.test.size(), 1000u);
    for (std::size_t c = 0; c < s.train.inputs.cols(); ++c) {
        double m = 0.0, ss = 0.0;
        for (std::size_t r = 0; r < 4000; ++r) m += s.train.inputs(r, c);
        m /= 4000;
        for (std::size_t r = 0; r < 4000; ++r) ss += (s.train.inputs(r, c) - m) * (s.train.inputs(r, c) - m);
        EXPECT_NEAR(m, 0.0, 1e-9);
        EXPECT_NEAR(std::sqrt(ss / 4000), 1.0, 1e-9);
    }
    double tm = 0.0;
    for (double v : s.train.targets.data()) tm += v;
    EXPECT_NEAR(tm / 4000, 0.0, 1e-9);
    // stats are frozen: transforming again gives identical output
    EXPECT_EQ(s.preprocessor.transform(s.test_raw).inputs, s.test.inputs);
    EXPECT_EQ(s.preprocessor.transform(s.train_raw).inputs, s.train.inputs);
}

TEST(Split, ConstantColumnsAndOneHot) {
    TabularDataset ds;
    ds.feature_names = {"k", "v"};
    ds.features = Matrix{{1, 0}, {1, 1}, {1, 2}, {1, 3}, {1, 4}};
    ds.categorical_names = {"c"};
    ds.categorical = {{"b", "a", "b", "c", "a"}};
    ds.target = {0, 1, 2, 3, 4};
    const auto p = Preprocessor::fit(ds);
    EXPECT_FALSE(p.feature_stats[0].scaled);
    EXPECT_EQ(p.encoded_width(), 5u);
    const auto s = p.transform(ds);
    EXPECT_EQ(s.inputs(0, 0), 1.0);  // passes through unscaled
    EXPECT_EQ(s.inputs(0, 2), 0.0);  // "a"
    EXPECT_EQ(s.inputs(0, 3), 1.0);  // "b"
    EXPECT_EQ(s.inputs(3, 4), 1.0);  // "c"
    ds.categorical[0][0] = "zzz";
    const auto unseen = p.transform(ds);
    EXPECT_EQ(unseen.inputs(0, 2) + unseen.inputs(0, 3) + unseen.inputs(0, 4), 0.0);
}

TEST(Split, Errors) {
    const auto ds = generate_formula("gs", 3, 8);
    Rng rng(2);
    EXPECT_THROW(split_and_fit(ds, 0.0, rng), ParameterError);
    EXPECT_THROW(split_and_fit(ds, 1.0, rng), ParameterError);
    EXPECT_THROW(split_and_fit(ds, 0.1, rng), ParameterError);  // rounds to an empty test set
}

TEST(Csv, RoundTrip) {
    const auto ds = generate_formula("bs", 200, 9);
    CsvSchema schema{"put", {}, TaskKind::Regression};
    const auto back = csv_parse(csv_format(ds), schema);
    EXPECT_EQ(back.feature_names, ds.feature_names);
    EXPECT_EQ(back.features, ds.features);
    EXPECT_EQ(back.target, ds.target);
}

TEST(Csv, Parse) {
    const auto ds = csv_parse("a,b,y\n1,x,2.5\n2,\"y, z\",3\n3,x,4\n", {"y", {"b"}, TaskKind::Regression});
    EXPECT_EQ(ds.rows(), 3u);
    EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a"}));
    EXPECT_EQ(ds.categorical[0][1], "y, z");
    EXPECT_EQ(ds.target, (Vector{2.5, 3, 4}));

    const auto cls = csv_parse("f,label\n1,cat\n2,dog\n3,cat\n", {"label", {}, TaskKind::Classification});
    EXPECT_EQ(cls.n_classes, 2u);
    EXPECT_EQ(cls.target, (Vector{0, 1, 0}));
    EXPECT_EQ(cls.class_labels, (std::vector<std::string>{"cat", "dog"}));
    EXPECT_EQ(csv_parse(csv_format(cls), {"label", {}, TaskKind::Classification}).target, cls.target);

    const auto crlf = csv_parse("a,y\r\n1,2\r\n\r\n3,4\r\n", {"y", {}, TaskKind::Regression});
    EXPECT_EQ(crlf.rows(), 2u);
}

TEST(Csv, Errors) {
    const CsvSchema schema{"y", {}, TaskKind::Regression};
    EXPECT_THROW(csv_parse("a,b\n1,2\n", schema), SchemaError);
    EXPECT_THROW(csv_parse("", schema), SchemaError);
    EXPECT_THROW(csv_parse("a,y\n1,\n", schema), SchemaError);
    EXPECT_THROW(csv_parse("a,y\n1,2\n3\n", schema), ParseError);
    EXPECT_THROW(csv_parse("a,y\n1,\"2\n", schema), ParseError);
    try {
        csv_parse("a,y\n1,2\n1,abc\n", schema);
        FAIL();
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
    }
    EXPECT_THROW(csv_read("/nonexistent/file.csv", schema), SchemaError);
}
