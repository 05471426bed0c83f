#include "combu/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "combu/error.hpp"

namespace combu {

TabularDataset TabularDataset::take(std::span<const std::size_t> rows) const {
    TabularDataset out = *this;
    out.features = Matrix(rows.size(), features.cols());
    out.target.resize(rows.size());
    for (auto& col : out.categorical) col.resize(rows.size());
    for (auto& [name, col] : out.latent) col.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        const auto src = features.row(r);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.target[i] = target[r];
        for (std::size_t c = 0; c < categorical.size(); ++c) out.categorical[c][i] = categorical[c][r];
        for (auto& [name, col] : out.latent) col[i] = latent.at(name)[r];
    }
    return out;
}

void TabularDataset::validate() const {
    const std::size_t n = rows();
    if (features.rows() != n || features.cols() != feature_names.size())
        throw SchemaError("dataset: feature matrix does not match rows/names");
    if (categorical.size() != categorical_names.size()) throw SchemaError("dataset: categorical names mismatch");
    for (const auto& col : categorical)
        if (col.size() != n) throw SchemaError("dataset: ragged categorical column");
    for (double v : features.data())
        if (!std::isfinite(v)) throw SchemaError("dataset: non-finite feature value");
    for (double v : target) {
        if (!std::isfinite(v)) throw SchemaError("dataset: non-finite target value");
        if (task == TaskKind::Classification &&
            (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(n_classes)))
            throw SchemaError("dataset: invalid class index");
    }
}

// ---------------------------------------------------------------------------
// Formulas

std::optional<double> gaussian_target(std::span<const double> xs, double v) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) return std::nullopt;
    const double z = (v - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double arrhenius_rate(double n, double temperature, double activation_energy, double prefactor) {
    return prefactor * std::pow(temperature, n) * std::exp(-activation_energy / (kGasConstant * temperature));
}

double vortex_speed(double amplitude, double r, double x, double y, double z) {
    const double r2 = r * r, x2 = x * x, y2 = y * y, z2 = z * z;
    const double denom = r2 + x2 + y2 + z2;
    const double u1 = 2.0 * (-r * y + x * z);
    const double u2 = 2.0 * (r * x + y * z);
    const double u3 = r2 - x2 - y2 + z2;
    return amplitude / (denom * denom) * std::sqrt(u1 * u1 + u2 * u2 + u3 * u3);
}

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

double black_scholes_call(double spot, double strike, double rate, double volatility, double maturity) {
    const double vol_sqrt_t = volatility * std::sqrt(maturity);
    const double log_moneyness = std::log(spot / strike);
    const double d1 = (log_moneyness + (rate + 0.5 * volatility * volatility) * maturity) / vol_sqrt_t;
    const double d2 = (log_moneyness + (rate - 0.5 * volatility * volatility) * maturity) / vol_sqrt_t;
    return norm_cdf(d1) * spot - norm_cdf(d2) * strike * std::exp(-rate * maturity);
}

double black_scholes_put(double spot, double strike, double rate, double volatility, double maturity) {
    return strike * std::exp(-rate * maturity) - spot + black_scholes_call(spot, strike, rate, volatility, maturity);
}

// ---------------------------------------------------------------------------
// Generators

namespace {

TabularDataset empty_dataset(std::vector<std::string> features, std::string target, std::size_t n) {
    if (n == 0) throw ParameterError("generator: need at least one row");
    TabularDataset ds;
    ds.features = Matrix(n, features.size());
    ds.feature_names = std::move(features);
    ds.target_name = std::move(target);
    ds.target.assign(n, 0.0);
    return ds;
}

}  // namespace

TabularDataset gen_gs(std::size_t n, Rng& rng) {
    TabularDataset ds =
        empty_dataset({"x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "v"}, "density", n);
    auto& mu_col = ds.latent["mu"];
    auto& sigma_col = ds.latent["sigma"];
    auto& mean_col = ds.latent["xbar"];
    auto& sd_col = ds.latent["sx"];
    const Dist mu_dist = Dist::normal(0.0, 10.0);
    const Dist sigma_dist = Dist::uniform(1.0, 6.0);

    for (std::size_t i = 0; i < n; ++i) {
        for (;;) {
            const double mu = sample(mu_dist, rng);
            const double sigma = sample(sigma_dist, rng);
            std::array<double, 8> xs{};
            for (double& x : xs) x = mu + sigma * rng.normal();
            const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / 8.0;
            double ss = 0.0;
            for (double x : xs) ss += (x - mean) * (x - mean);
            const double sd = std::sqrt(ss / 7.0);
            if (!(sd > 0.0)) continue;  // degenerate row, draw again
            const double v = mean + sd * rng.normal();
            auto row = ds.features.row(i);
            std::copy(xs.begin(), xs.end(), row.begin());
            row[8] = v;
            ds.target[i] = *gaussian_target(xs, v);
            mu_col.push_back(mu);
            sigma_col.push_back(sigma);
            mean_col.push_back(mean);
            sd_col.push_back(sd);
            break;
        }
    }
    return ds;
}

TabularDataset gen_ar(std::size_t n, Rng& rng) {
    TabularDataset ds = empty_dataset({"n", "T", "Ea", "A"}, "k", n);
    const Dist n_dist = Dist::int_uniform(0, 10);
    const Dist t_dist = Dist::uniform(1.0, 11.0);
    const Dist ea_dist = Dist::uniform(0.0, 100.0);
    const Dist a_dist = Dist::exp_scaled(Dist::uniform(0.0, 1.0), Dist::int_uniform(-2, 1));
    for (std::size_t i = 0; i < n; ++i) {
        const double order = sample(n_dist, rng);
        const double temperature = sample(t_dist, rng);
        const double energy = sample(ea_dist, rng);
        const double prefactor = sample(a_dist, rng);
        auto row = ds.features.row(i);
        row[0] = order;
        row[1] = temperature;
        row[2] = energy;
        row[3] = prefactor;
        ds.target[i] = arrhenius_rate(order, temperature, energy, prefactor);
    }
    return ds;
}

TabularDataset gen_ns(std::size_t n, Rng& rng) {
    TabularDataset ds = empty_dataset({"A", "r", "x", "y", "z"}, "speed", n);
    const Dist a_dist = Dist::uniform(0.0, 1.0);
    const Dist coord = Dist::exp_scaled(Dist::uniform(1.0, 10.0),
                                        Dist::discrete({-3, -2, -1, 0, 1}, {0.1, 0.2, 0.4, 0.2, 0.1}));
    for (std::size_t i = 0; i < n; ++i) {
        auto row = ds.features.row(i);
        row[0] = sample(a_dist, rng);
        for (std::size_t c = 1; c < 5; ++c) row[c] = sample(coord, rng);
        ds.target[i] = vortex_speed(row[0], row[1], row[2], row[3], row[4]);
    }
    return ds;
}

TabularDataset gen_bs(std::size_t n, Rng& rng) {
    TabularDataset ds = empty_dataset({"sigma", "tau", "S", "K", "r"}, "put", n);
    auto& call_col = ds.latent["call"];
    const Dist sigma_dist = Dist::uniform(0.0, 100.0);
    const Dist tau_dist = Dist::exp_scaled(Dist::int_uniform(1, 9), Dist::int_uniform(1, 3));
    const Dist mantissa = Dist::uniform(1.0, 10.0);
    const Dist exponent = Dist::int_uniform(0, 4);
    const Dist rate_dist = Dist::uniform(0.0, 0.1);
    for (std::size_t i = 0; i < n; ++i) {
        double sigma = 0.0;
        do {
            sigma = sample(sigma_dist, rng);
        } while (sigma == 0.0);
        const double tau = sample(tau_dist, rng);
        // S and K draw their own mantissas but share one power of ten.
        const double shared_exp = sample(exponent, rng);
        const double spot = sample(mantissa, rng) * std::pow(10.0, shared_exp);
        const double strike = sample(mantissa, rng) * std::pow(10.0, shared_exp);
        const double rate = sample(rate_dist, rng);

        const double call = black_scholes_call(spot, strike, rate, sigma, tau);
        auto row = ds.features.row(i);
        row[0] = sigma;
        row[1] = tau;
        row[2] = spot;
        row[3] = strike;
        row[4] = rate;
        ds.target[i] = strike * std::exp(-rate * tau) - spot + call;
        call_col.push_back(call);
    }
    return ds;
}

const std::vector<std::string>& formula_names() {
    static const std::vector<std::string> names{"gs", "ar", "ns", "bs"};
    return names;
}

TabularDataset generate_formula(const std::string& name, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    TabularDataset ds;
    if (name == "gs") ds = gen_gs(n, rng);
    else if (name == "ar") ds = gen_ar(n, rng);
    else if (name == "ns") ds = gen_ns(n, rng);
    else if (name == "bs") ds = gen_bs(n, rng);
    else throw ParameterError("unknown formula dataset '" + name + "' (expected gs, ar, ns or bs)");
    ds.generator = name;
    ds.seed = seed;
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// Classification

TabularDataset make_classification(const TabularDataset& ds, std::size_t n_bins) {
    if (ds.task != TaskKind::Regression) throw ParameterError("make_classification: dataset is already binned");
    if (n_bins < 2) throw ParameterError("make_classification: need at least 2 bins");
    const std::size_t n = ds.rows();
    const std::set<double> unique(ds.target.begin(), ds.target.end());
    if (unique.size() < n_bins)
        throw ParameterError("make_classification: " + std::to_string(unique.size()) + " distinct targets for " +
                             std::to_string(n_bins) + " bins");

    Vector sorted = ds.target;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (std::size_t i = 1; i < n_bins; ++i) {
        const std::size_t idx = (i * n + n_bins - 1) / n_bins;  // ceil(i * n / n_bins)
        edges.push_back(sorted[idx - 1]);
    }
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw ParameterError("make_classification: too many tied targets for equal-frequency bins");

    TabularDataset out = ds;
    out.task = TaskKind::Classification;
    out.n_classes = n_bins;
    out.bin_edges = edges;
    std::vector<std::size_t> counts(n_bins, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cls = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), ds.target[i]) -
                                                  edges.begin());
        out.target[i] = static_cast<double>(cls);
        ++counts[cls];
    }
    for (std::size_t c : counts)
        if (c == 0) throw ParameterError("make_classification: a bin is empty");
    return out;
}

// ---------------------------------------------------------------------------
// Preprocessing

namespace {

Preprocessor::ColumnStats column_stats(std::span<const double> values) {
    Preprocessor::ColumnStats s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / n);
    if (!(s.std > 0.0)) {
        s.scaled = false;
        s.mean = 0.0;
        s.std = 1.0;
    }
    return s;
}

double apply(const Preprocessor::ColumnStats& s, double v) { return s.scaled ? (v - s.mean) / s.std : v; }

nlohmann::json stats_json(const Preprocessor::ColumnStats& s) {
    return {{"mean", s.mean}, {"std", s.std}, {"scaled", s.scaled}};
}

}  // namespace

Preprocessor Preprocessor::fit(const TabularDataset& train) {
    if (train.rows() == 0) throw ParameterError("preprocessor: empty training split");
    Preprocessor p;
    p.feature_names = train.feature_names;
    p.categorical_names = train.categorical_names;
    p.task = train.task;
    p.n_classes = train.n_classes;
    Vector column(train.rows());
    for (std::size_t c = 0; c < train.features.cols(); ++c) {
        for (std::size_t r = 0; r < train.rows(); ++r) column[r] = train.features(r, c);
        p.feature_stats.push_back(column_stats(column));
    }
    for (const auto& col : train.categorical) {
        std::set<std::string> vocab(col.begin(), col.end());
        p.vocabularies.emplace_back(vocab.begin(), vocab.end());
    }
    if (train.task == TaskKind::Regression) p.target_stats = column_stats(train.target);
    return p;
}

std::size_t Preprocessor::encoded_width() const {
    std::size_t w = feature_names.size();
    for (const auto& v : vocabularies) w += v.size();
    return w;
}

Samples Preprocessor::transform(const TabularDataset& ds) const {
    if (ds.feature_names != feature_names || ds.categorical_names != categorical_names)
        throw SchemaError("preprocessor: columns differ from the fitted dataset");
    Samples s;
    s.task = task;
    s.n_classes = n_classes;
    const std::size_t n = ds.rows();
    s.inputs = Matrix(n, encoded_width());
    for (std::size_t r = 0; r < n; ++r) {
        auto out = s.inputs.row(r);
        std::size_t c = 0;
        for (; c < feature_names.size(); ++c) out[c] = apply(feature_stats[c], ds.features(r, c));
        for (std::size_t k = 0; k < vocabularies.size(); ++k) {
            const auto& vocab = vocabularies[k];
            const auto it = std::lower_bound(vocab.begin(), vocab.end(), ds.categorical[k][r]);
            if (it != vocab.end() && *it == ds.categorical[k][r]) out[c + static_cast<std::size_t>(it - vocab.begin())] = 1.0;
            c += vocab.size();
        }
    }
    if (task == TaskKind::Regression) {
        s.targets = Matrix(n, 1);
        for (std::size_t r = 0; r < n; ++r) s.targets(r, 0) = apply(target_stats, ds.target[r]);
    } else {
        for (double v : ds.target) s.labels.push_back(static_cast<std::size_t>(v));
    }
    return s;
}

nlohmann::json Preprocessor::to_json() const {
    nlohmann::json features = nlohmann::json::object();
    for (std::size_t c = 0; c < feature_names.size(); ++c) features[feature_names[c]] = stats_json(feature_stats[c]);
    nlohmann::json cats = nlohmann::json::object();
    for (std::size_t c = 0; c < categorical_names.size(); ++c) cats[categorical_names[c]] = vocabularies[c];
    nlohmann::json j{{"features", features}, {"categorical", cats}};
    if (task == TaskKind::Regression) j["target"] = stats_json(target_stats);
    return j;
}

Split split_and_fit(const TabularDataset& ds, double test_fraction, Rng& rng) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ParameterError("test fraction must lie in (0,1)");
    const std::size_t n = ds.rows();
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    if (n_test == 0 || n_test >= n) throw ParameterError("split leaves an empty train or test set");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const std::span<const std::size_t> all(order);

    Split s;
    s.train_raw = ds.take(all.subspan(n_test));
    s.test_raw = ds.take(all.first(n_test));
    s.preprocessor = Preprocessor::fit(s.train_raw);
    s.train = s.preprocessor.transform(s.train_raw);
    s.test = s.preprocessor.transform(s.test_raw);
    return s;
}

}  // namespace combu
