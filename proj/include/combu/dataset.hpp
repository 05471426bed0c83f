#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "combu/linalg.hpp"
#include "combu/rng.hpp"
#include "combu/train.hpp"

namespace combu {

/// Raw tabular data before scaling and encoding.
struct TabularDataset {
    std::vector<std::string> feature_names;  // numeric columns
    Matrix features;                         // rows x feature_names.size()
    std::vector<std::string> categorical_names;
    std::vector<std::vector<std::string>> categorical;  // one vector per categorical column
    std::string target_name = "target";
    Vector target;  // value, or class index for classification
    TaskKind task = TaskKind::Regression;
    std::size_t n_classes = 0;
    std::vector<std::string> class_labels;  // original labels when read from text
    std::vector<double> bin_edges;          // set by make_classification

    // Generator-internal quantities that are not features (e.g. the sampled
    // mean of a GS row). Kept for checking; never fed to a model.
    std::map<std::string, Vector> latent;
    std::string generator;
    std::uint64_t seed = 0;

    std::size_t rows() const { return target.size(); }
    /// Rows in the given order, latent columns included.
    TabularDataset take(std::span<const std::size_t> rows) const;
    /// Throws SchemaError on ragged columns, NaN/Inf or invalid class indices.
    void validate() const;
};

// Straight-line target formulas shared by the generators.

/// Gaussian density at v using the sample mean and sample standard deviation
/// (divisor n - 1) of xs. nullopt when the standard deviation is zero.
std::optional<double> gaussian_target(std::span<const double> xs, double v);
/// k = A T^n exp(-Ea / (R T)), R = 8.314.
double arrhenius_rate(double n, double temperature, double activation_energy, double prefactor);
/// Speed of the 3D steady-state vortex solution.
double vortex_speed(double amplitude, double r, double x, double y, double z);
/// European call price with the standard normal CDF through erfc.
double black_scholes_call(double spot, double strike, double rate, double volatility, double maturity);
/// Put via parity: K e^{-r tau} - S + C.
double black_scholes_put(double spot, double strike, double rate, double volatility, double maturity);

inline constexpr double kGasConstant = 8.314;

/// GS: 9 features (x1..x8, v); latent mu, sigma, xbar, sx.
TabularDataset gen_gs(std::size_t n, Rng& rng);
/// AR: features n, T, Ea, A.
TabularDataset gen_ar(std::size_t n, Rng& rng);
/// NS: features A, r, x, y, z.
TabularDataset gen_ns(std::size_t n, Rng& rng);
/// BS: features sigma, tau, S, K, r; target is the put price; latent call.
TabularDataset gen_bs(std::size_t n, Rng& rng);

/// Dispatch by name ("gs", "ar", "ns", "bs"). Records name and seed.
TabularDataset generate_formula(const std::string& name, std::size_t n, std::uint64_t seed);
const std::vector<std::string>& formula_names();

/// Equal-frequency binning of a regression target into class indices.
/// Edges e_1 < ... < e_{k-1} are order statistics of the full target and each
/// bin is closed on the right: class = number of edges < value. A pile of
/// tied minimum targets (BS puts worth 0) then fills the first bin.
TabularDataset make_classification(const TabularDataset& ds, std::size_t n_bins);

/// Fitted on a training split only; frozen afterwards.
struct Preprocessor {
    struct ColumnStats {
        double mean = 0.0;
        double std = 1.0;
        bool scaled = true;  // false for constant columns, which pass through
    };

    std::vector<std::string> feature_names;
    std::vector<ColumnStats> feature_stats;
    std::vector<std::string> categorical_names;
    std::vector<std::vector<std::string>> vocabularies;  // sorted, per categorical column
    TaskKind task = TaskKind::Regression;
    std::size_t n_classes = 0;
    ColumnStats target_stats;

    static Preprocessor fit(const TabularDataset& train);
    /// Scaled numeric features followed by one-hot blocks; unseen categories
    /// encode as all zeros.
    Samples transform(const TabularDataset& ds) const;
    std::size_t encoded_width() const;

    nlohmann::json to_json() const;
};

struct Split {
    TabularDataset train_raw;
    TabularDataset test_raw;
    Samples train;
    Samples test;
    Preprocessor preprocessor;
};

/// Random row split (test size = round(n * test_fraction)), preprocessor fit
/// on the training rows.
Split split_and_fit(const TabularDataset& ds, double test_fraction, Rng& rng);

struct CsvSchema {
    std::string target;
    std::vector<std::string> categorical;
    TaskKind task = TaskKind::Regression;
};

/// RFC 4180 style CSV with a header row. Numbers are written in shortest
/// round-trip form.
void csv_write(const std::string& path, const TabularDataset& ds);
std::string csv_format(const TabularDataset& ds);

/// Throws ParseError (with row and column) on malformed fields and
/// SchemaError on a missing target column or empty values.
TabularDataset csv_read(const std::string& path, const CsvSchema& schema);
TabularDataset csv_parse(const std::string& text, const CsvSchema& schema);

}  // namespace combu
