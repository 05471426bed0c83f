#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "combu/dataset.hpp"
#include "combu/network.hpp"
#include "combu/train.hpp"

namespace combu {

/// Where the rows come from: a formula generator or a CSV file.
struct DatasetSpec {
    std::string generator;  // "gs", "ar", "ns", "bs"
    std::size_t n = 5000;
    std::string csv_path;
    CsvSchema csv;

    bool from_csv() const { return !csv_path.empty(); }
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSpec dataset;
    TaskKind task = TaskKind::Regression;
    std::size_t n_bins = 5;  // classification from a regression target
    std::vector<ActivationScheme> schemes;
    ModelSize model_size = ModelSize::Large;
    TrainConfig train;
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    std::string output;  // artifact directory; the CLI --out flag wins

    void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);

/// A config file holds one experiment or {"defaults": {...}, "experiments":
/// [...]} where each entry is merged over the defaults.
std::vector<ExperimentConfig> parse_experiment_file(const nlohmann::json& j);

struct RunRecord {
    std::string scheme;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    bool diverged = false;
    double final_train_loss = 0.0;
    std::map<std::string, double> metrics;
};

struct MetricSummary {
    std::string scheme;
    std::string metric;
    double mean = 0.0;
    double std = 0.0;
    double avg_rank = 0.0;
    std::size_t runs = 0;  // non-diverged runs behind the numbers
};

struct RunReport {
    ExperimentConfig config;
    std::vector<std::string> metrics;
    std::vector<RunRecord> runs;  // scheme-major, then repeat
    std::vector<MetricSummary> summary;
    std::size_t diverged = 0;

    const MetricSummary& find(const std::string& scheme, const std::string& metric) const;
    nlohmann::json to_json() const;
    /// scheme,metric,mean,std,avg_rank
    std::string summary_csv() const;
};

/// Metric names for a task and whether lower is better.
std::vector<std::string> task_metrics(TaskKind task);
bool lower_is_better(const std::string& metric);

/// Per-scheme mean and std over non-diverged runs; ranks are computed within
/// each repeat among the schemes that finished it and averaged per scheme.
void aggregate(RunReport& report);

/// Loads or generates the configured dataset, binning the target for
/// classification from a regression source.
TabularDataset load_dataset(const ExperimentConfig& cfg);

/// Trains one scheme on one repeat's split and scores the test rows. The
/// trained network and the fitted preprocessor are handed back when asked for.
RunRecord run_single(const ExperimentConfig& cfg, const TabularDataset& data, std::size_t scheme_index,
                     std::size_t repeat, LayeredNetwork* trained = nullptr, Preprocessor* preprocessor = nullptr);

using ProgressFn = std::function<void(const RunRecord&)>;

/// Every (scheme, repeat) pair runs as an independent job; `jobs` worker
/// threads share them. The report does not depend on `jobs`.
RunReport run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1, const ProgressFn& progress = {});

}  // namespace combu
