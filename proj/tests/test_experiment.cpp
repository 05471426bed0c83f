#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "combu/error.hpp"
#include "combu/experiment.hpp"
#include "combu/metrics.hpp"

using namespace combu;

namespace {

ExperimentConfig tiny(TaskKind task = TaskKind::Regression) {
    ExperimentConfig cfg;
    cfg.name = "tiny";
    cfg.dataset.generator = "ar";
    cfg.dataset.n = 300;
    cfg.task = task;
    cfg.n_bins = 3;
    cfg.schemes = {ActivationScheme::uniform(Activation::relu()), ActivationScheme::combu()};
    cfg.model_size = ModelSize::Small;
    cfg.train.epochs = 3;
    cfg.train.batch_size = 64;
    cfg.repeats = 3;
    cfg.seed = 5;
    return cfg;
}

RunRecord fake(const std::string& scheme, std::size_t repeat, double mae_v, bool diverged = false) {
    RunRecord r;
    r.scheme = scheme;
    r.repeat = repeat;
    r.diverged = diverged;
    r.metrics = {{"mae", diverged ? NAN : mae_v}, {"mse", diverged ? NAN : mae_v * mae_v}};
    return r;
}

RunReport fake_report(std::size_t repeats, std::vector<std::string> names) {
    RunReport rep;
    rep.config = tiny();
    rep.config.repeats = repeats;
    rep.config.schemes.clear();
    for (const auto& n : names) {
        auto s = ActivationScheme::uniform(Activation::relu());
        s.name = n;
        rep.config.schemes.push_back(s);
    }
    rep.metrics = task_metrics(TaskKind::Regression);
    return rep;
}

}  // namespace

TEST(Aggregate, StrictlyBetterSchemeRanksFirst) {
    auto rep = fake_report(3, {"a", "b"});
    for (std::size_t r = 0; r < 3; ++r) {
        rep.runs.push_back(fake("a", r, 0.1 + 0.01 * r));
        rep.runs.push_back(fake("b", r, 0.2 + 0.01 * r));
    }
    aggregate(rep);
    EXPECT_EQ(rep.find("a", "mae").avg_rank, 1.0);
    EXPECT_EQ(rep.find("b", "mae").avg_rank, 2.0);
    EXPECT_DOUBLE_EQ(rep.find("a", "mae").mean, 0.11);
}

TEST(Aggregate, SingleScheme) {
    auto rep = fake_report(2, {"only"});
    rep.runs = {fake("only", 0, 0.3), fake("only", 1, 0.5)};
    aggregate(rep);
    EXPECT_EQ(rep.find("only", "mae").avg_rank, 1.0);
    EXPECT_EQ(rep.find("only", "mse").avg_rank, 1.0);
    EXPECT_DOUBLE_EQ(rep.find("only", "mae").std, 0.1);
}

TEST(Aggregate, DivergedRunsExcluded) {
    auto rep = fake_report(2, {"a", "b"});
    rep.runs = {fake("a", 0, 0.1), fake("a", 1, 0.1, true), fake("b", 0, 0.2), fake("b", 1, 0.3)};
    aggregate(rep);
    EXPECT_EQ(rep.diverged, 1u);
    EXPECT_EQ(rep.find("a", "mae").runs, 1u);
    EXPECT_EQ(rep.find("a", "mae").mean, 0.1);
    EXPECT_EQ(rep.find("a", "mae").avg_rank, 1.0);
    EXPECT_EQ(rep.find("b", "mae").avg_rank, 1.5);
    for (const auto& s : rep.summary) {
        EXPECT_GE(s.std, 0.0);
        EXPECT_GE(s.avg_rank, 1.0);
        EXPECT_LE(s.avg_rank, 2.0);
    }
}

TEST(Aggregate, SummaryRecomputesFromRuns) {
    auto rep = fake_report(4, {"a", "b", "c"});
    Rng rng(1);
    for (const char* s : {"a", "b", "c"})
        for (std::size_t r = 0; r < 4; ++r) rep.runs.push_back(fake(s, r, rng.uniform01()));
    aggregate(rep);
    const auto j = nlohmann::json::parse(rep.to_json().dump());
    for (const auto& s : j.at("summary")) {
        std::vector<double> vals;
        for (const auto& r : j.at("runs"))
            if (r.at("scheme") == s.at("scheme")) vals.push_back(r.at("metrics").at(s.at("metric").get<std::string>()));
        const auto ms = mean_std(vals);
        EXPECT_EQ(ms.mean, s.at("mean").get<double>());
        EXPECT_EQ(ms.std, s.at("std").get<double>());
    }
}

TEST(Experiment, RegressionRunIsDeterministicAcrossJobs) {
    const auto cfg = tiny();
    const auto serial = run_experiment(cfg, 1);
    const auto parallel = run_experiment(cfg, 4);
    EXPECT_EQ(serial.to_json().dump(), parallel.to_json().dump());
    EXPECT_EQ(serial.summary_csv(), parallel.summary_csv());
    EXPECT_EQ(serial.runs.size(), 6u);
    EXPECT_EQ(serial.runs[0].seed, 5u);
    EXPECT_EQ(serial.runs[1].seed, 4u);  // 5 xor 1
    EXPECT_EQ(serial.summary_csv().substr(0, 32), "scheme,metric,mean,std,avg_rank\n");
}

TEST(Experiment, Classification) {
    const auto rep = run_experiment(tiny(TaskKind::Classification), 2);
    EXPECT_EQ(rep.metrics, (std::vector<std::string>{"accuracy", "f1"}));
    for (const auto& s : rep.summary) {
        EXPECT_GE(s.mean, 0.0);
        EXPECT_LE(s.mean, 1.0);
    }
}

TEST(Experiment, ConfigJsonRoundTrip) {
    const auto cfg = tiny();
    const nlohmann::json j = cfg;
    const auto back = j.get<ExperimentConfig>();
    EXPECT_EQ(nlohmann::json(back), j);
}

TEST(Experiment, ConfigFile) {
    const auto j = nlohmann::json::parse(R"({
      "defaults": {"dataset": {"generator": "gs", "n": 100}, "repeats": 2, "model_size": "small"},
      "experiments": [{"name": "a"}, {"name": "b", "task": "classification", "n_bins": 4,
                       "schemes": ["relu", "combu"], "dataset": {"generator": "ns"}}]
    })");
    const auto cfgs = parse_experiment_file(j);
    ASSERT_EQ(cfgs.size(), 2u);
    EXPECT_EQ(cfgs[0].schemes.size(), 7u);
    EXPECT_EQ(cfgs[0].repeats, 2u);
    EXPECT_EQ(cfgs[1].dataset.generator, "ns");
    EXPECT_EQ(cfgs[1].dataset.n, 100u);
    EXPECT_EQ(cfgs[1].task, TaskKind::Classification);
}

TEST(Experiment, ConfigErrors) {
    auto cfg = tiny();
    cfg.repeats = 0;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = tiny();
    cfg.schemes.clear();
    EXPECT_THROW(cfg.validate(), ParameterError);
    EXPECT_THROW(parse_experiment_file(nlohmann::json::parse(R"({"dataset": {"generator": "gs"}, "bogus": 1})")),
                 SchemaError);
    EXPECT_THROW(parse_experiment_file(nlohmann::json::parse(R"({"name": "no dataset"})")), SchemaError);
    EXPECT_THROW(parse_experiment_file(nlohmann::json::parse(R"({"dataset": {"generator": "zz"}})")), ParameterError);
}

TEST(Config, ShippedConfigsParse) {
    auto load = [](const char* name) {
        std::ifstream f(std::string(COMBU_CONFIG_DIR) + "/" + name);
        return parse_experiment_file(nlohmann::json::parse(f));
    };
    const auto three = load("gs_three_schemes.json");
    ASSERT_EQ(three.size(), 1u);
    EXPECT_EQ(three[0].schemes.size(), 3u);
    EXPECT_EQ(three[0].model_size, ModelSize::Large);
    EXPECT_EQ(three[0].train.epochs, 200u);

    const auto grid = load("full_grid.json");
    ASSERT_EQ(grid.size(), 8u);
    for (const auto& c : grid) {
        EXPECT_EQ(c.schemes.size(), 7u);
        EXPECT_EQ(c.repeats, 5u);
        EXPECT_EQ(c.dataset.n, 5000u);
    }
    EXPECT_EQ(grid[7].task, TaskKind::Classification);
    EXPECT_EQ(load("smoke.json").size(), 2u);
}
