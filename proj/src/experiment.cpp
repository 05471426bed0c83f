#include "combu/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "combu/error.hpp"
#include "combu/metrics.hpp"

namespace combu {

namespace {

std::string task_name(TaskKind t) { return t == TaskKind::Regression ? "regression" : "classification"; }

TaskKind parse_task(const std::string& s) {
    if (s == "regression") return TaskKind::Regression;
    if (s == "classification") return TaskKind::Classification;
    throw ParseError("unknown task '" + s + "' (expected regression or classification)");
}

nlohmann::json nan_to_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void ExperimentConfig::validate() const {
    if (schemes.empty()) throw ParameterError("experiment '" + name + "': no activation schemes");
    if (repeats < 1) throw ParameterError("experiment '" + name + "': repeats must be at least 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ParameterError("test_fraction must lie in (0,1)");
    if (dataset.from_csv()) {
        if (dataset.csv.target.empty()) throw ParameterError("csv dataset needs a target column");
    } else {
        const auto& names = formula_names();
        if (std::find(names.begin(), names.end(), dataset.generator) == names.end())
            throw ParameterError("unknown generator '" + dataset.generator + "'");
        if (dataset.n < 2) throw ParameterError("dataset needs at least 2 rows");
    }
    if (task == TaskKind::Classification && n_bins < 2)
        throw ParameterError("n_bins must be at least 2");
    std::vector<std::string> seen;
    for (const auto& s : schemes) {
        if (std::find(seen.begin(), seen.end(), s.name) != seen.end())
            throw ParameterError("duplicate scheme name '" + s.name + "'");
        seen.push_back(s.name);
        if (const auto* r = std::get_if<Ratios>(&s.kind)) validate_ratios(*r);
        else std::get<Activation>(s.kind).validate();
    }
    train.validate();
}

void to_json(nlohmann::json& j, const ExperimentConfig& cfg) {
    nlohmann::json ds;
    if (cfg.dataset.from_csv()) {
        ds = {{"csv", cfg.dataset.csv_path},
              {"target", cfg.dataset.csv.target},
              {"categorical", cfg.dataset.csv.categorical},
              {"task", task_name(cfg.dataset.csv.task)}};
    } else {
        ds = {{"generator", cfg.dataset.generator}, {"n", cfg.dataset.n}};
    }
    nlohmann::json schemes = nlohmann::json::array();
    for (const auto& s : cfg.schemes) schemes.push_back(s.to_json());
    j = {{"name", cfg.name},
         {"dataset", ds},
         {"task", task_name(cfg.task)},
         {"n_bins", cfg.n_bins},
         {"schemes", schemes},
         {"model_size", to_string(cfg.model_size)},
         {"train",
          {{"batch_size", cfg.train.batch_size},
           {"epochs", cfg.train.epochs},
           {"dropout", cfg.train.dropout_rate},
           {"learning_rate", cfg.train.adam.learning_rate},
           {"beta1", cfg.train.adam.beta1},
           {"beta2", cfg.train.adam.beta2},
           {"epsilon", cfg.train.adam.epsilon}}},
         {"repeats", cfg.repeats},
         {"seed", cfg.seed},
         {"test_fraction", cfg.test_fraction}};
    if (!cfg.output.empty()) j["output"] = cfg.output;
}

void from_json(const nlohmann::json& j, ExperimentConfig& cfg) {
    if (!j.is_object()) throw SchemaError("experiment config must be a JSON object");
    static const std::vector<std::string> known{"name",   "dataset", "task",    "n_bins",        "schemes", "model_size",
                                                "train",  "repeats", "seed",    "test_fraction", "output"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw SchemaError("experiment config: unknown key '" + key + "'");

    cfg = ExperimentConfig{};
    cfg.name = j.value("name", cfg.name);
    const auto& ds = j.at("dataset");
    if (ds.contains("csv")) {
        cfg.dataset.csv_path = ds.at("csv").get<std::string>();
        cfg.dataset.csv.target = ds.at("target").get<std::string>();
        cfg.dataset.csv.categorical = ds.value("categorical", std::vector<std::string>{});
        cfg.dataset.csv.task = parse_task(ds.value("task", std::string("regression")));
    } else {
        cfg.dataset.generator = ds.at("generator").get<std::string>();
        cfg.dataset.n = ds.value("n", cfg.dataset.n);
    }
    cfg.task = parse_task(j.value("task", task_name(cfg.dataset.csv.task)));
    cfg.n_bins = j.value("n_bins", cfg.n_bins);
    if (j.contains("schemes")) {
        for (const auto& s : j.at("schemes")) cfg.schemes.push_back(ActivationScheme::from_json(s));
    } else {
        cfg.schemes = benchmark_schemes();
    }
    cfg.model_size = parse_model_size(j.value("model_size", std::string("large")));
    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.dropout_rate = t.value("dropout", cfg.train.dropout_rate);
        cfg.train.adam.learning_rate = t.value("learning_rate", cfg.train.adam.learning_rate);
        cfg.train.adam.beta1 = t.value("beta1", cfg.train.adam.beta1);
        cfg.train.adam.beta2 = t.value("beta2", cfg.train.adam.beta2);
        cfg.train.adam.epsilon = t.value("epsilon", cfg.train.adam.epsilon);
    }
    cfg.repeats = j.value("repeats", cfg.repeats);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
    cfg.output = j.value("output", cfg.output);
    cfg.validate();
}

std::vector<ExperimentConfig> parse_experiment_file(const nlohmann::json& j) {
    std::vector<ExperimentConfig> out;
    try {
        if (j.is_object() && j.contains("experiments")) {
            const nlohmann::json defaults = j.value("defaults", nlohmann::json::object());
            for (const auto& entry : j.at("experiments")) {
                nlohmann::json merged = defaults;
                merged.merge_patch(entry);
                out.push_back(merged.get<ExperimentConfig>());
            }
            if (out.empty()) throw SchemaError("config lists no experiments");
        } else {
            out.push_back(j.get<ExperimentConfig>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("experiment config: ") + e.what());
    }
    return out;
}

std::vector<std::string> task_metrics(TaskKind task) {
    if (task == TaskKind::Regression) return {"mae", "mse"};
    return {"accuracy", "f1"};
}

bool lower_is_better(const std::string& metric) { return metric == "mae" || metric == "mse"; }

const MetricSummary& RunReport::find(const std::string& scheme, const std::string& metric) const {
    for (const auto& s : summary)
        if (s.scheme == scheme && s.metric == metric) return s;
    throw ParameterError("no summary for " + scheme + "/" + metric);
}

void aggregate(RunReport& report) {
    const auto& schemes = report.config.schemes;
    report.summary.clear();
    report.diverged = static_cast<std::size_t>(
        std::count_if(report.runs.begin(), report.runs.end(), [](const RunRecord& r) { return r.diverged; }));

    // rank_sum[scheme][metric]
    std::vector<std::vector<double>> rank_sum(schemes.size(), std::vector<double>(report.metrics.size(), 0.0));
    std::vector<std::vector<std::size_t>> rank_n(schemes.size(), std::vector<std::size_t>(report.metrics.size(), 0));
    auto scheme_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < schemes.size(); ++i)
            if (schemes[i].name == name) return i;
        throw InternalError("run for unknown scheme " + name);
    };

    for (std::size_t rep = 0; rep < report.config.repeats; ++rep) {
        for (std::size_t m = 0; m < report.metrics.size(); ++m) {
            std::vector<double> values;
            std::vector<std::size_t> who;
            for (const auto& run : report.runs) {
                if (run.repeat != rep || run.diverged) continue;
                values.push_back(run.metrics.at(report.metrics[m]));
                who.push_back(scheme_index(run.scheme));
            }
            const auto ranks = rank_values(values, lower_is_better(report.metrics[m]));
            for (std::size_t k = 0; k < who.size(); ++k) {
                rank_sum[who[k]][m] += ranks[k];
                ++rank_n[who[k]][m];
            }
        }
    }

    for (std::size_t s = 0; s < schemes.size(); ++s) {
        for (std::size_t m = 0; m < report.metrics.size(); ++m) {
            MetricSummary ms;
            ms.scheme = schemes[s].name;
            ms.metric = report.metrics[m];
            std::vector<double> values;
            for (const auto& run : report.runs)
                if (run.scheme == ms.scheme && !run.diverged) values.push_back(run.metrics.at(ms.metric));
            ms.runs = values.size();
            if (values.empty()) {
                ms.mean = ms.std = ms.avg_rank = std::nan("");
            } else {
                const auto [mean, sd] = mean_std(values);
                ms.mean = mean;
                ms.std = sd;
                ms.avg_rank = rank_sum[s][m] / static_cast<double>(rank_n[s][m]);
            }
            report.summary.push_back(ms);
        }
    }
}

nlohmann::json RunReport::to_json() const {
    nlohmann::json runs_j = nlohmann::json::array();
    for (const auto& r : runs) {
        nlohmann::json m = nlohmann::json::object();
        for (const auto& [k, v] : r.metrics) m[k] = nan_to_null(v);
        runs_j.push_back({{"scheme", r.scheme},
                          {"repeat", r.repeat},
                          {"seed", r.seed},
                          {"diverged", r.diverged},
                          {"final_train_loss", nan_to_null(r.final_train_loss)},
                          {"metrics", m}});
    }
    nlohmann::json sum_j = nlohmann::json::array();
    for (const auto& s : summary)
        sum_j.push_back({{"scheme", s.scheme},
                         {"metric", s.metric},
                         {"mean", nan_to_null(s.mean)},
                         {"std", nan_to_null(s.std)},
                         {"avg_rank", nan_to_null(s.avg_rank)},
                         {"runs", s.runs}});
    return {{"config", config}, {"metrics", metrics}, {"runs", runs_j}, {"summary", sum_j}, {"diverged", diverged}};
}

std::string RunReport::summary_csv() const {
    auto num = [](double v) {
        if (!std::isfinite(v)) return std::string("nan");
        return nlohmann::json(v).dump();
    };
    std::string out = "scheme,metric,mean,std,avg_rank\n";
    for (const auto& s : summary)
        out += s.scheme + "," + s.metric + "," + num(s.mean) + "," + num(s.std) + "," + num(s.avg_rank) + "\n";
    return out;
}

TabularDataset load_dataset(const ExperimentConfig& cfg) {
    TabularDataset ds = cfg.dataset.from_csv() ? csv_read(cfg.dataset.csv_path, cfg.dataset.csv)
                                               : generate_formula(cfg.dataset.generator, cfg.dataset.n, cfg.seed);
    if (cfg.task == TaskKind::Classification && ds.task == TaskKind::Regression)
        ds = make_classification(ds, cfg.n_bins);
    if (cfg.task == TaskKind::Regression && ds.task == TaskKind::Classification)
        throw ParameterError("cannot run a regression task on a classification dataset");
    return ds;
}

RunRecord run_single(const ExperimentConfig& cfg, const TabularDataset& data, std::size_t scheme_index,
                     std::size_t repeat, LayeredNetwork* trained, Preprocessor* preprocessor) {
    const ActivationScheme& scheme = cfg.schemes.at(scheme_index);
    RunRecord rec;
    rec.scheme = scheme.name;
    rec.repeat = repeat;
    rec.seed = cfg.seed ^ static_cast<std::uint64_t>(repeat);

    Rng root(rec.seed);
    Rng split_rng = root.child(0);
    Rng model_rng = root.child(1);
    const Split split = split_and_fit(data, cfg.test_fraction, split_rng);

    const bool classify = data.task == TaskKind::Classification;
    LayeredNetwork net = build_benchmark_mlp(split.train.inputs.cols(), split.train.output_dim(), cfg.model_size, scheme,
                                         model_rng, classify ? Head::Softmax : Head::Identity);
    TrainConfig tc = cfg.train;
    tc.seed = root.child(2).next_u64();
    TrainResult result = train(std::move(net), split.train, tc);
    rec.final_train_loss = result.loss_curve.empty() ? std::nan("") : result.loss_curve.back();
    rec.diverged = result.diverged;

    const auto metrics = task_metrics(data.task);
    if (!rec.diverged) {
        const Matrix out = predict(result.net, split.test.inputs);
        if (!std::all_of(out.data().begin(), out.data().end(), [](double v) { return std::isfinite(v); }))
            rec.diverged = true;
        else if (classify) {
            const auto guess = argmax_rows(out);
            rec.metrics["accuracy"] = accuracy(guess, split.test.labels);
            rec.metrics["f1"] = macro_f1(guess, split.test.labels, data.n_classes);
        } else {
            rec.metrics["mae"] = mae(out.data(), split.test.targets.data());
            rec.metrics["mse"] = mse(out.data(), split.test.targets.data());
        }
    }
    if (rec.diverged)
        for (const auto& m : metrics) rec.metrics[m] = std::nan("");
    if (trained) *trained = std::move(result.net);
    if (preprocessor) *preprocessor = split.preprocessor;
    return rec;
}

RunReport run_experiment(const ExperimentConfig& cfg, std::size_t jobs, const ProgressFn& progress) {
    cfg.validate();
    const TabularDataset data = load_dataset(cfg);

    RunReport report;
    report.config = cfg;
    report.metrics = task_metrics(data.task);
    const std::size_t n_tasks = cfg.schemes.size() * cfg.repeats;
    report.runs.resize(n_tasks);

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= n_tasks) return;
            {
                std::lock_guard lock(mu);
                if (failure) return;
            }
            try {
                RunRecord rec = run_single(cfg, data, t / cfg.repeats, t % cfg.repeats);
                std::lock_guard lock(mu);
                if (progress) progress(rec);
                report.runs[t] = std::move(rec);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    jobs = std::clamp<std::size_t>(jobs, 1, n_tasks);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    aggregate(report);
    return report;
}

}  // namespace combu
