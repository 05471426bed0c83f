#include "combu/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "combu/compiler.hpp"
#include "combu/dataset.hpp"
#include "combu/error.hpp"
#include "combu/experiment.hpp"
#include "combu/expr.hpp"

namespace combu::cli {

namespace fs = std::filesystem;

namespace {

// Bad invocation that CLI11 cannot see, such as an unreadable config.
struct UsageError : Error {
    using Error::Error;
};

std::string read_text(const std::string& path, bool usage) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        if (usage) throw UsageError("cannot open '" + path + "'");
        throw SchemaError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

nlohmann::json read_json(const std::string& path, bool usage) {
    const auto text = read_text(path, usage);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        if (usage) throw UsageError("'" + path + "' is not valid JSON: " + e.what());
        throw ParseError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<Bounds> load_bounds(const std::string& path, const Expr& ast) {
    return bounds_from_json(read_json(path, false), arity(ast));
}

std::string runs_csv(const RunReport& report) {
    std::string out = "scheme,repeat,seed,diverged";
    for (const auto& m : report.metrics) out += "," + m;
    out += "\n";
    for (const auto& r : report.runs) {
        out += r.scheme + "," + std::to_string(r.repeat) + "," + std::to_string(r.seed) + "," +
               (r.diverged ? "1" : "0");
        for (const auto& m : report.metrics) {
            const double v = r.metrics.at(m);
            out += "," + (std::isfinite(v) ? nlohmann::json(v).dump() : std::string("nan"));
        }
        out += "\n";
    }
    return out;
}

struct GenerateArgs {
    std::string name;
    std::size_t n = 5000;
    double test_fraction = 0.2;
    std::size_t bins = 0;
};

int cmd_generate(const GenerateArgs& a, std::uint64_t seed, const fs::path& out_dir, std::ostream& out) {
    TabularDataset ds = generate_formula(a.name, a.n, seed);
    if (a.bins > 0) ds = make_classification(ds, a.bins);
    Rng split_rng = Rng(seed).child(0);
    const Split split = split_and_fit(ds, a.test_fraction, split_rng);

    const fs::path train_path = out_dir / (a.name + "_train.csv");
    const fs::path test_path = out_dir / (a.name + "_test.csv");
    write_text(train_path, csv_format(split.train_raw));
    write_text(test_path, csv_format(split.test_raw));
    nlohmann::json meta{{"generator", a.name},
                        {"seed", seed},
                        {"rows", ds.rows()},
                        {"train_rows", split.train_raw.rows()},
                        {"test_rows", split.test_raw.rows()},
                        {"test_fraction", a.test_fraction},
                        {"features", ds.feature_names},
                        {"target", ds.target_name},
                        {"task", ds.task == TaskKind::Regression ? "regression" : "classification"},
                        {"bin_edges", ds.bin_edges},
                        {"scaler", split.preprocessor.to_json()}};
    write_json(out_dir / "meta.json", meta);
    out << "wrote " << train_path.string() << " (" << split.train_raw.rows() << " rows), " << test_path.string()
        << " (" << split.test_raw.rows() << " rows)\n";
    return kOk;
}

struct TrainArgs {
    std::string generator;
    std::size_t n = 5000;
    std::string csv;
    std::string target;
    std::vector<std::string> categorical;
    std::string task = "regression";
    std::size_t bins = 5;
    std::string scheme = "combu";
    std::string size = "small";
    std::size_t epochs = 200;
    std::size_t batch = 500;
    double lr = 5e-4;
    double dropout = 0.1;
    double test_fraction = 0.2;
};

int cmd_train(const TrainArgs& a, std::uint64_t seed, const fs::path& out_dir, std::ostream& out) {
    nlohmann::json cfg_j{{"name", "train"},
                         {"task", a.task},
                         {"n_bins", a.bins},
                         {"schemes", nlohmann::json::array({a.scheme})},
                         {"model_size", a.size},
                         {"train",
                          {{"batch_size", a.batch}, {"epochs", a.epochs}, {"learning_rate", a.lr}, {"dropout", a.dropout}}},
                         {"repeats", 1},
                         {"seed", seed},
                         {"test_fraction", a.test_fraction}};
    if (!a.csv.empty()) {
        cfg_j["dataset"] = {{"csv", a.csv}, {"target", a.target}, {"categorical", a.categorical}, {"task", a.task}};
    } else {
        if (a.generator.empty()) throw UsageError("train needs --generator or --csv");
        cfg_j["dataset"] = {{"generator", a.generator}, {"n", a.n}};
    }
    ExperimentConfig cfg;
    try {
        cfg = cfg_j.get<ExperimentConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(e.what());
    }

    const TabularDataset data = load_dataset(cfg);
    LayeredNetwork net;
    Preprocessor pre;
    const RunRecord rec = run_single(cfg, data, 0, 0, &net, &pre);

    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [k, v] : rec.metrics) metrics[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    write_json(out_dir / "network.json", net);
    write_json(out_dir / "train.json", {{"config", cfg},
                                        {"seed", rec.seed},
                                        {"diverged", rec.diverged},
                                        {"final_train_loss", rec.final_train_loss},
                                        {"metrics", metrics},
                                        {"preprocessor", pre.to_json()}});
    out << cfg.schemes.front().name << ":";
    for (const auto& [k, v] : rec.metrics) out << " " << k << "=" << v;
    out << (rec.diverged ? " (diverged)" : "") << "\n";
    return rec.diverged ? kDiverged : kOk;
}

int cmd_compile(const std::string& expr_path, const std::string& bounds_path, const fs::path& out_dir,
                std::ostream& out) {
    const ExprPtr ast = parse_expr(read_text(expr_path, false));
    const auto bounds = load_bounds(bounds_path, *ast);
    const LayeredNetwork net = compile(ast, bounds);
    write_json(out_dir / "network.json", net);
    out << "compiled " << to_sexpr(*ast) << " into " << net.depth() << " layers, " << net.parameter_count()
        << " parameters\n";
    return kOk;
}

int cmd_verify(const std::string& net_path, const std::string& expr_path, const std::string& bounds_path,
               std::size_t samples, double tol, std::uint64_t seed, const fs::path& out_dir, bool write,
               std::ostream& out, std::ostream& err) {
    LayeredNetwork net;
    try {
        net = read_json(net_path, false).get<LayeredNetwork>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("'" + net_path + "': " + e.what());
    }
    const ExprPtr ast = parse_expr(read_text(expr_path, false));
    const auto bounds = load_bounds(bounds_path, *ast);
    Rng rng(seed);
    const double max_err = verify(net, *ast, bounds, samples, rng);
    const bool pass = max_err <= tol;
    if (write)
        write_json(out_dir / "verify.json", {{"expression", to_sexpr(*ast)},
                                             {"samples", samples},
                                             {"seed", seed},
                                             {"max_rel_error", max_err},
                                             {"tolerance", tol},
                                             {"pass", pass}});
    out << "max relative error " << max_err << " over " << samples << " samples\n";
    if (!pass) {
        err << "error: exceeds tolerance " << tol << "\n";
        return kData;
    }
    return kOk;
}

int cmd_bench(const std::string& config_path, std::size_t repeats, std::optional<std::uint64_t> seed,
              std::size_t jobs, std::size_t max_diverged, std::optional<fs::path> out_dir, bool quiet,
              std::ostream& out, std::ostream& err) {
    std::vector<ExperimentConfig> configs;
    try {
        configs = parse_experiment_file(read_json(config_path, true));
    } catch (const SchemaError& e) {
        throw UsageError(e.what());
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }

    std::size_t diverged = 0;
    for (auto& cfg : configs) {
        if (repeats > 0) cfg.repeats = repeats;
        if (seed) cfg.seed = *seed;
        const fs::path dir = out_dir ? *out_dir : fs::path(cfg.output.empty() ? "." : cfg.output);
        auto progress = [&](const RunRecord& r) {
            if (quiet) return;
            err << cfg.name << " " << r.scheme << " repeat " << r.repeat;
            for (const auto& [k, v] : r.metrics) err << " " << k << "=" << v;
            err << (r.diverged ? " diverged" : "") << "\n";
        };
        const RunReport report = run_experiment(cfg, jobs, progress);
        diverged += report.diverged;

        write_json(dir / (cfg.name + "_report.json"), report.to_json());
        write_text(dir / (cfg.name + "_summary.csv"), report.summary_csv());
        write_text(dir / (cfg.name + "_runs.csv"), runs_csv(report));
        out << "# " << cfg.name << "\n" << report.summary_csv();
    }
    if (diverged > max_diverged) {
        err << "warning: " << diverged << " diverged runs (allowed " << max_diverged << ")\n";
        return kDiverged;
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"CombU activation benchmark and expression-to-network compiler", "combu"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string out_dir = ".";

    auto* gen = app.add_subcommand("generate", "Write a formula dataset as train/test CSV plus meta.json");
    GenerateArgs ga;
    gen->add_option("name", ga.name, "gs, ar, ns or bs")->required()->check(CLI::IsMember(formula_names()));
    gen->add_option("--n", ga.n, "Rows")->capture_default_str();
    gen->add_option("--test-fraction", ga.test_fraction)->capture_default_str();
    gen->add_option("--bins", ga.bins, "Bin the target into this many classes (0 keeps regression)");
    gen->add_option("--seed", seed)->capture_default_str();
    gen->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* tr = app.add_subcommand("train", "Train one scheme on one dataset");
    TrainArgs ta;
    auto* tr_gen = tr->add_option("--generator", ta.generator)->check(CLI::IsMember(formula_names()));
    tr->add_option("--n", ta.n)->capture_default_str();
    tr->add_option("--csv", ta.csv)->check(CLI::ExistingFile)->excludes(tr_gen);
    tr->add_option("--target", ta.target);
    tr->add_option("--categorical", ta.categorical)->delimiter(',');
    tr->add_option("--task", ta.task)->check(CLI::IsMember({"regression", "classification"}))->capture_default_str();
    tr->add_option("--bins", ta.bins)->capture_default_str();
    tr->add_option("--scheme", ta.scheme, "Activation name, e.g. relu, elu(0.5), combu")->capture_default_str();
    tr->add_option("--size", ta.size)->check(CLI::IsMember({"small", "large"}))->capture_default_str();
    tr->add_option("--epochs", ta.epochs)->capture_default_str();
    tr->add_option("--batch-size", ta.batch)->capture_default_str();
    tr->add_option("--lr", ta.lr)->capture_default_str();
    tr->add_option("--dropout", ta.dropout)->capture_default_str();
    tr->add_option("--test-fraction", ta.test_fraction)->capture_default_str();
    tr->add_option("--seed", seed)->capture_default_str();
    tr->add_option("--out", out_dir)->capture_default_str();

    auto* comp = app.add_subcommand("compile", "Compile an s-expression into a network JSON");
    std::string expr_path, bounds_path;
    comp->add_option("expr", expr_path, "Expression file")->required();
    comp->add_option("--bounds", bounds_path, "Variable bounds JSON")->required();
    comp->add_option("--out", out_dir)->capture_default_str();

    auto* ver = app.add_subcommand("verify", "Check a compiled network against the expression interpreter");
    std::string net_path;
    std::size_t samples = 10000;
    double tol = 1e-6;
    ver->add_option("network", net_path, "Network JSON")->required();
    ver->add_option("expr", expr_path, "Expression file")->required();
    ver->add_option("--bounds", bounds_path)->required();
    ver->add_option("--samples", samples)->capture_default_str();
    ver->add_option("--tol", tol)->capture_default_str();
    ver->add_option("--seed", seed)->capture_default_str();
    auto* ver_out = ver->add_option("--out", out_dir, "Also write verify.json here");

    auto* bench = app.add_subcommand("bench", "Run experiments from a config file");
    std::string config_path;
    std::size_t repeats = 0, jobs = 1, max_diverged = 0;
    bool quiet = false;
    bench->add_option("--config", config_path)->required();
    bench->add_option("--repeats", repeats, "Override the configured repeat count");
    auto* bench_seed = bench->add_option("--seed", seed, "Override the configured base seed");
    bench->add_option("--jobs", jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    bench->add_option("--max-diverged", max_diverged)->capture_default_str();
    auto* bench_out = bench->add_option("--out", out_dir, "Output directory (default: the config's output)");
    bench->add_flag("--quiet", quiet, "No per-run progress");

    std::vector<const char*> argv{"combu"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*gen) return cmd_generate(ga, seed, out_dir, out);
        if (*tr) return cmd_train(ta, seed, out_dir, out);
        if (*comp) return cmd_compile(expr_path, bounds_path, out_dir, out);
        if (*ver) return cmd_verify(net_path, expr_path, bounds_path, samples, tol, seed, out_dir, ver_out->count() > 0, out, err);
        if (*bench)
            return cmd_bench(config_path, repeats,
                             bench_seed->count() > 0 ? std::optional<std::uint64_t>(seed) : std::nullopt, jobs, max_diverged,
                             bench_out->count() > 0 ? std::optional<fs::path>(out_dir) : std::nullopt, quiet, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}

}  // namespace combu::cli
