#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rnnsamp/csv.hpp"
#include "rnnsamp/experiment.hpp"
#include "rnnsamp/parallel.hpp"
#include "rnnsamp/sampling.hpp"
#include "rnnsamp/serialize.hpp"
#include "rnnsamp/timeseries.hpp"
#include "rnnsamp/trainer.hpp"
#include "rnnsamp/weights_io.hpp"

namespace rnnsamp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataOptions {
    std::string path;
    std::string targets;
    std::string inputs;
    bool scale = false;
    double split_fraction = 0.8;

    void add_to(CLI::App& app) {
        app.add_option("--data", path, "Input CSV (header row, one row per timestep)")->required();
        app.add_option("--targets", targets, "Comma-separated target column names");
        app.add_option("--inputs", inputs, "Comma-separated input column names (default: non-target columns)");
        app.add_flag("--scale", scale, "MinMax-scale every column into [0,1]");
        app.add_option("--split-fraction", split_fraction, "Chronological train fraction")->default_val(0.8);
    }

    json to_json() const {
        return {{"data", path}, {"targets", targets}, {"inputs", inputs}, {"scale", scale},
                {"split_fraction", split_fraction}};
    }
};

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    for (auto& cell : csv::split_line(s)) {
        if (!cell.empty()) out.push_back(cell);
    }
    return out;
}

TimeSeries load_series(const std::string& path, const std::string& targets, const std::string& inputs, bool scale) {
    TimeSeries ts = load_csv(path, split_names(targets));
    for (const auto& name : split_names(inputs)) {
        const auto it = std::find(ts.column_names.begin(), ts.column_names.end(), name);
        if (it == ts.column_names.end()) throw ParameterError("unknown input column \"" + name + "\"");
        ts.input_columns.push_back(static_cast<std::size_t>(it - ts.column_names.begin()));
    }
    if (scale) ts = minmax_scale(ts).first;
    ts.validate();
    return ts;
}

TimeSeries load_series(const DataOptions& d) { return load_series(d.path, d.targets, d.inputs, d.scale); }

std::string config_comment(const std::string& command, const json& config) {
    return "rnnsamp " + command + "\nconfig: " + config.dump();
}

// ---------------------------------------------------------------------------
// --config support: a flat JSON object is turned into flags placed before the
// user's own arguments, so later (command line) values win.
// ---------------------------------------------------------------------------

std::vector<std::string> config_to_args(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ParseError("config file must hold a JSON object");
    std::vector<std::string> args;
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_string()) {
            args.push_back(flag);
            args.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            args.push_back(flag);
            args.push_back(value.is_number_float() ? csv::format_double(value.get<double>()) : value.dump());
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& e : value) {
                if (!joined.empty()) joined += ",";
                joined += e.is_string() ? e.get<std::string>() : e.dump();
            }
            args.push_back(flag);
            args.push_back(joined);
        } else {
            throw ParseError("config key \"" + key + "\" has an unsupported value");
        }
    }
    return args;
}

std::vector<std::string> expand_config(std::vector<std::string> args) {
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string path;
        std::size_t consumed = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            consumed = 2;
        } else if (args[i].starts_with("--config=")) {
            path = args[i].substr(9);
            consumed = 1;
        } else {
            continue;
        }
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                   args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
        // Injected right after the subcommand name.
        static const std::vector<std::string> commands{"gen-data", "sample", "train", "experiment"};
        std::size_t insert_at = 1;
        while (insert_at < args.size() &&
               std::find(commands.begin(), commands.end(), args[insert_at]) == commands.end()) {
            ++insert_at;
        }
        insert_at = std::min(insert_at + 1, args.size());
        const auto extra = config_to_args(path);
        args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at), extra.begin(), extra.end());
        break;
    }
    return args;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct GenDataOptions {
    SineParams sine;
    std::string output;
};

int cmd_gen_data(const GenDataOptions& o, std::ostream& out) {
    const TimeSeries ts = generate_sine(o.sine);
    const json config = {{"amplitude", o.sine.amplitude}, {"frequency", o.sine.frequency},
                         {"phase", o.sine.phase},         {"rate", o.sine.rate},
                         {"t_start", o.sine.t_start},     {"t_end", o.sine.t_end}};
    write_csv(o.output, ts, config_comment("gen-data", config));
    out << "wrote " << ts.length() << " samples to " << o.output << '\n';
    return kOk;
}

struct SampleOptions {
    DataOptions data;
    std::string nc;
    std::string lb = "30";
    std::string activation = "tanh";
    std::size_t samples = 1000;
    double threshold = 0.01;
    std::uint64_t seed = 0;
    std::string eval_split = "test";
    std::string out_dir;
    bool export_best = false;
};

int cmd_sample(const SampleOptions& o, unsigned threads, std::ostream& out, std::ostream& err) {
    const TimeSeries ts = load_series(o.data);
    SamplingConfig cfg;
    cfg.max_samples = o.samples;
    cfg.threshold = o.threshold;
    cfg.seed = o.seed;
    cfg.eval_split = parse_eval_split(o.eval_split);
    cfg.validate();

    GridSpec grid{parse_int_range(o.nc), parse_int_range(o.lb), parse_activation(o.activation)};
    const SplitsByLookBack data(ts, o.data.split_fraction, grid.lb);
    const auto archs = grid.expand(data.n_features(), data.n_outputs());
    const auto outcomes = sample_architectures(archs, data, cfg, threads);
    const auto ranking = rank_architectures(outcomes);

    // The thread count is deliberately absent: outputs do not depend on it.
    json config = o.data.to_json();
    config["nc"] = o.nc;
    config["lb"] = o.lb;
    config["activation"] = o.activation;
    config["samples"] = o.samples;
    config["threshold"] = o.threshold;
    config["seed"] = o.seed;
    config["eval_split"] = o.eval_split;
    const std::string comment = config_comment("sample", config);

    fs::create_directories(o.out_dir);
    {
        std::ofstream f(fs::path(o.out_dir) / "outcomes.csv");
        if (!f) throw IoError("cannot write outcomes.csv in " + o.out_dir);
        write_outcomes_csv(f, outcomes, comment);
    }
    {
        std::ofstream f(fs::path(o.out_dir) / "ranking.csv");
        if (!f) throw IoError("cannot write ranking.csv in " + o.out_dir);
        write_ranking_csv(f, outcomes, ranking, comment);
    }

    std::size_t failures = 0;
    for (const auto& oc : outcomes) {
        if (!oc.ok) {
            ++failures;
            err << "architecture " << oc.arch_id << " (nc=" << oc.arch.nc << ", lb=" << oc.arch.lb
                << "): " << oc.diagnostic << '\n';
            continue;
        }
        if (o.export_best) {
            json meta = {{"source", "best sampled weights"},
                         {"arch_id", oc.arch_id},
                         {"best_mae", oc.best_mae},
                         {"best_sample_seed", oc.best_sample_seed},
                         {"config", config}};
            save_weights(fs::path(o.out_dir) / ("best_" + std::to_string(oc.arch_id) + ".w"),
                         sample_weights(oc.arch, oc.best_sample_seed), meta);
        }
    }
    out << "sampled " << outcomes.size() << " architectures into " << o.out_dir << '\n';
    return failures > 0 ? kPartialFailure : kOk;
}

struct TrainOptions {
    DataOptions data;
    std::size_t nc = 0;
    std::size_t lb = 0;
    std::string activation = "tanh";
    AdamConfig adam;
    std::string init_weights;
    std::string output;
    std::string export_weights;
};

int cmd_train(const TrainOptions& o, std::ostream& out) {
    const TimeSeries ts = load_series(o.data);
    const ArchitectureSpec arch{o.nc, o.lb, ts.resolved_inputs().size(), ts.target_columns.size(),
                                parse_activation(o.activation)};
    arch.validate();
    const DatasetSplits splits = make_splits(window(ts, o.lb), o.data.split_fraction);

    TrainingRun run;
    if (!o.init_weights.empty()) {
        const WeightSet init = load_weights(o.init_weights);
        if (!(init.arch == arch)) {
            throw ParameterError("initial weights in " + o.init_weights +
                                 " were built for a different architecture");
        }
        run = train(arch, splits.train, splits.test, o.adam, init);
    } else {
        run = train(arch, splits.train, splits.test, o.adam);
    }

    json config = o.data.to_json();
    config["nc"] = o.nc;
    config["lb"] = o.lb;
    config["activation"] = o.activation;
    config["adam"] = o.adam;
    config["init_weights"] = o.init_weights;
    const json doc = {{"format", "rnnsamp-training-run"}, {"version", 1}, {"config", config}, {"run", run}};
    {
        std::ofstream f(o.output);
        if (!f) throw IoError("cannot write " + o.output);
        f << doc.dump(2) << '\n';
    }
    if (!o.export_weights.empty()) {
        save_weights(o.export_weights, run.final_weights, {{"source", "trained weights"}, {"config", config}});
    }
    out << "trained nc=" << o.nc << " lb=" << o.lb << " for " << run.epochs_completed
        << " epochs: test MAE " << csv::format_double(run.test_mae) << '\n';
    return kOk;
}

struct ExperimentOptions {
    std::string plan;
    std::string out_dir;
    bool dry_run = false;
};

TimeSeries experiment_data(const json& plan, const fs::path& plan_dir) {
    if (!plan.contains("data")) return generate_sine(SineParams{});
    const json& d = plan.at("data");
    if (!d.is_object()) throw ParseError("plan field \"data\" must be an object");
    if (d.contains("sine")) {
        const json& s = d.at("sine");
        SineParams p;
        try {
            p.amplitude = s.value("amplitude", p.amplitude);
            p.frequency = s.value("frequency", p.frequency);
            p.phase = s.value("phase", p.phase);
            p.rate = s.value("rate", p.rate);
            p.t_start = s.value("t_start", p.t_start);
            p.t_end = s.value("t_end", p.t_end);
        } catch (const json::exception&) {
            throw ParseError("plan field \"data.sine\" has a non-numeric entry");
        }
        return generate_sine(p);
    }
    if (d.contains("csv")) {
        fs::path path = d.at("csv").get<std::string>();
        if (path.is_relative()) path = plan_dir / path;
        auto join = [&](const char* key) {
            std::string s;
            if (!d.contains(key)) return s;
            for (const auto& e : d.at(key)) s += (s.empty() ? "" : ",") + e.get<std::string>();
            return s;
        };
        return load_series(path.string(), join("targets"), join("inputs"), d.value("scale", false));
    }
    throw ParseError("plan field \"data\" needs a \"sine\" or \"csv\" entry");
}

int cmd_experiment(const ExperimentOptions& o, unsigned threads, bool threads_given, std::ostream& out) {
    std::ifstream in(o.plan);
    if (!in) throw IoError("cannot open plan " + o.plan);
    json raw;
    try {
        in >> raw;
    } catch (const json::exception& e) {
        throw ParseError("plan " + o.plan + " is not valid JSON: " + e.what());
    }
    const ExperimentPlan plan = plan_from_json(raw);
    if (!threads_given && raw.contains("threads")) threads = std::max(1u, raw.at("threads").get<unsigned>());

    json resolved = plan_to_json(plan);
    resolved["data"] = raw.contains("data") ? raw.at("data") : json{{"sine", {{"amplitude", 1.0}, {"frequency", 1.0},
                                                                                {"phase", 0.0}, {"rate", 10.0},
                                                                                {"t_start", 0.0}, {"t_end", 100.0}}}};
    if (o.dry_run) {
        out << resolved.dump(2) << '\n';
        return kOk;
    }
    if (o.out_dir.empty()) throw ParameterError("--out-dir is required unless --dry-run is given");

    const TimeSeries ts = experiment_data(raw, fs::path(o.plan).parent_path());
    ExperimentReport report = run_experiment(plan, ts, threads);
    report.plan = resolved;
    write_report(o.out_dir, report);
    out << "experiment report written to " << o.out_dir << " (" << report.trained.size()
        << " architectures trained)\n";
    bool any_failed = false;
    for (const auto& r : report.outcomes) any_failed = any_failed || !r.outcome.ok;
    return any_failed ? kPartialFailure : kOk;
}

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    try {
        args = raw_args.empty() ? std::vector<std::string>{"rnnsamp"} : expand_config(raw_args);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    CLI::App app{"Rank recurrent architectures by MAE random sampling"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    unsigned threads = default_thread_count();
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads (default: RNNSAMP_THREADS or all cores)")
                            ->check(CLI::PositiveNumber);

    GenDataOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Write a sampled sine wave as CSV");
    gen_cmd->add_option("--amplitude", gen.sine.amplitude, "Peak amplitude A")->default_val(1.0);
    gen_cmd->add_option("--frequency", gen.sine.frequency, "Frequency f in Hz")->required();
    gen_cmd->add_option("--phase", gen.sine.phase, "Phase in radians")->default_val(0.0);
    gen_cmd->add_option("--rate", gen.sine.rate, "Samples per second")->default_val(10.0);
    gen_cmd->add_option("--t-start", gen.sine.t_start, "Start time in seconds")->default_val(0.0);
    gen_cmd->add_option("--t-end", gen.sine.t_end, "End time in seconds (exclusive)")->required();
    gen_cmd->add_option("-o,--output", gen.output, "Output CSV path")->required();

    SampleOptions smp;
    auto* sample_cmd = app.add_subcommand("sample", "MAE random sampling over an architecture grid");
    smp.data.add_to(*sample_cmd);
    sample_cmd->add_option("--nc", smp.nc, "Hidden cells: a..b or a single value")->required();
    sample_cmd->add_option("--lb", smp.lb, "Look back: a..b or a single value")->default_val("30");
    sample_cmd->add_option("--activation", smp.activation, "Output activation (tanh|sigmoid)")->default_val("tanh");
    sample_cmd->add_option("--samples", smp.samples, "Weight draws per architecture")->default_val(1000);
    sample_cmd->add_option("--threshold", smp.threshold, "MAE threshold t of p_t")->default_val(0.01);
    sample_cmd->add_option("--seed", smp.seed, "Base seed")->default_val(0);
    sample_cmd->add_option("--eval-split", smp.eval_split, "Split evaluated (train|test|full)")->default_val("test");
    sample_cmd->add_option("--out-dir", smp.out_dir, "Output directory")->required();
    sample_cmd->add_flag("--export-best-weights", smp.export_best, "Write best_<arch_id>.w per architecture");

    TrainOptions trn;
    auto* train_cmd = app.add_subcommand("train", "Train one architecture with Adam");
    trn.data.add_to(*train_cmd);
    train_cmd->add_option("--nc", trn.nc, "Hidden cells")->required()->check(CLI::PositiveNumber);
    train_cmd->add_option("--lb", trn.lb, "Look back")->required()->check(CLI::PositiveNumber);
    train_cmd->add_option("--activation", trn.activation, "Output activation (tanh|sigmoid)")->default_val("tanh");
    train_cmd->add_option("--epochs", trn.adam.epochs, "Training epochs")->default_val(100);
    train_cmd->add_option("--batch-size", trn.adam.batch_size, "Mini-batch size")->default_val(32);
    train_cmd->add_option("--lr", trn.adam.learning_rate, "Adam learning rate")->default_val(0.001);
    train_cmd->add_option("--beta1", trn.adam.beta1, "Adam beta1")->default_val(0.9);
    train_cmd->add_option("--beta2", trn.adam.beta2, "Adam beta2")->default_val(0.999);
    train_cmd->add_option("--epsilon", trn.adam.epsilon, "Adam epsilon")->default_val(1e-8);
    train_cmd->add_option("--clip-norm", trn.adam.clip_norm, "Global gradient-norm clip (0 = off)")->default_val(0.0);
    train_cmd->add_option("--seed", trn.adam.seed, "Run seed")->default_val(0);
    train_cmd->add_option("--init-weights", trn.init_weights, "Start from a weight file");
    train_cmd->add_option("-o,--output", trn.output, "Output JSON path")->required();
    train_cmd->add_option("--export-weights", trn.export_weights, "Write the final weights to this file");

    ExperimentOptions exp;
    auto* exp_cmd = app.add_subcommand("experiment", "Run the sampling/training validation pipeline");
    exp_cmd->add_option("--plan", exp.plan, "Plan JSON file")->required();
    exp_cmd->add_option("--out-dir", exp.out_dir, "Report directory");
    exp_cmd->add_flag("--dry-run", exp.dry_run, "Print the resolved plan and exit");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        for (auto* sub : app.get_subcommands()) out << sub->help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        if (auto subs = app.get_subcommands(); !subs.empty()) {
            err << subs.front()->help();
        } else {
            err << app.help();
        }
        return kUsage;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
        if (sample_cmd->parsed()) return cmd_sample(smp, threads, out, err);
        if (train_cmd->parsed()) return cmd_train(trn, out);
        if (exp_cmd->parsed()) return cmd_experiment(exp, threads, threads_opt->count() > 0, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }
    return kUsage;
}

} // namespace rnnsamp::cli
