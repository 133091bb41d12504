#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "rnnsamp/timeseries.hpp"
#include "rnnsamp/trainer.hpp"
#include "rnnsamp/weights_io.hpp"

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using namespace rnnsamp;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "rnnsamp");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path tmp(const std::string& name) {
    const fs::path dir = fs::path(RNNSAMP_TEST_TMP);
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Short sine shared by the sample/train cases.
const fs::path& small_data() {
    static const fs::path p = [] {
        const auto path = tmp("small.csv");
        const auto r = run_cli({"gen-data", "--frequency", "1", "--t-end", "12", "-o", path.string()});
        REQUIRE(r.code == 0);
        return path;
    }();
    return p;
}

} // namespace

TEST_CASE("gen-data writes the sine series") {
    const auto path = tmp("sine.csv");
    const auto r = run_cli({"gen-data", "--amplitude", "1", "--frequency", "1", "--phase", "0", "--rate", "10",
                            "--t-end", "100", "-o", path.string()});
    REQUIRE(r.code == 0);
    const auto ts = load_csv(path, {});
    CHECK(ts.values.rows() == 1000);
    CHECK(ts.column_names == std::vector<std::string>{"y"});
    CHECK(slurp(path).rfind("# ", 0) == 0);

    const auto path3 = tmp("sine3.csv");
    REQUIRE(run_cli({"gen-data", "--frequency", "3", "--t-end", "10", "-o", path3.string()}).code == 0);
    const auto ts3 = load_csv(path3, {});
    CHECK(ts3.values.rows() == 100);
    CHECK(ts3.values == generate_sine({1, 3, 0, 10, 0, 10}).values);
}

TEST_CASE("missing required flag is a usage error") {
    const auto r = run_cli({"gen-data", "--t-end", "10", "-o", tmp("x.csv").string()});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("frequency") != std::string::npos);
    CHECK(run_cli({}).code == cli::kUsage);
    std::ostringstream out, err;
    CHECK(cli::run({}, out, err) == cli::kUsage);
    CHECK(run_cli({"bogus"}).code == cli::kUsage);
}

TEST_CASE("sample is deterministic and thread invariant") {
    const auto a = tmp("sample_a"), b = tmp("sample_b");
    fs::remove_all(a);
    fs::remove_all(b);
    std::vector<std::string> base{"sample", "--data", small_data().string(), "--nc", "1..6", "--lb", "5",
                                  "--samples", "20", "--seed", "42"};
    auto args_a = base;
    args_a.insert(args_a.end(), {"--out-dir", a.string(), "--threads", "1"});
    auto args_b = base;
    args_b.insert(args_b.end(), {"--out-dir", b.string(), "--threads", "3"});
    REQUIRE(run_cli(args_a).code == 0);
    REQUIRE(run_cli(args_b).code == 0);
    CHECK(slurp(a / "outcomes.csv") == slurp(b / "outcomes.csv"));
    CHECK(slurp(a / "ranking.csv") == slurp(b / "ranking.csv"));

    std::istringstream rows(slurp(a / "outcomes.csv"));
    std::string line;
    std::size_t data_rows = 0;
    bool seen_seed = false;
    while (std::getline(rows, line)) {
        if (line.rfind("#", 0) == 0) {
            seen_seed = seen_seed || line.find("\"seed\":42") != std::string::npos;
            continue;
        }
        ++data_rows;
    }
    CHECK(seen_seed);
    CHECK(data_rows == 7);
}

TEST_CASE("exported best weights warm-start training") {
    const auto dir = tmp("sample_export");
    fs::remove_all(dir);
    REQUIRE(run_cli({"sample", "--data", small_data().string(), "--nc", "3", "--lb", "6", "--samples", "15",
                     "--out-dir", dir.string(), "--export-best-weights"})
                .code == 0);
    const auto wpath = dir / "best_1.w";
    REQUIRE(fs::exists(wpath));
    const auto w = load_weights(wpath);
    CHECK(w.arch.nc == 3);

    std::istringstream rows(slurp(dir / "outcomes.csv"));
    std::string line;
    while (std::getline(rows, line) && (line.empty() || line[0] == '#' || line.rfind("arch_id", 0) == 0)) {
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 11);
    const double best_mae = std::stod(cells[8]);

    const auto before = slurp(wpath);
    const auto out = tmp("warm.json");
    REQUIRE(run_cli({"train", "--data", small_data().string(), "--nc", "3", "--lb", "6", "--epochs", "2",
                     "--init-weights", wpath.string(), "-o", out.string()})
                .code == 0);
    CHECK(slurp(wpath) == before);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["run"]["initial_test_mae"].get<double>() == best_mae);
    CHECK(j["run"]["train_mae_history"].size() == 2);

    // Mismatched architecture is rejected.
    const auto r = run_cli({"train", "--data", small_data().string(), "--nc", "4", "--lb", "6", "--init-weights",
                            wpath.string(), "-o", tmp("bad.json").string()});
    CHECK(r.code == cli::kError);
}

TEST_CASE("train with zero epochs keeps the initial weights") {
    const auto out = tmp("zero.json"), wout = tmp("zero.w");
    REQUIRE(run_cli({"train", "--data", small_data().string(), "--nc", "2", "--lb", "5", "--epochs", "0",
                     "--seed", "7", "-o", out.string(), "--export-weights", wout.string()})
                .code == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["format"] == "rnnsamp-training-run");
    CHECK(j["run"]["epochs_completed"] == 0);
    CHECK(j["run"]["train_mae_history"].empty());
    CHECK(j["config"]["adam"]["seed"] == 7);
    const auto w = load_weights(wout);
    CHECK(w == glorot_weights(w.arch, fresh_init_seed(7)));
}

TEST_CASE("config file values yield to flags") {
    const auto cfg = tmp("train_cfg.json");
    {
        std::ofstream f(cfg);
        f << R"({"nc": 2, "lb": 5, "epochs": 3, "seed": 11})";
    }
    const auto out = tmp("cfg_run.json");
    REQUIRE(run_cli({"train", "--config", cfg.string(), "--data", small_data().string(), "--epochs", "1", "-o",
                     out.string()})
                .code == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["run"]["epochs_completed"] == 1);
    CHECK(j["config"]["adam"]["seed"] == 11);
    CHECK(j["config"]["nc"] == 2);
}

TEST_CASE("partial failures use their own exit code") {
    const auto dir = tmp("sample_partial");
    const auto r = run_cli({"sample", "--data", small_data().string(), "--nc", "2", "--lb", "5,500", "--samples",
                            "5", "--out-dir", dir.string()});
    CHECK(r.code == cli::kError);
    // 120 points: lb 115 leaves one test example, lb 116 leaves none.
    const auto r2 = run_cli({"sample", "--data", small_data().string(), "--nc", "2", "--lb", "115..116",
                             "--samples", "5", "--out-dir", dir.string()});
    CHECK(r2.code == cli::kPartialFailure);
    CHECK(r2.err.find("architecture 2") != std::string::npos);
    CHECK(fs::exists(dir / "outcomes.csv"));
}

TEST_CASE("experiment dry run and malformed plans") {
    const auto plan = tmp("plan.json");
    {
        std::ofstream f(plan);
        f << R"({"seed": 3, "grid": {"nc": "1..10", "lb": 5}, "sampling": {"max_samples": 10},
                 "epochs": [1], "per_decile": 1, "repetitions": 2, "fit_fraction": 0.6,
                 "data": {"sine": {"t_end": 15}}})";
    }
    const auto outdir = tmp("exp_out");
    fs::remove_all(outdir);
    const auto dry = run_cli({"experiment", "--plan", plan.string(), "--out-dir", outdir.string(), "--dry-run"});
    REQUIRE(dry.code == 0);
    CHECK(nlohmann::json::parse(dry.out)["per_decile"] == 1);
    CHECK_FALSE(fs::exists(outdir));

    REQUIRE(run_cli({"experiment", "--plan", plan.string(), "--out-dir", outdir.string()}).code == 0);
    for (const char* name : {"report.json", "outcomes.csv", "trained.csv", "model_eval.csv"})
        CHECK(fs::exists(outdir / name));

    const auto bad = tmp("bad_plan.json");
    {
        std::ofstream f(bad);
        f << R"({"grid": {"nc": "1..10"}, "repetitions": -2})";
    }
    const auto r = run_cli({"experiment", "--plan", bad.string(), "--dry-run"});
    CHECK(r.code == cli::kError);
    CHECK(r.err.find("repetitions") != std::string::npos);

    {
        std::ofstream f(bad);
        f << "{ not json";
    }
    CHECK(run_cli({"experiment", "--plan", bad.string(), "--dry-run"}).code == cli::kError);
}
