#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "rnnsamp/error.hpp"
#include "rnnsamp/experiment.hpp"

using namespace rnnsamp;

namespace {

ExperimentPlan small_plan() {
    ExperimentPlan plan;
    plan.seed = 5;
    plan.grid.nc = parse_int_range("1..12");
    plan.grid.lb = {5};
    plan.sampling.max_samples = 20;
    plan.sampling.seed = 1;
    plan.training.batch_size = 16;
    plan.epoch_settings = {1, 3};
    plan.per_decile = 1;
    plan.repetitions = 3;
    plan.fit_fraction = 0.6;
    return plan;
}

const TimeSeries& short_sine() {
    static const auto ts = generate_sine({1.0, 1.0, 0.0, 10.0, 0.0, 15.0});
    return ts;
}

const ExperimentReport& small_report() {
    static const auto report = run_experiment(small_plan(), short_sine(), 1);
    return report;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("decile agreement examples") {
    const std::vector<int> a{1, 2, 5, 9};
    CHECK(decile_agreement(a, a) == 1.0);
    CHECK(decile_agreement(std::vector<int>(5, 1), std::vector<int>(5, 10)) == 0.0);
    CHECK(decile_agreement(std::vector<int>{1, 2, 5}, std::vector<int>{2, 4, 5}) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(decile_agreement(std::vector<int>{1}, std::vector<int>{1, 2}), DimensionError);
}

TEST_CASE("integer ranges") {
    CHECK(parse_int_range("3") == std::vector<std::size_t>{3});
    CHECK(parse_int_range("2..5") == std::vector<std::size_t>{2, 3, 4, 5});
    CHECK(parse_int_range("1..100").size() == 100);
    CHECK_THROWS_AS(parse_int_range("5..2"), ParameterError);
    CHECK_THROWS_AS(parse_int_range("a..b"), ParameterError);
    CHECK_THROWS_AS(parse_int_range(""), ParameterError);
    CHECK_THROWS_AS(parse_int_range("0..3"), ParameterError);
}

TEST_CASE("grid expansion is nc-major") {
    GridSpec g{{1, 2}, {10, 20}, OutputActivation::sigmoid};
    const auto archs = g.expand(3, 2);
    REQUIRE(archs.size() == 4);
    CHECK(archs[0] == ArchitectureSpec{1, 10, 3, 2, OutputActivation::sigmoid});
    CHECK(archs[1] == ArchitectureSpec{1, 20, 3, 2, OutputActivation::sigmoid});
    CHECK(archs[2] == ArchitectureSpec{2, 10, 3, 2, OutputActivation::sigmoid});
}

TEST_CASE("stratified selection takes per_decile from each decile") {
    std::vector<int> deciles;
    for (int d = 1; d <= 10; ++d)
        for (int k = 0; k < 7; ++k) deciles.push_back(d);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sel = stratified_selection(deciles, 3, seed);
        CHECK(sel.size() == 30);
        CHECK(std::is_sorted(sel.begin(), sel.end()));
        CHECK(std::set<std::size_t>(sel.begin(), sel.end()).size() == sel.size());
        std::vector<int> per(11, 0);
        for (auto i : sel) ++per[static_cast<std::size_t>(deciles[i])];
        for (int d = 1; d <= 10; ++d) CHECK(per[static_cast<std::size_t>(d)] == 3);
    }
    CHECK(stratified_selection(deciles, 3, 1) == stratified_selection(deciles, 3, 1));
    CHECK(stratified_selection(deciles, 3, 1) != stratified_selection(deciles, 3, 2));

    // Small buckets give everything they have; decile 0 is never chosen.
    const std::vector<int> sparse{1, 1, 2, 0, 0, 3};
    CHECK(stratified_selection(sparse, 5, 9) == std::vector<std::size_t>{0, 1, 2, 5});
}

TEST_CASE("plan validation names the field") {
    auto check_field = [](ExperimentPlan p, const std::string& field) {
        try {
            p.validate();
            FAIL("expected a validation error for " << field);
        } catch (const ParameterError& e) {
            CHECK(std::string(e.what()).find(field) != std::string::npos);
        }
    };
    auto p = small_plan();
    p.per_decile = 0;
    check_field(p, "per_decile");
    p = small_plan();
    p.repetitions = 0;
    check_field(p, "repetitions");
    p = small_plan();
    p.fit_fraction = 1.0;
    check_field(p, "fit_fraction");
    p = small_plan();
    p.grid.nc = {1, 2, 3};
    check_field(p, "grid");
    p = small_plan();
    p.epoch_settings.clear();
    check_field(p, "epochs");
}

TEST_CASE("plan json round trip and errors") {
    const auto plan = small_plan();
    const auto j = plan_to_json(plan);
    const auto back = plan_from_json(j);
    CHECK(plan_to_json(back) == j);
    CHECK(back.grid.nc == plan.grid.nc);
    CHECK(back.sampling == plan.sampling);

    auto bad = j;
    bad["repetitions"] = "many";
    CHECK_THROWS_WITH_AS(plan_from_json(bad), doctest::Contains("repetitions"), Error);
    bad = j;
    bad["unknown_key"] = 1;
    CHECK_THROWS_WITH_AS(plan_from_json(bad), doctest::Contains("unknown_key"), Error);
    bad = j;
    bad["grid"]["nc"] = "7..3";
    CHECK_THROWS_WITH_AS(plan_from_json(bad), doctest::Contains("grid.nc"), Error);
    bad = j;
    bad["sampling"]["threshold"] = -1;
    CHECK_THROWS_WITH_AS(plan_from_json(bad), doctest::Contains("threshold"), Error);
}

TEST_CASE("small experiment produces a complete report") {
    const auto& r = small_report();
    CHECK(r.outcomes.size() == 12);
    for (std::size_t i = 0; i < r.outcomes.size(); ++i) CHECK(r.outcomes[i].rank == i + 1);
    CHECK(r.trained.size() == 10);
    std::set<int> deciles;
    for (const auto& t : r.trained) {
        deciles.insert(t.decile);
        CHECK(t.test_mae.size() == 2);
        CHECK(t.train_mae_history.size() == 3);
        for (const auto& [e, m] : t.test_mae) CHECK(std::isfinite(m));
    }
    CHECK(deciles.size() == 10);
    REQUIRE(r.correlations.size() == 2);
    CHECK(r.correlations[0].epochs == 1);
    CHECK(r.correlations[1].epochs == 3);
    for (const auto& c : r.correlations) {
        CHECK(std::isfinite(c.nc));
        CHECK(std::isnan(c.lb));
        CHECK(std::isfinite(c.mean_fit));
        CHECK(std::isfinite(c.log_p_t));
    }
    CHECK(r.model_epochs == 3);
    CHECK(r.model_features == std::vector<std::string>{"mean_fit", "sd_fit", "log_p_t"});
    REQUIRE(r.model_eval.size() == 3);
    for (const auto& ev : r.model_eval) {
        CHECK_FALSE(ev.skipped);
        CHECK(ev.n_fit == 6);
        CHECK(ev.n_holdout == 4);
        CHECK(ev.within_one_decile >= 0.0);
        CHECK(ev.within_one_decile <= 1.0);
        CHECK(ev.coefficients.size() == 4);
    }
    CHECK(r.model_summary.n_evaluated == 3);
}

TEST_CASE("experiment does not depend on the thread count") {
    const auto other = run_experiment(small_plan(), short_sine(), 4);
    CHECK(report_to_json(other).dump() == report_to_json(small_report()).dump());
}

TEST_CASE("report json round trip is byte identical") {
    const auto text = report_to_json(small_report()).dump(2);
    const auto again = report_to_json(report_from_json(nlohmann::json::parse(text))).dump(2);
    CHECK(text == again);
}

TEST_CASE("report files") {
    const std::filesystem::path dir = std::filesystem::path(RNNSAMP_TEST_TMP) / "experiment_report";
    std::filesystem::remove_all(dir);
    write_report(dir, small_report());
    for (const char* name : {"report.json", "outcomes.csv", "trained.csv", "model_eval.csv"})
        CHECK(std::filesystem::exists(dir / name));
    CHECK(slurp(dir / "outcomes.csv").rfind("# ", 0) == 0);
    const auto reread = report_from_json(nlohmann::json::parse(slurp(dir / "report.json")));
    CHECK(report_to_json(reread).dump(2) + "\n" == slurp(dir / "report.json"));
}

TEST_CASE("tiny holdout marks the repetition as skipped") {
    auto plan = small_plan();
    plan.repetitions = 1;
    plan.fit_fraction = 0.75;
    plan.epoch_settings = {1};
    const auto r = run_experiment(plan, short_sine(), 1);
    REQUIRE(r.model_eval.size() == 1);
    CHECK(r.model_eval[0].skipped);
    CHECK(r.model_eval[0].diagnostic.find("holdout") != std::string::npos);
    CHECK(r.model_summary.n_skipped == 1);
    CHECK(std::isnan(r.model_summary.spearman_rho));
    CHECK_FALSE(r.notes.empty());
}

TEST_CASE("correlations flip sign when the trained error is negated") {
    auto trained = small_report().trained;
    const auto base = correlation_table(trained, {1, 3});
    for (auto& t : trained)
        for (auto& [e, m] : t.test_mae) m = -m;
    const auto neg = correlation_table(trained, {1, 3});
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(neg[i].nc == doctest::Approx(-base[i].nc).epsilon(1e-12));
        CHECK(neg[i].mean_fit == doctest::Approx(-base[i].mean_fit).epsilon(1e-12));
        CHECK(neg[i].sd_fit == doctest::Approx(-base[i].sd_fit).epsilon(1e-12));
        CHECK(neg[i].log_p_t == doctest::Approx(-base[i].log_p_t).epsilon(1e-12));
    }
}
