#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rnnsamp/rng.hpp"
#include "rnnsamp/timeseries.hpp"

using namespace rnnsamp;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& contents) {
    const auto dir = fs::temp_directory_path() / "rnnsamp_test_timeseries";
    fs::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << contents;
    return path;
}

TimeSeries univariate(std::vector<double> v) {
    TimeSeries ts;
    const std::size_t n = v.size();
    ts.values = Matrix(n, 1, std::move(v));
    ts.column_names = {"y"};
    ts.target_columns = {0};
    return ts;
}

} // namespace

TEST_CASE("generate_sine sample count and values") {
    const auto ts = generate_sine({1.0, 1.0, 0.0, 10.0, 0.0, 100.0});
    CHECK(ts.length() == 1000);
    CHECK(ts.width() == 1);
    CHECK(ts.values(0, 0) == 0.0);
    // t = 0.25 is sample index 2.5 at rate 10, so check at rate 4 instead.
    const auto quarter = generate_sine({1.0, 1.0, 0.0, 4.0, 0.0, 1.0});
    CHECK(quarter.length() == 4);
    CHECK(quarter.values(1, 0) == doctest::Approx(1.0).epsilon(1e-15));

    const auto f3 = generate_sine({1.0, 3.0, 0.0, 10.0, 0.0, 10.0});
    CHECK(f3.length() == 100);
}

TEST_CASE("generate_sine stays within the amplitude") {
    for (double a : {0.5, 1.0, 3.0}) {
        const auto ts = generate_sine({a, 1.7, 0.3, 13.0, -2.0, 40.0});
        for (double v : ts.values.data()) CHECK(std::abs(v) <= a);
    }
}

TEST_CASE("generate_sine rejects bad parameters") {
    CHECK_THROWS_AS(generate_sine({1, 1, 0, 0.0, 0, 10}), ParameterError);
    CHECK_THROWS_AS(generate_sine({1, 1, 0, -1.0, 0, 10}), ParameterError);
    CHECK_THROWS_AS(generate_sine({1, 1, 0, 10, 5, 5}), ParameterError);
}

TEST_CASE("load_csv reads header, targets and comments") {
    const auto path = write_temp("ab.csv", "# comment line\na,b\n1,2\n3,4\n");
    const auto ts = load_csv(path, {"b"});
    CHECK(ts.length() == 2);
    CHECK(ts.width() == 2);
    CHECK(ts.target_columns == std::vector<std::size_t>{1});
    CHECK(ts.values(1, 0) == 3.0);
    CHECK(ts.resolved_inputs() == std::vector<std::size_t>{0});
}

TEST_CASE("load_csv reports unparsable cells with row and column") {
    const auto path = write_temp("oops.csv", "a,b\noops,2\n3,4\n");
    try {
        load_csv(path, {"b"});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 1") != std::string::npos);
        CHECK(msg.find("\"a\"") != std::string::npos);
    }
}

TEST_CASE("load_csv error paths") {
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {}), IoError);
    const auto path = write_temp("two.csv", "a,b\n1,2\n3,4\n");
    CHECK_THROWS_AS(load_csv(path, {"zzz"}), ParameterError);
    CHECK_THROWS_AS(load_csv(path, {}), ParameterError);  // multivariate needs targets
    CHECK_THROWS_AS(load_csv(write_temp("nan.csv", "a\n1\nnan\n"), {}), ParseError);
    CHECK_THROWS_AS(load_csv(write_temp("locale.csv", "a;b\n1;5\n2;6\n"), {"a;b"}), ParseError);
    CHECK_THROWS_AS(load_csv(write_temp("short.csv", "a,b\n1\n"), {"a"}), ParseError);
}

TEST_CASE("load_csv multivariate layout with two targets") {
    std::string text;
    for (int c = 0; c < 26; ++c) text += "x" + std::to_string(c) + ",";
    text += "appliances,lights\n";
    for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 28; ++c) text += std::to_string(r * 28 + c) + (c == 27 ? "\n" : ",");
    }
    const auto ts = load_csv(write_temp("energy.csv", text), {"appliances", "lights"});
    CHECK(ts.width() == 28);
    CHECK(ts.target_columns.size() == 2);
    CHECK(ts.resolved_inputs().size() == 26);
    const auto ds = window(ts, 2);
    CHECK(ds.n_features == 26);
    CHECK(ds.n_outputs() == 2);
}

TEST_CASE("minmax_scale examples") {
    TimeSeries ts;
    ts.values = Matrix(3, 2, {2, 5, 4, 5, 6, 5});
    ts.column_names = {"a", "b"};
    ts.target_columns = {0};
    const auto [scaled, ranges] = minmax_scale(ts);
    CHECK(scaled.values.column(0) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(scaled.values.column(1) == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(ranges[1].min == 5.0);
    CHECK(ranges[1].max == 5.0);
    CHECK(minmax_unscale(scaled, ranges).values == ts.values);

    const auto [s2, r2] = minmax_scale(univariate({-1.0, 1.0}));
    CHECK(s2.values.column(0) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("minmax_scale property: range and inverse") {
    CounterRng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t rows = 2 + rng.below(50), cols = 1 + rng.below(4);
        TimeSeries ts;
        ts.values = Matrix(rows, cols);
        for (double& v : ts.values.data()) v = 1e3 * (rng.uniform() - 0.5);
        ts.column_names.assign(cols, "c");
        ts.target_columns = {0};
        const auto [scaled, ranges] = minmax_scale(ts);
        for (double v : scaled.values.data()) CHECK((v >= 0.0 && v <= 1.0));
        const auto back = minmax_unscale(scaled, ranges);
        for (std::size_t i = 0; i < back.values.data().size(); ++i) {
            CHECK(std::abs(back.values.data()[i] - ts.values.data()[i]) <= 1e-12 * 1e3);
        }
    }
}

TEST_CASE("window examples") {
    const auto ds = window(univariate({1, 2, 3, 4, 5}), 2);
    REQUIRE(ds.size() == 3);
    CHECK(ds.inputs == std::vector<double>{1, 2, 2, 3, 3, 4});
    CHECK(ds.targets.column(0) == std::vector<double>{3, 4, 5});

    CHECK(window(generate_sine({}), 30).size() == 970);
    CHECK_THROWS_AS(window(univariate({1, 2, 3, 4}), 5), SizeError);
    CHECK_THROWS_AS(window(univariate({1, 2, 3, 4}), 4), SizeError);
}

TEST_CASE("window over a sine: each target is the value lb steps after the window start") {
    const auto ts = generate_sine({1.0, 1.0, 0.0, 10.0, 0.0, 20.0});
    for (std::size_t lb : {1u, 3u, 30u}) {
        const auto ds = window(ts, lb);
        REQUIRE(ds.size() == ts.length() - lb);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(ds.targets(i, 0) == ts.values(i + lb, 0));
            for (std::size_t s = 0; s < lb; ++s) CHECK(ds.step(i, s)[0] == ts.values(i + s, 0));
        }
    }
}

TEST_CASE("split examples and reconstruction") {
    std::vector<double> v(12);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    const auto ds = window(univariate(v), 2);  // 10 examples
    const auto [train, test] = split(ds, 0.8);
    CHECK(train.size() == 8);
    CHECK(test.size() == 2);
    CHECK(train.targets(7, 0) < test.targets(0, 0));

    const auto small = window(univariate({1, 2, 3}), 1);  // 2 examples
    const auto [a, b] = split(small, 0.5);
    CHECK(a.size() == 1);
    CHECK(b.size() == 1);

    CHECK_THROWS_AS(split(ds, 0.0), ParameterError);
    CHECK_THROWS_AS(split(ds, 1.0), ParameterError);
    CHECK_THROWS_AS(split(ds, 0.99), ParameterError);
}

TEST_CASE("split property: partitions concatenate back to the dataset") {
    const auto ds = window(generate_sine({1.0, 0.3, 0.1, 10.0, 0.0, 10.0}), 4);
    for (double f : {0.1, 0.33, 0.5, 0.8, 0.9}) {
        const auto [train, test] = split(ds, f);
        CHECK(train.size() + test.size() == ds.size());
        CHECK(train == ds.slice(0, train.size()));
        CHECK(test == ds.slice(train.size(), ds.size()));
        std::vector<double> joined = train.inputs;
        joined.insert(joined.end(), test.inputs.begin(), test.inputs.end());
        CHECK(joined == ds.inputs);
    }
}
