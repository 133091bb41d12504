#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "rnnsamp/error.hpp"
#include "rnnsamp/rng.hpp"
#include "rnnsamp/sampling.hpp"
#include "rnnsamp/trainer.hpp"

using namespace rnnsamp;

namespace {

WindowedDataset random_batch(std::size_t n, std::size_t lb, std::size_t nf, std::size_t no, CounterRng& rng) {
    WindowedDataset ds;
    ds.lb = lb;
    ds.n_features = nf;
    ds.inputs.resize(n * lb * nf);
    for (double& v : ds.inputs) v = rng.normal();
    ds.targets = Matrix(n, no);
    return ds;
}

double batch_loss(const ArchitectureSpec& arch, const WeightSet& w, const WindowedDataset& ds) {
    return mae(predict(arch, w, ds), ds.targets);
}

const WindowedDataset& sine_train() {
    static const auto splits = make_splits(window(generate_sine({1, 1, 0, 10, 0, 100}), 30), 0.8);
    return splits.train;
}

const WindowedDataset& sine_test() {
    static const auto splits = make_splits(window(generate_sine({1, 1, 0, 10, 0, 100}), 30), 0.8);
    return splits.test;
}

} // namespace

TEST_CASE("adam config defaults and validation") {
    AdamConfig cfg;
    CHECK(cfg.learning_rate == 0.001);
    CHECK(cfg.beta1 == 0.9);
    CHECK(cfg.beta2 == 0.999);
    CHECK(cfg.epsilon == 1e-8);
    CHECK(cfg.batch_size == 32);
    CHECK(cfg.clip_norm == 0.0);
    CHECK_NOTHROW(cfg.validate());
    cfg.beta1 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = {};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("perfect predictions give a zero gradient") {
    CounterRng rng(1);
    const ArchitectureSpec arch{3, 4, 2, 2};
    const auto w = sample_weights(arch, 5);
    auto ds = random_batch(6, 4, 2, 2, rng);
    ds.targets = predict(arch, w, ds);
    const auto g = mae_loss_and_gradient(arch, w, ds);
    CHECK(g.loss == 0.0);
    for (double v : g.gradient) CHECK(v == 0.0);
}

TEST_CASE("gradient matches central finite differences") {
    CounterRng rng(42);
    const double h = 1e-6;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const ArchitectureSpec arch{1 + rng.below(3), 1 + rng.below(4), 1 + rng.below(2), 1 + rng.below(2),
                                    trial % 2 ? OutputActivation::sigmoid : OutputActivation::tanh};
        WeightSet w = sample_weights(arch, static_cast<std::uint64_t>(100 + trial));
        for (double& p : w.params) p *= 0.5;
        auto ds = random_batch(5, arch.lb, arch.n_inputs, arch.n_outputs, rng);
        // Targets kept well away from the predictions so no |.| kink is crossed.
        const Matrix pred = predict(arch, w, ds);
        for (std::size_t i = 0; i < pred.rows(); ++i)
            for (std::size_t j = 0; j < pred.cols(); ++j)
                ds.targets(i, j) = pred(i, j) + ((i + j + static_cast<std::size_t>(trial)) % 2 ? 0.3 : -0.3);

        const auto g = bptt_gradient(arch, w, ds);
        REQUIRE(g.size() == w.params.size());
        for (std::size_t k = 0; k < w.params.size(); ++k) {
            WeightSet plus = w, minus = w;
            plus.params[k] += h;
            minus.params[k] -= h;
            const double fd = (batch_loss(arch, plus, ds) - batch_loss(arch, minus, ds)) / (2 * h);
            const double rel = std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), 1e-5});
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("dense bias gradient is the mean signed activation slope") {
    CounterRng rng(9);
    for (auto act : {OutputActivation::tanh, OutputActivation::sigmoid}) {
        const ArchitectureSpec arch{2, 3, 1, 1, act};
        const auto w = sample_weights(arch, 12);
        auto ds = random_batch(8, 3, 1, 1, rng);
        for (std::size_t i = 0; i < 8; ++i) ds.targets(i, 0) = rng.uniform();
        const Matrix pred = predict(arch, w, ds);
        double expect = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
            const double y = pred(i, 0);
            const double slope = act == OutputActivation::tanh ? 1.0 - y * y : y * (1.0 - y);
            const double diff = y - ds.targets(i, 0);
            expect += (diff > 0 ? 1.0 : diff < 0 ? -1.0 : 0.0) * slope;
        }
        expect /= 8.0;
        const auto g = bptt_gradient(arch, w, ds);
        CHECK(std::abs(g.back() - expect) < 1e-14);
    }
}

TEST_CASE("adam step examples") {
    AdamConfig cfg;
    std::vector<double> w{1.0, -2.0}, m(2, 0.0), v(2, 0.0);
    const std::vector<double> zero(2, 0.0);
    adam_step(w, zero, m, v, 1, cfg);
    CHECK(w == std::vector<double>{1.0, -2.0});
    CHECK(m == zero);

    cfg.learning_rate = 0.1;
    std::vector<double> x{0.0}, mx{0.0}, vx{0.0};
    for (std::size_t t = 1; t <= 500; ++t) {
        const std::vector<double> g{2.0 * (x[0] - 3.0)};
        adam_step(x, g, mx, vx, t, cfg);
    }
    CHECK(std::abs(x[0] - 3.0) < 0.01);

    for (double g0 : {0.37, -5.0, 1e-3}) {
        std::vector<double> y{0.0}, my{0.0}, vy{0.0};
        adam_step(y, std::vector<double>{g0}, my, vy, 1, cfg);
        const double expect = -0.1 * (g0 > 0 ? 1.0 : -1.0);
        CHECK(std::abs(y[0] - expect) < 1e-5);
    }
    CHECK_THROWS_AS(adam_step(x, std::vector<double>{1.0}, mx, vx, 0, cfg), ParameterError);
}

TEST_CASE("zero epochs leaves the weights unchanged") {
    AdamConfig cfg;
    cfg.epochs = 0;
    const ArchitectureSpec arch{4, 30, 1, 1};
    const auto run = train(arch, sine_train(), sine_test(), cfg);
    CHECK(run.epochs_completed == 0);
    CHECK(run.train_mae_history.empty());
    CHECK(run.final_weights == run.initial_weights);
    CHECK(run.initial_weights == glorot_weights(arch, fresh_init_seed(cfg.seed)));
    CHECK(run.test_mae == run.initial_test_mae);
    CHECK(run.test_mae == mae(predict(arch, run.final_weights, sine_test()), sine_test().targets));
}

TEST_CASE("training is deterministic") {
    AdamConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 77;
    const ArchitectureSpec arch{5, 30, 1, 1};
    const auto a = train(arch, sine_train(), sine_test(), cfg, std::vector<std::size_t>{1, 2});
    const auto b = train(arch, sine_train(), sine_test(), cfg, std::vector<std::size_t>{1, 2});
    CHECK(a == b);
    CHECK(a.train_mae_history.size() == 3);
    CHECK(a.test_mae_at.size() == 3);
    CHECK(a.test_mae_at.at(3) == a.test_mae);
    cfg.seed = 78;
    CHECK_FALSE(train(arch, sine_train(), sine_test(), cfg) == a);
}

TEST_CASE("checkpointed runs agree with shorter runs") {
    AdamConfig cfg;
    cfg.epochs = 4;
    const ArchitectureSpec arch{3, 30, 1, 1};
    const auto full = train(arch, sine_train(), sine_test(), cfg, std::vector<std::size_t>{2});
    cfg.epochs = 2;
    const auto part = train(arch, sine_train(), sine_test(), cfg);
    CHECK(full.test_mae_at.at(2) == part.test_mae);
}

TEST_CASE("training on the sine reduces the error") {
    AdamConfig cfg;
    cfg.epochs = 100;
    const ArchitectureSpec arch{16, 30, 1, 1};
    std::size_t descended = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        cfg.seed = seed;
        const auto run = train(arch, sine_train(), sine_test(), cfg);
        REQUIRE(run.train_mae_history.size() == 100);
        if (run.train_mae_history.back() < run.train_mae_history.front()) ++descended;
        if (seed == 0) CHECK(run.final_train_mae < run.initial_train_mae);
    }
    CHECK(descended >= 9);
}

TEST_CASE("warm start from the best sampled weights") {
    SamplingConfig scfg;
    scfg.max_samples = 30;
    const ArchitectureSpec arch{4, 30, 1, 1};
    const auto outcome = mae_random_sampling(arch, sine_test(), scfg);
    AdamConfig cfg;
    cfg.epochs = 2;
    const auto run = train(arch, sine_train(), sine_test(), cfg, sample_weights(arch, outcome.best_sample_seed));
    CHECK(run.initial_test_mae <= outcome.best_mae);
}

TEST_CASE("gradient clipping bounds the first update") {
    AdamConfig cfg;
    cfg.epochs = 1;
    cfg.clip_norm = 1e-3;
    const ArchitectureSpec arch{3, 30, 1, 1};
    CHECK_NOTHROW(train(arch, sine_train(), sine_test(), cfg));
    cfg.clip_norm = -1.0;
    CHECK_THROWS_AS(train(arch, sine_train(), sine_test(), cfg), ParameterError);
}
