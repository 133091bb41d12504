#include "rnnsamp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rnnsamp/rng.hpp"
#include "rnnsamp/sampling.hpp"

namespace rnnsamp {

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ParameterError("beta1 must lie in (0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ParameterError("beta2 must lie in (0,1)");
    if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
    if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
    if (!(clip_norm >= 0.0)) throw ParameterError("clip_norm must be non-negative");
}

namespace {

// Per-example activations kept for the backward pass, indexed [step * nc + j].
struct StepCache {
    std::vector<double> h;       // h_t, with h_0 = 0 stored at index 0 (size (lb+1)*nc)
    std::vector<double> c;       // c_t, with c_0 = 0 at index 0
    std::vector<double> in, fg, cg, og, tc;  // gates and tanh(c_t), size lb*nc

    void resize(std::size_t lb, std::size_t nc) {
        h.assign((lb + 1) * nc, 0.0);
        c.assign((lb + 1) * nc, 0.0);
        in.resize(lb * nc);
        fg.resize(lb * nc);
        cg.resize(lb * nc);
        og.resize(lb * nc);
        tc.resize(lb * nc);
    }
};

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

} // namespace

GradientResult mae_loss_and_gradient(const ArchitectureSpec& arch, const WeightSet& w, const WindowedDataset& batch) {
    check_compatible(arch, w, batch);
    if (batch.size() == 0) throw SizeError("gradient of an empty batch");
    const std::size_t nc = arch.nc, ni = arch.n_inputs, no = arch.n_outputs, lb = arch.lb;
    const WeightView v(arch, w.params.data());

    GradientResult result;
    result.gradient.assign(w.params.size(), 0.0);
    MutableWeightView g(arch, result.gradient.data());

    const double scale = 1.0 / static_cast<double>(batch.size() * no);
    StepCache cache;
    cache.resize(lb, nc);
    std::vector<double> z(4 * nc), dz(4 * nc), dh(nc), dc(nc), dh_prev(nc), y(no), da(no);

    for (std::size_t e = 0; e < batch.size(); ++e) {
        std::fill(cache.h.begin(), cache.h.begin() + static_cast<std::ptrdiff_t>(nc), 0.0);
        std::fill(cache.c.begin(), cache.c.begin() + static_cast<std::ptrdiff_t>(nc), 0.0);

        for (std::size_t t = 0; t < lb; ++t) {
            const double* x = batch.step(e, t).data();
            const double* hp = &cache.h[t * nc];
            for (std::size_t gi = 0; gi < 4; ++gi) {
                double* zg = &z[gi * nc];
                std::copy_n(v.bias[gi], nc, zg);
                for (std::size_t r = 0; r < ni; ++r) {
                    const double* row = v.kernel[gi] + r * nc;
                    for (std::size_t j = 0; j < nc; ++j) zg[j] += x[r] * row[j];
                }
                for (std::size_t r = 0; r < nc; ++r) {
                    const double* row = v.recurrent[gi] + r * nc;
                    for (std::size_t j = 0; j < nc; ++j) zg[j] += hp[r] * row[j];
                }
            }
            for (std::size_t j = 0; j < nc; ++j) {
                const std::size_t k = t * nc + j;
                cache.in[k] = sigmoid(z[j]);
                cache.fg[k] = sigmoid(z[nc + j]);
                cache.cg[k] = std::tanh(z[2 * nc + j]);
                cache.og[k] = sigmoid(z[3 * nc + j]);
                const double c = cache.fg[k] * cache.c[t * nc + j] + cache.in[k] * cache.cg[k];
                cache.c[(t + 1) * nc + j] = c;
                cache.tc[k] = std::tanh(c);
                cache.h[(t + 1) * nc + j] = cache.og[k] * cache.tc[k];
            }
        }

        const double* h_last = &cache.h[lb * nc];
        for (std::size_t k = 0; k < no; ++k) {
            double a = v.dense_bias[k];
            for (std::size_t j = 0; j < nc; ++j) a += h_last[j] * v.dense_kernel[j * no + k];
            y[k] = apply_activation(arch.output_activation, a);
            const double diff = y[k] - batch.targets(e, k);
            result.loss += std::abs(diff) * scale;
            const double dact = arch.output_activation == OutputActivation::tanh ? 1.0 - y[k] * y[k]
                                                                                 : y[k] * (1.0 - y[k]);
            da[k] = sign(diff) * scale * dact;
            g.dense_bias[k] += da[k];
        }
        for (std::size_t j = 0; j < nc; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < no; ++k) {
                g.dense_kernel[j * no + k] += h_last[j] * da[k];
                s += v.dense_kernel[j * no + k] * da[k];
            }
            dh[j] = s;
        }
        std::fill(dc.begin(), dc.end(), 0.0);

        for (std::size_t t = lb; t-- > 0;) {
            const double* x = batch.step(e, t).data();
            const double* hp = &cache.h[t * nc];
            for (std::size_t j = 0; j < nc; ++j) {
                const std::size_t k = t * nc + j;
                const double i = cache.in[k], f = cache.fg[k], gc = cache.cg[k], o = cache.og[k], tc = cache.tc[k];
                const double dct = dc[j] + dh[j] * o * (1.0 - tc * tc);
                dz[j] = dct * gc * i * (1.0 - i);
                dz[nc + j] = dct * cache.c[t * nc + j] * f * (1.0 - f);
                dz[2 * nc + j] = dct * i * (1.0 - gc * gc);
                dz[3 * nc + j] = dh[j] * tc * o * (1.0 - o);
                dc[j] = dct * f;
            }
            std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
            for (std::size_t gi = 0; gi < 4; ++gi) {
                const double* dzg = &dz[gi * nc];
                for (std::size_t j = 0; j < nc; ++j) g.bias[gi][j] += dzg[j];
                for (std::size_t r = 0; r < ni; ++r) {
                    double* row = g.kernel[gi] + r * nc;
                    for (std::size_t j = 0; j < nc; ++j) row[j] += x[r] * dzg[j];
                }
                for (std::size_t r = 0; r < nc; ++r) {
                    double* grow = g.recurrent[gi] + r * nc;
                    const double* urow = v.recurrent[gi] + r * nc;
                    double s = 0.0;
                    for (std::size_t j = 0; j < nc; ++j) {
                        grow[j] += hp[r] * dzg[j];
                        s += urow[j] * dzg[j];
                    }
                    dh_prev[r] += s;
                }
            }
            std::swap(dh, dh_prev);
        }
    }
    return result;
}

std::vector<double> bptt_gradient(const ArchitectureSpec& arch, const WeightSet& w, const WindowedDataset& batch) {
    return mae_loss_and_gradient(arch, w, batch).gradient;
}

void adam_step(std::span<double> w, std::span<const double> grad, std::span<double> m, std::span<double> v,
               std::size_t t, const AdamConfig& cfg) {
    if (t < 1) throw ParameterError("adam step index must start at 1");
    if (grad.size() != w.size() || m.size() != w.size() || v.size() != w.size()) {
        throw DimensionError("adam_step: vector sizes differ");
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
        v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
        const double m_hat = m[j] / bc1;
        const double v_hat = v[j] / bc2;
        w[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

std::uint64_t fresh_init_seed(std::uint64_t run_seed) { return hash_values(run_seed, 0x696e6974ULL); }

namespace {

std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch) {
    return hash_values(run_seed, 0x73687566ULL, epoch);
}

} // namespace

TrainingRun train(const ArchitectureSpec& arch, const WindowedDataset& train_ds, const WindowedDataset& test_ds,
                  const AdamConfig& cfg, const WeightSet& init, const std::vector<std::size_t>& test_checkpoints) {
    cfg.validate();
    if (train_ds.size() == 0 || test_ds.size() == 0) throw SizeError("training needs non-empty train and test sets");
    if (!(init.arch == arch)) throw DimensionError("initial weights were built for a different architecture");
    check_compatible(arch, init, train_ds);
    check_compatible(arch, init, test_ds);

    TrainingRun run;
    run.arch = arch;
    run.config = cfg;
    run.initial_weights = init;
    run.initial_train_mae = mae(predict(arch, init, train_ds), train_ds.targets);
    run.initial_test_mae = mae(predict(arch, init, test_ds), test_ds.targets);

    WeightSet w = init;
    std::vector<double> m(w.params.size(), 0.0), v(w.params.size(), 0.0);
    std::vector<std::size_t> order(train_ds.size());
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        CounterRng rng(epoch_seed(cfg.seed, epoch));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        double weighted_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const WindowedDataset batch =
                train_ds.gather(std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                         order.begin() + static_cast<std::ptrdiff_t>(end)));
            auto [loss, grad] = mae_loss_and_gradient(arch, w, batch);
            weighted_loss += loss * static_cast<double>(end - start);
            if (cfg.clip_norm > 0.0) {
                const double norm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
                if (norm > cfg.clip_norm) {
                    for (double& gj : grad) gj *= cfg.clip_norm / norm;
                }
            }
            adam_step(w.params, grad, m, v, ++step, cfg);
        }
        run.train_mae_history.push_back(weighted_loss / static_cast<double>(order.size()));
        run.epochs_completed = epoch;
        if (std::find(test_checkpoints.begin(), test_checkpoints.end(), epoch) != test_checkpoints.end()) {
            run.test_mae_at[epoch] = mae(predict(arch, w, test_ds), test_ds.targets);
        }
    }

    run.final_train_mae = mae(predict(arch, w, train_ds), train_ds.targets);
    run.test_mae = mae(predict(arch, w, test_ds), test_ds.targets);
    run.test_mae_at[run.epochs_completed] = run.test_mae;
    run.final_weights = std::move(w);
    return run;
}

TrainingRun train(const ArchitectureSpec& arch, const WindowedDataset& train_ds, const WindowedDataset& test_ds,
                  const AdamConfig& cfg, const std::vector<std::size_t>& test_checkpoints) {
    return train(arch, train_ds, test_ds, cfg, glorot_weights(arch, fresh_init_seed(cfg.seed)), test_checkpoints);
}

} // namespace rnnsamp
