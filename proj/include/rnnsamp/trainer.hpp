#pragma once

// Gradient training of the sampled architecture: backpropagation through time
// over the LSTM recurrence with the MAE loss, and Adam updates.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "rnnsamp/lstm.hpp"
#include "rnnsamp/timeseries.hpp"

namespace rnnsamp {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double clip_norm = 0.0;  // global gradient-norm clip; 0 disables

    void validate() const;
    bool operator==(const AdamConfig&) const = default;
};

struct TrainingRun {
    ArchitectureSpec arch;
    AdamConfig config;
    WeightSet initial_weights;
    WeightSet final_weights;
    std::size_t epochs_completed = 0;
    /// Mean MAE over the epoch's mini-batches, one entry per epoch.
    std::vector<double> train_mae_history;
    double initial_train_mae = 0.0;
    double initial_test_mae = 0.0;
    double final_train_mae = 0.0;
    double test_mae = 0.0;
    /// Test MAE after selected epochs (epoch number -> MAE).
    std::map<std::size_t, double> test_mae_at;

    bool operator==(const TrainingRun&) const = default;
};

struct GradientResult {
    double loss = 0.0;  // batch MAE
    std::vector<double> gradient;
};

/// Loss and gradient of the batch MAE with respect to every parameter, laid
/// out like the WeightSet. The subgradient of |x| at 0 is taken as 0.
GradientResult mae_loss_and_gradient(const ArchitectureSpec& arch, const WeightSet& w, const WindowedDataset& batch);

std::vector<double> bptt_gradient(const ArchitectureSpec& arch, const WeightSet& w, const WindowedDataset& batch);

/// One Adam update of `w` in place; `t` is the 1-based step index.
void adam_step(std::span<double> w, std::span<const double> grad, std::span<double> m, std::span<double> v,
               std::size_t t, const AdamConfig& cfg);

/// Mini-batch Adam training from `init`. Examples are reshuffled every epoch
/// with a seed derived from (cfg.seed, epoch). Test MAE is recorded after each
/// epoch listed in `test_checkpoints` and always at the end.
TrainingRun train(const ArchitectureSpec& arch, const WindowedDataset& train_ds, const WindowedDataset& test_ds,
                  const AdamConfig& cfg, const WeightSet& init,
                  const std::vector<std::size_t>& test_checkpoints = {});

/// As above, starting from glorot_weights with a seed derived from cfg.seed.
TrainingRun train(const ArchitectureSpec& arch, const WindowedDataset& train_ds, const WindowedDataset& test_ds,
                  const AdamConfig& cfg, const std::vector<std::size_t>& test_checkpoints = {});

/// Seed used for the fresh initialization of `train` without explicit weights.
std::uint64_t fresh_init_seed(std::uint64_t run_seed);

} // namespace rnnsamp
