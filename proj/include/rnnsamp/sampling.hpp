#pragma once

// MAE random sampling: evaluate an architecture by the distribution of its
// error under many N(0,1) weight draws, fit a truncated normal to that
// distribution and score the architecture by p_t = P(MAE <= threshold).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rnnsamp/lstm.hpp"
#include "rnnsamp/stats.hpp"
#include "rnnsamp/timeseries.hpp"

namespace rnnsamp {

enum class EvalSplit { train, test, full };

std::string to_string(EvalSplit s);
EvalSplit parse_eval_split(const std::string& name);

struct SamplingConfig {
    std::size_t max_samples = 1000;
    double threshold = 0.01;
    std::uint64_t seed = 0;
    EvalSplit eval_split = EvalSplit::test;

    void validate() const;
    bool operator==(const SamplingConfig&) const = default;
};

/// Chronological partitions of one windowed dataset.
struct DatasetSplits {
    WindowedDataset full;
    WindowedDataset train;
    WindowedDataset test;

    const WindowedDataset& select(EvalSplit s) const;
};

DatasetSplits make_splits(WindowedDataset ds, double train_fraction);

/// Windows and splits a series once per distinct look-back.
class SplitsByLookBack {
public:
    SplitsByLookBack(const TimeSeries& ts, double train_fraction, const std::vector<std::size_t>& lbs);

    /// Throws SizeError for a look-back that was not prepared or could not be windowed.
    const DatasetSplits& at(std::size_t lb) const;
    std::size_t n_features() const { return n_features_; }
    std::size_t n_outputs() const { return n_outputs_; }

private:
    std::map<std::size_t, DatasetSplits> splits_;
    std::map<std::size_t, std::string> errors_;
    std::size_t n_features_ = 0;
    std::size_t n_outputs_ = 0;
};

struct SampleOutcome {
    std::size_t arch_id = 0;  // 1-based position in the evaluated grid
    ArchitectureSpec arch;
    std::vector<double> maes;
    TruncatedNormalFit fit;
    double p_t = 0.0;
    double log_p_t = kLogProbabilityFloor;
    std::uint64_t best_sample_seed = 0;
    double best_mae = 0.0;
    double mean_raw = 0.0;
    double sd_raw = 0.0;
    bool ok = true;
    std::string diagnostic;
};

/// Mean of |pred - actual| over every cell. Throws DimensionError on shape mismatch.
double mae(const Matrix& pred, const Matrix& actual);

/// MAE interval implied by the output activation: [0,2] for tanh, [0,1] for sigmoid.
std::pair<double, double> mae_bounds(OutputActivation a);

/// Seed of draw `k` for an architecture; depends only on (base, nc, lb, k).
std::uint64_t sample_seed(std::uint64_t base, const ArchitectureSpec& arch, std::size_t k);

/// Finishes an outcome from its MAE vector: truncated-normal fit, p_t, best draw.
/// A fit error is recorded in `diagnostic` with ok = false.
SampleOutcome summarize_samples(std::size_t arch_id, const ArchitectureSpec& arch, std::vector<double> maes,
                                const SamplingConfig& cfg);

/// Runs the sampling loop for one architecture on `eval_data`.
SampleOutcome mae_random_sampling(const ArchitectureSpec& arch, const WindowedDataset& eval_data,
                                  const SamplingConfig& cfg, unsigned threads = 1, std::size_t arch_id = 1);

/// Samples every architecture of a grid. Draws from all architectures are
/// scheduled together; results do not depend on `threads`. Architectures that
/// cannot be evaluated produce ok = false outcomes instead of aborting the run.
std::vector<SampleOutcome> sample_architectures(const std::vector<ArchitectureSpec>& grid,
                                                const SplitsByLookBack& data, const SamplingConfig& cfg,
                                                unsigned threads);

struct RankedEntry {
    std::size_t rank = 0;    // 1-based
    int decile = 1;          // 1 = highest p_t
    std::size_t index = 0;   // position in the input outcome list
};

/// Sorts by p_t descending; ties by nc, then lb, then arch_id ascending.
/// Throws SizeError on an empty list.
std::vector<RankedEntry> rank_architectures(const std::vector<SampleOutcome>& outcomes);

/// CSV columns: arch_id,nc,lb,n_samples,mean_fit,sd_fit,p_t,log_p_t,best_mae,mean_raw,sd_raw
void write_outcomes_csv(std::ostream& os, const std::vector<SampleOutcome>& outcomes, const std::string& comment);

/// CSV columns: rank,decile,arch_id,nc,lb,p_t,log_p_t,best_seed
void write_ranking_csv(std::ostream& os, const std::vector<SampleOutcome>& outcomes,
                       const std::vector<RankedEntry>& ranking, const std::string& comment);

} // namespace rnnsamp
