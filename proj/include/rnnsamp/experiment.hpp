#pragma once

// Validation pipeline: sample a grid of architectures, rank them into deciles
// by p_t, train a stratified subsample with Adam, correlate trained MAE with
// the sampling statistics, and evaluate a linear MAE predictor over repeated
// random fit/holdout partitions of the trained architectures.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rnnsamp/sampling.hpp"
#include "rnnsamp/stats.hpp"
#include "rnnsamp/timeseries.hpp"
#include "rnnsamp/trainer.hpp"

namespace rnnsamp {

enum class FeatureSet { p_only, mean_sd_logp };

std::string to_string(FeatureSet f);
FeatureSet parse_feature_set(const std::string& name);

/// Parses "a..b" (inclusive) or a single positive integer. Throws ParameterError.
std::vector<std::size_t> parse_int_range(const std::string& text);

/// Cartesian (nc x lb) grid; architectures are enumerated nc-major.
struct GridSpec {
    std::vector<std::size_t> nc;
    std::vector<std::size_t> lb;
    OutputActivation activation = OutputActivation::tanh;

    std::vector<ArchitectureSpec> expand(std::size_t n_inputs, std::size_t n_outputs) const;
    std::string label() const;
};

struct ExperimentPlan {
    std::uint64_t seed = 0;
    GridSpec grid;
    SamplingConfig sampling;
    AdamConfig training;              // training.epochs is ignored; see epoch_settings
    std::vector<std::size_t> epoch_settings{100};
    std::size_t per_decile = 10;
    std::size_t repetitions = 30;
    double fit_fraction = 0.8;
    double split_fraction = 0.8;      // chronological train/test split of the series
    FeatureSet feature_set = FeatureSet::mean_sd_logp;

    /// Throws ParameterError naming the offending field.
    void validate() const;
};

nlohmann::json plan_to_json(const ExperimentPlan& plan);

/// Reads a plan; absent fields keep their defaults. Throws ParseError or
/// ParameterError naming the malformed field.
ExperimentPlan plan_from_json(const nlohmann::json& j);

struct RankedOutcome {
    SampleOutcome outcome;
    std::size_t rank = 0;
    int decile = 0;
};

struct TrainedArchitecture {
    std::size_t arch_id = 0;
    std::size_t nc = 0;
    std::size_t lb = 0;
    int decile = 0;
    double p_t = 0.0;
    double log_p_t = 0.0;
    double mean_fit = 0.0;
    double sd_fit = 0.0;
    double initial_test_mae = 0.0;
    std::map<std::size_t, double> test_mae;  // epochs -> held-out MAE
    std::vector<double> train_mae_history;
};

/// Pearson correlation of trained MAE against each sampling statistic for one
/// epoch budget. NaN marks an undefined coefficient (constant column).
struct CorrelationRow {
    std::size_t epochs = 0;
    std::size_t n = 0;
    double nc = 0.0;
    double lb = 0.0;
    double mean_fit = 0.0;
    double sd_fit = 0.0;
    double log_p_t = 0.0;
};

struct ModelEvaluation {
    std::size_t repetition = 0;  // 1-based
    bool skipped = false;
    std::string diagnostic;
    std::size_t n_fit = 0;
    std::size_t n_holdout = 0;
    double residual_standard_error = 0.0;
    double holdout_rmse = 0.0;
    double spearman_rho = 0.0;
    double spearman_p = 0.0;
    double within_one_decile = 0.0;
    std::vector<double> coefficients;
};

struct ModelEvalSummary {
    std::size_t n_evaluated = 0;
    std::size_t n_skipped = 0;
    double residual_standard_error = 0.0;
    double holdout_rmse = 0.0;
    double spearman_rho = 0.0;
    double spearman_p = 0.0;
    double within_one_decile = 0.0;
};

struct ExperimentReport {
    nlohmann::json plan;
    std::string grid_label;
    std::vector<RankedOutcome> outcomes;  // in rank order
    std::vector<TrainedArchitecture> trained;
    std::vector<CorrelationRow> correlations;
    std::size_t model_epochs = 0;
    std::vector<std::string> model_features;
    std::vector<ModelEvaluation> model_eval;
    ModelEvalSummary model_summary;
    std::vector<std::string> notes;
};

/// Fraction of positions whose deciles differ by at most one.
double decile_agreement(std::span<const int> predicted, std::span<const int> observed);

/// Picks up to `per_decile` entries uniformly without replacement from each
/// decile of `deciles` (values 1..10). Returns indices sorted ascending.
std::vector<std::size_t> stratified_selection(std::span<const int> deciles, std::size_t per_decile,
                                              std::uint64_t seed);

/// One correlation row per epoch budget; each trained entry needs a test MAE for every budget.
std::vector<CorrelationRow> correlation_table(const std::vector<TrainedArchitecture>& trained,
                                              const std::vector<std::size_t>& epoch_settings);

/// Runs the whole pipeline on `series` (windowed per look-back of the grid).
/// The report does not depend on `threads`.
ExperimentReport run_experiment(const ExperimentPlan& plan, const TimeSeries& series, unsigned threads);

nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);

/// Writes report.json, outcomes.csv, trained.csv and model_eval.csv into `dir`.
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

} // namespace rnnsamp
