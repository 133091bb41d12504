#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rnnsamp/matrix.hpp"

namespace rnnsamp {

/// A multivariate series: rows are timesteps, columns are variables.
///
/// `target_columns` names the columns a model predicts. `input_columns` names the
/// columns fed to the model; when empty, the inputs are every non-target column,
/// or every column if all columns are targets (the univariate case).
struct TimeSeries {
    Matrix values;
    std::vector<std::string> column_names;
    std::vector<std::size_t> target_columns;
    std::vector<std::size_t> input_columns;
    std::optional<double> sample_rate;

    std::size_t length() const { return values.rows(); }
    std::size_t width() const { return values.cols(); }

    /// Resolved input column indices (see the defaulting rule above).
    std::vector<std::size_t> resolved_inputs() const;

    /// Throws ParameterError unless every invariant holds.
    void validate() const;
};

struct SineParams {
    double amplitude = 1.0;
    double frequency = 1.0;  // Hz
    double phase = 0.0;      // radians
    double rate = 10.0;      // samples per second
    double t_start = 0.0;
    double t_end = 100.0;
};

/// Supervised one-step-ahead examples cut from a series.
/// `inputs` holds n_examples blocks of lb rows, each row n_features wide.
struct WindowedDataset {
    std::size_t lb = 0;
    std::size_t n_features = 0;
    std::vector<double> inputs;  // [n_examples][lb][n_features], row-major
    Matrix targets;              // [n_examples][n_outputs]

    std::size_t size() const { return targets.rows(); }
    std::size_t n_outputs() const { return targets.cols(); }

    /// Row `step` of example `i`'s input window.
    std::span<const double> step(std::size_t i, std::size_t step) const {
        return {inputs.data() + (i * lb + step) * n_features, n_features};
    }

    /// Examples [begin, end) as a new dataset.
    WindowedDataset slice(std::size_t begin, std::size_t end) const;

    /// Examples at the given indices, in the given order.
    WindowedDataset gather(const std::vector<std::size_t>& indices) const;

    bool operator==(const WindowedDataset&) const = default;
};

/// Per-column affine map used by MinMax scaling.
struct ColumnRange {
    double min = 0.0;
    double max = 0.0;
};

/// Samples A*sin(2*pi*f*t + phase) at t = t_start + k/rate over [t_start, t_end).
/// The single column is named "y" and is its own target.
TimeSeries generate_sine(const SineParams& p);

/// Reads a comma-separated file with a header row. Lines beginning with '#'
/// are ignored. Throws IoError, ParseError (naming row and column), or
/// ParameterError for unknown target labels.
TimeSeries load_csv(const std::filesystem::path& path, const std::vector<std::string>& target_columns);

/// Writes the series with a header row; `comment` is emitted as leading '#' lines.
void write_csv(const std::filesystem::path& path, const TimeSeries& ts, const std::string& comment = {});

/// Maps each column to [0,1] by (x-min)/(max-min). Constant columns map to 0.
std::pair<TimeSeries, std::vector<ColumnRange>> minmax_scale(const TimeSeries& ts);

/// Inverse of minmax_scale.
TimeSeries minmax_unscale(const TimeSeries& scaled, const std::vector<ColumnRange>& ranges);

/// Builds (window, next-step target) pairs with look-back `lb`.
WindowedDataset window(const TimeSeries& ts, std::size_t lb);

/// Chronological split: the first ceil(fraction*n) examples train, the rest test.
std::pair<WindowedDataset, WindowedDataset> split(const WindowedDataset& ds, double fraction);

} // namespace rnnsamp
