#include "rnnsamp/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rnnsamp/csv.hpp"

namespace rnnsamp {

std::vector<std::size_t> TimeSeries::resolved_inputs() const {
    if (!input_columns.empty()) return input_columns;
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < width(); ++c) {
        if (std::find(target_columns.begin(), target_columns.end(), c) == target_columns.end()) {
            out.push_back(c);
        }
    }
    if (out.empty()) {
        for (std::size_t c = 0; c < width(); ++c) out.push_back(c);
    }
    return out;
}

void TimeSeries::validate() const {
    if (width() < 1) throw ParameterError("time series needs at least one column");
    if (length() < 2) throw ParameterError("time series needs at least two rows");
    if (column_names.size() != width()) throw ParameterError("column name count does not match width");
    for (double v : values.data()) {
        if (!std::isfinite(v)) throw ParameterError("time series contains a non-finite value");
    }
    if (target_columns.empty()) throw ParameterError("time series has no target column");
    for (std::size_t c : target_columns) {
        if (c >= width()) throw ParameterError("target column index out of range");
    }
    for (std::size_t c : input_columns) {
        if (c >= width()) throw ParameterError("input column index out of range");
    }
}

WindowedDataset WindowedDataset::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw SizeError("slice bounds out of range");
    WindowedDataset out;
    out.lb = lb;
    out.n_features = n_features;
    const std::size_t block = lb * n_features;
    out.inputs.assign(inputs.begin() + static_cast<std::ptrdiff_t>(begin * block),
                      inputs.begin() + static_cast<std::ptrdiff_t>(end * block));
    out.targets = Matrix(end - begin, n_outputs());
    for (std::size_t i = begin; i < end; ++i) {
        std::copy(targets.row(i).begin(), targets.row(i).end(), out.targets.row(i - begin).begin());
    }
    return out;
}

WindowedDataset WindowedDataset::gather(const std::vector<std::size_t>& indices) const {
    WindowedDataset out;
    out.lb = lb;
    out.n_features = n_features;
    const std::size_t block = lb * n_features;
    out.inputs.resize(indices.size() * block);
    out.targets = Matrix(indices.size(), n_outputs());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        if (i >= size()) throw SizeError("gather index out of range");
        std::copy_n(inputs.begin() + static_cast<std::ptrdiff_t>(i * block), block,
                    out.inputs.begin() + static_cast<std::ptrdiff_t>(k * block));
        std::copy(targets.row(i).begin(), targets.row(i).end(), out.targets.row(k).begin());
    }
    return out;
}

TimeSeries generate_sine(const SineParams& p) {
    if (!(p.rate > 0.0) || !std::isfinite(p.rate)) throw ParameterError("sine rate must be positive");
    if (!(p.t_end > p.t_start)) throw ParameterError("sine t_end must exceed t_start");
    if (!std::isfinite(p.amplitude) || !std::isfinite(p.frequency) || !std::isfinite(p.phase) ||
        !std::isfinite(p.t_start) || !std::isfinite(p.t_end)) {
        throw ParameterError("sine parameters must be finite");
    }
    // A tiny tolerance keeps e.g. 100*10 from flooring to 999 on representation error.
    const double span = (p.t_end - p.t_start) * p.rate;
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9 * std::max(1.0, span)));
    if (n < 2) throw ParameterError("sine interval yields fewer than two samples");

    TimeSeries ts;
    ts.values = Matrix(n, 1);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = p.t_start + static_cast<double>(k) / p.rate;
        ts.values(k, 0) = p.amplitude * std::sin(2.0 * std::numbers::pi * p.frequency * t + p.phase);
    }
    ts.column_names = {"y"};
    ts.target_columns = {0};
    ts.sample_rate = p.rate;
    return ts;
}

TimeSeries load_csv(const std::filesystem::path& path, const std::vector<std::string>& target_columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        header = csv::split_line(line);
        break;
    }
    if (header.empty()) throw ParseError(path.string() + ": missing header row");

    std::vector<double> data;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r" || line.front() == '#') continue;
        const auto cells = csv::split_line(line);
        ++rows;
        if (cells.size() != header.size()) {
            throw ParseError(path.string() + ": row " + std::to_string(rows) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = csv::parse_double(cells[c]);
            if (!v) {
                throw ParseError(path.string() + ": cannot parse '" + cells[c] + "' at row " +
                                 std::to_string(rows) + ", column \"" + header[c] + "\"");
            }
            data.push_back(*v);
        }
    }

    TimeSeries ts;
    ts.values = Matrix(rows, header.size(), std::move(data));
    ts.column_names = header;
    if (target_columns.empty()) {
        if (header.size() != 1) {
            throw ParameterError("multivariate data requires explicit target columns");
        }
        ts.target_columns = {0};
    } else {
        for (const auto& name : target_columns) {
            const auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end()) throw ParameterError("unknown target column \"" + name + "\"");
            ts.target_columns.push_back(static_cast<std::size_t>(it - header.begin()));
        }
    }
    ts.validate();
    return ts;
}

void write_csv(const std::filesystem::path& path, const TimeSeries& ts, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    if (!comment.empty()) csv::write_comment_block(out, comment);
    for (std::size_t c = 0; c < ts.width(); ++c) out << (c ? "," : "") << ts.column_names[c];
    out << '\n';
    for (std::size_t r = 0; r < ts.length(); ++r) {
        for (std::size_t c = 0; c < ts.width(); ++c) {
            out << (c ? "," : "") << csv::format_double(ts.values(r, c));
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::pair<TimeSeries, std::vector<ColumnRange>> minmax_scale(const TimeSeries& ts) {
    TimeSeries out = ts;
    std::vector<ColumnRange> ranges(ts.width());
    for (std::size_t c = 0; c < ts.width(); ++c) {
        double lo = ts.values(0, c);
        double hi = lo;
        for (std::size_t r = 1; r < ts.length(); ++r) {
            lo = std::min(lo, ts.values(r, c));
            hi = std::max(hi, ts.values(r, c));
        }
        ranges[c] = {lo, hi};
        const double width = hi - lo;
        for (std::size_t r = 0; r < ts.length(); ++r) {
            out.values(r, c) = width > 0.0 ? (ts.values(r, c) - lo) / width : 0.0;
        }
    }
    return {std::move(out), std::move(ranges)};
}

TimeSeries minmax_unscale(const TimeSeries& scaled, const std::vector<ColumnRange>& ranges) {
    if (ranges.size() != scaled.width()) throw DimensionError("scaling table width mismatch");
    TimeSeries out = scaled;
    for (std::size_t c = 0; c < scaled.width(); ++c) {
        const double width = ranges[c].max - ranges[c].min;
        for (std::size_t r = 0; r < scaled.length(); ++r) {
            out.values(r, c) = ranges[c].min + scaled.values(r, c) * width;
        }
    }
    return out;
}

WindowedDataset window(const TimeSeries& ts, std::size_t lb) {
    if (lb == 0) throw ParameterError("look-back must be positive");
    if (lb >= ts.length()) {
        throw SizeError("look-back " + std::to_string(lb) + " must be shorter than the series (" +
                        std::to_string(ts.length()) + " rows)");
    }
    const auto inputs = ts.resolved_inputs();
    if (ts.target_columns.empty()) throw ParameterError("time series has no target column");

    const std::size_t n = ts.length() - lb;
    WindowedDataset ds;
    ds.lb = lb;
    ds.n_features = inputs.size();
    ds.inputs.resize(n * lb * inputs.size());
    ds.targets = Matrix(n, ts.target_columns.size());
    auto out = ds.inputs.begin();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < lb; ++s) {
            for (std::size_t c : inputs) *out++ = ts.values(i + s, c);
        }
        for (std::size_t k = 0; k < ts.target_columns.size(); ++k) {
            ds.targets(i, k) = ts.values(i + lb, ts.target_columns[k]);
        }
    }
    return ds;
}

std::pair<WindowedDataset, WindowedDataset> split(const WindowedDataset& ds, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("split fraction must lie in (0,1)");
    const std::size_t n = ds.size();
    const auto n_train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-12));
    if (n_train == 0 || n_train >= n) {
        throw ParameterError("split fraction leaves an empty partition for " + std::to_string(n) +
                             " examples");
    }
    return {ds.slice(0, n_train), ds.slice(n_train, n)};
}

} // namespace rnnsamp
