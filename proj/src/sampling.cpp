#include "rnnsamp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rnnsamp/csv.hpp"
#include "rnnsamp/parallel.hpp"
#include "rnnsamp/rng.hpp"

namespace rnnsamp {

std::string to_string(EvalSplit s) {
    switch (s) {
    case EvalSplit::train: return "train";
    case EvalSplit::test: return "test";
    case EvalSplit::full: return "full";
    }
    return "test";
}

EvalSplit parse_eval_split(const std::string& name) {
    if (name == "train") return EvalSplit::train;
    if (name == "test") return EvalSplit::test;
    if (name == "full") return EvalSplit::full;
    throw ParameterError("unknown eval split \"" + name + "\" (expected train, test or full)");
}

void SamplingConfig::validate() const {
    if (max_samples < 2) throw ParameterError("max_samples must be at least 2");
    if (!(threshold > 0.0) || !std::isfinite(threshold)) throw ParameterError("threshold must be positive");
}

const WindowedDataset& DatasetSplits::select(EvalSplit s) const {
    switch (s) {
    case EvalSplit::train: return train;
    case EvalSplit::full: return full;
    case EvalSplit::test: break;
    }
    return test;
}

DatasetSplits make_splits(WindowedDataset ds, double train_fraction) {
    auto [train, test] = split(ds, train_fraction);
    return {std::move(ds), std::move(train), std::move(test)};
}

SplitsByLookBack::SplitsByLookBack(const TimeSeries& ts, double train_fraction, const std::vector<std::size_t>& lbs) {
    n_features_ = ts.resolved_inputs().size();
    n_outputs_ = ts.target_columns.size();
    for (std::size_t lb : lbs) {
        if (splits_.contains(lb) || errors_.contains(lb)) continue;
        try {
            splits_.emplace(lb, make_splits(window(ts, lb), train_fraction));
        } catch (const Error& e) {
            errors_.emplace(lb, e.what());
        }
    }
}

const DatasetSplits& SplitsByLookBack::at(std::size_t lb) const {
    if (const auto it = splits_.find(lb); it != splits_.end()) return it->second;
    if (const auto it = errors_.find(lb); it != errors_.end()) throw SizeError(it->second);
    throw SizeError("look-back " + std::to_string(lb) + " was not prepared");
}

double mae(const Matrix& pred, const Matrix& actual) {
    if (pred.rows() != actual.rows() || pred.cols() != actual.cols()) {
        throw DimensionError("mae: prediction and target shapes differ");
    }
    if (pred.empty()) throw SizeError("mae of an empty matrix");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.data().size(); ++i) s += std::abs(pred.data()[i] - actual.data()[i]);
    return s / static_cast<double>(pred.data().size());
}

std::pair<double, double> mae_bounds(OutputActivation a) {
    const auto [lo, hi] = activation_range(a);
    return {0.0, hi - lo};
}

std::uint64_t sample_seed(std::uint64_t base, const ArchitectureSpec& arch, std::size_t k) {
    return hash_values(base, arch.nc, arch.lb, k);
}

SampleOutcome summarize_samples(std::size_t arch_id, const ArchitectureSpec& arch, std::vector<double> maes,
                                const SamplingConfig& cfg) {
    SampleOutcome out;
    out.arch_id = arch_id;
    out.arch = arch;
    out.maes = std::move(maes);
    const auto best = std::min_element(out.maes.begin(), out.maes.end());
    const auto k_best = static_cast<std::size_t>(best - out.maes.begin());
    out.best_mae = *best;
    out.best_sample_seed = sample_seed(cfg.seed, arch, k_best);
    out.mean_raw = mean(out.maes);
    out.sd_raw = sample_sd(out.maes);

    const auto [lo, hi] = mae_bounds(arch.output_activation);
    try {
        out.fit = fit_truncated_normal(out.maes, lo, hi);
        out.p_t = truncnorm_cdf(cfg.threshold, out.fit);
        out.log_p_t = truncnorm_log_cdf(cfg.threshold, out.fit);
        if (!out.fit.converged) {
            out.diagnostic = out.fit.sigma <= kSigmaFloor ? "degenerate fit: zero-variance samples"
                                                          : "fit did not converge within its iteration budget";
        }
    } catch (const Error& e) {
        out.ok = false;
        out.fit = TruncatedNormalFit{out.mean_raw, std::max(out.sd_raw, kSigmaFloor), lo, hi, false, 0, 0.0};
        out.p_t = 0.0;
        out.log_p_t = kLogProbabilityFloor;
        out.diagnostic = std::string("fit failed: ") + e.what();
    }
    return out;
}

SampleOutcome mae_random_sampling(const ArchitectureSpec& arch, const WindowedDataset& eval_data,
                                  const SamplingConfig& cfg, unsigned threads, std::size_t arch_id) {
    cfg.validate();
    arch.validate();
    check_compatible(arch, WeightSet{arch, std::vector<double>(param_count(arch))}, eval_data);
    std::vector<double> maes(cfg.max_samples);
    parallel_for(cfg.max_samples, threads, [&](std::size_t k) {
        const WeightSet w = sample_weights(arch, sample_seed(cfg.seed, arch, k));
        maes[k] = mae(predict(arch, w, eval_data), eval_data.targets);
    });
    return summarize_samples(arch_id, arch, std::move(maes), cfg);
}

std::vector<SampleOutcome> sample_architectures(const std::vector<ArchitectureSpec>& grid,
                                                const SplitsByLookBack& data, const SamplingConfig& cfg,
                                                unsigned threads) {
    cfg.validate();
    const std::size_t n_arch = grid.size();
    std::vector<std::string> errors(n_arch);
    std::vector<const WindowedDataset*> eval(n_arch, nullptr);
    for (std::size_t a = 0; a < n_arch; ++a) {
        try {
            grid[a].validate();
            const WindowedDataset& ds = data.at(grid[a].lb).select(cfg.eval_split);
            check_compatible(grid[a], WeightSet{grid[a], std::vector<double>(param_count(grid[a]))}, ds);
            eval[a] = &ds;
        } catch (const Error& e) {
            errors[a] = e.what();
        }
    }

    // Largest architectures first so the tail of the schedule is short.
    std::vector<std::size_t> order(n_arch);
    for (std::size_t a = 0; a < n_arch; ++a) order[a] = a;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return param_count(grid[x]) * grid[x].lb > param_count(grid[y]) * grid[y].lb;
    });

    const std::size_t n_samples = cfg.max_samples;
    std::vector<std::vector<double>> maes(n_arch, std::vector<double>(n_samples, 0.0));
    parallel_for(n_arch * n_samples, threads, [&](std::size_t task) {
        const std::size_t a = order[task / n_samples];
        const std::size_t k = task % n_samples;
        if (!eval[a]) return;
        const WeightSet w = sample_weights(grid[a], sample_seed(cfg.seed, grid[a], k));
        maes[a][k] = mae(predict(grid[a], w, *eval[a]), eval[a]->targets);
    });

    std::vector<SampleOutcome> out;
    out.reserve(n_arch);
    for (std::size_t a = 0; a < n_arch; ++a) {
        if (!eval[a]) {
            SampleOutcome failed;
            failed.arch_id = a + 1;
            failed.arch = grid[a];
            failed.ok = false;
            failed.diagnostic = errors[a];
            const auto [lo, hi] = mae_bounds(grid[a].output_activation);
            failed.fit = TruncatedNormalFit{0.0, 1.0, lo, hi, false, 0, 0.0};
            out.push_back(std::move(failed));
            continue;
        }
        out.push_back(summarize_samples(a + 1, grid[a], std::move(maes[a]), cfg));
    }
    return out;
}

std::vector<RankedEntry> rank_architectures(const std::vector<SampleOutcome>& outcomes) {
    if (outcomes.empty()) throw SizeError("cannot rank an empty outcome list");
    std::vector<std::size_t> idx(outcomes.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = outcomes[a];
        const auto& y = outcomes[b];
        if (x.p_t != y.p_t) return x.p_t > y.p_t;
        if (x.arch.nc != y.arch.nc) return x.arch.nc < y.arch.nc;
        if (x.arch.lb != y.arch.lb) return x.arch.lb < y.arch.lb;
        return x.arch_id < y.arch_id;
    });
    const std::size_t n = idx.size();
    std::vector<RankedEntry> ranking(n);
    for (std::size_t r = 0; r < n; ++r) {
        ranking[r] = {r + 1, static_cast<int>(r * 10 / n) + 1, idx[r]};
    }
    return ranking;
}

void write_outcomes_csv(std::ostream& os, const std::vector<SampleOutcome>& outcomes, const std::string& comment) {
    using csv::format_double;
    csv::write_comment_block(os, comment);
    os << "arch_id,nc,lb,n_samples,mean_fit,sd_fit,p_t,log_p_t,best_mae,mean_raw,sd_raw\n";
    for (const auto& o : outcomes) {
        os << o.arch_id << ',' << o.arch.nc << ',' << o.arch.lb << ',' << o.maes.size() << ','
           << format_double(o.fit.mu) << ',' << format_double(o.fit.sigma) << ',' << format_double(o.p_t) << ','
           << format_double(o.log_p_t) << ',' << format_double(o.best_mae) << ',' << format_double(o.mean_raw)
           << ',' << format_double(o.sd_raw) << '\n';
    }
}

void write_ranking_csv(std::ostream& os, const std::vector<SampleOutcome>& outcomes,
                       const std::vector<RankedEntry>& ranking, const std::string& comment) {
    using csv::format_double;
    csv::write_comment_block(os, comment);
    os << "rank,decile,arch_id,nc,lb,p_t,log_p_t,best_seed\n";
    for (const auto& r : ranking) {
        const auto& o = outcomes[r.index];
        os << r.rank << ',' << r.decile << ',' << o.arch_id << ',' << o.arch.nc << ',' << o.arch.lb << ','
           << format_double(o.p_t) << ',' << format_double(o.log_p_t) << ',' << o.best_sample_seed << '\n';
    }
}

} // namespace rnnsamp
