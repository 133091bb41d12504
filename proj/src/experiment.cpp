#include "rnnsamp/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <type_traits>

#include "rnnsamp/csv.hpp"
#include "rnnsamp/parallel.hpp"
#include "rnnsamp/rng.hpp"
#include "rnnsamp/serialize.hpp"

namespace rnnsamp {

using json_util::get_double;
using json_util::require;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMinHoldout = 4;
} // namespace

std::string to_string(FeatureSet f) { return f == FeatureSet::p_only ? "p_only" : "mean_sd_logp"; }

FeatureSet parse_feature_set(const std::string& name) {
    if (name == "p_only") return FeatureSet::p_only;
    if (name == "mean_sd_logp") return FeatureSet::mean_sd_logp;
    throw ParameterError("unknown feature set \"" + name + "\" (expected p_only or mean_sd_logp)");
}

std::vector<std::size_t> parse_int_range(const std::string& text) {
    auto parse_one = [&](std::string_view s) {
        std::size_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
            throw ParameterError("invalid range \"" + text + "\" (expected a..b or an integer)");
        }
        return v;
    };
    const std::string_view sv(text);
    const auto dots = sv.find("..");
    if (dots == std::string_view::npos) {
        const std::size_t v = parse_one(sv);
        if (v == 0) throw ParameterError("invalid range \"" + text + "\": values must be positive");
        return {v};
    }
    const std::size_t a = parse_one(sv.substr(0, dots));
    const std::size_t b = parse_one(sv.substr(dots + 2));
    if (a > b) throw ParameterError("invalid range \"" + text + "\": start exceeds end");
    if (a == 0) throw ParameterError("invalid range \"" + text + "\": values must be positive");
    std::vector<std::size_t> out;
    for (std::size_t v = a; v <= b; ++v) out.push_back(v);
    return out;
}

std::vector<ArchitectureSpec> GridSpec::expand(std::size_t n_inputs, std::size_t n_outputs) const {
    std::vector<ArchitectureSpec> out;
    for (std::size_t c : nc) {
        for (std::size_t l : lb) out.push_back({c, l, n_inputs, n_outputs, activation});
    }
    return out;
}

namespace {

std::string describe_values(const std::vector<std::size_t>& v) {
    if (v.empty()) return "{}";
    bool contiguous = true;
    for (std::size_t i = 1; i < v.size(); ++i) contiguous = contiguous && v[i] == v[i - 1] + 1;
    if (v.size() == 1) return std::to_string(v.front());
    if (contiguous) return std::to_string(v.front()) + ".." + std::to_string(v.back());
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "}";
}

} // namespace

std::string GridSpec::label() const {
    return "nc=" + describe_values(nc) + " x lb=" + describe_values(lb) + " (" + to_string(activation) + ")";
}

void ExperimentPlan::validate() const {
    if (grid.nc.empty()) throw ParameterError("plan field \"grid.nc\" is empty");
    if (grid.lb.empty()) throw ParameterError("plan field \"grid.lb\" is empty");
    if (std::find(grid.nc.begin(), grid.nc.end(), 0) != grid.nc.end()) {
        throw ParameterError("plan field \"grid.nc\" must contain positive values");
    }
    if (std::find(grid.lb.begin(), grid.lb.end(), 0) != grid.lb.end()) {
        throw ParameterError("plan field \"grid.lb\" must contain positive values");
    }
    if (grid.nc.size() * grid.lb.size() < 10) {
        throw ParameterError("plan field \"grid\" must hold at least 10 architectures for deciles");
    }
    try {
        sampling.validate();
    } catch (const ParameterError& e) {
        throw ParameterError(std::string("plan field \"sampling\": ") + e.what());
    }
    try {
        training.validate();
    } catch (const ParameterError& e) {
        throw ParameterError(std::string("plan field \"training\": ") + e.what());
    }
    if (epoch_settings.empty()) throw ParameterError("plan field \"epochs\" is empty");
    if (per_decile < 1) throw ParameterError("plan field \"per_decile\" must be at least 1");
    if (repetitions < 1) throw ParameterError("plan field \"repetitions\" must be at least 1");
    if (!(fit_fraction > 0.0 && fit_fraction < 1.0)) {
        throw ParameterError("plan field \"fit_fraction\" must lie in (0,1)");
    }
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw ParameterError("plan field \"split_fraction\" must lie in (0,1)");
    }
}

nlohmann::json plan_to_json(const ExperimentPlan& plan) {
    AdamConfig training = plan.training;
    if (!plan.epoch_settings.empty()) training.epochs = plan.epoch_settings.back();
    return {{"seed", plan.seed},
            {"grid", {{"nc", plan.grid.nc}, {"lb", plan.grid.lb}, {"activation", to_string(plan.grid.activation)}}},
            {"sampling", plan.sampling},
            {"training", training},
            {"epochs", plan.epoch_settings},
            {"per_decile", plan.per_decile},
            {"repetitions", plan.repetitions},
            {"fit_fraction", plan.fit_fraction},
            {"split_fraction", plan.split_fraction},
            {"feature_set", to_string(plan.feature_set)}};
}

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const std::string& key, const std::string& path, T& out) {
    if (!j.contains(key)) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!j.at(key).is_number_unsigned()) {
            throw ParseError("plan field \"" + path + key + "\" must be a non-negative integer");
        }
    }
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError("plan field \"" + path + key + "\" has the wrong type");
    }
}

std::vector<std::size_t> read_values(const nlohmann::json& j, const std::string& path) {
    try {
        if (j.is_string()) return parse_int_range(j.get<std::string>());
        if (j.is_number_unsigned()) return {j.get<std::size_t>()};
        if (j.is_array()) {
            std::vector<std::size_t> out;
            for (const auto& e : j) {
                if (e.is_string()) {
                    const auto part = parse_int_range(e.get<std::string>());
                    out.insert(out.end(), part.begin(), part.end());
                } else if (e.is_number_unsigned()) {
                    out.push_back(e.get<std::size_t>());
                } else {
                    throw ParseError("list entries must be positive integers or range strings");
                }
            }
            return out;
        }
    } catch (const std::exception& e) {
        throw ParseError("plan field \"" + path + "\" is invalid: " + e.what());
    }
    throw ParseError("plan field \"" + path + "\" must be a range string, an integer or a list");
}

template <typename Fn>
auto wrap_field(const std::string& path, Fn&& fn) {
    try {
        return fn();
    } catch (const ParameterError& e) {
        throw ParameterError("plan field \"" + path + "\": " + e.what());
    }
}

} // namespace

ExperimentPlan plan_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("plan must be a JSON object");
    static const std::set<std::string> known{"seed",        "grid",         "sampling",       "training",
                                             "epochs",      "per_decile",   "repetitions",    "fit_fraction",
                                             "feature_set", "split_fraction", "data",          "threads"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ParseError("unknown plan field \"" + key + "\"");
    }

    ExperimentPlan plan;
    read_field(j, "seed", "", plan.seed);
    plan.sampling.seed = plan.seed;
    plan.training.seed = plan.seed;

    if (!j.contains("grid")) throw ParseError("missing plan field \"grid\"");
    const auto& g = j.at("grid");
    if (!g.is_object()) throw ParseError("plan field \"grid\" must be an object");
    if (!g.contains("nc")) throw ParseError("missing plan field \"grid.nc\"");
    plan.grid.nc = read_values(g.at("nc"), "grid.nc");
    plan.grid.lb = g.contains("lb") ? read_values(g.at("lb"), "grid.lb") : std::vector<std::size_t>{30};
    if (g.contains("activation")) {
        std::string name;
        read_field(g, "activation", "grid.", name);
        plan.grid.activation = wrap_field("grid.activation", [&] { return parse_activation(name); });
    }

    if (j.contains("sampling")) {
        const auto& s = j.at("sampling");
        if (!s.is_object()) throw ParseError("plan field \"sampling\" must be an object");
        read_field(s, "max_samples", "sampling.", plan.sampling.max_samples);
        read_field(s, "threshold", "sampling.", plan.sampling.threshold);
        read_field(s, "seed", "sampling.", plan.sampling.seed);
        if (s.contains("eval_split")) {
            std::string name;
            read_field(s, "eval_split", "sampling.", name);
            plan.sampling.eval_split = wrap_field("sampling.eval_split", [&] { return parse_eval_split(name); });
        }
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        if (!t.is_object()) throw ParseError("plan field \"training\" must be an object");
        read_field(t, "learning_rate", "training.", plan.training.learning_rate);
        read_field(t, "beta1", "training.", plan.training.beta1);
        read_field(t, "beta2", "training.", plan.training.beta2);
        read_field(t, "epsilon", "training.", plan.training.epsilon);
        read_field(t, "batch_size", "training.", plan.training.batch_size);
        read_field(t, "seed", "training.", plan.training.seed);
        read_field(t, "clip_norm", "training.", plan.training.clip_norm);
        read_field(t, "epochs", "training.", plan.training.epochs);
    }
    if (j.contains("epochs")) plan.epoch_settings = read_values(j.at("epochs"), "epochs");
    read_field(j, "per_decile", "", plan.per_decile);
    read_field(j, "repetitions", "", plan.repetitions);
    read_field(j, "fit_fraction", "", plan.fit_fraction);
    read_field(j, "split_fraction", "", plan.split_fraction);
    if (j.contains("feature_set")) {
        std::string name;
        read_field(j, "feature_set", "", name);
        plan.feature_set = wrap_field("feature_set", [&] { return parse_feature_set(name); });
    }
    std::sort(plan.epoch_settings.begin(), plan.epoch_settings.end());
    plan.epoch_settings.erase(std::unique(plan.epoch_settings.begin(), plan.epoch_settings.end()),
                              plan.epoch_settings.end());
    if (!plan.epoch_settings.empty()) plan.training.epochs = plan.epoch_settings.back();
    plan.validate();
    return plan;
}

double decile_agreement(std::span<const int> predicted, std::span<const int> observed) {
    if (predicted.size() != observed.size()) throw DimensionError("decile_agreement: length mismatch");
    if (predicted.empty()) throw SizeError("decile_agreement of empty vectors");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += std::abs(predicted[i] - observed[i]) <= 1 ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<std::size_t> stratified_selection(std::span<const int> deciles, std::size_t per_decile,
                                              std::uint64_t seed) {
    std::vector<std::size_t> chosen;
    for (int d = 1; d <= 10; ++d) {
        std::vector<std::size_t> bucket;
        for (std::size_t i = 0; i < deciles.size(); ++i) {
            if (deciles[i] == d) bucket.push_back(i);
        }
        CounterRng rng(hash_values(seed, 0x73656cULL, static_cast<std::uint64_t>(d)));
        const std::size_t take = std::min(per_decile, bucket.size());
        for (std::size_t k = 0; k < take; ++k) {
            const std::size_t pick = k + rng.below(bucket.size() - k);
            std::swap(bucket[k], bucket[pick]);
            chosen.push_back(bucket[k]);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

namespace {

double safe_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    try {
        return pearson(x, y);
    } catch (const Error&) {
        return kNaN;
    }
}

std::vector<double> model_features(const TrainedArchitecture& t, FeatureSet fs) {
    if (fs == FeatureSet::p_only) return {t.p_t};
    return {t.mean_fit, t.sd_fit, t.log_p_t};
}

std::vector<std::string> model_feature_names(FeatureSet fs) {
    if (fs == FeatureSet::p_only) return {"p_t"};
    return {"mean_fit", "sd_fit", "log_p_t"};
}

Matrix feature_matrix(const std::vector<TrainedArchitecture>& trained, const std::vector<std::size_t>& rows,
                      FeatureSet fs) {
    const std::size_t k = model_feature_names(fs).size();
    Matrix m(rows.size(), k);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto f = model_features(trained[rows[r]], fs);
        for (std::size_t c = 0; c < k; ++c) m(r, c) = f[c];
    }
    return m;
}

ModelEvaluation evaluate_repetition(const std::vector<TrainedArchitecture>& trained, const std::vector<double>& observed,
                                    const ExperimentPlan& plan, std::size_t repetition) {
    ModelEvaluation ev;
    ev.repetition = repetition;
    const std::size_t n = trained.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    CounterRng rng(hash_values(plan.seed, 0x726570ULL, repetition));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

    const auto n_fit = static_cast<std::size_t>(std::ceil(plan.fit_fraction * static_cast<double>(n) - 1e-12));
    ev.n_fit = std::min(n_fit, n);
    ev.n_holdout = n - ev.n_fit;
    const std::size_t n_coef = model_feature_names(plan.feature_set).size() + 1;
    if (ev.n_holdout < kMinHoldout) {
        ev.skipped = true;
        ev.diagnostic = "holdout partition has " + std::to_string(ev.n_holdout) + " architectures (need at least " +
                        std::to_string(kMinHoldout) + ")";
        return ev;
    }
    if (ev.n_fit <= n_coef) {
        ev.skipped = true;
        ev.diagnostic = "fit partition has " + std::to_string(ev.n_fit) + " architectures for " +
                        std::to_string(n_coef) + " coefficients";
        return ev;
    }

    std::vector<std::size_t> fit_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(ev.n_fit));
    std::vector<std::size_t> hold_rows(perm.begin() + static_cast<std::ptrdiff_t>(ev.n_fit), perm.end());
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(hold_rows.begin(), hold_rows.end());

    std::vector<double> y_fit;
    for (std::size_t r : fit_rows) y_fit.push_back(observed[r]);
    LinearModel model;
    try {
        model = ols_fit(feature_matrix(trained, fit_rows, plan.feature_set), y_fit,
                        model_feature_names(plan.feature_set));
    } catch (const Error& e) {
        ev.skipped = true;
        ev.diagnostic = std::string("linear fit failed: ") + e.what();
        return ev;
    }
    ev.coefficients = model.coefficients;
    ev.residual_standard_error = model.residual_standard_error;

    // Deciles are assigned over every trained architecture: observed MAE for the
    // observed side, fitted or predicted MAE for the predicted side.
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const auto predicted = ols_predict(model, feature_matrix(trained, all, plan.feature_set));
    const auto pred_deciles = assign_deciles(predicted, false);
    const auto obs_deciles = assign_deciles(observed, false);

    std::vector<double> pd, od;
    std::vector<int> pdi, odi;
    double sq = 0.0;
    for (std::size_t r : hold_rows) {
        pd.push_back(pred_deciles[r]);
        od.push_back(obs_deciles[r]);
        pdi.push_back(pred_deciles[r]);
        odi.push_back(obs_deciles[r]);
        sq += (predicted[r] - observed[r]) * (predicted[r] - observed[r]);
    }
    ev.holdout_rmse = std::sqrt(sq / static_cast<double>(hold_rows.size()));
    ev.within_one_decile = decile_agreement(pdi, odi);
    try {
        const auto s = spearman(pd, od);
        ev.spearman_rho = s.rho;
        ev.spearman_p = s.p_value;
    } catch (const Error& e) {
        ev.skipped = true;
        ev.diagnostic = std::string("spearman undefined: ") + e.what();
    }
    return ev;
}

} // namespace

std::vector<CorrelationRow> correlation_table(const std::vector<TrainedArchitecture>& trained,
                                              const std::vector<std::size_t>& epoch_settings) {
    std::vector<CorrelationRow> rows;
    for (std::size_t e : epoch_settings) {
        CorrelationRow row;
        row.epochs = e;
        row.n = trained.size();
        std::vector<double> y, nc, lb, mu, sd, lp;
        for (const auto& t : trained) {
            y.push_back(t.test_mae.at(e));
            nc.push_back(static_cast<double>(t.nc));
            lb.push_back(static_cast<double>(t.lb));
            mu.push_back(t.mean_fit);
            sd.push_back(t.sd_fit);
            lp.push_back(t.log_p_t);
        }
        row.nc = safe_pearson(y, nc);
        row.lb = safe_pearson(y, lb);
        row.mean_fit = safe_pearson(y, mu);
        row.sd_fit = safe_pearson(y, sd);
        row.log_p_t = safe_pearson(y, lp);
        rows.push_back(row);
    }
    return rows;
}

ExperimentReport run_experiment(const ExperimentPlan& plan, const TimeSeries& series, unsigned threads) {
    plan.validate();
    series.validate();

    ExperimentReport report;
    report.plan = plan_to_json(plan);
    report.grid_label = plan.grid.label();

    const SplitsByLookBack data(series, plan.split_fraction, plan.grid.lb);
    const auto grid = plan.grid.expand(data.n_features(), data.n_outputs());
    const auto outcomes = sample_architectures(grid, data, plan.sampling, threads);
    const auto ranking = rank_architectures(outcomes);

    std::vector<int> decile_of(outcomes.size(), 0);
    for (const auto& r : ranking) {
        report.outcomes.push_back({outcomes[r.index], r.rank, r.decile});
        decile_of[r.index] = r.decile;
    }
    for (const auto& o : outcomes) {
        if (!o.ok) report.notes.push_back("architecture " + std::to_string(o.arch_id) + ": " + o.diagnostic);
    }

    // Failed architectures are not eligible for training.
    std::vector<int> eligible = decile_of;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok) eligible[i] = 0;
    }
    const auto selected = stratified_selection(eligible, plan.per_decile, hash_values(plan.seed, 0x747261ULL));

    std::vector<TrainedArchitecture> trained(selected.size());
    parallel_for(selected.size(), threads, [&](std::size_t k) {
        const auto& o = outcomes[selected[k]];
        const auto& splits = data.at(o.arch.lb);
        AdamConfig cfg = plan.training;
        cfg.epochs = plan.epoch_settings.back();
        cfg.seed = hash_values(plan.training.seed, o.arch_id);
        const TrainingRun run = train(o.arch, splits.train, splits.test, cfg, plan.epoch_settings);
        auto& t = trained[k];
        t.arch_id = o.arch_id;
        t.nc = o.arch.nc;
        t.lb = o.arch.lb;
        t.decile = decile_of[selected[k]];
        t.p_t = o.p_t;
        t.log_p_t = o.log_p_t;
        t.mean_fit = o.fit.mu;
        t.sd_fit = o.fit.sigma;
        t.initial_test_mae = run.initial_test_mae;
        for (std::size_t e : plan.epoch_settings) t.test_mae[e] = run.test_mae_at.at(e);
        t.train_mae_history = run.train_mae_history;
    });
    report.trained = trained;

    report.correlations = correlation_table(trained, plan.epoch_settings);
    if (plan.grid.lb.size() == 1) {
        report.notes.push_back("lb is fixed at " + std::to_string(plan.grid.lb.front()) +
                               "; its correlation column is undefined (null)");
    }

    report.model_epochs = plan.epoch_settings.back();
    report.model_features = model_feature_names(plan.feature_set);
    std::vector<double> observed;
    for (const auto& t : trained) observed.push_back(t.test_mae.at(report.model_epochs));
    auto& s = report.model_summary;
    for (std::size_t r = 1; r <= plan.repetitions; ++r) {
        auto ev = evaluate_repetition(trained, observed, plan, r);
        if (ev.skipped) {
            ++s.n_skipped;
        } else {
            ++s.n_evaluated;
            s.residual_standard_error += ev.residual_standard_error;
            s.holdout_rmse += ev.holdout_rmse;
            s.spearman_rho += ev.spearman_rho;
            s.spearman_p += ev.spearman_p;
            s.within_one_decile += ev.within_one_decile;
        }
        report.model_eval.push_back(std::move(ev));
    }
    if (s.n_evaluated > 0) {
        const auto n = static_cast<double>(s.n_evaluated);
        s.residual_standard_error /= n;
        s.holdout_rmse /= n;
        s.spearman_rho /= n;
        s.spearman_p /= n;
        s.within_one_decile /= n;
    } else {
        s.residual_standard_error = s.holdout_rmse = s.spearman_rho = s.spearman_p = s.within_one_decile = kNaN;
    }
    if (s.n_skipped > 0) {
        report.notes.push_back(std::to_string(s.n_skipped) + " of " + std::to_string(plan.repetitions) +
                               " model repetitions were skipped; averages use n=" + std::to_string(s.n_evaluated));
    }
    return report;
}

nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["format"] = "rnnsamp-experiment-report";
    j["version"] = 1;
    j["plan"] = report.plan;
    j["grid_label"] = report.grid_label;

    auto& outcomes = j["outcomes"] = nlohmann::json::array();
    for (const auto& r : report.outcomes) {
        nlohmann::json o = r.outcome;
        o["rank"] = r.rank;
        o["decile"] = r.decile;
        outcomes.push_back(std::move(o));
    }
    auto& trained = j["trained"] = nlohmann::json::array();
    for (const auto& t : report.trained) {
        nlohmann::json mae = nlohmann::json::object();
        for (const auto& [e, v] : t.test_mae) mae[std::to_string(e)] = v;
        trained.push_back({{"arch_id", t.arch_id},
                           {"nc", t.nc},
                           {"lb", t.lb},
                           {"decile", t.decile},
                           {"p_t", t.p_t},
                           {"log_p_t", t.log_p_t},
                           {"mean_fit", t.mean_fit},
                           {"sd_fit", t.sd_fit},
                           {"initial_test_mae", t.initial_test_mae},
                           {"test_mae", mae},
                           {"train_mae_history", t.train_mae_history}});
    }
    auto& corr = j["correlations"] = nlohmann::json::array();
    for (const auto& c : report.correlations) {
        corr.push_back({{"epochs", c.epochs},
                        {"n", c.n},
                        {"nc", c.nc},
                        {"lb", c.lb},
                        {"mean_fit", c.mean_fit},
                        {"sd_fit", c.sd_fit},
                        {"log_p_t", c.log_p_t}});
    }
    j["model_epochs"] = report.model_epochs;
    j["model_features"] = report.model_features;
    auto& evals = j["model_eval"] = nlohmann::json::array();
    for (const auto& e : report.model_eval) {
        evals.push_back({{"repetition", e.repetition},
                         {"skipped", e.skipped},
                         {"diagnostic", e.diagnostic},
                         {"n_fit", e.n_fit},
                         {"n_holdout", e.n_holdout},
                         {"residual_standard_error", e.residual_standard_error},
                         {"holdout_rmse", e.holdout_rmse},
                         {"spearman_rho", e.spearman_rho},
                         {"spearman_p", e.spearman_p},
                         {"within_one_decile", e.within_one_decile},
                         {"coefficients", e.coefficients}});
    }
    const auto& s = report.model_summary;
    j["model_summary"] = {{"n_evaluated", s.n_evaluated},
                          {"n_skipped", s.n_skipped},
                          {"residual_standard_error", s.residual_standard_error},
                          {"holdout_rmse", s.holdout_rmse},
                          {"spearman_rho", s.spearman_rho},
                          {"spearman_p", s.spearman_p},
                          {"within_one_decile", s.within_one_decile}};
    j["notes"] = report.notes;
    return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "rnnsamp-experiment-report") throw ParseError("not an experiment report");
    ExperimentReport report;
    report.plan = require<nlohmann::json>(j, "plan");
    report.grid_label = require<std::string>(j, "grid_label");
    for (const auto& o : require<nlohmann::json>(j, "outcomes")) {
        report.outcomes.push_back({o.get<SampleOutcome>(), require<std::size_t>(o, "rank"), require<int>(o, "decile")});
    }
    for (const auto& t : require<nlohmann::json>(j, "trained")) {
        TrainedArchitecture a;
        a.arch_id = require<std::size_t>(t, "arch_id");
        a.nc = require<std::size_t>(t, "nc");
        a.lb = require<std::size_t>(t, "lb");
        a.decile = require<int>(t, "decile");
        a.p_t = get_double(t, "p_t");
        a.log_p_t = get_double(t, "log_p_t");
        a.mean_fit = get_double(t, "mean_fit");
        a.sd_fit = get_double(t, "sd_fit");
        a.initial_test_mae = get_double(t, "initial_test_mae");
        const auto test_mae = require<nlohmann::json>(t, "test_mae");
        for (const auto& [e, v] : test_mae.items()) {
            a.test_mae[std::stoul(e)] = v.is_null() ? kNaN : v.get<double>();
        }
        a.train_mae_history = require<std::vector<double>>(t, "train_mae_history");
        report.trained.push_back(std::move(a));
    }
    for (const auto& c : require<nlohmann::json>(j, "correlations")) {
        report.correlations.push_back({require<std::size_t>(c, "epochs"), require<std::size_t>(c, "n"),
                                       get_double(c, "nc"), get_double(c, "lb"), get_double(c, "mean_fit"),
                                       get_double(c, "sd_fit"), get_double(c, "log_p_t")});
    }
    report.model_epochs = require<std::size_t>(j, "model_epochs");
    report.model_features = require<std::vector<std::string>>(j, "model_features");
    for (const auto& e : require<nlohmann::json>(j, "model_eval")) {
        ModelEvaluation ev;
        ev.repetition = require<std::size_t>(e, "repetition");
        ev.skipped = require<bool>(e, "skipped");
        ev.diagnostic = require<std::string>(e, "diagnostic");
        ev.n_fit = require<std::size_t>(e, "n_fit");
        ev.n_holdout = require<std::size_t>(e, "n_holdout");
        ev.residual_standard_error = get_double(e, "residual_standard_error");
        ev.holdout_rmse = get_double(e, "holdout_rmse");
        ev.spearman_rho = get_double(e, "spearman_rho");
        ev.spearman_p = get_double(e, "spearman_p");
        ev.within_one_decile = get_double(e, "within_one_decile");
        ev.coefficients = require<std::vector<double>>(e, "coefficients");
        report.model_eval.push_back(std::move(ev));
    }
    const auto& s = require<nlohmann::json>(j, "model_summary");
    report.model_summary = {require<std::size_t>(s, "n_evaluated"), require<std::size_t>(s, "n_skipped"),
                            get_double(s, "residual_standard_error"), get_double(s, "holdout_rmse"),
                            get_double(s, "spearman_rho"), get_double(s, "spearman_p"),
                            get_double(s, "within_one_decile")};
    report.notes = require<std::vector<std::string>>(j, "notes");
    return report;
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
    using csv::format_double;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw IoError("cannot write " + (dir / name).string());
        return out;
    };
    const std::string comment = "plan: " + report.plan.dump() + "\ngrid: " + report.grid_label;

    {
        auto out = open("report.json");
        out << report_to_json(report).dump(2) << '\n';
    }
    {
        auto out = open("outcomes.csv");
        csv::write_comment_block(out, comment);
        out << "rank,decile,arch_id,nc,lb,n_samples,mean_fit,sd_fit,p_t,log_p_t,best_mae,mean_raw,sd_raw\n";
        for (const auto& r : report.outcomes) {
            const auto& o = r.outcome;
            out << r.rank << ',' << r.decile << ',' << o.arch_id << ',' << o.arch.nc << ',' << o.arch.lb << ','
                << o.maes.size() << ',' << format_double(o.fit.mu) << ',' << format_double(o.fit.sigma) << ','
                << format_double(o.p_t) << ',' << format_double(o.log_p_t) << ',' << format_double(o.best_mae)
                << ',' << format_double(o.mean_raw) << ',' << format_double(o.sd_raw) << '\n';
        }
    }
    {
        auto out = open("trained.csv");
        csv::write_comment_block(out, comment);
        out << "arch_id,nc,lb,decile,p_t,log_p_t,mean_fit,sd_fit,initial_test_mae";
        const auto& epochs = report.plan.contains("epochs") ? report.plan["epochs"] : nlohmann::json::array();
        for (const auto& e : epochs) out << ",test_mae_" << e.get<std::size_t>();
        out << '\n';
        for (const auto& t : report.trained) {
            out << t.arch_id << ',' << t.nc << ',' << t.lb << ',' << t.decile << ',' << format_double(t.p_t) << ','
                << format_double(t.log_p_t) << ',' << format_double(t.mean_fit) << ',' << format_double(t.sd_fit)
                << ',' << format_double(t.initial_test_mae);
            for (const auto& e : epochs) {
                const auto it = t.test_mae.find(e.get<std::size_t>());
                out << ',' << format_double(it == t.test_mae.end() ? kNaN : it->second);
            }
            out << '\n';
        }
    }
    {
        auto out = open("model_eval.csv");
        csv::write_comment_block(out, comment);
        out << "repetition,skipped,n_fit,n_holdout,residual_standard_error,holdout_rmse,spearman_rho,spearman_p,"
               "within_one_decile,diagnostic\n";
        for (const auto& e : report.model_eval) {
            out << e.repetition << ',' << (e.skipped ? 1 : 0) << ',' << e.n_fit << ',' << e.n_holdout << ','
                << format_double(e.residual_standard_error) << ',' << format_double(e.holdout_rmse) << ','
                << format_double(e.spearman_rho) << ',' << format_double(e.spearman_p) << ','
                << format_double(e.within_one_decile) << ",\"" << e.diagnostic << "\"\n";
        }
    }
}

} // namespace rnnsamp
