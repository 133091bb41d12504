#include "rnnsamp/serialize.hpp"

#include <cmath>
#include <limits>

namespace rnnsamp {

namespace json_util {

double get_double(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("missing field \"") + key + "\"");
    const auto& v = j.at(key);
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) throw ParseError(std::string("field \"") + key + "\" is not a number");
    return v.get<double>();
}

} // namespace json_util

using json_util::get_double;
using json_util::require;

void to_json(nlohmann::json& j, const ArchitectureSpec& a) {
    j = {{"nc", a.nc},
         {"lb", a.lb},
         {"n_inputs", a.n_inputs},
         {"n_outputs", a.n_outputs},
         {"output_activation", to_string(a.output_activation)}};
}

void from_json(const nlohmann::json& j, ArchitectureSpec& a) {
    a.nc = require<std::size_t>(j, "nc");
    a.lb = require<std::size_t>(j, "lb");
    a.n_inputs = require<std::size_t>(j, "n_inputs");
    a.n_outputs = require<std::size_t>(j, "n_outputs");
    a.output_activation = parse_activation(require<std::string>(j, "output_activation"));
}

void to_json(nlohmann::json& j, const LayoutSegment& s) {
    j = {{"name", s.name}, {"offset", s.offset}, {"rows", s.rows}, {"cols", s.cols}};
}

void to_json(nlohmann::json& j, const SamplingConfig& c) {
    j = {{"max_samples", c.max_samples},
         {"threshold", c.threshold},
         {"seed", c.seed},
         {"eval_split", to_string(c.eval_split)}};
}

void from_json(const nlohmann::json& j, SamplingConfig& c) {
    c.max_samples = require<std::size_t>(j, "max_samples");
    c.threshold = require<double>(j, "threshold");
    c.seed = require<std::uint64_t>(j, "seed");
    c.eval_split = parse_eval_split(require<std::string>(j, "eval_split"));
}

void to_json(nlohmann::json& j, const AdamConfig& c) {
    j = {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},         {"beta2", c.beta2},
         {"epsilon", c.epsilon},             {"epochs", c.epochs},       {"batch_size", c.batch_size},
         {"seed", c.seed},                   {"clip_norm", c.clip_norm}};
}

void from_json(const nlohmann::json& j, AdamConfig& c) {
    c.learning_rate = require<double>(j, "learning_rate");
    c.beta1 = require<double>(j, "beta1");
    c.beta2 = require<double>(j, "beta2");
    c.epsilon = require<double>(j, "epsilon");
    c.epochs = require<std::size_t>(j, "epochs");
    c.batch_size = require<std::size_t>(j, "batch_size");
    c.seed = require<std::uint64_t>(j, "seed");
    c.clip_norm = require<double>(j, "clip_norm");
}

void to_json(nlohmann::json& j, const TruncatedNormalFit& f) {
    j = {{"mu", f.mu},
         {"sigma", f.sigma},
         {"lower", f.lower},
         {"upper", f.upper},
         {"converged", f.converged},
         {"iterations", f.iterations},
         {"log_likelihood", f.log_likelihood}};
}

void from_json(const nlohmann::json& j, TruncatedNormalFit& f) {
    f.mu = get_double(j, "mu");
    f.sigma = get_double(j, "sigma");
    f.lower = get_double(j, "lower");
    f.upper = get_double(j, "upper");
    f.converged = require<bool>(j, "converged");
    f.iterations = require<std::size_t>(j, "iterations");
    f.log_likelihood = get_double(j, "log_likelihood");
}

void to_json(nlohmann::json& j, const SampleOutcome& o) {
    j = {{"arch_id", o.arch_id},
         {"arch", o.arch},
         {"maes", o.maes},
         {"fit", o.fit},
         {"p_t", o.p_t},
         {"log_p_t", o.log_p_t},
         {"best_sample_seed", o.best_sample_seed},
         {"best_mae", o.best_mae},
         {"mean_raw", o.mean_raw},
         {"sd_raw", o.sd_raw},
         {"ok", o.ok},
         {"diagnostic", o.diagnostic}};
}

void from_json(const nlohmann::json& j, SampleOutcome& o) {
    o.arch_id = require<std::size_t>(j, "arch_id");
    o.arch = require<ArchitectureSpec>(j, "arch");
    o.maes.clear();
    for (const auto& v : require<nlohmann::json>(j, "maes")) {
        o.maes.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
    }
    o.fit = require<TruncatedNormalFit>(j, "fit");
    o.p_t = get_double(j, "p_t");
    o.log_p_t = get_double(j, "log_p_t");
    o.best_sample_seed = require<std::uint64_t>(j, "best_sample_seed");
    o.best_mae = get_double(j, "best_mae");
    o.mean_raw = get_double(j, "mean_raw");
    o.sd_raw = get_double(j, "sd_raw");
    o.ok = require<bool>(j, "ok");
    o.diagnostic = require<std::string>(j, "diagnostic");
}

void to_json(nlohmann::json& j, const TrainingRun& r) {
    nlohmann::json at = nlohmann::json::object();
    for (const auto& [epoch, v] : r.test_mae_at) at[std::to_string(epoch)] = v;
    j = {{"arch", r.arch},
         {"config", r.config},
         {"epochs_completed", r.epochs_completed},
         {"train_mae_history", r.train_mae_history},
         {"initial_train_mae", r.initial_train_mae},
         {"initial_test_mae", r.initial_test_mae},
         {"final_train_mae", r.final_train_mae},
         {"test_mae", r.test_mae},
         {"test_mae_at", at}};
}

void to_json(nlohmann::json& j, const LinearModel& m) {
    j = {{"coefficients", m.coefficients},
         {"feature_names", m.feature_names},
         {"residual_standard_error", m.residual_standard_error},
         {"n_obs", m.n_obs}};
}

void from_json(const nlohmann::json& j, LinearModel& m) {
    m.coefficients = require<std::vector<double>>(j, "coefficients");
    m.feature_names = require<std::vector<std::string>>(j, "feature_names");
    m.residual_standard_error = get_double(j, "residual_standard_error");
    m.n_obs = require<std::size_t>(j, "n_obs");
}

} // namespace rnnsamp
