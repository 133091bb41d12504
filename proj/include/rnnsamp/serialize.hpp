#pragma once

// JSON conversions for the domain types. Non-finite doubles are written as
// null and read back as NaN.

#include <json.hpp>

#include "rnnsamp/lstm.hpp"
#include "rnnsamp/sampling.hpp"
#include "rnnsamp/stats.hpp"
#include "rnnsamp/trainer.hpp"

namespace rnnsamp {

void to_json(nlohmann::json& j, const ArchitectureSpec& a);
void from_json(const nlohmann::json& j, ArchitectureSpec& a);

void to_json(nlohmann::json& j, const LayoutSegment& s);

void to_json(nlohmann::json& j, const SamplingConfig& c);
void from_json(const nlohmann::json& j, SamplingConfig& c);

void to_json(nlohmann::json& j, const AdamConfig& c);
void from_json(const nlohmann::json& j, AdamConfig& c);

void to_json(nlohmann::json& j, const TruncatedNormalFit& f);
void from_json(const nlohmann::json& j, TruncatedNormalFit& f);

void to_json(nlohmann::json& j, const SampleOutcome& o);
void from_json(const nlohmann::json& j, SampleOutcome& o);

/// Training record without weight vectors (those go to weight files).
void to_json(nlohmann::json& j, const TrainingRun& r);

void to_json(nlohmann::json& j, const LinearModel& m);
void from_json(const nlohmann::json& j, LinearModel& m);

namespace json_util {

/// Reads a number that may have been written as null (non-finite).
double get_double(const nlohmann::json& j, const char* key);

/// Throws ParseError naming `field` when it is missing or has the wrong type.
template <typename T>
T require(const nlohmann::json& j, const std::string& field) {
    if (!j.contains(field)) throw ParseError("missing field \"" + field + "\"");
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid field \"" + field + "\": " + e.what());
    }
}

} // namespace json_util

} // namespace rnnsamp
