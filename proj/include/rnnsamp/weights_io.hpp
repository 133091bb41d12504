#pragma once

// Weight file: one line of JSON describing the architecture and the segment
// layout, followed by one parameter per line in flat order. Values are written
// in shortest round-trip form, so a save/load cycle is exact.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "rnnsamp/lstm.hpp"

namespace rnnsamp {

void write_weights(std::ostream& os, const WeightSet& w, const nlohmann::json& meta = nlohmann::json::object());
WeightSet read_weights(std::istream& is);

void save_weights(const std::filesystem::path& path, const WeightSet& w,
                  const nlohmann::json& meta = nlohmann::json::object());
WeightSet load_weights(const std::filesystem::path& path);

} // namespace rnnsamp
