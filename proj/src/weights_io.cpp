#include "rnnsamp/weights_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "rnnsamp/csv.hpp"
#include "rnnsamp/serialize.hpp"

namespace rnnsamp {

namespace {
constexpr const char* kFormat = "rnnsamp-weights";
constexpr int kVersion = 1;
} // namespace

void write_weights(std::ostream& os, const WeightSet& w, const nlohmann::json& meta) {
    if (w.params.size() != param_count(w.arch)) throw DimensionError("weight vector length mismatch");
    nlohmann::json header;
    header["format"] = kFormat;
    header["version"] = kVersion;
    header["arch"] = w.arch;
    header["count"] = w.params.size();
    header["layout"] = w.layout();
    header["meta"] = meta;
    os << header.dump() << '\n';
    for (double p : w.params) os << csv::format_double(p) << '\n';
}

WeightSet read_weights(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("weight file is empty");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("weight file header is not JSON: ") + e.what());
    }
    if (header.value("format", "") != kFormat) throw ParseError("not a weight file (format field)");
    if (header.value("version", 0) != kVersion) throw ParseError("unsupported weight file version");

    WeightSet w;
    w.arch = json_util::require<ArchitectureSpec>(header, "arch");
    w.arch.validate();
    const auto count = json_util::require<std::size_t>(header, "count");
    if (count != param_count(w.arch)) throw ParseError("weight count does not match the architecture");
    if (header.contains("layout") && header["layout"] != nlohmann::json(w.layout())) {
        throw ParseError("weight layout descriptor does not match the architecture");
    }
    w.params.reserve(count);
    std::size_t line_no = 1;
    while (w.params.size() < count && std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto v = csv::parse_double(line);
        if (!v) throw ParseError("bad weight value on line " + std::to_string(line_no));
        w.params.push_back(*v);
    }
    if (w.params.size() != count) throw ParseError("weight file is truncated");
    return w;
}

void save_weights(const std::filesystem::path& path, const WeightSet& w, const nlohmann::json& meta) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_weights(out, w, meta);
    if (!out) throw IoError("failed writing " + path.string());
}

WeightSet load_weights(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_weights(in);
}

} // namespace rnnsamp
