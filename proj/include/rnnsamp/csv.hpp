#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rnnsamp::csv {

/// Shortest decimal text that parses back to exactly `v` ("nan"/"inf"/"-inf" for non-finite).
std::string format_double(double v);

/// Strict parse of plain decimal or scientific notation. Rejects empty cells,
/// surrounding junk, locale separators, and hex floats.
std::optional<double> parse_double(std::string_view text);

/// Splits one line on commas and trims ASCII whitespace and a trailing '\r'.
std::vector<std::string> split_line(std::string_view line);

/// Writes `# key: value` comment lines; readers skip lines starting with '#'.
void write_comment_block(std::ostream& os, std::string_view text);

} // namespace rnnsamp::csv
