#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace trafficpm {

/// Shortest decimal form that parses back to exactly `v`.
std::string format_double(double v);

/// Strict full-string parse; no leading/trailing junk.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

/// RFC 4180 quoting, only applied when the field needs it.
std::string csv_field(std::string_view field);

/// Splits one CSV line, honouring double-quoted fields. A trailing `\r` is
/// dropped.
std::vector<std::string> split_csv_line(std::string_view line);

std::string join_csv(const std::vector<std::string>& fields);

/// Writes via a sibling temp file and rename, so readers never observe a
/// half-written file.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_text_file(const std::string& path);

}  // namespace trafficpm
