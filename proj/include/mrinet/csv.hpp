#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mrinet::csv {

using Row = std::vector<std::string>;

/// Quotes a field when it contains a comma, quote, CR or LF (RFC 4180).
std::string escape(std::string_view field);

/// Joins escaped fields with commas and terminates with CRLF.
std::string format_row(const Row& row);

/// Parses RFC 4180 text (CRLF or LF line endings). Throws HeaderParse on an
/// unterminated quoted field.
std::vector<Row> parse(std::string_view text);

std::vector<Row> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<Row>& rows);

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace mrinet::csv
