#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace ebselect {

/// Shortest of the decimal forms that keep all 17 significant digits.
std::string format_double(double v);

/// RFC 4180 quoting; plain fields pass through unchanged.
std::string csv_escape(const std::string& field);

/// Joins pre-escaped fields and terminates the record with CRLF.
std::string csv_row(const std::vector<std::string>& fields);

/// Splits one record into fields, honoring double-quote escaping. Returns
/// nullopt for records with unbalanced quotes.
std::optional<std::vector<std::string>> split_csv_record(
    const std::string& line);

/// Reads one line, accepting LF or CRLF endings. False at end of stream.
bool read_csv_line(std::istream& in, std::string& line);

}  // namespace ebselect
