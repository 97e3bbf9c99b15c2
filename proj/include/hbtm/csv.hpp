#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hbtm::csv {

/// Reads one RFC 4180 record (quoted fields may span lines, "" escapes a
/// quote).  Trailing CR is stripped.  Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields);

/// Quotes the field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string trim(std::string_view text);

}  // namespace hbtm::csv
