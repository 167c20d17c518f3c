#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace narrative::csv {

using Row = std::vector<std::string>;

/// Reads comma-separated records. Quoted fields may contain commas,
/// doubled quotes and newlines. Returns rows together with the 1-based
/// line number each record starts on.
struct Record {
  std::size_t line = 0;
  Row fields;
};

std::vector<Record> parse(std::istream& in);
std::vector<Record> read_file(const std::string& path);

/// Quotes a field only when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& fields);

/// Fixed-format double so exported tables are byte-stable across runs.
std::string format_double(double value);

}  // namespace narrative::csv
