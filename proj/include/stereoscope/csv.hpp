#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace stereoscope::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line where each row starts

  // Index of a header column, or npos.
  std::size_t column(std::string_view name) const;
};

// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line ends,
// embedded newlines inside quotes. The first record is the header.
Table parse(std::string_view content);
Table read_file(const std::string& path);

std::string escape_field(std::string_view field);
void write_row(std::ostream& out, const Row& row);
std::string format_row(const Row& row);

}  // namespace stereoscope::csv
