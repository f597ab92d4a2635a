#pragma once

#include <istream>
#include <string>
#include <vector>

namespace simaudit {

struct CsvRow {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 records: quoted fields may hold commas, doubled quotes and
/// newlines. Blank lines are skipped. Throws Error(LabelFileMalformed) on
/// an unterminated quoted field.
std::vector<CsvRow> parse_csv(std::istream& in, const std::string& label);

}  // namespace simaudit
