#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cloze::csv {

struct Row {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
/// breaks. A UTF-8 BOM is skipped. Throws cloze::Error on an unterminated quote.
std::vector<Row> parse(std::string_view text);

/// Quotes a field only when it needs it.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace cloze::csv
