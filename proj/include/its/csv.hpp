#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace its::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;

  /// Column index by name; throws Io if absent.
  std::size_t column(const std::string& name) const;
};

/// UTF-8, comma separated, every field double-quoted, header first, "\n"
/// line endings.
std::string format(const Table& table);
void write(const std::filesystem::path& path, const Table& table);

/// Accepts quoted or bare fields, embedded newlines and doubled quotes.
Table parse(const std::string& text);
Table read(const std::filesystem::path& path);

}  // namespace its::csv
