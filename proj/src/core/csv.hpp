#pragma once

// Minimal CSV plumbing shared by the readers and writers. Header-checked,
// comma separated, optional double-quote quoting, '.' decimals.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gravimetric::csv {

struct Table {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based file line of each row
};

std::vector<std::string> split_line(std::string_view line);

/// Reads a file and checks its header equals `expected` exactly.
Table read(const std::filesystem::path& path, std::span<const std::string_view> expected);

/// Cell accessor that knows where it came from, for error messages.
struct Cell {
  const Table* table;
  std::size_t row;
  std::size_t col;

  const std::string& text() const { return table->rows[row][col]; }
  std::string where() const;

  int as_int() const;
  double as_double() const;
  bool as_flag() const;
};

inline Cell cell(const Table& t, std::size_t row, std::size_t col) { return Cell{&t, row, col}; }

/// Shortest round-trip decimal form.
std::string format_double(double v);

std::string join(std::span<const std::string> fields);

void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace gravimetric::csv
