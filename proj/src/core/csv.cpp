#include "csv.hpp"

#include "gravimetric/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gravimetric::csv {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

Table read(const std::filesystem::path& path, std::span<const std::string_view> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Table t;
  t.path = path.string();
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!have_header) {
      t.header = split_line(line);
      have_header = true;
      bool ok = t.header.size() == expected.size();
      for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = t.header[i] == expected[i];
      if (!ok) {
        std::string want;
        for (auto e : expected) want += (want.empty() ? "" : ",") + std::string(e);
        throw Error(ErrorCode::SchemaMismatch, t.path + ": header must be '" + want + "' but is '" + line + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != expected.size())
      throw Error(ErrorCode::SchemaMismatch, t.path + ": row " + std::to_string(lineno) + ": expected " +
                                                 std::to_string(expected.size()) + " columns, found " +
                                                 std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.lines.push_back(lineno);
  }
  if (!have_header) throw Error(ErrorCode::SchemaMismatch, t.path + ": missing header");
  return t;
}

std::string Cell::where() const {
  return table->path + ": row " + std::to_string(table->lines[row]) + ", column " + table->header[col];
}

int Cell::as_int() const {
  const std::string& s = text();
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::BadNumber, where() + ": not an integer: '" + s + "'");
  return v;
}

double Cell::as_double() const {
  const std::string& s = text();
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty() || !std::isfinite(v))
    throw Error(ErrorCode::BadNumber, where() + ": not a number: '" + s + "'");
  return v;
}

bool Cell::as_flag() const {
  const std::string& s = text();
  if (s == "0") return false;
  if (s == "1") return true;
  throw Error(ErrorCode::BadNumber, where() + ": flag must be 0 or 1, got '" + s + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, p);
}

std::string join(std::span<const std::string> fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace gravimetric::csv
