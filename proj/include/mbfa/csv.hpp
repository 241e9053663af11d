#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mbfa/errors.hpp"
#include "mbfa/matrix.hpp"

namespace mbfa {

// 17 significant digits: enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view field, const std::string& name, std::size_t line_no) {
  const auto where = [&] { return name + ":" + std::to_string(line_no); };
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(where() + ": cannot parse '" + std::string(field) + "' as a number");
  }
  if (!std::isfinite(v)) throw ParseError(where() + ": non-finite value");
  return v;
}

}  // namespace detail

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Parses headerless comma-separated numbers, one matrix row per line. Blank
// lines are skipped; every row must have the same number of fields.
inline Matrix parse_csv_matrix(std::string_view text, const std::string& name = "csv") {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::size_t fields = 0;
    while (true) {
      const auto comma = line.find(',');
      values.push_back(detail::parse_double(line.substr(0, comma), name, line_no));
      ++fields;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": ragged row with " +
                       std::to_string(fields) + " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(name + ": no data rows");
  return Matrix(rows, cols, std::move(values));
}

inline Matrix load_csv_matrix(const std::filesystem::path& path) {
  return parse_csv_matrix(read_text_file(path), path.string());
}

inline std::string format_csv_matrix(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

inline void save_csv_matrix(const std::filesystem::path& path, const Matrix& m) {
  write_text_file(path, format_csv_matrix(m));
}

}  // namespace mbfa
