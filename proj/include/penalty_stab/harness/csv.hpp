#pragma once

/**
 * @file csv.hpp
 * @brief CSV tables with a '#'-prefixed metadata block. Floats are written
 * with 17 significant digits so every binary64 value reads back exactly.
 */

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

namespace penalty_stab::harness {

class OutputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A cell is a number, an absent value (empty) or raw text.
using Cell = std::variant<std::monostate, double, std::string>;

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

inline Cell optional_cell(const std::optional<double> &v) {
  return v ? Cell{*v} : Cell{};
}

struct CsvTable {
  std::vector<std::string> metadata; ///< one entry per "# " line
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void write(std::ostream &out) const {
    for (const auto &m : metadata) {
      std::istringstream lines(m);
      std::string line;
      while (std::getline(lines, line)) out << "# " << line << '\n';
    }
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (const auto &row : rows) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out << ',';
        if (const auto *d = std::get_if<double>(&row[j])) out << format_number(*d);
        if (const auto *s = std::get_if<std::string>(&row[j])) out << *s;
      }
      out << '\n';
    }
  }

  void write(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputError("cannot open " + path.string() + " for writing");
    write(out);
    out.flush();
    if (!out) throw OutputError("write failed for " + path.string());
  }
};

/// Parsed CSV: metadata lines without the "# " prefix, header and raw cells.
struct CsvDocument {
  std::vector<std::string> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw std::out_of_range("no CSV column named " + std::string(name));
  }

  /// Value of the metadata line "key: value", if present.
  std::optional<std::string> metadata_value(std::string_view key) const {
    const std::string prefix = std::string(key) + ": ";
    for (const auto &m : metadata) {
      if (m.starts_with(prefix)) return m.substr(prefix.size());
    }
    return std::nullopt;
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline CsvDocument read_csv(std::istream &in) {
  CsvDocument doc;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && !line.empty() && line[0] == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      doc.metadata.emplace_back(body);
      continue;
    }
    if (!have_header) {
      doc.header = split_csv_line(line);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    doc.rows.push_back(split_csv_line(line));
  }
  return doc;
}

inline CsvDocument read_csv(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw OutputError("cannot open " + path.string());
  return read_csv(in);
}

/// Parse a numeric cell; empty cells are absent values.
inline std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
    throw std::invalid_argument("not a number: " + std::string(cell));
  }
  return v;
}

} // namespace penalty_stab::harness
