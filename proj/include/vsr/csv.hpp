#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vsr/error.hpp"

namespace vsr::csv {

struct Row {
  std::size_t line = 0;  // 1-based line on which the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 style reader: comma separator, double-quoted fields with "" escapes,
/// quoted fields may span lines. CRLF and LF are both accepted.
inline std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  row.line = 1;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    // A completely blank line is skipped.
    if (!(row.fields.size() == 1 && row.fields[0].empty())) rows.push_back(std::move(row));
    row = Row{};
    row.line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started)
          fail(ErrorKind::MalformedRow, "line " + std::to_string(line) + ": stray quote inside field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_row();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) fail(ErrorKind::MalformedRow, "line " + std::to_string(row.line) + ": unterminated quote");
  if (field_started || !field.empty() || !row.fields.empty()) end_row();
  return rows;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("cannot write " + path);
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += '"';
  return out;
}

inline void append_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += quote(fields[i]);
  }
  out += '\n';
}

/// Shortest text that parses back to the same double.
inline std::string format_exact(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Six significant digits, used for human-facing tables.
inline std::string format_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) return std::nullopt;
  return v;
}

/// Maps header names to column positions; throws if a required column is absent.
class Header {
 public:
  Header(const Row& header, const std::vector<std::string_view>& required) : names_(header.fields) {
    for (auto name : required)
      if (index(name) < 0) fail(ErrorKind::MalformedRow, "line 1: missing column '" + std::string(name) + "'");
  }

  int index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return static_cast<int>(i);
    return -1;
  }

  const std::string& get(const Row& row, std::string_view name) const {
    const int i = index(name);
    return row.fields.at(static_cast<std::size_t>(i));
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

}  // namespace vsr::csv
