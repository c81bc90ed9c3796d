#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sit/error.hpp"

namespace sit::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    fail(Errc::parse, "missing column '" + name + "'");
  }
};

inline std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_row(std::ostream& os, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    os << quote(row[i]);
  }
  os << '\n';
}

inline void write(std::ostream& os, const Table& t) {
  write_row(os, t.header);
  for (const auto& r : t.rows) write_row(os, r);
}

inline std::string to_string(const Table& t) {
  std::ostringstream os;
  write(os, t);
  return os.str();
}

// RFC-4180 parser: quoted fields may hold commas, quotes ("") and newlines.
// Accepts LF or CRLF record ends; a trailing newline is optional.
inline Table parse(std::istream& is) {
  Table t;
  Row row;
  std::string field;
  bool in_quotes = false, any = false, was_quoted = false;
  std::size_t line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    if (t.header.empty())
      t.header = std::move(row);
    else if (row.size() != t.header.size())
      fail(Errc::parse, "line " + std::to_string(line) + ": expected " +
                            std::to_string(t.header.size()) + " fields, got " +
                            std::to_string(row.size()));
    else
      t.rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  char c;
  while (is.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      if (!field.empty() || was_quoted)
        fail(Errc::parse, "line " + std::to_string(line) + ": stray quote");
      in_quotes = was_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (is.peek() != '\n') fail(Errc::parse, "line " + std::to_string(line) + ": bare CR");
    } else if (c == '\n') {
      end_row();
      ++line;
    } else {
      if (was_quoted) fail(Errc::parse, "line " + std::to_string(line) + ": text after quote");
      field += c;
    }
  }
  if (in_quotes) fail(Errc::parse, "unterminated quoted field");
  if (any) end_row();
  if (t.header.empty()) fail(Errc::parse, "empty CSV input");
  return t;
}

inline Table parse_string(const std::string& s) {
  std::istringstream is(s);
  return parse(is);
}

inline Table read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::not_found, "cannot open " + path);
  try {
    return parse(is);
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.what());
  }
}

inline void write_file(const std::string& path, const Table& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Errc::validation, "cannot write " + path);
  write(os, t);
}

// Shortest round-tripping decimal form; NaN is written as an empty field.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  for (int prec = 1; prec <= 17; ++prec) {
    char tmp[40];
    std::snprintf(tmp, sizeof tmp, "%.*g", prec, x);
    if (std::strtod(tmp, nullptr) == x) return tmp;
  }
  return buf;
}

inline double parse_double(const std::string& s, const char* what = "number") {
  if (s.empty()) return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) fail(Errc::parse, std::string("bad ") + what + " '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const char* what = "integer") {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    fail(Errc::parse, std::string("bad ") + what + " '" + s + "'");
  }
  if (pos != s.size()) fail(Errc::parse, std::string("bad ") + what + " '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  fail(Errc::parse, "bad boolean '" + s + "'");
}

}  // namespace sit::csv
