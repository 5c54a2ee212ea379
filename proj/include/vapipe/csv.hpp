#pragma once

// Minimal RFC 4180 reader/writer: quoted fields, embedded quotes ("") and
// embedded newlines, CRLF tolerant.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "vapipe/common.hpp"

namespace vapipe::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the row starts
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {
    // Strip a UTF-8 byte-order mark.
    if (in_.peek() == 0xEF) {
      char bom[3];
      in_.read(bom, 3);
      if (!(static_cast<unsigned char>(bom[1]) == 0xBB &&
            static_cast<unsigned char>(bom[2]) == 0xBF)) {
        in_.clear();
        in_.seekg(0);
      }
    }
  }

  // Returns false at end of input. Blank lines are skipped.
  bool next(Row& row) {
    row.fields.clear();
    int c = in_.get();
    while (c == '\n' || c == '\r') {
      if (c == '\n') ++line_;
      c = in_.get();
    }
    if (c == EOF) return false;
    row.line = line_;

    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (;; c = in_.get()) {
      if (quoted) {
        if (c == EOF) fail(ErrorKind::parse, format("line %zu: unterminated quoted field", row.line));
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(static_cast<char>(c));
        }
        continue;
      }
      if (c == '"' && !field_started) {
        quoted = true;
        field_started = true;
      } else if (c == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
      } else if (c == '\n' || c == EOF) {
        if (c == '\n') ++line_;
        row.fields.push_back(std::move(field));
        return true;
      } else if (c == '\r') {
        // part of CRLF; drop
      } else {
        field.push_back(static_cast<char>(c));
        field_started = true;
      }
    }
  }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

inline std::string quote(const std::string& field) {
  const bool needs = field.find_first_of(",\"\r\n") != std::string::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

}  // namespace vapipe::csv
