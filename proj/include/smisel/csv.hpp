// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal RFC 4180 reader/writer: comma separated, double-quote escaping,
// quoted fields may span lines.

#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "smisel/error.hpp"

namespace smisel::csv {

using Row = std::vector<std::string>;

class Reader {
 public:
  explicit Reader(std::istream& in, std::string source = "<csv>")
      : in_(in), source_(std::move(source)) {}

  // Next record, or nullopt at end of input.
  std::optional<Row> next() {
    Row row;
    std::string field;
    bool quoted = false;
    bool any = false;
    int c;
    while ((c = in_.get()) != EOF) {
      any = true;
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field += '"';
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field += ch;
        }
        continue;
      }
      if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        row.push_back(std::move(field));
        field.clear();
      } else if (ch == '\n') {
        ++line_;
        if (!field.empty() && field.back() == '\r') field.pop_back();
        row.push_back(std::move(field));
        return row;
      } else {
        field += ch;
      }
    }
    if (quoted) {
      throw FormatError(source_ + ": unterminated quoted field near line " + std::to_string(line_));
    }
    if (!any) return std::nullopt;
    if (!field.empty() && field.back() == '\r') field.pop_back();
    row.push_back(std::move(field));
    return row;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 1;
};

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << escape(row[i]);
  out << '\n';
}

}  // namespace smisel::csv
