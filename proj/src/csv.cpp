// Copyright 2026 The dischargegen Authors.
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

#include "csv.hpp"

#include <istream>
#include <iterator>
#include <ostream>

#include "errors.hpp"

namespace dischargegen::csv {

std::string escape_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape_field(fields[i]);
  }
  out << "\r\n";
}

std::vector<std::vector<std::string>> parse(std::string_view doc) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  std::size_t i = 0;
  std::size_t line = 1;
  bool row_has_content = false;

  const auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  const auto end_row = [&] {
    if (!row_has_content && row.empty() && field.empty()) return;  // blank line
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    row_has_content = false;
  };

  while (i < doc.size()) {
    const char c = doc[i];
    if (c == '"' && field.empty()) {
      // Quoted field.
      ++i;
      row_has_content = true;
      for (;;) {
        if (i >= doc.size()) {
          throw Error(ErrorKind::kParse,
                      "csv line " + std::to_string(line) + ": unterminated quote");
        }
        if (doc[i] == '"') {
          if (i + 1 < doc.size() && doc[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        if (doc[i] == '\n') ++line;
        field.push_back(doc[i++]);
      }
      if (i < doc.size() && doc[i] != ',' && doc[i] != '\n' && doc[i] != '\r') {
        throw Error(ErrorKind::kParse, "csv line " + std::to_string(line) +
                                           ": unexpected character after quote");
      }
      continue;
    }
    if (c == ',') {
      end_field();
      row_has_content = true;
      ++i;
    } else if (c == '\r' && i + 1 < doc.size() && doc[i + 1] == '\n') {
      end_row();
      i += 2;
      ++line;
    } else if (c == '\n') {
      end_row();
      ++i;
      ++line;
    } else {
      field.push_back(c);
      row_has_content = true;
      ++i;
    }
  }
  if (row_has_content || !field.empty()) end_row();
  return rows;
}

std::vector<std::vector<std::string>> read(std::istream& in) {
  const std::string doc{std::istreambuf_iterator<char>(in),
                        std::istreambuf_iterator<char>()};
  return parse(doc);
}

}  // namespace dischargegen::csv
