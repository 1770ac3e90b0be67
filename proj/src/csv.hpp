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

#ifndef DISCHARGEGEN_CSV_HPP
#define DISCHARGEGEN_CSV_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dischargegen::csv {

// RFC 4180: a field containing a comma, quote, CR or LF is wrapped in
// double quotes with embedded quotes doubled. Records end in CRLF.
std::string escape_field(std::string_view field);
void write_row(std::ostream& out, std::span<const std::string> fields);

// Parses a whole RFC 4180 document. Accepts CRLF or bare LF record ends and
// quoted fields spanning lines. Throws Error(kParse) on an unterminated
// quote or stray characters after a closing quote.
std::vector<std::vector<std::string>> parse(std::string_view document);
std::vector<std::vector<std::string>> read(std::istream& in);

}  // namespace dischargegen::csv

#endif  // DISCHARGEGEN_CSV_HPP
