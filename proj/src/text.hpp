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

#ifndef DISCHARGEGEN_TEXT_HPP
#define DISCHARGEGEN_TEXT_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dischargegen::text {

// Half-open byte range [begin, end) into some source string.
struct ByteRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  std::string_view slice(std::string_view source) const {
    return source.substr(begin, end - begin);
  }
  friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

// Decodes one UTF-8 code point starting at `pos`. Malformed sequences decode
// as U+FFFD with length 1 so that scanning always makes progress.
char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t* length);

// Unicode White_Space property.
bool is_unicode_space(char32_t cp);

std::size_t count_code_points(std::string_view s);

// Byte ranges of maximal runs of non-whitespace code points.
std::vector<ByteRange> whitespace_token_ranges(std::string_view s);
std::vector<std::string_view> split_whitespace(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
// Trims and replaces every whitespace run with a single ASCII space.
std::string collapse_whitespace(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b);

enum class TokenizerKind { kWhitespace, kCharEstimate };

// Length accounting used for budgets and corpus statistics. The whitespace
// tokenizer counts Unicode-whitespace separated words; the char estimate
// counts ceil(code_points / 4).
class Tokenizer {
 public:
  explicit Tokenizer(TokenizerKind kind = TokenizerKind::kWhitespace)
      : kind_(kind) {}

  // Accepts "whitespace" and "chars4".
  static Tokenizer from_name(std::string_view name);

  TokenizerKind kind() const { return kind_; }
  std::string_view name() const;

  std::size_t count(std::string_view s) const;

  // Length in bytes of the longest prefix of `s` whose count is at most
  // `max_tokens`. The prefix never ends inside a token or code point.
  std::size_t prefix_bytes(std::string_view s, std::size_t max_tokens) const;

 private:
  TokenizerKind kind_;
};

}  // namespace dischargegen::text

#endif  // DISCHARGEGEN_TEXT_HPP
