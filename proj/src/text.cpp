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

#include "text.hpp"

#include "errors.hpp"

namespace dischargegen::text {

char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t* length) {
  const auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(s[i]);
  };
  const unsigned char lead = byte(pos);
  std::size_t need = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    *length = 1;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    need = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    need = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    need = 3;
    cp = lead & 0x07;
  } else {
    *length = 1;
    return 0xFFFD;
  }
  if (pos + need >= s.size()) {
    *length = 1;
    return 0xFFFD;
  }
  for (std::size_t i = 1; i <= need; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) {
      *length = 1;
      return 0xFFFD;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  *length = need + 1;
  return cp;
}

bool is_unicode_space(char32_t cp) {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 ||
         cp == 0xA0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) ||
         cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
         cp == 0x3000;
}

std::size_t count_code_points(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t pos = 0, len = 0; pos < s.size(); pos += len) {
    decode_utf8(s, pos, &len);
    ++n;
  }
  return n;
}

std::vector<ByteRange> whitespace_token_ranges(std::string_view s) {
  std::vector<ByteRange> out;
  bool in_token = false;
  std::size_t start = 0;
  std::size_t len = 0;
  for (std::size_t pos = 0; pos < s.size(); pos += len) {
    const bool space = is_unicode_space(decode_utf8(s, pos, &len));
    if (space && in_token) {
      out.push_back({start, pos});
      in_token = false;
    } else if (!space && !in_token) {
      start = pos;
      in_token = true;
    }
  }
  if (in_token) out.push_back({start, s.size()});
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  for (const ByteRange& r : whitespace_token_ranges(s)) {
    out.push_back(r.slice(s));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ranges = whitespace_token_ranges(s);
  if (ranges.empty()) return s.substr(s.size());
  return s.substr(ranges.front().begin,
                  ranges.back().end - ranges.front().begin);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  for (std::string_view word : split_whitespace(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(word);
  }
  return out;
}

bool iequals_ascii(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x = static_cast<char>(x - 'A' + 'a');
    if (y >= 'A' && y <= 'Z') y = static_cast<char>(y - 'A' + 'a');
    if (x != y) return false;
  }
  return true;
}

Tokenizer Tokenizer::from_name(std::string_view name) {
  if (name == "whitespace") return Tokenizer(TokenizerKind::kWhitespace);
  if (name == "chars4") return Tokenizer(TokenizerKind::kCharEstimate);
  throw Error(ErrorKind::kConfig,
              "unknown tokenizer \"" + std::string(name) +
                  "\" (expected whitespace or chars4)");
}

std::string_view Tokenizer::name() const {
  return kind_ == TokenizerKind::kWhitespace ? "whitespace" : "chars4";
}

std::size_t Tokenizer::count(std::string_view s) const {
  if (kind_ == TokenizerKind::kWhitespace) {
    return whitespace_token_ranges(s).size();
  }
  return (count_code_points(s) + 3) / 4;
}

std::size_t Tokenizer::prefix_bytes(std::string_view s,
                                    std::size_t max_tokens) const {
  if (kind_ == TokenizerKind::kWhitespace) {
    const auto ranges = whitespace_token_ranges(s);
    if (ranges.size() <= max_tokens) return s.size();
    return max_tokens == 0 ? 0 : ranges[max_tokens - 1].end;
  }
  // ceil(cp / 4) <= max_tokens  <=>  cp <= 4 * max_tokens
  const std::size_t max_cp = 4 * max_tokens;
  std::size_t n = 0;
  std::size_t len = 0;
  for (std::size_t pos = 0; pos < s.size(); pos += len) {
    if (n == max_cp) return pos;
    decode_utf8(s, pos, &len);
    ++n;
  }
  return s.size();
}

}  // namespace dischargegen::text
