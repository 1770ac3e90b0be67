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

#include "concepts.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <unordered_set>

#include "errors.hpp"
#include "text.hpp"

namespace dischargegen::concepts {

std::string_view type_name(ConceptType t) {
  switch (t) {
    case ConceptType::kProblem: return "PROBLEM";
    case ConceptType::kTreatment: return "TREATMENT";
    case ConceptType::kTest: return "TEST";
  }
  return "PROBLEM";
}

std::optional<ConceptType> parse_type(std::string_view s) {
  if (s == "PROBLEM") return ConceptType::kProblem;
  if (s == "TREATMENT") return ConceptType::kTreatment;
  if (s == "TEST") return ConceptType::kTest;
  return std::nullopt;
}

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<MatchToken> match_tokens(std::string_view s) {
  std::vector<MatchToken> tokens;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t len = 0;
    const char32_t cp = text::decode_utf8(s, pos, &len);
    if (text::is_unicode_space(cp)) {
      pos += len;
      continue;
    }
    const std::size_t begin = pos;
    if (is_word_byte(static_cast<unsigned char>(s[pos]))) {
      // Non-ASCII spaces are multi-byte, so stop at them explicitly.
      while (pos < s.size() && is_word_byte(static_cast<unsigned char>(s[pos]))) {
        std::size_t l = 0;
        if (text::is_unicode_space(text::decode_utf8(s, pos, &l))) break;
        pos += l;
      }
    } else {
      pos += len;
    }
    tokens.push_back({begin, pos, text::to_lower_ascii(s.substr(begin, pos - begin))});
  }
  return tokens;
}

std::string normalize_surface(std::string_view s) {
  return text::to_lower_ascii(text::collapse_whitespace(s));
}

void Lexicon::add(std::string_view surface, ConceptType type) {
  std::string key = normalize_surface(surface);
  if (key.empty()) {
    throw Error(ErrorKind::kValidation, "lexicon entry has an empty surface form");
  }
  auto [it, inserted] = entries_.emplace(key, type);
  if (!inserted) {
    if (it->second != type) {
      throw Error(ErrorKind::kValidation,
                  "ambiguous lexicon entry \"" + key + "\": both " +
                      std::string(type_name(it->second)) + " and " +
                      std::string(type_name(type)));
    }
    return;
  }
  std::size_t node = 0;
  for (const MatchToken& tok : match_tokens(key)) {
    auto found = trie_[node].next.find(tok.lowered);
    if (found == trie_[node].next.end()) {
      trie_.push_back(Node{});
      found = trie_[node].next.emplace(tok.lowered, trie_.size() - 1).first;
    }
    node = found->second;
  }
  trie_[node].type = type;
}

Lexicon Lexicon::parse(std::istream& in, std::string_view source) {
  Lexicon lex;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    const auto where = std::string(source) + ":" + std::to_string(n) + ": ";
    if (tab == std::string::npos) {
      throw Error(ErrorKind::kParse, where + "expected surface<TAB>type");
    }
    const auto type = parse_type(text::trim(std::string_view(line).substr(tab + 1)));
    if (!type) {
      throw Error(ErrorKind::kParse,
                  where + "type must be PROBLEM, TREATMENT or TEST");
    }
    try {
      lex.add(std::string_view(line).substr(0, tab), *type);
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.what());
    }
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open lexicon " + path.string());
  return parse(in, path.string());
}

std::optional<ConceptType> Lexicon::lookup(std::string_view surface) const {
  auto it = entries_.find(normalize_surface(surface));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t Lexicon::longest_match(std::span<const MatchToken> tokens,
                                   std::size_t pos, ConceptType* type) const {
  std::size_t node = 0;
  std::size_t best = 0;
  for (std::size_t i = pos; i < tokens.size(); ++i) {
    auto it = trie_[node].next.find(tokens[i].lowered);
    if (it == trie_[node].next.end()) break;
    node = it->second;
    if (trie_[node].type) {
      best = i - pos + 1;
      *type = *trie_[node].type;
    }
  }
  return best;
}

std::vector<ConceptSpan> extract_concepts(std::string_view text,
                                          const SectionName& section,
                                          const Lexicon& lexicon) {
  std::vector<ConceptSpan> spans;
  const auto tokens = match_tokens(text);
  for (std::size_t i = 0; i < tokens.size();) {
    ConceptType type{};
    const std::size_t len = lexicon.longest_match(tokens, i, &type);
    if (len == 0) {
      ++i;
      continue;
    }
    const std::size_t start = tokens[i].begin;
    const std::size_t end = tokens[i + len - 1].end;
    spans.push_back({std::string(text.substr(start, end - start)), type, start,
                     end, section});
    i += len;
  }
  return spans;
}

std::vector<std::string> dedup_concepts(std::span<const ConceptSpan> spans) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const ConceptSpan& s : spans) {
    if (seen.insert(normalize_surface(s.text)).second) {
      out.push_back(text::collapse_whitespace(s.text));
    }
  }
  return out;
}

std::vector<ConceptSpan> parse_remote_spans(const nlohmann::json& answer,
                                            std::string_view text,
                                            const SectionName& section) {
  const auto protocol_error = [](const std::string& what) {
    return RemoteError(ErrorKind::kProtocol, what, 0);
  };
  if (!answer.is_object() || !answer.contains("spans") ||
      !answer["spans"].is_array()) {
    throw protocol_error("NER answer lacks a \"spans\" array");
  }
  std::vector<ConceptSpan> spans;
  std::size_t index = 0;
  for (const auto& j : answer["spans"]) {
    const std::string label = "span #" + std::to_string(index++) + " " + j.dump();
    if (!j.is_object() || !j.contains("text") || !j.contains("type") ||
        !j.contains("start") || !j.contains("end") || !j["text"].is_string() ||
        !j["type"].is_string() || !j["start"].is_number_integer() ||
        !j["end"].is_number_integer() || j["start"].get<std::int64_t>() < 0 ||
        j["end"].get<std::int64_t>() < 0) {
      throw protocol_error(label + ": malformed span");
    }
    const auto type = parse_type(j["type"].get<std::string>());
    if (!type) throw protocol_error(label + ": unknown concept type");
    const auto start = j["start"].get<std::size_t>();
    const auto end = j["end"].get<std::size_t>();
    if (!(start < end && end <= text.size())) {
      throw protocol_error(label + ": offsets out of bounds for text of length " +
                           std::to_string(text.size()));
    }
    if (text.substr(start, end - start) != j["text"].get<std::string>()) {
      throw protocol_error(label + ": text does not match source bytes");
    }
    spans.push_back({j["text"].get<std::string>(), *type, start, end, section});
  }
  std::sort(spans.begin(), spans.end(),
            [](const ConceptSpan& a, const ConceptSpan& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start < spans[i - 1].end) {
      throw protocol_error("overlapping spans \"" + spans[i - 1].text + "\" and \"" +
                           spans[i].text + "\"");
    }
  }
  return spans;
}

std::vector<ConceptSpan> RemoteExtractor::extract(std::string_view text,
                                                  const SectionName& section) const {
  const nlohmann::json payload = {{"text", text}, {"section", section.display()}};
  const auto result = http::post_json(endpoint_, payload, policy_);
  return parse_remote_spans(result.body, text, section);
}

nlohmann::json span_to_json(const ConceptSpan& span) {
  return {{"text", span.text},
          {"type", type_name(span.type)},
          {"start", span.start},
          {"end", span.end}};
}

}  // namespace dischargegen::concepts
