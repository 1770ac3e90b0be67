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

#ifndef DISCHARGEGEN_CONCEPTS_HPP
#define DISCHARGEGEN_CONCEPTS_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "http.hpp"
#include "json.hpp"
#include "segmenter.hpp"

namespace dischargegen::concepts {

using segmenter::SectionName;

enum class ConceptType { kProblem, kTreatment, kTest };

// "PROBLEM" / "TREATMENT" / "TEST"
std::string_view type_name(ConceptType t);
std::optional<ConceptType> parse_type(std::string_view s);

struct ConceptSpan {
  std::string text;  // verbatim source bytes [start, end)
  ConceptType type = ConceptType::kProblem;
  std::size_t start = 0;
  std::size_t end = 0;
  SectionName section;

  friend bool operator==(const ConceptSpan&, const ConceptSpan&) = default;
};

// A token used for dictionary matching: a maximal run of ASCII letters,
// digits and non-ASCII bytes, or a single other non-space character.
struct MatchToken {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string lowered;
};

std::vector<MatchToken> match_tokens(std::string_view s);

// Lowercase, whitespace collapsed to single spaces.
std::string normalize_surface(std::string_view s);

// Surface-form dictionary. Immutable once built, so one instance can be
// shared by any number of extraction threads.
class Lexicon {
 public:
  static constexpr std::string_view kNormalization = "lower+collapse-ws";

  // TSV rows `surface<TAB>type`. Blank lines and lines starting with '#'
  // are ignored. The same surface listed with two types is rejected.
  static Lexicon parse(std::istream& in, std::string_view source = "<stream>");
  static Lexicon load(const std::filesystem::path& path);

  void add(std::string_view surface, ConceptType type);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, ConceptType>& entries() const { return entries_; }
  std::optional<ConceptType> lookup(std::string_view surface) const;

  // Longest entry matching tokens[pos...]; returns its token length (0 when
  // nothing matches) and type.
  std::size_t longest_match(std::span<const MatchToken> tokens, std::size_t pos,
                            ConceptType* type) const;

 private:
  struct Node {
    std::unordered_map<std::string, std::size_t> next;
    std::optional<ConceptType> type;
  };

  std::map<std::string, ConceptType> entries_;
  std::vector<Node> trie_{Node{}};
};

// Left-to-right greedy longest match over token sequences. Output spans are
// sorted, non-overlapping, and point into `text`.
std::vector<ConceptSpan> extract_concepts(std::string_view text,
                                          const SectionName& section,
                                          const Lexicon& lexicon);

// Surface forms in first-occurrence order, dropping later repeats that are
// equal after normalize_surface. Internal whitespace is collapsed.
std::vector<std::string> dedup_concepts(std::span<const ConceptSpan> spans);

// Checks a remote answer {"spans": [...]} against `text` and converts it.
// Throws RemoteError(kProtocol) naming the first offending span.
std::vector<ConceptSpan> parse_remote_spans(const nlohmann::json& answer,
                                            std::string_view text,
                                            const SectionName& section);

// Client for an external NER service:
//   POST {"text", "section"} -> {"spans": [{"text","type","start","end"}]}
class RemoteExtractor {
 public:
  RemoteExtractor(http::Endpoint endpoint, http::RetryPolicy policy)
      : endpoint_(std::move(endpoint)), policy_(policy) {}

  std::vector<ConceptSpan> extract(std::string_view text,
                                   const SectionName& section) const;

 private:
  http::Endpoint endpoint_;
  http::RetryPolicy policy_;
};

nlohmann::json span_to_json(const ConceptSpan& span);

}  // namespace dischargegen::concepts

#endif  // DISCHARGEGEN_CONCEPTS_HPP
