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

#include "segmenter.hpp"

#include <algorithm>
#include <cctype>

namespace dischargegen::segmenter {
namespace {

constexpr std::array<std::string_view, kCanonicalSectionCount> kDisplayNames = {
    "Chief Complaint",
    "Major Surgical or Invasive Procedure",
    "History of Present Illness",
    "Past Medical History",
    "Social History",
    "Family History",
    "Physical Exam",
    "Pertinent Results",
    "Brief Hospital Course",
    "Medications on Admission",
    "Discharge Medications",
    "Discharge Disposition",
    "Discharge Diagnosis",
    "Discharge Condition",
    "Discharge Instructions",
};

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_alpha(char c) { return is_upper(c) || (c >= 'a' && c <= 'z'); }

// ^[A-Z][A-Za-z /]{2,40}:$
bool is_unknown_header(std::string_view line) {
  if (line.size() < 4 || line.size() > 42) return false;
  if (!is_upper(line.front()) || line.back() != ':') return false;
  for (std::size_t i = 1; i + 1 < line.size(); ++i) {
    const char c = line[i];
    if (!is_alpha(c) && c != ' ' && c != '/') return false;
  }
  return true;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

// Matches "pertinent<ws>+results<ws>*:" at the start of the left-trimmed
// line and returns the offset just past the colon.
std::optional<std::size_t> match_inline_pertinent_results(
    std::string_view line) {
  std::size_t pos = 0;
  const auto skip_space = [&] {
    const std::size_t start = pos;
    while (pos < line.size() &&
           (line[pos] == ' ' || line[pos] == '\t')) {
      ++pos;
    }
    return pos - start;
  };
  const auto word = [&](std::string_view w) {
    if (line.size() - pos < w.size()) return false;
    if (!text::iequals_ascii(line.substr(pos, w.size()), w)) return false;
    pos += w.size();
    return true;
  };
  skip_space();
  if (!word("pertinent")) return std::nullopt;
  if (skip_space() == 0) return std::nullopt;
  if (!word("results")) return std::nullopt;
  skip_space();
  if (pos >= line.size() || line[pos] != ':') return std::nullopt;
  return pos + 1;
}

}  // namespace

std::string_view display_name(SectionId id) {
  const auto index = static_cast<std::size_t>(id);
  return index < kDisplayNames.size() ? kDisplayNames[index] : "Unknown";
}

std::string snake_name(SectionId id) {
  std::string out;
  for (char c : display_name(id)) {
    if (c == ' ') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::optional<SectionId> parse_section_id(std::string_view name) {
  std::string key = text::to_lower_ascii(text::collapse_whitespace(name));
  std::replace(key.begin(), key.end(), '_', ' ');
  for (SectionId id : kCanonicalSections) {
    if (text::to_lower_ascii(display_name(id)) == key) return id;
  }
  return std::nullopt;
}

std::string SectionName::display() const {
  if (id == SectionId::kUnknown) return raw_header;
  return std::string(display_name(id));
}

const Section* SegmentedNote::find(SectionId id) const {
  for (const Section& s : sections) {
    if (s.name.id == id) return &s;
  }
  return nullptr;
}

std::optional<HeaderMatch> match_header_line(std::string_view raw_line) {
  const std::string_view line = strip_cr(raw_line);

  std::string_view candidate = text::trim(line);
  if (!candidate.empty() && candidate.back() == ':') {
    candidate.remove_suffix(1);
  }
  if (!candidate.empty()) {
    if (auto id = parse_section_id(candidate)) {
      // Reject snake_case spellings inside notes; only spaces separate words.
      if (candidate.find('_') == std::string_view::npos) {
        return HeaderMatch{SectionName(*id), raw_line.size()};
      }
    }
  }
  if (auto colon_end = match_inline_pertinent_results(line)) {
    return HeaderMatch{SectionName(SectionId::kPertinentResults), *colon_end};
  }
  if (is_unknown_header(line)) {
    return HeaderMatch{SectionName::unknown(std::string(line)),
                       raw_line.size()};
  }
  return std::nullopt;
}

SegmentedNote segment(std::string note_text) {
  SegmentedNote note;
  note.source = std::move(note_text);
  const std::string_view src = note.source;

  struct Header {
    SectionName name;
    ByteRange span;
  };
  std::vector<Header> headers;
  std::size_t line_start = 0;
  while (line_start < src.size()) {
    std::size_t nl = src.find('\n', line_start);
    const std::size_t line_end = nl == std::string_view::npos ? src.size() : nl;
    const std::size_t next = nl == std::string_view::npos ? src.size() : nl + 1;
    if (auto m = match_header_line(src.substr(line_start, line_end - line_start))) {
      // An own-line header swallows its newline; an inline one stops at the
      // colon so the rest of the line becomes body text.
      const std::size_t header_end =
          m->header_length == line_end - line_start ? next
                                                    : line_start + m->header_length;
      headers.push_back({std::move(m->name), {line_start, header_end}});
    }
    line_start = next;
  }

  note.preamble = {0, headers.empty() ? src.size() : headers.front().span.begin};
  for (std::size_t i = 0; i < headers.size(); ++i) {
    Section s;
    s.name = std::move(headers[i].name);
    s.header = headers[i].span;
    s.body = {s.header.end,
              i + 1 < headers.size() ? headers[i + 1].span.begin : src.size()};
    s.body_text = std::string(s.body.slice(src));
    note.sections.push_back(std::move(s));
  }
  return note;
}

std::optional<std::string> extract_section(const SegmentedNote& note,
                                           const SectionName& name) {
  for (const Section& s : note.sections) {
    if (s.name == name) return std::string(text::trim(s.body_text));
  }
  return std::nullopt;
}

std::string redact_targets(const SegmentedNote& note) {
  const std::string_view src = note.source;
  std::string out(note.preamble.slice(src));
  for (const Section& s : note.sections) {
    out.append(s.header.slice(src));
    if (s.name.id != SectionId::kBriefHospitalCourse &&
        s.name.id != SectionId::kDischargeInstructions) {
      out.append(s.body.slice(src));
    }
  }
  return out;
}

nlohmann::json to_json(const SegmentedNote& note) {
  nlohmann::json sections = nlohmann::json::array();
  for (const Section& s : note.sections) {
    nlohmann::json j = {
        {"name", s.name.id == SectionId::kUnknown
                     ? std::string("Unknown")
                     : std::string(display_name(s.name.id))},
        {"header", {s.header.begin, s.header.end}},
        {"body", {s.body.begin, s.body.end}},
    };
    if (s.name.id == SectionId::kUnknown) j["raw_header"] = s.name.raw_header;
    sections.push_back(std::move(j));
  }
  return {{"preamble", std::string(note.preamble.slice(note.source))},
          {"sections", std::move(sections)}};
}

}  // namespace dischargegen::segmenter
