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

#ifndef DISCHARGEGEN_TESTS_NOTE_GENERATOR_HPP
#define DISCHARGEGEN_TESTS_NOTE_GENERATOR_HPP

#include <cctype>
#include <random>
#include <string>
#include <vector>

#include "segmenter.hpp"

namespace dischargegen::testing {

// Random notes mixing canonical headers (with case and spacing variants),
// unknown headers, inline "Pertinent Results:" lines, CRLF endings,
// non-ASCII text and header-like lines that must not match.
inline std::string random_note(std::mt19937& rng) {
  static const std::vector<std::string> kBodies = {
      "stable overnight", "BP 120/80, HR 72", "no acute distress",
      "Lisinopril 10 mg daily", "pt w/ \xC3\xA9" "d\xC3\xA8me", "  indented line",
      "", "see: above", "Note: not a header", "x:", "A:", "CT: no bleed",
      "temp\xC2\xA0" "98.6", "1. aspirin", "- item"};
  static const std::vector<std::string> kUnknown = {
      "Followup Instructions:", "Allergies:", "Facility:", "ADMISSION LABS:",
      "Pertinent results on discharge:"};
  std::string note;
  const auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  const std::string eol = pick(5) == 0 ? "\r\n" : "\n";
  const int lines = static_cast<int>(pick(40));
  for (int i = 0; i < lines; ++i) {
    const std::size_t kind = pick(10);
    if (kind < 3) {
      const auto id = segmenter::kCanonicalSections[pick(segmenter::kCanonicalSections.size())];
      std::string name(segmenter::display_name(id));
      if (pick(3) == 0) {
        for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      }
      const std::string lead = pick(4) == 0 ? "  " : "";
      const std::string colon = pick(3) == 0 ? " :" : (pick(4) == 0 ? "" : ":");
      note += lead + name + colon;
    } else if (kind == 3) {
      note += kUnknown[pick(kUnknown.size())];
    } else if (kind == 4) {
      note += "Pertinent Results: " + kBodies[pick(kBodies.size())];
    } else {
      note += kBodies[pick(kBodies.size())];
    }
    if (i + 1 < lines || pick(2) == 0) note += eol;
  }
  return note;
}

// Concatenates preamble, headers and bodies in order.
inline std::string reassemble(const segmenter::SegmentedNote& note) {
  std::string out(note.preamble.slice(note.source));
  for (const auto& s : note.sections) {
    out += s.header.slice(note.source);
    out += s.body.slice(note.source);
  }
  return out;
}

// True when the spans tile the source contiguously and bodies match.
inline bool tiles(const segmenter::SegmentedNote& note) {
  std::size_t pos = 0;
  if (note.preamble.begin != 0) return false;
  pos = note.preamble.end;
  for (const auto& s : note.sections) {
    if (s.header.begin != pos || s.header.end > s.body.begin || s.header.empty()) return false;
    if (s.body.begin != s.header.end) return false;
    if (s.body_text != s.body.slice(note.source)) return false;
    pos = s.body.end;
  }
  return pos == note.source.size() && reassemble(note) == note.source;
}

}  // namespace dischargegen::testing

#endif  // DISCHARGEGEN_TESTS_NOTE_GENERATOR_HPP
