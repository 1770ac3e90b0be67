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

#ifndef DISCHARGEGEN_SEGMENTER_HPP
#define DISCHARGEGEN_SEGMENTER_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "text.hpp"

namespace dischargegen::segmenter {

using text::ByteRange;

// The fifteen discharge-summary sections recognized by name, in their
// customary document order, plus a catch-all for other header lines.
enum class SectionId {
  kChiefComplaint,
  kMajorSurgicalOrInvasiveProcedure,
  kHistoryOfPresentIllness,
  kPastMedicalHistory,
  kSocialHistory,
  kFamilyHistory,
  kPhysicalExam,
  kPertinentResults,
  kBriefHospitalCourse,
  kMedicationsOnAdmission,
  kDischargeMedications,
  kDischargeDisposition,
  kDischargeDiagnosis,
  kDischargeCondition,
  kDischargeInstructions,
  kUnknown,
};

inline constexpr std::size_t kCanonicalSectionCount = 15;

inline constexpr std::array<SectionId, kCanonicalSectionCount>
    kCanonicalSections = {
        SectionId::kChiefComplaint,
        SectionId::kMajorSurgicalOrInvasiveProcedure,
        SectionId::kHistoryOfPresentIllness,
        SectionId::kPastMedicalHistory,
        SectionId::kSocialHistory,
        SectionId::kFamilyHistory,
        SectionId::kPhysicalExam,
        SectionId::kPertinentResults,
        SectionId::kBriefHospitalCourse,
        SectionId::kMedicationsOnAdmission,
        SectionId::kDischargeMedications,
        SectionId::kDischargeDisposition,
        SectionId::kDischargeDiagnosis,
        SectionId::kDischargeCondition,
        SectionId::kDischargeInstructions,
};

// "Chief Complaint", "Major Surgical or Invasive Procedure", ...
std::string_view display_name(SectionId id);

// Case-insensitive, whitespace-normalized lookup of a canonical name.
// Accepts the display string ("Pertinent Results") or the snake_case key
// ("pertinent_results").
std::optional<SectionId> parse_section_id(std::string_view name);
std::string snake_name(SectionId id);

struct SectionName {
  SectionId id = SectionId::kUnknown;
  std::string raw_header;  // verbatim header line, only for kUnknown

  SectionName() = default;
  SectionName(SectionId section_id) : id(section_id) {}  // NOLINT
  static SectionName unknown(std::string raw) {
    SectionName n(SectionId::kUnknown);
    n.raw_header = std::move(raw);
    return n;
  }

  std::string display() const;
  friend bool operator==(const SectionName&, const SectionName&) = default;
};

struct Section {
  SectionName name;
  ByteRange header;
  ByteRange body;
  std::string body_text;
};

struct SegmentedNote {
  std::string source;
  ByteRange preamble;
  std::vector<Section> sections;

  const Section* find(SectionId id) const;
};

// Result of testing one line against the header rules. `header_length` is
// the number of bytes of the line that belong to the header; for an
// own-line header that is the whole line.
struct HeaderMatch {
  SectionName name;
  std::size_t header_length = 0;
};

// `line` excludes the terminating '\n'.
std::optional<HeaderMatch> match_header_line(std::string_view line);

SegmentedNote segment(std::string note_text);

// Body of the first section with this name, without leading or trailing
// blank space. Unknown names match on their raw header.
std::optional<std::string> extract_section(const SegmentedNote& note,
                                           const SectionName& name);

// Source text with the Brief Hospital Course and Discharge Instructions
// bodies removed; headers and every other byte are kept.
std::string redact_targets(const SegmentedNote& note);

nlohmann::json to_json(const SegmentedNote& note);

}  // namespace dischargegen::segmenter

#endif  // DISCHARGEGEN_SEGMENTER_HPP
