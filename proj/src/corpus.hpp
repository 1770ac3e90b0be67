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

#ifndef DISCHARGEGEN_CORPUS_HPP
#define DISCHARGEGEN_CORPUS_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "text.hpp"

namespace dischargegen {

// The two sections a system has to write.
enum class TargetSection { kBriefHospitalCourse, kDischargeInstructions };

inline constexpr TargetSection kTargets[] = {
    TargetSection::kBriefHospitalCourse, TargetSection::kDischargeInstructions};

std::string_view target_display_name(TargetSection t);
// "brief_hospital_course" / "discharge_instructions"
std::string_view target_key(TargetSection t);
std::optional<TargetSection> parse_target(std::string_view s);

}  // namespace dischargegen

namespace dischargegen::corpus {

enum class Split { kTrain, kValid, kTestPhase1, kTestPhase2 };

std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view s);

enum class IcdVersion { kIcd9, kIcd10 };

struct Diagnosis {
  std::string icd_code;
  IcdVersion icd_version = IcdVersion::kIcd10;
  std::string long_title;

  friend bool operator==(const Diagnosis&, const Diagnosis&) = default;
};

struct Visit {
  std::string hadm_id;
  std::string note_text;
  std::vector<std::string> radiology_reports;
  std::vector<Diagnosis> ed_diagnoses;
  std::optional<std::string> chief_complaint_ed;
  Split split = Split::kTrain;

  friend bool operator==(const Visit&, const Visit&) = default;
};

// Parses one JSON-lines record. `line` is 1-based and only used in errors.
Visit parse_visit(std::string_view record, std::size_t line, Split split);
nlohmann::json visit_to_json(const Visit& v);

// Reads a whole JSON-lines corpus. Blank lines are skipped; an empty stream
// yields an empty corpus. Throws RecordError for a bad record and
// DuplicateIdError when an hadm_id repeats.
std::vector<Visit> read_corpus(std::istream& in, Split split);
std::vector<Visit> load_corpus(const std::filesystem::path& path, Split split);
void write_corpus(std::ostream& out, std::span<const Visit> visits);

struct LengthStats {
  double mean_tokens = 0.0;
  double fraction_over_budget = 0.0;
  std::size_t sample_count = 0;
};

struct SplitStats {
  Split split = Split::kTrain;
  LengthStats note;
  // Gold target bodies; visits lacking the section count as zero tokens.
  std::map<TargetSection, LengthStats> targets;
  std::map<TargetSection, std::size_t> target_present;
};

struct CorpusStats {
  std::size_t budget = 0;
  std::string tokenizer;
  std::vector<SplitStats> splits;  // only splits that occur, in enum order
};

LengthStats length_stats(std::span<const std::size_t> token_counts,
                         std::size_t budget);
CorpusStats compute_stats(std::span<const Visit> visits,
                          const text::Tokenizer& tokenizer, std::size_t budget);
nlohmann::json to_json(const CorpusStats& stats);

}  // namespace dischargegen::corpus

#endif  // DISCHARGEGEN_CORPUS_HPP
