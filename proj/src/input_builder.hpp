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

#ifndef DISCHARGEGEN_INPUT_BUILDER_HPP
#define DISCHARGEGEN_INPUT_BUILDER_HPP

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "concepts.hpp"
#include "corpus.hpp"
#include "json.hpp"
#include "segmenter.hpp"
#include "text.hpp"

namespace dischargegen::input {

using segmenter::SectionId;

inline constexpr std::string_view kRadiologyLabel = "Radiology report";
inline constexpr std::string_view kDiagnosisLabel = "Diagnosis description";

// Which note material feeds the generator for one target. Concept sections
// are reduced to their comma-joined concepts; verbatim sections are copied.
// Blocks are emitted as: concept sections, radiology, verbatim sections,
// diagnosis descriptions.
struct TargetSelection {
  std::vector<SectionId> concept_sections;
  std::vector<SectionId> verbatim_sections;
  bool include_radiology = false;
  bool include_diagnosis_descriptions = false;
};

struct SelectionConfig {
  TargetSelection brief_hospital_course;
  TargetSelection discharge_instructions;

  const TargetSelection& for_target(TargetSection t) const {
    return t == TargetSection::kBriefHospitalCourse ? brief_hospital_course
                                                    : discharge_instructions;
  }
  TargetSelection& for_target(TargetSection t) {
    return t == TargetSection::kBriefHospitalCourse ? brief_hospital_course
                                                    : discharge_instructions;
  }
};

SelectionConfig default_selection();

// Human-readable problems: sections listed in both subsets, or the target
// section selected as its own input. Empty when the config is sound.
std::vector<std::string> selection_problems(const SelectionConfig& cfg);

nlohmann::json selection_to_json(const SelectionConfig& cfg);
SelectionConfig selection_from_json(const nlohmann::json& j);

enum class BlockMode { kVerbatim, kConceptList };

struct InputBlock {
  std::string label;
  BlockMode mode = BlockMode::kVerbatim;
  std::string content;
  std::size_t token_count = 0;  // tokenizer("label: content")
  int priority = 0;             // higher survives truncation longer

  std::string render() const { return label + ": " + content; }
};

struct ReconstructedInput {
  TargetSection target = TargetSection::kBriefHospitalCourse;
  std::string instruction;
  std::vector<InputBlock> blocks;
  std::size_t instruction_tokens = 0;
  std::size_t total_tokens = 0;
  bool truncated = false;

  // Instruction, a blank line, then one rendered block per line.
  std::string serialize() const;
};

// Concepts per note section plus one list per radiology report.
struct VisitConcepts {
  std::map<SectionId, std::vector<concepts::ConceptSpan>> sections;
  std::vector<std::vector<concepts::ConceptSpan>> radiology;
};

// Extracts concepts for every section a selection may route to concept mode
// (all canonical sections except the targets) and every radiology report.
VisitConcepts collect_concepts(const corpus::Visit& visit,
                               const segmenter::SegmentedNote& note,
                               const concepts::Lexicon& lexicon);

std::string instruction_for(TargetSection target);

// kNer reduces concept sections to concept lists. kVerbatim copies every
// selected section as is, which is the uncompressed baseline.
enum class InputMode { kNer, kVerbatim };

inline constexpr std::size_t kUnlimitedBudget =
    std::numeric_limits<std::size_t>::max();

ReconstructedInput build_input(const corpus::Visit& visit,
                               const segmenter::SegmentedNote& note,
                               const VisitConcepts& concepts,
                               TargetSection target, const SelectionConfig& cfg,
                               const text::Tokenizer& tokenizer,
                               std::size_t budget,
                               InputMode mode = InputMode::kNer);

// Drops whole blocks from the lowest priority up, then trims the boundary
// block tail-first, until instruction + blocks fit in `budget`. A block
// trimmed down to its bare label is dropped.
void fit_to_budget(ReconstructedInput& input, const text::Tokenizer& tokenizer,
                   std::size_t budget);

// "<VIRTUAL_PROMPT> Input: {input}\n Output:{output}"
class PromptTemplate {
 public:
  static constexpr std::string_view kDefaultTemplate =
      "<VIRTUAL_PROMPT> Input: {input}\n Output:{output}";
  static constexpr std::string_view kDefaultMarker = "<VIRTUAL_PROMPT>";

  PromptTemplate() : PromptTemplate(parse(kDefaultTemplate)) {}

  // Throws Error(kTemplate) unless {input} and {output} each occur exactly
  // once, {input} first.
  static PromptTemplate parse(std::string_view tmpl,
                              std::string_view marker = kDefaultMarker);

  // Training mode passes the gold section; inference passes "".
  std::string render(std::string_view input, std::string_view output) const;
  std::string render(const ReconstructedInput& input,
                     std::string_view output) const {
    return render(input.serialize(), output);
  }

  const std::string& marker() const { return marker_; }
  std::string source() const;

 private:
  struct Raw {};
  explicit PromptTemplate(Raw) {}

  std::string head_;     // before {input}
  std::string middle_;   // between {input} and {output}
  std::string tail_;     // after {output}
  std::string marker_;
};

}  // namespace dischargegen::input

#endif  // DISCHARGEGEN_INPUT_BUILDER_HPP
