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

#include "input_builder.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "errors.hpp"

namespace dischargegen::input {
namespace {

bool is_target_section(SectionId id) {
  return id == SectionId::kBriefHospitalCourse ||
         id == SectionId::kDischargeInstructions;
}

SectionId target_section_id(TargetSection t) {
  return t == TargetSection::kBriefHospitalCourse
             ? SectionId::kBriefHospitalCourse
             : SectionId::kDischargeInstructions;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const std::string& p : parts) {
    if (!out.empty()) out.append(sep);
    out.append(p);
  }
  return out;
}

nlohmann::json ids_to_json(const std::vector<SectionId>& ids) {
  nlohmann::json arr = nlohmann::json::array();
  for (SectionId id : ids) arr.push_back(segmenter::display_name(id));
  return arr;
}

std::vector<SectionId> ids_from_json(const nlohmann::json& arr,
                                     std::string_view field) {
  if (!arr.is_array()) {
    throw Error(ErrorKind::kConfig, std::string(field) + " must be an array");
  }
  std::vector<SectionId> ids;
  for (const auto& v : arr) {
    const auto id = v.is_string() ? segmenter::parse_section_id(v.get<std::string>())
                                  : std::nullopt;
    if (!id) {
      throw Error(ErrorKind::kConfig,
                  std::string(field) + ": unknown section " + v.dump());
    }
    ids.push_back(*id);
  }
  return ids;
}

}  // namespace

SelectionConfig default_selection() {
  const std::vector<SectionId> direct = {
      SectionId::kChiefComplaint,
      SectionId::kMajorSurgicalOrInvasiveProcedure,
      SectionId::kHistoryOfPresentIllness,
      SectionId::kDischargeDisposition,
      SectionId::kDischargeDiagnosis,
      SectionId::kDischargeCondition,
  };
  SelectionConfig cfg;
  cfg.brief_hospital_course = {
      {SectionId::kPhysicalExam, SectionId::kPertinentResults}, direct, true, true};
  cfg.discharge_instructions = {
      {SectionId::kPertinentResults, SectionId::kDischargeMedications}, direct,
      false, true};
  return cfg;
}

std::vector<std::string> selection_problems(const SelectionConfig& cfg) {
  std::vector<std::string> problems;
  for (TargetSection t : kTargets) {
    const TargetSelection& sel = cfg.for_target(t);
    const std::string where = "selection." + std::string(target_key(t));
    const std::set<SectionId> concept_set(sel.concept_sections.begin(),
                                          sel.concept_sections.end());
    for (SectionId id : sel.verbatim_sections) {
      if (concept_set.count(id)) {
        problems.push_back(where + ": section \"" +
                           std::string(segmenter::display_name(id)) +
                           "\" is listed as both concept and verbatim input");
      }
    }
    for (const auto* list : {&sel.concept_sections, &sel.verbatim_sections}) {
      for (SectionId id : *list) {
        if (id == target_section_id(t)) {
          problems.push_back(where + ": the target section \"" +
                             std::string(segmenter::display_name(id)) +
                             "\" cannot be used as its own input");
        }
      }
    }
  }
  return problems;
}

nlohmann::json selection_to_json(const SelectionConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (TargetSection t : kTargets) {
    const TargetSelection& s = cfg.for_target(t);
    j[std::string(target_key(t))] = {
        {"concept_sections", ids_to_json(s.concept_sections)},
        {"verbatim_sections", ids_to_json(s.verbatim_sections)},
        {"include_radiology", s.include_radiology},
        {"include_diagnosis_descriptions", s.include_diagnosis_descriptions},
    };
  }
  return j;
}

SelectionConfig selection_from_json(const nlohmann::json& j) {
  SelectionConfig cfg = default_selection();
  if (!j.is_object()) throw Error(ErrorKind::kConfig, "selection must be an object");
  for (TargetSection t : kTargets) {
    const std::string key(target_key(t));
    if (!j.contains(key)) continue;
    const auto& o = j[key];
    TargetSelection& s = cfg.for_target(t);
    const std::string where = "selection." + key;
    if (o.contains("concept_sections")) {
      s.concept_sections = ids_from_json(o["concept_sections"], where + ".concept_sections");
    }
    if (o.contains("verbatim_sections")) {
      s.verbatim_sections =
          ids_from_json(o["verbatim_sections"], where + ".verbatim_sections");
    }
    if (o.contains("include_radiology")) {
      s.include_radiology = o["include_radiology"].get<bool>();
    }
    if (o.contains("include_diagnosis_descriptions")) {
      s.include_diagnosis_descriptions =
          o["include_diagnosis_descriptions"].get<bool>();
    }
  }
  return cfg;
}

std::string ReconstructedInput::serialize() const {
  std::string out = instruction;
  if (!blocks.empty()) out.append("\n\n");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out.push_back('\n');
    out.append(blocks[i].render());
  }
  return out;
}

VisitConcepts collect_concepts(const corpus::Visit& visit,
                               const segmenter::SegmentedNote& note,
                               const concepts::Lexicon& lexicon) {
  VisitConcepts out;
  for (SectionId id : segmenter::kCanonicalSections) {
    if (is_target_section(id)) continue;
    if (auto body = segmenter::extract_section(note, id)) {
      out.sections[id] = concepts::extract_concepts(*body, id, lexicon);
    }
  }
  for (const std::string& report : visit.radiology_reports) {
    out.radiology.push_back(concepts::extract_concepts(
        report, segmenter::SectionName::unknown(std::string(kRadiologyLabel)),
        lexicon));
  }
  return out;
}

std::string instruction_for(TargetSection target) {
  return "Given the following concepts and text extracted from each section in "
         "a discharge summary, generate the section \"" +
         std::string(target_display_name(target)) + "\".";
}

ReconstructedInput build_input(const corpus::Visit& visit,
                               const segmenter::SegmentedNote& note,
                               const VisitConcepts& concepts,
                               TargetSection target, const SelectionConfig& cfg,
                               const text::Tokenizer& tokenizer,
                               std::size_t budget, InputMode mode) {
  ReconstructedInput in;
  in.target = target;
  in.instruction = instruction_for(target);
  in.instruction_tokens = tokenizer.count(in.instruction);
  if (budget < in.instruction_tokens) {
    throw Error(ErrorKind::kUnbuildable,
                "budget of " + std::to_string(budget) +
                    " tokens is smaller than the instruction (" +
                    std::to_string(in.instruction_tokens) + " tokens)");
  }

  const TargetSelection& sel = cfg.for_target(target);
  const auto add = [&](std::string_view label, BlockMode m, std::string content) {
    if (text::trim(content).empty()) return;
    InputBlock b;
    b.label = std::string(label);
    b.mode = m;
    b.content = std::move(content);
    b.token_count = tokenizer.count(b.render());
    in.blocks.push_back(std::move(b));
  };

  for (SectionId id : sel.concept_sections) {
    if (is_target_section(id)) continue;
    const auto body = segmenter::extract_section(note, id);
    if (!body) continue;
    if (mode == InputMode::kVerbatim) {
      add(segmenter::display_name(id), BlockMode::kVerbatim, *body);
      continue;
    }
    auto it = concepts.sections.find(id);
    if (it == concepts.sections.end()) continue;
    add(segmenter::display_name(id), BlockMode::kConceptList,
        join(concepts::dedup_concepts(it->second), ", "));
  }
  if (sel.include_radiology) {
    if (mode == InputMode::kVerbatim) {
      std::vector<std::string> reports;
      for (const auto& r : visit.radiology_reports) {
        if (!text::trim(r).empty()) reports.emplace_back(text::trim(r));
      }
      add(kRadiologyLabel, BlockMode::kVerbatim, join(reports, "\n"));
    } else {
      std::vector<concepts::ConceptSpan> merged;
      for (const auto& spans : concepts.radiology) {
        merged.insert(merged.end(), spans.begin(), spans.end());
      }
      add(kRadiologyLabel, BlockMode::kConceptList,
          join(concepts::dedup_concepts(merged), ", "));
    }
  }
  for (SectionId id : sel.verbatim_sections) {
    if (is_target_section(id)) continue;
    if (auto body = segmenter::extract_section(note, id)) {
      add(segmenter::display_name(id), BlockMode::kVerbatim, *body);
    }
  }
  if (sel.include_diagnosis_descriptions) {
    std::vector<std::string> titles;
    std::set<std::string> seen;
    for (const corpus::Diagnosis& d : visit.ed_diagnoses) {
      std::string title(text::trim(d.long_title));
      if (!title.empty() && seen.insert(title).second) titles.push_back(title);
    }
    add(kDiagnosisLabel, BlockMode::kVerbatim, join(titles, "; "));
  }

  const int n = static_cast<int>(in.blocks.size());
  for (int i = 0; i < n; ++i) in.blocks[i].priority = n - i;
  in.total_tokens = in.instruction_tokens;
  for (const InputBlock& b : in.blocks) in.total_tokens += b.token_count;
  fit_to_budget(in, tokenizer, budget);
  return in;
}

void fit_to_budget(ReconstructedInput& input, const text::Tokenizer& tokenizer,
                   std::size_t budget) {
  if (input.total_tokens <= budget) return;
  if (budget < input.instruction_tokens) {
    throw Error(ErrorKind::kUnbuildable,
                "budget is smaller than the instruction alone");
  }
  input.truncated = true;

  std::vector<std::size_t> order(input.blocks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return input.blocks[a].priority < input.blocks[b].priority;
  });

  std::vector<bool> dropped(input.blocks.size(), false);
  std::size_t excess = input.total_tokens - budget;
  for (std::size_t idx : order) {
    if (excess == 0) break;
    InputBlock& b = input.blocks[idx];
    if (b.token_count <= excess) {
      dropped[idx] = true;
      excess -= b.token_count;
      continue;
    }
    const std::string rendered = b.render();
    const std::size_t label_bytes = b.label.size() + 2;
    std::size_t cut = tokenizer.prefix_bytes(rendered, b.token_count - excess);
    if (cut <= label_bytes) {
      dropped[idx] = true;
    } else {
      b.content = std::string(
          text::trim(std::string_view(rendered).substr(label_bytes, cut - label_bytes)));
      b.token_count = tokenizer.count(b.render());
      if (b.content.empty()) dropped[idx] = true;
    }
    excess = 0;
  }

  std::vector<InputBlock> kept;
  for (std::size_t i = 0; i < input.blocks.size(); ++i) {
    if (!dropped[i]) kept.push_back(std::move(input.blocks[i]));
  }
  input.blocks = std::move(kept);
  input.total_tokens = input.instruction_tokens;
  for (const InputBlock& b : input.blocks) input.total_tokens += b.token_count;
}

PromptTemplate PromptTemplate::parse(std::string_view tmpl, std::string_view marker) {
  constexpr std::string_view kIn = "{input}";
  constexpr std::string_view kOut = "{output}";
  const auto count = [&](std::string_view needle) {
    std::size_t n = 0;
    for (std::size_t p = tmpl.find(needle); p != std::string_view::npos;
         p = tmpl.find(needle, p + needle.size())) {
      ++n;
    }
    return n;
  };
  if (count(kIn) != 1 || count(kOut) != 1) {
    throw Error(ErrorKind::kTemplate,
                "prompt template must contain {input} and {output} exactly once");
  }
  const std::size_t in_pos = tmpl.find(kIn);
  const std::size_t out_pos = tmpl.find(kOut);
  if (out_pos < in_pos) {
    throw Error(ErrorKind::kTemplate, "{input} must precede {output} in the template");
  }
  PromptTemplate t{Raw{}};
  t.head_ = std::string(tmpl.substr(0, in_pos));
  t.middle_ = std::string(tmpl.substr(in_pos + kIn.size(), out_pos - in_pos - kIn.size()));
  t.tail_ = std::string(tmpl.substr(out_pos + kOut.size()));
  t.marker_ = std::string(marker);
  return t;
}

std::string PromptTemplate::render(std::string_view input,
                                   std::string_view output) const {
  std::string out;
  out.reserve(head_.size() + input.size() + middle_.size() + output.size() +
              tail_.size());
  out.append(head_).append(input).append(middle_).append(output).append(tail_);
  return out;
}

std::string PromptTemplate::source() const {
  return head_ + "{input}" + middle_ + "{output}" + tail_;
}

}  // namespace dischargegen::input
