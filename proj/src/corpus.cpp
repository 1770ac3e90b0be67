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

#include "corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "errors.hpp"
#include "segmenter.hpp"

namespace dischargegen {

std::string_view target_display_name(TargetSection t) {
  return t == TargetSection::kBriefHospitalCourse ? "Brief Hospital Course"
                                                  : "Discharge Instructions";
}

std::string_view target_key(TargetSection t) {
  return t == TargetSection::kBriefHospitalCourse ? "brief_hospital_course"
                                                  : "discharge_instructions";
}

std::optional<TargetSection> parse_target(std::string_view s) {
  const std::string key = text::to_lower_ascii(s);
  if (key == "brief_hospital_course" || key == "brief hospital course" ||
      key == "bhc") {
    return TargetSection::kBriefHospitalCourse;
  }
  if (key == "discharge_instructions" || key == "discharge instructions" ||
      key == "di") {
    return TargetSection::kDischargeInstructions;
  }
  return std::nullopt;
}

}  // namespace dischargegen

namespace dischargegen::corpus {

using nlohmann::json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTestPhase1: return "test_phase_1";
    case Split::kTestPhase2: return "test_phase_2";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view s) {
  for (Split split : {Split::kTrain, Split::kValid, Split::kTestPhase1,
                      Split::kTestPhase2}) {
    if (split_name(split) == s) return split;
  }
  return std::nullopt;
}

namespace {

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw RecordError(line, field,
                      std::string("missing required field \"") + field + "\"");
  }
  return *it;
}

std::string require_string(const json& obj, const char* field,
                           std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_string()) {
    throw RecordError(line, field,
                      std::string("field \"") + field + "\" must be a string");
  }
  return v.get<std::string>();
}

IcdVersion parse_icd_version(const json& v, std::size_t line) {
  if (v == 9 || v == "9") return IcdVersion::kIcd9;
  if (v == 10 || v == "10") return IcdVersion::kIcd10;
  throw RecordError(line, "icd_version",
                    "icd_version must be 9 or 10, got " + v.dump());
}

}  // namespace

Visit parse_visit(std::string_view record, std::size_t line, Split split) {
  json obj;
  try {
    obj = json::parse(record);
  } catch (const json::parse_error& e) {
    throw RecordError(line, "", std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) {
    throw RecordError(line, "", "record is not a JSON object");
  }

  Visit v;
  v.split = split;
  v.hadm_id = require_string(obj, "hadm_id", line);
  if (v.hadm_id.empty()) {
    throw RecordError(line, "hadm_id", "hadm_id must be non-empty");
  }
  v.note_text = require_string(obj, "note_text", line);
  if (v.note_text.empty()) {
    throw RecordError(line, "note_text", "note_text must be non-empty");
  }

  const json& reports = require(obj, "radiology_reports", line);
  if (!reports.is_array()) {
    throw RecordError(line, "radiology_reports",
                      "radiology_reports must be an array of strings");
  }
  for (const json& r : reports) {
    if (!r.is_string()) {
      throw RecordError(line, "radiology_reports",
                        "radiology_reports must be an array of strings");
    }
    v.radiology_reports.push_back(r.get<std::string>());
  }
  if (v.radiology_reports.empty()) {
    throw RecordError(line, "radiology_reports",
                      "a visit needs at least one radiology report");
  }

  const json& diagnoses = require(obj, "ed_diagnoses", line);
  if (!diagnoses.is_array()) {
    throw RecordError(line, "ed_diagnoses", "ed_diagnoses must be an array");
  }
  for (const json& d : diagnoses) {
    if (!d.is_object()) {
      throw RecordError(line, "ed_diagnoses",
                        "ed_diagnoses entries must be objects");
    }
    Diagnosis dx;
    dx.icd_code = require_string(d, "icd_code", line);
    if (dx.icd_code.empty()) {
      throw RecordError(line, "icd_code", "icd_code must be non-empty");
    }
    dx.icd_version = parse_icd_version(require(d, "icd_version", line), line);
    dx.long_title = require_string(d, "long_title", line);
    v.ed_diagnoses.push_back(std::move(dx));
  }

  const json& cc = require(obj, "chief_complaint_ed", line);
  if (cc.is_string()) {
    v.chief_complaint_ed = cc.get<std::string>();
  } else if (!cc.is_null()) {
    throw RecordError(line, "chief_complaint_ed",
                      "chief_complaint_ed must be a string or null");
  }
  return v;
}

json visit_to_json(const Visit& v) {
  json dx = json::array();
  for (const Diagnosis& d : v.ed_diagnoses) {
    dx.push_back({{"icd_code", d.icd_code},
                  {"icd_version", d.icd_version == IcdVersion::kIcd9 ? 9 : 10},
                  {"long_title", d.long_title}});
  }
  json j = json::object();
  j["hadm_id"] = v.hadm_id;
  j["note_text"] = v.note_text;
  j["radiology_reports"] = v.radiology_reports;
  j["ed_diagnoses"] = std::move(dx);
  j["chief_complaint_ed"] =
      v.chief_complaint_ed ? json(*v.chief_complaint_ed) : json(nullptr);
  return j;
}

std::vector<Visit> read_corpus(std::istream& in, Split split) {
  std::vector<Visit> visits;
  std::unordered_map<std::string, std::size_t> seen;
  std::string record;
  for (std::size_t line = 1; std::getline(in, record); ++line) {
    if (text::trim(record).empty()) continue;
    Visit v = parse_visit(record, line, split);
    auto [it, inserted] = seen.emplace(v.hadm_id, line);
    if (!inserted) throw DuplicateIdError(v.hadm_id, it->second, line);
    visits.push_back(std::move(v));
  }
  return visits;
}

std::vector<Visit> load_corpus(const std::filesystem::path& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open corpus " + path.string());
  }
  return read_corpus(in, split);
}

void write_corpus(std::ostream& out, std::span<const Visit> visits) {
  for (const Visit& v : visits) out << visit_to_json(v).dump() << '\n';
}

LengthStats length_stats(std::span<const std::size_t> token_counts,
                         std::size_t budget) {
  LengthStats s;
  s.sample_count = token_counts.size();
  if (token_counts.empty()) return s;
  std::size_t total = 0;
  std::size_t over = 0;
  for (std::size_t n : token_counts) {
    total += n;
    if (n > budget) ++over;
  }
  s.mean_tokens = static_cast<double>(total) / token_counts.size();
  s.fraction_over_budget = static_cast<double>(over) / token_counts.size();
  return s;
}

CorpusStats compute_stats(std::span<const Visit> visits,
                          const text::Tokenizer& tokenizer,
                          std::size_t budget) {
  if (budget == 0) {
    throw Error(ErrorKind::kInvalidArgument, "budget must be positive");
  }
  CorpusStats stats;
  stats.budget = budget;
  stats.tokenizer = std::string(tokenizer.name());

  struct Counts {
    std::vector<std::size_t> note;
    std::map<TargetSection, std::vector<std::size_t>> targets;
    std::map<TargetSection, std::size_t> present;
  };
  std::map<Split, Counts> by_split;
  for (const Visit& v : visits) {
    Counts& c = by_split[v.split];
    c.note.push_back(tokenizer.count(v.note_text));
    const auto note = segmenter::segment(v.note_text);
    for (TargetSection t : kTargets) {
      const auto id = t == TargetSection::kBriefHospitalCourse
                          ? segmenter::SectionId::kBriefHospitalCourse
                          : segmenter::SectionId::kDischargeInstructions;
      const auto body = segmenter::extract_section(note, id);
      c.targets[t].push_back(body ? tokenizer.count(*body) : 0);
      if (body) ++c.present[t];
    }
  }
  if (visits.empty()) {
    // Zero-count summary for the empty corpus.
    SplitStats empty;
    for (TargetSection t : kTargets) {
      empty.targets[t] = {};
      empty.target_present[t] = 0;
    }
    stats.splits.push_back(std::move(empty));
    return stats;
  }
  for (auto& [split, c] : by_split) {
    SplitStats s;
    s.split = split;
    s.note = length_stats(c.note, budget);
    for (TargetSection t : kTargets) {
      s.targets[t] = length_stats(c.targets[t], budget);
      s.target_present[t] = c.present[t];
    }
    stats.splits.push_back(std::move(s));
  }
  return stats;
}

namespace {
json length_json(const LengthStats& s) {
  return {{"mean_tokens", s.mean_tokens},
          {"fraction_over_budget", s.fraction_over_budget},
          {"sample_count", s.sample_count}};
}
}  // namespace

json to_json(const CorpusStats& stats) {
  json splits = json::array();
  for (const SplitStats& s : stats.splits) {
    json targets = json::object();
    for (const auto& [t, ls] : s.targets) {
      json j = length_json(ls);
      j["present_count"] = s.target_present.at(t);
      targets[std::string(target_key(t))] = std::move(j);
    }
    splits.push_back({{"split", split_name(s.split)},
                      {"note", length_json(s.note)},
                      {"targets", std::move(targets)}});
  }
  return {{"budget", stats.budget},
          {"tokenizer", stats.tokenizer},
          {"splits", std::move(splits)}};
}

}  // namespace dischargegen::corpus
