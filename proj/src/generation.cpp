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

#include "generation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "errors.hpp"
#include "parallel.hpp"

namespace dischargegen::generation {
namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)
      .count();
}

bool is_canonical_header(std::string_view line) {
  auto m = segmenter::match_header_line(line);
  return m && m->name.id != segmenter::SectionId::kUnknown;
}

}  // namespace

void GenerationParams::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::kConfig, "temperature must be > 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorKind::kConfig, "top_p must be in (0, 1]");
  }
  if (max_new_tokens <= 0) {
    throw Error(ErrorKind::kConfig, "max_new_tokens must be > 0");
  }
}

void GenerationRequest::validate() const {
  if (prompt.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "generation prompt is empty");
  }
  if (!prompt.ends_with("Output:")) {
    throw Error(ErrorKind::kInvalidArgument,
                "inference prompt must end with \"Output:\"");
  }
  params.validate();
}

std::string postprocess(std::string_view raw) {
  std::string_view s = text::trim(raw);
  std::size_t pos = 0;
  bool first = true;
  std::size_t cut = s.size();
  std::size_t begin = 0;
  while (pos < s.size()) {
    const std::size_t nl = s.find('\n', pos);
    const std::size_t line_end = nl == std::string_view::npos ? s.size() : nl;
    const std::size_t next = nl == std::string_view::npos ? s.size() : nl + 1;
    if (is_canonical_header(s.substr(pos, line_end - pos))) {
      if (first) {
        begin = next;
      } else {
        cut = pos;
        break;
      }
    }
    first = false;
    pos = next;
  }
  return std::string(text::trim(s.substr(begin, cut - std::min(begin, cut))));
}

GenerationResponse generate_mock(const GenerationRequest& req,
                                 const CannedOutputs& canned) {
  const auto start = Clock::now();
  auto it = canned.find(req.target);
  if (it == canned.end()) {
    throw Error(ErrorKind::kConfig, "mock backend has no canned output for " +
                                        std::string(target_display_name(req.target)));
  }
  GenerationResponse r;
  r.hadm_id = req.hadm_id;
  r.target = req.target;
  r.text = it->second;
  r.backend_id = "mock";
  r.latency_ms = elapsed_ms(start);
  return r;
}

std::vector<text::ByteRange> split_sentences(std::string_view s) {
  std::vector<text::ByteRange> out;
  std::size_t start = std::string_view::npos;
  const auto close = [&](std::size_t end) {
    if (start == std::string_view::npos) return;
    std::string_view piece = text::trim(s.substr(start, end - start));
    if (!piece.empty()) {
      const std::size_t b = static_cast<std::size_t>(piece.data() - s.data());
      out.push_back({b, b + piece.size()});
    }
    start = std::string_view::npos;
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\n') {
      close(i);
    } else if (c == '.') {
      if (start == std::string_view::npos) start = i;
      close(i + 1);
    } else if (start == std::string_view::npos && c != ' ' && c != '\t' &&
               c != '\r') {
      start = i;
    }
  }
  close(s.size());
  return out;
}

GenerationResponse generate_extractive(const GenerationRequest& req,
                                       const segmenter::SegmentedNote& note,
                                       const input::SelectionConfig& selection,
                                       int k) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "k must be >= 1");
  const auto start = Clock::now();
  const auto& wanted = selection.for_target(req.target).verbatim_sections;
  const std::set<segmenter::SectionId> wanted_set(wanted.begin(), wanted.end());

  std::string joined;
  std::set<segmenter::SectionId> used;
  for (const segmenter::Section& s : note.sections) {
    if (!wanted_set.count(s.name.id) || !used.insert(s.name.id).second) continue;
    const std::string_view body = text::trim(s.body_text);
    if (body.empty()) continue;
    if (!joined.empty()) joined.push_back('\n');
    joined.append(body);
  }

  const auto sentences = split_sentences(joined);
  std::string picked;
  if (!sentences.empty()) {
    const std::size_t last = std::min<std::size_t>(k, sentences.size()) - 1;
    picked = joined.substr(sentences.front().begin,
                           sentences[last].end - sentences.front().begin);
  }
  GenerationResponse r;
  r.hadm_id = req.hadm_id;
  r.target = req.target;
  r.text = postprocess(picked);
  r.backend_id = "extractive";
  r.latency_ms = elapsed_ms(start);
  return r;
}

ExtractiveGenerator::ExtractiveGenerator(
    std::map<std::string, segmenter::SegmentedNote> notes,
    input::SelectionConfig selection, int k)
    : notes_(std::move(notes)), selection_(std::move(selection)), k_(k) {
  if (k_ < 1) throw Error(ErrorKind::kConfig, "extractive k must be >= 1");
}

GenerationResponse ExtractiveGenerator::generate(const GenerationRequest& req) const {
  auto it = notes_.find(req.hadm_id);
  if (it == notes_.end()) {
    throw Error(ErrorKind::kInvalidArgument,
                "extractive backend has no note for hadm_id " + req.hadm_id);
  }
  return generate_extractive(req, it->second, selection_, k_);
}

GenerationResponse RemoteGenerator::generate(const GenerationRequest& req) const {
  const auto start = Clock::now();
  nlohmann::json payload = {
      {"prompt", req.prompt},
      {"temperature", req.params.temperature},
      {"top_p", req.params.top_p},
      {"max_new_tokens", req.params.max_new_tokens},
      {"seed", req.params.seed ? nlohmann::json(*req.params.seed)
                               : nlohmann::json(nullptr)},
  };
  const auto result = http::post_json(endpoint_, payload, policy_);
  if (!result.body.is_object() || !result.body.contains("text") ||
      !result.body["text"].is_string()) {
    throw RemoteError(ErrorKind::kProtocol,
                      endpoint_.url() + " answer lacks a string \"text\" field",
                      result.retries);
  }
  std::string_view raw = result.body["text"].get_ref<const std::string&>();
  if (raw.starts_with(req.prompt)) raw.remove_prefix(req.prompt.size());
  std::string cleaned = postprocess(raw);
  const text::Tokenizer words;
  cleaned.resize(words.prefix_bytes(cleaned,
                                    static_cast<std::size_t>(req.params.max_new_tokens)));

  GenerationResponse r;
  r.hadm_id = req.hadm_id;
  r.target = req.target;
  r.text = std::move(cleaned);
  r.backend_id = "remote";
  r.retries = result.retries;
  r.latency_ms = elapsed_ms(start);
  return r;
}

std::vector<BatchOutcome> generate_batch(const Generator& generator,
                                         std::span<const GenerationRequest> requests,
                                         std::size_t concurrency) {
  std::vector<BatchOutcome> outcomes(requests.size());
  parallel_for(requests.size(), concurrency, [&](std::size_t i) {
    const GenerationRequest& req = requests[i];
    BatchOutcome& o = outcomes[i];
    o.hadm_id = req.hadm_id;
    o.target = req.target;
    try {
      req.validate();
      o.response = generator.generate(req);
      o.retries = o.response.retries;
      o.ok = true;
    } catch (const RemoteError& e) {
      o.error = e.what();
      o.error_kind = error_kind_name(e.kind());
      o.retries = e.retries();
    } catch (const Error& e) {
      o.error = e.what();
      o.error_kind = error_kind_name(e.kind());
    } catch (const std::exception& e) {
      o.error = e.what();
      o.error_kind = "internal";
    }
  });
  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const BatchOutcome& a, const BatchOutcome& b) {
                     return std::tie(a.hadm_id, a.target) < std::tie(b.hadm_id, b.target);
                   });
  return outcomes;
}

Submission to_submission(std::span<const BatchOutcome> outcomes) {
  Submission sub;
  for (const BatchOutcome& o : outcomes) {
    auto& row = sub[o.hadm_id];
    row[o.target] = o.ok ? o.response.text : std::string();
  }
  return sub;
}

void write_submission(std::ostream& out, const Submission& submission) {
  const std::vector<std::string> header = {"hadm_id", "brief_hospital_course",
                                           "discharge_instructions"};
  csv::write_row(out, header);
  for (const auto& [hadm_id, row] : submission) {
    std::vector<std::string> fields = {hadm_id, "", ""};
    if (auto it = row.find(TargetSection::kBriefHospitalCourse); it != row.end()) {
      fields[1] = it->second;
    }
    if (auto it = row.find(TargetSection::kDischargeInstructions); it != row.end()) {
      fields[2] = it->second;
    }
    csv::write_row(out, fields);
  }
}

Submission read_submission(std::istream& in) {
  const auto rows = csv::read(in);
  if (rows.empty()) throw Error(ErrorKind::kParse, "submission CSV is empty");
  const auto& header = rows.front();
  int id_col = -1, bhc_col = -1, di_col = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[i] == "hadm_id") id_col = i;
    if (header[i] == "brief_hospital_course") bhc_col = i;
    if (header[i] == "discharge_instructions") di_col = i;
  }
  if (id_col < 0 || bhc_col < 0 || di_col < 0) {
    throw Error(ErrorKind::kParse,
                "submission header must be hadm_id,brief_hospital_course,"
                "discharge_instructions");
  }
  Submission sub;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error(ErrorKind::kParse, "submission row " + std::to_string(r + 1) +
                                         " has " + std::to_string(row.size()) +
                                         " fields, expected " +
                                         std::to_string(header.size()));
    }
    auto& entry = sub[row[id_col]];
    entry[TargetSection::kBriefHospitalCourse] = row[bhc_col];
    entry[TargetSection::kDischargeInstructions] = row[di_col];
  }
  return sub;
}

}  // namespace dischargegen::generation
