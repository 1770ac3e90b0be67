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

#ifndef DISCHARGEGEN_GENERATION_HPP
#define DISCHARGEGEN_GENERATION_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpus.hpp"
#include "http.hpp"
#include "input_builder.hpp"
#include "json.hpp"
#include "segmenter.hpp"

namespace dischargegen::generation {

// Decoding settings forwarded to the backend. Defaults are the best
// configuration found for the p-tuned generator.
struct GenerationParams {
  double temperature = 0.2;
  double top_p = 0.6;
  int max_new_tokens = 512;
  std::optional<std::uint64_t> seed;

  // Throws Error(kConfig) when a value is out of range.
  void validate() const;
};

struct GenerationRequest {
  std::string hadm_id;
  TargetSection target = TargetSection::kBriefHospitalCourse;
  std::string prompt;  // inference-mode prompt, ends with "Output:"
  GenerationParams params;

  void validate() const;
};

struct GenerationResponse {
  std::string hadm_id;
  TargetSection target = TargetSection::kBriefHospitalCourse;
  std::string text;
  std::string backend_id;
  std::int64_t latency_ms = 0;
  int retries = 0;
};

// Generated-text cleanup: trims surrounding whitespace, drops a leading line
// that only repeats a section header, and cuts the text at the next line
// that is a recognized section header.
std::string postprocess(std::string_view raw);

// All implementations must be safe to call from several threads at once.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string_view id() const = 0;
  virtual GenerationResponse generate(const GenerationRequest& req) const = 0;
};

using CannedOutputs = std::map<TargetSection, std::string>;

// Returns the canned text verbatim. Throws Error(kConfig) when the target
// has no canned entry.
GenerationResponse generate_mock(const GenerationRequest& req,
                                 const CannedOutputs& canned);

class MockGenerator : public Generator {
 public:
  explicit MockGenerator(CannedOutputs canned) : canned_(std::move(canned)) {}
  std::string_view id() const override { return "mock"; }
  GenerationResponse generate(const GenerationRequest& req) const override {
    return generate_mock(req, canned_);
  }

 private:
  CannedOutputs canned_;
};

// Sentences are delimited by '.' (kept) or a newline (dropped).
std::vector<text::ByteRange> split_sentences(std::string_view s);

// First k sentences of the target's verbatim-selected sections, taken in
// note order.
GenerationResponse generate_extractive(const GenerationRequest& req,
                                       const segmenter::SegmentedNote& note,
                                       const input::SelectionConfig& selection,
                                       int k);

class ExtractiveGenerator : public Generator {
 public:
  ExtractiveGenerator(std::map<std::string, segmenter::SegmentedNote> notes,
                      input::SelectionConfig selection, int k);
  std::string_view id() const override { return "extractive"; }
  GenerationResponse generate(const GenerationRequest& req) const override;

 private:
  std::map<std::string, segmenter::SegmentedNote> notes_;
  input::SelectionConfig selection_;
  int k_;
};

// Client for an HTTP generator:
//   POST {"prompt","temperature","top_p","max_new_tokens","seed"} -> {"text"}
// A leading copy of the prompt is stripped from the answer and the result is
// cut to max_new_tokens whitespace tokens.
class RemoteGenerator : public Generator {
 public:
  RemoteGenerator(http::Endpoint endpoint, http::RetryPolicy policy)
      : endpoint_(std::move(endpoint)), policy_(policy) {}
  std::string_view id() const override { return "remote"; }
  GenerationResponse generate(const GenerationRequest& req) const override;

 private:
  http::Endpoint endpoint_;
  http::RetryPolicy policy_;
};

struct BatchOutcome {
  std::string hadm_id;
  TargetSection target = TargetSection::kBriefHospitalCourse;
  bool ok = false;
  GenerationResponse response;  // valid when ok
  std::string error;            // set when !ok
  std::string error_kind;
  int retries = 0;
};

// Runs every request on at most `concurrency` threads. A failing request is
// recorded and never aborts the batch. Output is sorted by (hadm_id, target).
std::vector<BatchOutcome> generate_batch(const Generator& generator,
                                         std::span<const GenerationRequest> requests,
                                         std::size_t concurrency);

// hadm_id -> target -> text
using Submission = std::map<std::string, std::map<TargetSection, std::string>>;

Submission to_submission(std::span<const BatchOutcome> outcomes);
// Header `hadm_id,brief_hospital_course,discharge_instructions`.
void write_submission(std::ostream& out, const Submission& submission);
Submission read_submission(std::istream& in);

}  // namespace dischargegen::generation

#endif  // DISCHARGEGEN_GENERATION_HPP
