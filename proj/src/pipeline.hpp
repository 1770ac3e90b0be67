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

#ifndef DISCHARGEGEN_PIPELINE_HPP
#define DISCHARGEGEN_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "concepts.hpp"
#include "corpus.hpp"
#include "evaluation.hpp"
#include "generation.hpp"
#include "input_builder.hpp"
#include "json.hpp"

namespace dischargegen::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

// Every key the pipeline understands, with its default value. Overrides may
// only touch paths that exist here.
json default_config();

struct Finding {
  std::string severity;  // "error"
  std::string field;     // dotted path, e.g. "backend.kind"
  std::string message;
};

json findings_to_json(std::span<const Finding> findings);

// Empty iff `cfg` is usable. Checks types, ranges, referenced files and the
// selection invariants.
std::vector<Finding> validate_config(const json& cfg);

// Sets `dotted` inside `cfg`. The raw string is taken verbatim for keys whose
// default is a string and parsed as JSON otherwise. Throws Error(kConfig)
// for unknown keys or unparsable values.
void apply_override(json& cfg, std::string_view dotted, std::string_view raw);

// "backend.kind" -> "DGEN_BACKEND_KIND"
std::string env_var_for(std::string_view dotted);

// Leaf paths of default_config(), in sorted order.
std::vector<std::string> config_paths();

using EnvLookup = std::optional<std::string> (*)(const char* name);
std::optional<std::string> process_env(const char* name);

// Defaults, then the file (merged key by key), then DGEN_* environment
// variables, then `overrides` given as "dotted.path=value".
json load_config(const std::optional<fs::path>& file,
                 std::span<const std::string> overrides,
                 EnvLookup env = &process_env);

std::string config_hash(const json& cfg);

struct RemoteSettings {
  std::string endpoint;
  http::RetryPolicy retry;
  std::size_t concurrency = 4;
};

enum class NerMode { kLexicon, kRemote };
enum class BackendKind { kMock, kExtractive, kRemote };

// Typed view of a validated configuration.
struct PipelineConfig {
  fs::path corpus_path;
  corpus::Split split = corpus::Split::kTrain;
  fs::path lexicon_path;
  input::SelectionConfig selection;
  text::Tokenizer tokenizer;
  std::size_t budget = 2048;
  input::InputMode input_mode = input::InputMode::kNer;
  NerMode ner_mode = NerMode::kLexicon;
  RemoteSettings ner;
  BackendKind backend = BackendKind::kMock;
  generation::CannedOutputs canned;
  int extractive_k = 3;
  RemoteSettings generator;
  generation::GenerationParams params;
  std::vector<eval::MetricId> metrics;
  std::optional<RemoteSettings> scorer;
  std::string prompt_template;
  std::string prompt_marker;
  fs::path output_dir;
  std::size_t workers = 4;
  json source;  // the effective JSON this was built from
};

// Throws Error(kValidation) listing every finding when `cfg` is invalid.
PipelineConfig parse_config(const json& cfg);

// ---------------------------------------------------------------------------
// Stage file formats
// ---------------------------------------------------------------------------

// extract: one line per visit,
//   {"hadm_id", "sections": [{"section", "spans": [...]}], "radiology": [[...]]}
// or {"hadm_id", "error"} when extraction failed for that visit.
struct ConceptRecord {
  std::string hadm_id;
  input::VisitConcepts concepts;
  std::optional<std::string> error;
};
json concept_record_to_json(const ConceptRecord& r);
ConceptRecord concept_record_from_json(const json& j);

// build-input: {"hadm_id","target","prompt","total_tokens","truncated"}, or
// {"hadm_id","target","error"} when the input could not be built.
struct PromptRecord {
  std::string hadm_id;
  TargetSection target = TargetSection::kBriefHospitalCourse;
  std::string prompt;
  std::size_t total_tokens = 0;
  bool truncated = false;
  std::optional<std::string> error;
};
json prompt_record_to_json(const PromptRecord& r);
PromptRecord prompt_record_from_json(const json& j);

// Gold file: {"hadm_id","brief_hospital_course","discharge_instructions"}
// with null for a missing section. Corpus records (with "note_text") are
// also accepted; their target sections are extracted.
using GoldTable = std::map<std::string, std::map<TargetSection, std::optional<std::string>>>;
GoldTable gold_from_visits(std::span<const corpus::Visit> visits);
void write_gold(const fs::path& path, const GoldTable& gold);
GoldTable read_gold(const fs::path& path);

template <class T>
std::vector<T> read_jsonl(const fs::path& path, T (*parse)(const json&));

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct DocumentOutcome {
  std::string hadm_id;
  TargetSection target = TargetSection::kBriefHospitalCourse;
  bool ok = false;
  std::string stage;  // where it failed
  std::string error;
  int retries = 0;
};

struct CompressionSummary {
  double mean_raw_tokens = 0.0;            // all selected sections verbatim
  double mean_reconstructed_tokens = 0.0;  // the input actually built
  double ratio = 0.0;                      // reconstructed / raw
  std::size_t samples = 0;
  std::size_t truncated = 0;
};

struct ExtractResult {
  std::vector<ConceptRecord> records;
};

struct BuildResult {
  std::vector<PromptRecord> prompts;
  std::map<TargetSection, CompressionSummary> compression;
  // Per visit and target: tokens with concept compression vs fully verbatim.
  std::vector<std::tuple<std::string, TargetSection, std::size_t, std::size_t>>
      per_document_tokens;
};

struct GenerateResult {
  std::vector<generation::BatchOutcome> outcomes;
  generation::Submission submission;
};

struct EvaluateResult {
  eval::EvalResult scores;
  eval::AggregateReport aggregate;
};

ExtractResult run_extract(const PipelineConfig& cfg,
                          std::span<const corpus::Visit> visits);
void write_concepts(const fs::path& path, std::span<const ConceptRecord> records);

BuildResult run_build_inputs(const PipelineConfig& cfg,
                             std::span<const corpus::Visit> visits,
                             std::span<const ConceptRecord> concepts);
void write_prompts(const fs::path& path, std::span<const PromptRecord> prompts);

GenerateResult run_generate(const PipelineConfig& cfg,
                            std::span<const PromptRecord> prompts,
                            std::span<const corpus::Visit> visits);
void write_submission_file(const fs::path& path, const generation::Submission& sub);

EvaluateResult run_evaluate(const PipelineConfig& cfg,
                            const generation::Submission& submission,
                            const GoldTable& gold);
void write_evaluation(const fs::path& scores_csv, const fs::path& aggregate_json,
                      const EvaluateResult& result);

// Corpus length statistics plus, per target, the raw vs reconstructed input
// length under the configured selection.
json run_stats(const PipelineConfig& cfg);

enum class RunStatus { kSuccess, kPartial, kStageFailure };

struct RunReport {
  RunStatus status = RunStatus::kSuccess;
  std::string failed_stage;
  std::string failure;
  std::string config_hash;
  json config;
  std::vector<std::pair<std::string, double>> stage_ms;
  std::vector<DocumentOutcome> documents;
  std::map<TargetSection, CompressionSummary> compression;
  std::optional<eval::AggregateReport> aggregate;

  json to_json() const;
};

// Output directory layout.
struct RunPaths {
  fs::path concepts, prompts, submission, gold, scores, aggregate, report;
  static RunPaths in(const fs::path& dir);
};

// Runs every stage, each reading the file the previous one wrote, and
// writes the run report. Stage-level failures are reported, not thrown.
RunReport run_pipeline(const PipelineConfig& cfg);

}  // namespace dischargegen::pipeline

#endif  // DISCHARGEGEN_PIPELINE_HPP
