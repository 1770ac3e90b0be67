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

#include "dischargegen/dischargegen.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "concepts.hpp"
#include "errors.hpp"
#include "input_builder.hpp"
#include "pipeline.hpp"
#include "segmenter.hpp"

struct dg_config {
  nlohmann::json cfg;
};

struct dg_lexicon {
  dischargegen::concepts::Lexicon lexicon;
};

namespace {

using namespace dischargegen;
using nlohmann::json;

thread_local std::string g_last_error;

dg_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return DG_ERR_INVALID_ARGUMENT;
    case ErrorKind::kIo: return DG_ERR_IO;
    case ErrorKind::kParse: return DG_ERR_PARSE;
    case ErrorKind::kValidation: return DG_ERR_VALIDATION;
    case ErrorKind::kNetwork: return DG_ERR_NETWORK;
    case ErrorKind::kProtocol: return DG_ERR_PROTOCOL;
    case ErrorKind::kConfig: return DG_ERR_CONFIG;
    case ErrorKind::kTemplate: return DG_ERR_TEMPLATE;
    case ErrorKind::kUnbuildable: return DG_ERR_UNBUILDABLE;
    case ErrorKind::kAggregation: return DG_ERR_AGGREGATION;
    case ErrorKind::kContextOverflow: return DG_ERR_CONTEXT_OVERFLOW;
  }
  return DG_ERR_INTERNAL;
}

dg_status fail(dg_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void put(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

// Runs `fn` and converts exceptions to status codes.
template <class Fn>
dg_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const Error& e) {
    return fail(status_for(e.kind()), e.what());
  } catch (const json::exception& e) {
    return fail(DG_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DG_ERR_INTERNAL, e.what());
  }
}

#define DG_REQUIRE(cond, what) \
  if (!(cond)) return fail(DG_ERR_INVALID_ARGUMENT, what)

json compression_json(const std::map<TargetSection, pipeline::CompressionSummary>& c) {
  json out = json::object();
  for (const auto& [t, s] : c) {
    out[std::string(target_key(t))] = {
        {"mean_raw_tokens", s.mean_raw_tokens},
        {"mean_reconstructed_tokens", s.mean_reconstructed_tokens},
        {"ratio", s.ratio},
        {"samples", s.samples},
        {"truncated", s.truncated}};
  }
  return out;
}

json outcomes_json(std::span<const generation::BatchOutcome> outcomes) {
  json docs = json::array();
  for (const auto& o : outcomes) {
    json d = {{"hadm_id", o.hadm_id},
              {"target", std::string(target_key(o.target))},
              {"status", o.ok ? "ok" : "failed"},
              {"retries", o.retries}};
    if (!o.ok) {
      d["error"] = o.error;
      d["error_kind"] = o.error_kind;
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace

extern "C" {

const char* dg_version(void) { return "0.1.0"; }

const char* dg_status_name(dg_status status) {
  switch (status) {
    case DG_OK: return "ok";
    case DG_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case DG_ERR_IO: return "io";
    case DG_ERR_PARSE: return "parse";
    case DG_ERR_VALIDATION: return "validation";
    case DG_ERR_NETWORK: return "network";
    case DG_ERR_PROTOCOL: return "protocol";
    case DG_ERR_CONFIG: return "config";
    case DG_ERR_TEMPLATE: return "template";
    case DG_ERR_UNBUILDABLE: return "unbuildable";
    case DG_ERR_AGGREGATION: return "aggregation";
    case DG_ERR_CONTEXT_OVERFLOW: return "context_overflow";
    case DG_PARTIAL: return "partial";
    case DG_ERR_STAGE: return "stage_failure";
    case DG_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* dg_last_error(void) { return g_last_error.c_str(); }

void dg_string_free(char* s) { std::free(s); }

dg_status dg_segment(const char* text, size_t len, char** out_json) {
  DG_REQUIRE(text != nullptr || len == 0, "text is NULL");
  DG_REQUIRE(out_json != nullptr, "out_json is NULL");
  return guarded([&] {
    const auto note = segmenter::segment(std::string(text == nullptr ? "" : text, len));
    put(out_json, segmenter::to_json(note).dump());
    return DG_OK;
  });
}

dg_status dg_lexicon_load(const char* path, dg_lexicon** out) {
  DG_REQUIRE(path != nullptr, "path is NULL");
  DG_REQUIRE(out != nullptr, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new dg_lexicon{concepts::Lexicon::load(path)};
    return DG_OK;
  });
}

void dg_lexicon_free(dg_lexicon* lexicon) { delete lexicon; }

size_t dg_lexicon_size(const dg_lexicon* lexicon) {
  return lexicon == nullptr ? 0 : lexicon->lexicon.size();
}

dg_status dg_extract(const dg_lexicon* lexicon, const char* text, size_t len,
                     const char* section, char** out_json) {
  DG_REQUIRE(lexicon != nullptr, "lexicon is NULL");
  DG_REQUIRE(text != nullptr || len == 0, "text is NULL");
  DG_REQUIRE(out_json != nullptr, "out_json is NULL");
  return guarded([&] {
    segmenter::SectionName name;
    if (section != nullptr) {
      if (auto id = segmenter::parse_section_id(section)) {
        name = *id;
      } else {
        name = segmenter::SectionName::unknown(section);
      }
    }
    const std::string_view body(text == nullptr ? "" : text, len);
    json arr = json::array();
    for (const auto& s : concepts::extract_concepts(body, name, lexicon->lexicon)) {
      json j = concepts::span_to_json(s);
      j["section"] = s.section.display();
      arr.push_back(std::move(j));
    }
    put(out_json, arr.dump());
    return DG_OK;
  });
}

dg_status dg_render_prompt(const char* tmpl, const char* input, const char* output,
                           char** out) {
  DG_REQUIRE(input != nullptr, "input is NULL");
  DG_REQUIRE(out != nullptr, "out is NULL");
  return guarded([&] {
    const auto t = tmpl == nullptr ? input::PromptTemplate()
                                   : input::PromptTemplate::parse(tmpl);
    put(out, t.render(input, output == nullptr ? "" : output));
    return DG_OK;
  });
}

dg_status dg_config_load(const char* path, const char* const* overrides,
                         size_t n_overrides, int use_env, dg_config** out) {
  DG_REQUIRE(out != nullptr, "out is NULL");
  DG_REQUIRE(overrides != nullptr || n_overrides == 0, "overrides is NULL");
  *out = nullptr;
  return guarded([&] {
    std::vector<std::string> ov;
    for (size_t i = 0; i < n_overrides; ++i) {
      if (overrides[i] == nullptr) throw Error(ErrorKind::kInvalidArgument, "NULL override");
      ov.emplace_back(overrides[i]);
    }
    std::optional<std::filesystem::path> file;
    if (path != nullptr) file = path;
    *out = new dg_config{pipeline::load_config(
        file, ov, use_env ? &pipeline::process_env : nullptr)};
    return DG_OK;
  });
}

void dg_config_free(dg_config* config) { delete config; }

dg_status dg_config_keys(char** out_json) {
  DG_REQUIRE(out_json != nullptr, "out_json is NULL");
  return guarded([&] {
    put(out_json, json(pipeline::config_paths()).dump());
    return DG_OK;
  });
}

dg_status dg_config_json(const dg_config* config, char** out_json) {
  DG_REQUIRE(config != nullptr, "config is NULL");
  DG_REQUIRE(out_json != nullptr, "out_json is NULL");
  return guarded([&] {
    put(out_json, config->cfg.dump(2));
    return DG_OK;
  });
}

dg_status dg_config_validate(const dg_config* config, char** findings_json) {
  DG_REQUIRE(config != nullptr, "config is NULL");
  return guarded([&] {
    const auto findings = pipeline::validate_config(config->cfg);
    put(findings_json, pipeline::findings_to_json(findings).dump(2));
    if (findings.empty()) return DG_OK;
    return fail(DG_ERR_VALIDATION, std::to_string(findings.size()) +
                                       " configuration problem(s), first: " +
                                       findings.front().field + ": " +
                                       findings.front().message);
  });
}

dg_status dg_stats(const dg_config* config, char** out_json) {
  DG_REQUIRE(config != nullptr, "config is NULL");
  DG_REQUIRE(out_json != nullptr, "out_json is NULL");
  return guarded([&] {
    const auto cfg = pipeline::parse_config(config->cfg);
    put(out_json, pipeline::run_stats(cfg).dump(2));
    return DG_OK;
  });
}

dg_status dg_stage_extract(const dg_config* config, const char* out_path,
                           char** summary_json) {
  DG_REQUIRE(config != nullptr, "config is NULL");
  DG_REQUIRE(out_path != nullptr, "out_path is NULL");
  return guarded([&] {
    const auto cfg = pipeline::parse_config(config->cfg);
    const auto visits = corpus::load_corpus(cfg.corpus_path, cfg.split);
    const auto result = pipeline::run_extract(cfg, visits);
    pipeline::write_concepts(out_path, result.records);
    std::size_t failed = 0;
    json failures = json::array();
    for (const auto& r : result.records) {
      if (r.error) {
        ++failed;
        failures.push_back({{"hadm_id", r.hadm_id}, {"error", *r.error}});
      }
    }
    put(summary_json, json{{"visits", result.records.size()},
                           {"failed", failed},
                           {"failures", failures}}
                          .dump(2));
    return failed == 0 ? DG_OK : DG_PARTIAL;
  });
}

dg_status dg_stage_build_inputs(const dg_config* config, const char* concepts_path,
                                const char* out_path, char** summary_json) {
  DG_REQUIRE(config != nullptr, "config is NULL");
  DG_REQUIRE(out_path != nullptr, "out_path is NULL");
  return guarded([&] {
    const auto cfg = pipeline::parse_config(config->cfg);
    const auto visits = corpus::load_corpus(cfg.corpus_path, cfg.split);
    std::vector<pipeline::ConceptRecord> records;
    if (concepts_path != nullptr) {
      records = pipeline::read_jsonl(concepts_path, &pipeline::concept_record_from_json);
    } else if (cfg.input_mode == input::InputMode::kNer) {
      records = pipeline::run_extract(cfg, visits).records;
    }
    const auto built = pipeline::run_build_inputs(cfg, visits, records);
    pipeline::write_prompts(out_path, built.prompts);
    std::size_t failed = 0;
    for (const auto& p : built.prompts) failed += p.error ? 1 : 0;
    put(summary_json, json{{"prompts", built.prompts.size()},
                           {"failed", failed},
                           {"compression", compression_json(built.compression)}}
                          .dump(2));
    return failed == 0 ? DG_OK : DG_PARTIAL;
  });
}

dg_status dg_stage_generate(const dg_config* config, const char* prompts_path,
                            const char* submission_path, char** summary_json) {
  DG_REQUIRE(config != nullptr, "config is NULL");
  DG_REQUIRE(prompts_path != nullptr, "prompts_path is NULL");
  DG_REQUIRE(submission_path != nullptr, "submission_path is NULL");
  return guarded([&] {
    const auto cfg = pipeline::parse_config(config->cfg);
    const auto prompts = pipeline::read_jsonl(prompts_path, &pipeline::prompt_record_from_json);
    std::vector<corpus::Visit> visits;
    if (cfg.backend == pipeline::BackendKind::kExtractive) {
      visits = corpus::load_corpus(cfg.corpus_path, cfg.split);
    }
    const auto result = pipeline::run_generate(cfg, prompts, visits);
    pipeline::write_submission_file(submission_path, result.submission);
    const bool any_failed =
        std::any_of(result.outcomes.begin(), result.outcomes.end(),
                    [](const generation::BatchOutcome& o) { return !o.ok; });
    put(summary_json, json{{"documents", outcomes_json(result.outcomes)}}.dump(2));
    return any_failed ? DG_PARTIAL : DG_OK;
  });
}

dg_status dg_stage_evaluate(const dg_config* config, const char* submission_path,
                            const char* gold_path, const char* scores_path,
                            const char* aggregate_path, char** aggregate_json) {
  DG_REQUIRE(config != nullptr, "config is NULL");
  DG_REQUIRE(submission_path != nullptr, "submission_path is NULL");
  DG_REQUIRE(gold_path != nullptr, "gold_path is NULL");
  DG_REQUIRE(scores_path != nullptr, "scores_path is NULL");
  DG_REQUIRE(aggregate_path != nullptr, "aggregate_path is NULL");
  return guarded([&] {
    const auto cfg = pipeline::parse_config(config->cfg);
    std::ifstream in(submission_path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, std::string("cannot read ") + submission_path);
    const auto submission = generation::read_submission(in);
    const auto result =
        pipeline::run_evaluate(cfg, submission, pipeline::read_gold(gold_path));
    pipeline::write_evaluation(scores_path, aggregate_path, result);
    put(aggregate_json, result.aggregate.to_json().dump(2));
    return DG_OK;
  });
}

dg_status dg_run(const dg_config* config, char** report_json) {
  DG_REQUIRE(config != nullptr, "config is NULL");
  return guarded([&] {
    const auto cfg = pipeline::parse_config(config->cfg);
    const auto report = pipeline::run_pipeline(cfg);
    put(report_json, report.to_json().dump(2));
    switch (report.status) {
      case pipeline::RunStatus::kSuccess:
        return DG_OK;
      case pipeline::RunStatus::kPartial:
        return fail(DG_PARTIAL, "some documents failed; see the run report");
      case pipeline::RunStatus::kStageFailure:
        break;
    }
    return fail(DG_ERR_STAGE, "stage " + report.failed_stage + " failed: " + report.failure);
  });
}

}  // extern "C"
