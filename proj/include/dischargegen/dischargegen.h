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

/* C interface to the dischargegen pipeline.
 *
 * All functions return a dg_status. On failure dg_last_error() describes the
 * problem for the calling thread. Strings returned through `char**` out
 * parameters are NUL-terminated UTF-8 owned by the caller and released with
 * dg_string_free(). Structured results are JSON documents. */

#ifndef DISCHARGEGEN_DISCHARGEGEN_H
#define DISCHARGEGEN_DISCHARGEGEN_H

#include <stddef.h>

#if defined(DISCHARGEGEN_BUILDING_LIBRARY)
#define DG_API __attribute__((visibility("default")))
#else
#define DG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dg_status {
  DG_OK = 0,
  DG_ERR_INVALID_ARGUMENT = 1,
  DG_ERR_IO = 2,
  DG_ERR_PARSE = 3,
  DG_ERR_VALIDATION = 4,
  DG_ERR_NETWORK = 5,
  DG_ERR_PROTOCOL = 6,
  DG_ERR_CONFIG = 7,
  DG_ERR_TEMPLATE = 8,
  DG_ERR_UNBUILDABLE = 9,
  DG_ERR_AGGREGATION = 10,
  DG_ERR_CONTEXT_OVERFLOW = 11,
  /* Completed, but at least one document failed. */
  DG_PARTIAL = 12,
  /* A pipeline stage failed as a whole. */
  DG_ERR_STAGE = 13,
  DG_ERR_INTERNAL = 99
} dg_status;

typedef struct dg_config dg_config;
typedef struct dg_lexicon dg_lexicon;

DG_API const char* dg_version(void);
DG_API const char* dg_status_name(dg_status status);
/* Message for the last failing call on this thread, "" if none. */
DG_API const char* dg_last_error(void);
DG_API void dg_string_free(char* s);

/* Section segmentation of one note. */
DG_API dg_status dg_segment(const char* text, size_t len, char** out_json);

DG_API dg_status dg_lexicon_load(const char* path, dg_lexicon** out);
DG_API void dg_lexicon_free(dg_lexicon* lexicon);
DG_API size_t dg_lexicon_size(const dg_lexicon* lexicon);

/* Concept spans found in `text`; `section` is a display or snake_case name,
 * or NULL for an unnamed section. */
DG_API dg_status dg_extract(const dg_lexicon* lexicon, const char* text,
                            size_t len, const char* section, char** out_json);

/* Fills a prompt template. NULL `tmpl` selects the default template. */
DG_API dg_status dg_render_prompt(const char* tmpl, const char* input,
                                  const char* output, char** out);

/* Builds a configuration from defaults, then `path` (may be NULL), then
 * DGEN_* environment variables when `use_env` is non-zero, then
 * `overrides` of the form "dotted.key=value". */
DG_API dg_status dg_config_load(const char* path, const char* const* overrides,
                                size_t n_overrides, int use_env,
                                dg_config** out);
DG_API void dg_config_free(dg_config* config);
/* JSON array of every key accepted as an override, in dotted form. */
DG_API dg_status dg_config_keys(char** out_json);
DG_API dg_status dg_config_json(const dg_config* config, char** out_json);
/* DG_OK with "[]" when valid, DG_ERR_VALIDATION with the findings otherwise. */
DG_API dg_status dg_config_validate(const dg_config* config, char** findings_json);

/* Corpus length statistics and input compression. */
DG_API dg_status dg_stats(const dg_config* config, char** out_json);

/* Concept extraction over the configured corpus, written as JSON lines. */
DG_API dg_status dg_stage_extract(const dg_config* config, const char* out_path,
                                  char** summary_json);
/* Prompts as JSON lines. `concepts_path` may be NULL to extract on the fly. */
DG_API dg_status dg_stage_build_inputs(const dg_config* config,
                                       const char* concepts_path,
                                       const char* out_path, char** summary_json);
/* Submission CSV from a prompts file. DG_PARTIAL if any document failed. */
DG_API dg_status dg_stage_generate(const dg_config* config,
                                   const char* prompts_path,
                                   const char* submission_path,
                                   char** summary_json);
/* Scores CSV and aggregate JSON. `gold_path` holds gold JSON lines or
 * corpus records. */
DG_API dg_status dg_stage_evaluate(const dg_config* config,
                                   const char* submission_path,
                                   const char* gold_path,
                                   const char* scores_path,
                                   const char* aggregate_path,
                                   char** aggregate_json);

/* Every stage into the configured output directory. Returns DG_OK,
 * DG_PARTIAL, DG_ERR_VALIDATION or DG_ERR_STAGE; the run report is
 * returned in all but the validation case. */
DG_API dg_status dg_run(const dg_config* config, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* DISCHARGEGEN_DISCHARGEGEN_H */
