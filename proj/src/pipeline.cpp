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

#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

#include "errors.hpp"
#include "parallel.hpp"
#include "segmenter.hpp"

namespace dischargegen::pipeline {

namespace {

using segmenter::SectionId;

json metric_names(std::span<const eval::MetricId> ids) {
  json out = json::array();
  for (auto m : ids) out.push_back(std::string(eval::metric_name(m)));
  return out;
}

json remote_defaults(int timeout_ms) {
  return {{"endpoint", ""},
          {"concurrency", 4},
          {"retries", 2},
          {"backoff_ms", 100},
          {"timeout_ms", timeout_ms}};
}

void collect_paths(const json& j, const std::string& prefix,
                   std::vector<std::string>& out) {
  if (j.is_object() && !j.empty() && prefix != "selection") {
    for (auto it = j.begin(); it != j.end(); ++it) {
      collect_paths(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(),
                    out);
    }
    return;
  }
  out.push_back(prefix);
}

std::vector<std::string> split_dotted(std::string_view dotted) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    parts.emplace_back(dotted.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

// Pointer into defaults for `dotted`, or nullptr.
const json* default_at(const json& defaults, std::string_view dotted) {
  const json* node = &defaults;
  for (const auto& part : split_dotted(dotted)) {
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
  }
  return node;
}

void merge_into(json& base, const json& patch) {
  if (!base.is_object() || !patch.is_object()) {
    base = patch;
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (base.contains(it.key())) {
      merge_into(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

class FindingSink {
 public:
  void error(std::string field, std::string message) {
    out_.push_back({"error", std::move(field), std::move(message)});
  }
  std::vector<Finding> take() { return std::move(out_); }

 private:
  std::vector<Finding> out_;
};

const char* type_label(const json& j) {
  if (j.is_string()) return "a string";
  if (j.is_boolean()) return "a boolean";
  if (j.is_number()) return "a number";
  if (j.is_array()) return "an array";
  if (j.is_object()) return "an object";
  return "null";
}

bool same_kind(const json& expected, const json& actual) {
  if (expected.is_number()) return actual.is_number();
  return expected.type() == actual.type();
}

void check_unknown_and_types(const json& defaults, const json& actual,
                             const std::string& prefix, FindingSink& sink) {
  for (auto it = actual.begin(); it != actual.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!defaults.contains(it.key())) {
      sink.error(path, "unknown configuration key");
      continue;
    }
    const json& d = defaults[it.key()];
    if (path == "seed") {
      if (!it.value().is_null() && !(it.value().is_number_integer() && it.value().get<std::int64_t>() >= 0)) {
        sink.error(path, "must be a non-negative integer or null");
      }
      continue;
    }
    if (!same_kind(d, it.value())) {
      sink.error(path, std::string("must be ") + type_label(d));
      continue;
    }
    if (d.is_number_integer() && !it.value().is_number_integer()) {
      sink.error(path, "must be an integer");
      continue;
    }
    if (d.is_object() && path != "selection") {
      check_unknown_and_types(d, it.value(), path, sink);
    }
  }
}

bool is_readable_file(const std::string& p) {
  std::error_code ec;
  return !p.empty() && fs::is_regular_file(p, ec);
}

void check_remote(const json& r, const std::string& path, bool endpoint_required,
                  std::string_view default_path, FindingSink& sink) {
  const std::string endpoint = r.value("endpoint", "");
  if (endpoint.empty()) {
    if (endpoint_required) sink.error(path + ".endpoint", "endpoint is required");
  } else {
    try {
      (void)http::Endpoint::parse(endpoint, default_path);
    } catch (const Error& e) {
      sink.error(path + ".endpoint", e.what());
    }
  }
  if (r.value("concurrency", 1) < 1) {
    sink.error(path + ".concurrency", "must be at least 1");
  }
  if (r.value("retries", 0) < 0) sink.error(path + ".retries", "must be >= 0");
  if (r.value("backoff_ms", 0) < 0) sink.error(path + ".backoff_ms", "must be >= 0");
  if (r.value("timeout_ms", 1) < 1) sink.error(path + ".timeout_ms", "must be >= 1");
}

RemoteSettings remote_from_json(const json& r, std::string_view default_path) {
  RemoteSettings s;
  const std::string endpoint = r.at("endpoint").get<std::string>();
  if (!endpoint.empty()) s.endpoint = endpoint;
  (void)default_path;
  s.concurrency = r.at("concurrency").get<std::size_t>();
  s.retry.max_retries = r.at("retries").get<int>();
  s.retry.initial_backoff = std::chrono::milliseconds(r.at("backoff_ms").get<int>());
  s.retry.timeout = std::chrono::milliseconds(r.at("timeout_ms").get<int>());
  return s;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  return in;
}

template <class T, class Fn>
void write_jsonl(const fs::path& path, std::span<const T> items, Fn&& to_json) {
  auto out = open_out(path);
  for (const T& item : items) out << to_json(item).dump() << '\n';
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

std::vector<concepts::ConceptSpan> spans_from_json(const json& arr,
                                                   const segmenter::SectionName& section) {
  std::vector<concepts::ConceptSpan> out;
  for (const json& s : arr) {
    concepts::ConceptSpan span;
    span.text = s.at("text").get<std::string>();
    const auto type = concepts::parse_type(s.at("type").get<std::string>());
    if (!type) throw Error(ErrorKind::kParse, "unknown concept type in span");
    span.type = *type;
    span.start = s.at("start").get<std::size_t>();
    span.end = s.at("end").get<std::size_t>();
    span.section = section;
    out.push_back(std::move(span));
  }
  return out;
}

json spans_to_json(std::span<const concepts::ConceptSpan> spans) {
  json arr = json::array();
  for (const auto& s : spans) arr.push_back(concepts::span_to_json(s));
  return arr;
}

std::map<std::string, segmenter::SegmentedNote> segment_all(
    std::span<const corpus::Visit> visits, std::size_t workers) {
  std::vector<segmenter::SegmentedNote> notes(visits.size());
  parallel_for(visits.size(), workers,
               [&](std::size_t i) { notes[i] = segmenter::segment(visits[i].note_text); });
  std::map<std::string, segmenter::SegmentedNote> out;
  for (std::size_t i = 0; i < visits.size(); ++i) {
    out.emplace(visits[i].hadm_id, std::move(notes[i]));
  }
  return out;
}

std::optional<concepts::Lexicon> maybe_lexicon(const PipelineConfig& cfg, bool needed) {
  if (!needed) return std::nullopt;
  return concepts::Lexicon::load(cfg.lexicon_path);
}

bool needs_concept_metric(const PipelineConfig& cfg) {
  return std::find(cfg.metrics.begin(), cfg.metrics.end(), eval::MetricId::kConceptF1) !=
         cfg.metrics.end();
}

CompressionSummary summarize(std::size_t samples, double raw_sum, double rec_sum,
                             std::size_t truncated) {
  CompressionSummary s;
  s.samples = samples;
  s.truncated = truncated;
  if (samples == 0) return s;
  s.mean_raw_tokens = raw_sum / static_cast<double>(samples);
  s.mean_reconstructed_tokens = rec_sum / static_cast<double>(samples);
  s.ratio = s.mean_raw_tokens > 0 ? s.mean_reconstructed_tokens / s.mean_raw_tokens
                                  : 0.0;
  return s;
}

json compression_to_json(const std::map<TargetSection, CompressionSummary>& c) {
  json out = json::object();
  for (const auto& [t, s] : c) {
    out[std::string(target_key(t))] = {{"mean_raw_tokens", s.mean_raw_tokens},
                                       {"mean_reconstructed_tokens",
                                        s.mean_reconstructed_tokens},
                                       {"ratio", s.ratio},
                                       {"samples", s.samples},
                                       {"truncated", s.truncated}};
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

json default_config() {
  return {
      {"corpus", {{"path", "data/fixtures/train.jsonl"}, {"split", "train"}}},
      {"lexicon", "data/lexicon.tsv"},
      {"selection", input::selection_to_json(input::default_selection())},
      {"tokenizer", "whitespace"},
      {"budget", 2048},
      {"input_mode", "ner"},
      {"ner", [] {
         json n = remote_defaults(30000);
         n["mode"] = "lexicon";
         return n;
       }()},
      {"backend", [] {
         json b = remote_defaults(60000);
         b["kind"] = "mock";
         b["extractive_k"] = 3;
         b["mock"] = {
             {"brief_hospital_course",
              "The patient was admitted and treated. Symptoms improved and the "
              "patient was discharged in stable condition."},
             {"discharge_instructions",
              "You were admitted to the hospital. Please take your medications "
              "as prescribed and follow up with your doctor."}};
         return b;
       }()},
      {"generation", {{"temperature", 0.2}, {"top_p", 0.6}, {"max_new_tokens", 512}}},
      {"metrics", metric_names(eval::kLocalMetrics)},
      {"scorer", remote_defaults(30000)},
      {"prompt",
       {{"template", std::string(input::PromptTemplate::kDefaultTemplate)},
        {"marker", std::string(input::PromptTemplate::kDefaultMarker)}}},
      {"output_dir", "out"},
      {"seed", 7},
      {"workers", 4},
  };
}

json findings_to_json(std::span<const Finding> findings) {
  json out = json::array();
  for (const auto& f : findings) {
    out.push_back({{"severity", f.severity}, {"field", f.field}, {"message", f.message}});
  }
  return out;
}

std::vector<Finding> validate_config(const json& cfg) {
  FindingSink sink;
  if (!cfg.is_object()) {
    sink.error("", "configuration must be a JSON object");
    return sink.take();
  }
  const json defaults = default_config();
  {
    FindingSink shape;
    check_unknown_and_types(defaults, cfg, "", shape);
    auto found = shape.take();
    if (!found.empty()) return found;
  }
  json c = defaults;
  merge_into(c, cfg);

  const std::string corpus_path = c["corpus"]["path"];
  if (!is_readable_file(corpus_path)) {
    sink.error("corpus.path", "corpus file not found: " + corpus_path);
  }
  if (!corpus::parse_split(c["corpus"]["split"].get<std::string>())) {
    sink.error("corpus.split", "unknown split \"" +
                                   c["corpus"]["split"].get<std::string>() + "\"");
  }

  std::vector<eval::MetricId> metrics;
  for (const json& m : c["metrics"]) {
    if (!m.is_string()) {
      sink.error("metrics", "metric names must be strings");
      continue;
    }
    if (auto id = eval::parse_metric(m.get<std::string>())) {
      metrics.push_back(*id);
    } else {
      sink.error("metrics", "unknown metric \"" + m.get<std::string>() + "\"");
    }
  }
  if (c["metrics"].empty()) sink.error("metrics", "at least one metric is required");

  const std::string ner_mode = c["ner"]["mode"];
  const bool concept_metric =
      std::find(metrics.begin(), metrics.end(), eval::MetricId::kConceptF1) !=
      metrics.end();
  const std::string lexicon_path = c["lexicon"];
  if (ner_mode == "lexicon" || concept_metric) {
    if (!is_readable_file(lexicon_path)) {
      sink.error("lexicon", "lexicon file not found: " + lexicon_path);
    } else {
      try {
        (void)concepts::Lexicon::load(lexicon_path);
      } catch (const Error& e) {
        sink.error("lexicon", e.what());
      }
    }
  }
  if (ner_mode != "lexicon" && ner_mode != "remote") {
    sink.error("ner.mode", "must be \"lexicon\" or \"remote\"");
  }
  check_remote(c["ner"], "ner", ner_mode == "remote", "/ner", sink);

  try {
    const auto sel = input::selection_from_json(c["selection"]);
    for (const auto& p : input::selection_problems(sel)) sink.error("selection", p);
  } catch (const std::exception& e) {
    sink.error("selection", e.what());
  }

  try {
    (void)text::Tokenizer::from_name(c["tokenizer"].get<std::string>());
  } catch (const Error& e) {
    sink.error("tokenizer", e.what());
  }
  if (!c["budget"].is_number_integer() || c["budget"].get<long long>() < 1) {
    sink.error("budget", "must be a positive integer");
  }
  const std::string mode = c["input_mode"];
  if (mode != "ner" && mode != "verbatim") {
    sink.error("input_mode", "must be \"ner\" or \"verbatim\"");
  }

  const std::string kind = c["backend"]["kind"];
  if (kind == "mock") {
    for (TargetSection t : kTargets) {
      const std::string key(target_key(t));
      const json& mock = c["backend"]["mock"];
      if (!mock.contains(key) || !mock[key].is_string() ||
          text::trim(mock[key].get<std::string>()).empty()) {
        sink.error("backend.mock." + key, "mock backend needs a canned text");
      }
    }
  } else if (kind != "extractive" && kind != "remote") {
    sink.error("backend.kind", "must be \"mock\", \"extractive\" or \"remote\"");
  }
  if (c["backend"]["extractive_k"].get<int>() < 1) {
    sink.error("backend.extractive_k", "must be at least 1");
  }
  check_remote(c["backend"], "backend", kind == "remote", "/generate", sink);

  try {
    generation::GenerationParams p;
    p.temperature = c["generation"]["temperature"].get<double>();
    p.top_p = c["generation"]["top_p"].get<double>();
    p.max_new_tokens = c["generation"]["max_new_tokens"].get<int>();
    p.validate();
  } catch (const Error& e) {
    const std::string msg = e.what();
    std::string field = "generation";
    for (const char* k : {"temperature", "top_p", "max_new_tokens"}) {
      if (msg.rfind(k, 0) == 0) field += std::string(".") + k;
    }
    sink.error(field, msg);
  }

  const bool remote_metric = std::any_of(metrics.begin(), metrics.end(),
                                         eval::is_remote_metric);
  check_remote(c["scorer"], "scorer", remote_metric, "/score", sink);

  try {
    (void)input::PromptTemplate::parse(c["prompt"]["template"].get<std::string>(),
                                       c["prompt"]["marker"].get<std::string>());
  } catch (const Error& e) {
    sink.error("prompt.template", e.what());
  }
  if (c["output_dir"].get<std::string>().empty()) {
    sink.error("output_dir", "must not be empty");
  }
  if (c["workers"].get<long long>() < 1) sink.error("workers", "must be at least 1");
  return sink.take();
}

std::string env_var_for(std::string_view dotted) {
  std::string out = "DGEN_";
  for (char ch : dotted) {
    out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return out;
}

std::vector<std::string> config_paths() {
  std::vector<std::string> out;
  collect_paths(default_config(), "", out);
  std::sort(out.begin(), out.end());
  return out;
}

void apply_override(json& cfg, std::string_view dotted, std::string_view raw) {
  const json defaults = default_config();
  const json* d = default_at(defaults, dotted);
  if (d == nullptr) {
    throw Error(ErrorKind::kConfig, "unknown configuration key \"" +
                                        std::string(dotted) + "\"");
  }
  json value;
  if (d->is_string()) {
    value = std::string(raw);
  } else {
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      throw Error(ErrorKind::kConfig, "value for \"" + std::string(dotted) +
                                          "\" is not valid JSON: " + std::string(raw));
    }
  }
  json* node = &cfg;
  const auto parts = split_dotted(dotted);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) *node = json::object();
    node = &(*node)[parts[i]];
  }
  if (!node->is_object()) *node = json::object();
  (*node)[parts.back()] = std::move(value);
}

std::optional<std::string> process_env(const char* name) {
  if (const char* v = std::getenv(name)) return std::string(v);
  return std::nullopt;
}

json load_config(const std::optional<fs::path>& file,
                 std::span<const std::string> overrides, EnvLookup env) {
  json cfg = default_config();
  if (file) {
    auto in = open_in(*file);
    json from_file;
    try {
      from_file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kConfig,
                  "config " + file->string() + " is not valid JSON: " + e.what());
    }
    if (!from_file.is_object()) {
      throw Error(ErrorKind::kConfig, "config " + file->string() + " must be an object");
    }
    merge_into(cfg, from_file);
  }
  if (env != nullptr) {
    for (const auto& path : config_paths()) {
      if (auto v = env(env_var_for(path).c_str())) apply_override(cfg, path, *v);
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorKind::kConfig, "override must look like key=value: " + o);
    }
    apply_override(cfg, std::string_view(o).substr(0, eq),
                   std::string_view(o).substr(eq + 1));
  }
  return cfg;
}

std::string config_hash(const json& cfg) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a64(cfg.dump());
  return os.str();
}

PipelineConfig parse_config(const json& cfg) {
  const auto findings = validate_config(cfg);
  if (!findings.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& f : findings) msg += "\n  " + f.field + ": " + f.message;
    throw Error(ErrorKind::kValidation, msg);
  }
  json c = default_config();
  merge_into(c, cfg);

  PipelineConfig p;
  p.source = c;
  p.corpus_path = c["corpus"]["path"].get<std::string>();
  p.split = *corpus::parse_split(c["corpus"]["split"].get<std::string>());
  p.lexicon_path = c["lexicon"].get<std::string>();
  p.selection = input::selection_from_json(c["selection"]);
  p.tokenizer = text::Tokenizer::from_name(c["tokenizer"].get<std::string>());
  p.budget = c["budget"].get<std::size_t>();
  p.input_mode = c["input_mode"] == "verbatim" ? input::InputMode::kVerbatim
                                               : input::InputMode::kNer;
  p.ner_mode = c["ner"]["mode"] == "remote" ? NerMode::kRemote : NerMode::kLexicon;
  p.ner = remote_from_json(c["ner"], "/ner");
  const std::string kind = c["backend"]["kind"];
  p.backend = kind == "remote"       ? BackendKind::kRemote
              : kind == "extractive" ? BackendKind::kExtractive
                                     : BackendKind::kMock;
  for (TargetSection t : kTargets) {
    const std::string key(target_key(t));
    if (c["backend"]["mock"].contains(key)) {
      p.canned[t] = c["backend"]["mock"][key].get<std::string>();
    }
  }
  p.extractive_k = c["backend"]["extractive_k"].get<int>();
  p.generator = remote_from_json(c["backend"], "/generate");
  p.params.temperature = c["generation"]["temperature"].get<double>();
  p.params.top_p = c["generation"]["top_p"].get<double>();
  p.params.max_new_tokens = c["generation"]["max_new_tokens"].get<int>();
  if (!c["seed"].is_null()) p.params.seed = c["seed"].get<std::uint64_t>();
  for (const json& m : c["metrics"]) p.metrics.push_back(*eval::parse_metric(m.get<std::string>()));
  const RemoteSettings scorer = remote_from_json(c["scorer"], "/score");
  if (!scorer.endpoint.empty()) p.scorer = scorer;
  p.prompt_template = c["prompt"]["template"].get<std::string>();
  p.prompt_marker = c["prompt"]["marker"].get<std::string>();
  p.output_dir = c["output_dir"].get<std::string>();
  p.workers = c["workers"].get<std::size_t>();
  return p;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

json concept_record_to_json(const ConceptRecord& r) {
  json j = {{"hadm_id", r.hadm_id}};
  if (r.error) {
    j["error"] = *r.error;
    return j;
  }
  json sections = json::array();
  for (const auto& [id, spans] : r.concepts.sections) {
    sections.push_back({{"section", std::string(segmenter::display_name(id))},
                        {"spans", spans_to_json(spans)}});
  }
  json radiology = json::array();
  for (const auto& spans : r.concepts.radiology) radiology.push_back(spans_to_json(spans));
  j["sections"] = std::move(sections);
  j["radiology"] = std::move(radiology);
  return j;
}

namespace {
ConceptRecord concept_record_from_json_unchecked(const json& j) {
  ConceptRecord r;
  r.hadm_id = j.at("hadm_id").get<std::string>();
  if (j.contains("error")) {
    r.error = j["error"].get<std::string>();
    return r;
  }
  for (const json& s : j.at("sections")) {
    const std::string name = s.at("section").get<std::string>();
    const auto id = segmenter::parse_section_id(name);
    if (!id) throw Error(ErrorKind::kParse, "unknown section \"" + name + "\"");
    r.concepts.sections[*id] = spans_from_json(s.at("spans"), *id);
  }
  const auto rad = segmenter::SectionName::unknown(std::string(input::kRadiologyLabel));
  for (const json& spans : j.at("radiology")) {
    r.concepts.radiology.push_back(spans_from_json(spans, rad));
  }
  return r;
}
}  // namespace

ConceptRecord concept_record_from_json(const json& j) {
  try {
    return concept_record_from_json_unchecked(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed record: ") + e.what());
  }
}

json prompt_record_to_json(const PromptRecord& r) {
  json j = {{"hadm_id", r.hadm_id}, {"target", std::string(target_key(r.target))}};
  if (r.error) {
    j["error"] = *r.error;
    return j;
  }
  j["prompt"] = r.prompt;
  j["total_tokens"] = r.total_tokens;
  j["truncated"] = r.truncated;
  return j;
}

namespace {
PromptRecord prompt_record_from_json_unchecked(const json& j) {
  PromptRecord r;
  r.hadm_id = j.at("hadm_id").get<std::string>();
  const auto t = parse_target(j.at("target").get<std::string>());
  if (!t) throw Error(ErrorKind::kParse, "unknown target in prompt record");
  r.target = *t;
  if (j.contains("error")) {
    r.error = j["error"].get<std::string>();
    return r;
  }
  r.prompt = j.at("prompt").get<std::string>();
  r.total_tokens = j.at("total_tokens").get<std::size_t>();
  r.truncated = j.at("truncated").get<bool>();
  return r;
}
}  // namespace

PromptRecord prompt_record_from_json(const json& j) {
  try {
    return prompt_record_from_json_unchecked(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed record: ") + e.what());
  }
}

template <class T>
std::vector<T> read_jsonl(const fs::path& path, T (*parse)(const json&)) {
  auto in = open_in(path);
  std::vector<T> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      throw RecordError(n, "", path.string() + ": " + e.what());
    } catch (const RecordError&) {
      throw;
    } catch (const Error& e) {
      throw RecordError(n, "", path.string() + ": " + e.what());
    }
  }
  return out;
}

template std::vector<ConceptRecord> read_jsonl(const fs::path&,
                                               ConceptRecord (*)(const json&));
template std::vector<PromptRecord> read_jsonl(const fs::path&,
                                              PromptRecord (*)(const json&));

GoldTable gold_from_visits(std::span<const corpus::Visit> visits) {
  GoldTable gold;
  for (const auto& v : visits) {
    const auto note = segmenter::segment(v.note_text);
    auto& row = gold[v.hadm_id];
    row[TargetSection::kBriefHospitalCourse] =
        segmenter::extract_section(note, SectionId::kBriefHospitalCourse);
    row[TargetSection::kDischargeInstructions] =
        segmenter::extract_section(note, SectionId::kDischargeInstructions);
  }
  return gold;
}

void write_gold(const fs::path& path, const GoldTable& gold) {
  auto out = open_out(path);
  for (const auto& [id, row] : gold) {
    json j = {{"hadm_id", id}};
    for (TargetSection t : kTargets) {
      auto it = row.find(t);
      j[std::string(target_key(t))] =
          it != row.end() && it->second ? json(*it->second) : json(nullptr);
    }
    out << j.dump() << '\n';
  }
}

GoldTable read_gold(const fs::path& path) {
  auto in = open_in(path);
  GoldTable gold;
  std::vector<corpus::Visit> visits;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw RecordError(n, "", path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("hadm_id") || !j["hadm_id"].is_string()) {
      throw RecordError(n, "hadm_id", path.string() + ": missing hadm_id");
    }
    const std::string id = j["hadm_id"];
    if (gold.count(id) ||
        std::any_of(visits.begin(), visits.end(),
                    [&](const corpus::Visit& v) { return v.hadm_id == id; })) {
      throw RecordError(n, "hadm_id", path.string() + ": duplicate hadm_id " + id);
    }
    if (j.contains("note_text")) {
      visits.push_back(corpus::parse_visit(line, n, corpus::Split::kTrain));
      continue;
    }
    auto& row = gold[id];
    for (TargetSection t : kTargets) {
      const std::string key(target_key(t));
      if (!j.contains(key) || j[key].is_null()) {
        row[t] = std::nullopt;
      } else if (j[key].is_string()) {
        row[t] = j[key].get<std::string>();
      } else {
        throw RecordError(n, key, path.string() + ": " + key + " must be a string or null");
      }
    }
  }
  for (auto& [id, row] : gold_from_visits(visits)) gold[id] = std::move(row);
  return gold;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

ExtractResult run_extract(const PipelineConfig& cfg,
                          std::span<const corpus::Visit> visits) {
  ExtractResult result;
  result.records.resize(visits.size());
  if (cfg.ner_mode == NerMode::kLexicon) {
    const auto lexicon = concepts::Lexicon::load(cfg.lexicon_path);
    parallel_for(visits.size(), cfg.workers, [&](std::size_t i) {
      const auto note = segmenter::segment(visits[i].note_text);
      result.records[i].hadm_id = visits[i].hadm_id;
      result.records[i].concepts = input::collect_concepts(visits[i], note, lexicon);
    });
  } else {
    const concepts::RemoteExtractor remote(
        http::Endpoint::parse(cfg.ner.endpoint, "/ner"), cfg.ner.retry);
    parallel_for(visits.size(), cfg.ner.concurrency, [&](std::size_t i) {
      ConceptRecord& r = result.records[i];
      r.hadm_id = visits[i].hadm_id;
      try {
        const auto note = segmenter::segment(visits[i].note_text);
        for (SectionId id : segmenter::kCanonicalSections) {
          if (id == SectionId::kBriefHospitalCourse ||
              id == SectionId::kDischargeInstructions) {
            continue;
          }
          if (auto body = segmenter::extract_section(note, id)) {
            r.concepts.sections[id] = remote.extract(*body, id);
          }
        }
        const auto rad =
            segmenter::SectionName::unknown(std::string(input::kRadiologyLabel));
        for (const auto& report : visits[i].radiology_reports) {
          r.concepts.radiology.push_back(remote.extract(report, rad));
        }
      } catch (const Error& e) {
        r.concepts = {};
        r.error = e.what();
      }
    });
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const ConceptRecord& a, const ConceptRecord& b) {
              return a.hadm_id < b.hadm_id;
            });
  return result;
}

void write_concepts(const fs::path& path, std::span<const ConceptRecord> records) {
  write_jsonl(path, records, concept_record_to_json);
}

BuildResult run_build_inputs(const PipelineConfig& cfg,
                             std::span<const corpus::Visit> visits,
                             std::span<const ConceptRecord> concepts) {
  std::map<std::string, const ConceptRecord*> by_id;
  for (const auto& r : concepts) by_id[r.hadm_id] = &r;
  const auto tmpl = input::PromptTemplate::parse(cfg.prompt_template, cfg.prompt_marker);

  struct Slot {
    PromptRecord record;
    std::optional<std::size_t> raw_tokens;
  };
  std::vector<Slot> slots(visits.size() * std::size(kTargets));
  parallel_for(visits.size(), cfg.workers, [&](std::size_t i) {
    const corpus::Visit& visit = visits[i];
    const auto note = segmenter::segment(visit.note_text);
    auto it = by_id.find(visit.hadm_id);
    for (std::size_t k = 0; k < std::size(kTargets); ++k) {
      const TargetSection t = kTargets[k];
      Slot& slot = slots[i * std::size(kTargets) + k];
      slot.record.hadm_id = visit.hadm_id;
      slot.record.target = t;
      if (cfg.input_mode == input::InputMode::kNer) {
        if (it == by_id.end()) {
          slot.record.error = "no concept record for this visit";
          continue;
        }
        if (it->second->error) {
          slot.record.error = "concept extraction failed: " + *it->second->error;
          continue;
        }
      }
      static const input::VisitConcepts kNone;
      const input::VisitConcepts& vc =
          it != by_id.end() && !it->second->error ? it->second->concepts : kNone;
      try {
        const auto built = input::build_input(visit, note, vc, t, cfg.selection,
                                              cfg.tokenizer, cfg.budget, cfg.input_mode);
        slot.record.prompt = tmpl.render(built, "");
        slot.record.total_tokens = built.total_tokens;
        slot.record.truncated = built.truncated;
        const auto raw = input::build_input(visit, note, vc, t, cfg.selection,
                                            cfg.tokenizer, input::kUnlimitedBudget,
                                            input::InputMode::kVerbatim);
        slot.raw_tokens = raw.total_tokens;
      } catch (const Error& e) {
        slot.record.error = e.what();
      }
    }
  });

  BuildResult result;
  std::map<TargetSection, std::tuple<std::size_t, double, double, std::size_t>> acc;
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    return std::tie(a.record.hadm_id, a.record.target) <
           std::tie(b.record.hadm_id, b.record.target);
  });
  for (auto& slot : slots) {
    if (slot.raw_tokens) {
      auto& [n, raw, rec, trunc] = acc[slot.record.target];
      ++n;
      raw += static_cast<double>(*slot.raw_tokens);
      rec += static_cast<double>(slot.record.total_tokens);
      trunc += slot.record.truncated ? 1 : 0;
      result.per_document_tokens.emplace_back(slot.record.hadm_id, slot.record.target,
                                              slot.record.total_tokens,
                                              *slot.raw_tokens);
    }
    result.prompts.push_back(std::move(slot.record));
  }
  for (TargetSection t : kTargets) {
    const auto [n, raw, rec, trunc] = acc[t];
    result.compression[t] = summarize(n, raw, rec, trunc);
  }
  return result;
}

void write_prompts(const fs::path& path, std::span<const PromptRecord> prompts) {
  write_jsonl(path, prompts, prompt_record_to_json);
}

GenerateResult run_generate(const PipelineConfig& cfg,
                            std::span<const PromptRecord> prompts,
                            std::span<const corpus::Visit> visits) {
  std::unique_ptr<generation::Generator> gen;
  std::size_t concurrency = cfg.workers;
  switch (cfg.backend) {
    case BackendKind::kMock:
      gen = std::make_unique<generation::MockGenerator>(cfg.canned);
      break;
    case BackendKind::kExtractive:
      gen = std::make_unique<generation::ExtractiveGenerator>(
          segment_all(visits, cfg.workers), cfg.selection, cfg.extractive_k);
      break;
    case BackendKind::kRemote:
      gen = std::make_unique<generation::RemoteGenerator>(
          http::Endpoint::parse(cfg.generator.endpoint, "/generate"),
          cfg.generator.retry);
      concurrency = cfg.generator.concurrency;
      break;
  }

  std::vector<generation::GenerationRequest> requests;
  std::vector<generation::BatchOutcome> failed;
  for (const auto& p : prompts) {
    if (p.error) {
      generation::BatchOutcome o;
      o.hadm_id = p.hadm_id;
      o.target = p.target;
      o.error = *p.error;
      o.error_kind = "input";
      failed.push_back(std::move(o));
      continue;
    }
    generation::GenerationRequest req;
    req.hadm_id = p.hadm_id;
    req.target = p.target;
    req.prompt = p.prompt;
    req.params = cfg.params;
    requests.push_back(std::move(req));
  }

  GenerateResult result;
  result.outcomes = generation::generate_batch(*gen, requests, concurrency);
  for (auto& f : failed) result.outcomes.push_back(std::move(f));
  std::stable_sort(result.outcomes.begin(), result.outcomes.end(),
                   [](const generation::BatchOutcome& a, const generation::BatchOutcome& b) {
                     return std::tie(a.hadm_id, a.target) < std::tie(b.hadm_id, b.target);
                   });
  result.submission = generation::to_submission(result.outcomes);
  return result;
}

void write_submission_file(const fs::path& path, const generation::Submission& sub) {
  auto out = open_out(path);
  generation::write_submission(out, sub);
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

EvaluateResult run_evaluate(const PipelineConfig& cfg,
                            const generation::Submission& submission,
                            const GoldTable& gold) {
  std::vector<eval::Sample> samples;
  std::vector<std::string> warnings;
  for (const auto& [id, row] : gold) {
    auto sub_it = submission.find(id);
    for (TargetSection t : kTargets) {
      auto g = row.find(t);
      if (g == row.end() || !g->second) {
        warnings.push_back(id + ": no gold " + std::string(target_key(t)) + "; skipped");
        continue;
      }
      eval::Sample s;
      s.hadm_id = id;
      s.target = t;
      s.reference = *g->second;
      if (sub_it != submission.end()) {
        auto c = sub_it->second.find(t);
        if (c != sub_it->second.end()) s.candidate = c->second;
      }
      samples.push_back(std::move(s));
    }
  }
  for (const auto& [id, row] : submission) {
    if (!gold.count(id)) warnings.push_back(id + ": not in gold; ignored");
  }

  const auto lexicon = maybe_lexicon(cfg, needs_concept_metric(cfg));
  eval::EvalOptions opts;
  opts.metrics = cfg.metrics;
  opts.lexicon = lexicon ? &*lexicon : nullptr;
  if (cfg.scorer) {
    opts.scorer = http::Endpoint::parse(cfg.scorer->endpoint, "/score");
    opts.retry = cfg.scorer->retry;
    opts.concurrency = cfg.scorer->concurrency;
  } else {
    opts.concurrency = cfg.workers;
  }

  EvaluateResult result;
  result.scores = eval::evaluate_samples(samples, opts);
  result.aggregate = eval::aggregate(result.scores.reports);
  for (auto m : result.scores.unavailable) {
    if (std::find(result.aggregate.unavailable.begin(), result.aggregate.unavailable.end(),
                  m) == result.aggregate.unavailable.end()) {
      result.aggregate.unavailable.push_back(m);
    }
  }
  for (auto& w : result.scores.warnings) result.aggregate.warnings.push_back(w);
  for (auto& w : warnings) result.aggregate.warnings.push_back(std::move(w));
  return result;
}

void write_evaluation(const fs::path& scores_csv, const fs::path& aggregate_json,
                      const EvaluateResult& result) {
  {
    auto out = open_out(scores_csv);
    eval::write_scores_csv(out, result.scores.reports);
  }
  auto out = open_out(aggregate_json);
  out << result.aggregate.to_json().dump(2) << '\n';
}

json run_stats(const PipelineConfig& cfg) {
  const auto visits = corpus::load_corpus(cfg.corpus_path, cfg.split);
  json out = corpus::to_json(corpus::compute_stats(visits, cfg.tokenizer, cfg.budget));
  std::vector<ConceptRecord> records;
  if (cfg.input_mode == input::InputMode::kNer) {
    records = run_extract(cfg, visits).records;
  }
  const auto built = run_build_inputs(cfg, visits, records);
  out["compression"] = compression_to_json(built.compression);
  return out;
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

RunPaths RunPaths::in(const fs::path& dir) {
  RunPaths p;
  p.concepts = dir / "concepts.jsonl";
  p.prompts = dir / "prompts.jsonl";
  p.submission = dir / "submission.csv";
  p.gold = dir / "gold.jsonl";
  p.scores = dir / "scores.csv";
  p.aggregate = dir / "aggregate.json";
  p.report = dir / "run_report.json";
  return p;
}

json RunReport::to_json() const {
  json j;
  j["status"] = status == RunStatus::kSuccess   ? "success"
                : status == RunStatus::kPartial ? "partial"
                                                : "stage_failure";
  if (!failed_stage.empty()) {
    j["failed_stage"] = failed_stage;
    j["failure"] = failure;
  }
  j["config_hash"] = config_hash;
  j["config"] = config;
  json stages = json::array();
  for (const auto& [name, ms] : stage_ms) stages.push_back({{"stage", name}, {"ms", ms}});
  j["timings"] = std::move(stages);
  json docs = json::array();
  for (const auto& d : documents) {
    json e = {{"hadm_id", d.hadm_id},
              {"target", std::string(target_key(d.target))},
              {"status", d.ok ? "ok" : "failed"},
              {"retries", d.retries}};
    if (!d.ok) {
      e["stage"] = d.stage;
      e["error"] = d.error;
    }
    docs.push_back(std::move(e));
  }
  j["documents"] = std::move(docs);
  j["compression"] = compression_to_json(compression);
  j["aggregate"] = aggregate ? aggregate->to_json() : json(nullptr);
  return j;
}

RunReport run_pipeline(const PipelineConfig& cfg) {
  RunReport report;
  report.config = cfg.source;
  report.config_hash = config_hash(cfg.source);
  const RunPaths paths = RunPaths::in(cfg.output_dir);

  std::string stage;
  auto timed = [&](const std::string& name, auto&& fn) {
    stage = name;
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double, std::milli> dt =
        std::chrono::steady_clock::now() - t0;
    report.stage_ms.emplace_back(name, dt.count());
  };

  try {
    std::vector<corpus::Visit> visits;
    timed("load", [&] {
      fs::create_directories(cfg.output_dir);
      visits = corpus::load_corpus(cfg.corpus_path, cfg.split);
      write_gold(paths.gold, gold_from_visits(visits));
    });
    timed("extract", [&] {
      std::vector<ConceptRecord> records;
      if (cfg.input_mode == input::InputMode::kNer) {
        records = run_extract(cfg, visits).records;
      }
      write_concepts(paths.concepts, records);
    });
    timed("build-input", [&] {
      const auto records = read_jsonl(paths.concepts, &concept_record_from_json);
      auto built = run_build_inputs(cfg, visits, records);
      report.compression = built.compression;
      write_prompts(paths.prompts, built.prompts);
    });
    std::vector<generation::BatchOutcome> outcomes;
    timed("generate", [&] {
      const auto prompts = read_jsonl(paths.prompts, &prompt_record_from_json);
      auto gen = run_generate(cfg, prompts, visits);
      write_submission_file(paths.submission, gen.submission);
      outcomes = std::move(gen.outcomes);
    });
    timed("evaluate", [&] {
      auto in = open_in(paths.submission);
      const auto submission = generation::read_submission(in);
      auto result = run_evaluate(cfg, submission, read_gold(paths.gold));
      write_evaluation(paths.scores, paths.aggregate, result);
      report.aggregate = std::move(result.aggregate);
    });
    for (const auto& o : outcomes) {
      DocumentOutcome d;
      d.hadm_id = o.hadm_id;
      d.target = o.target;
      d.ok = o.ok;
      d.retries = o.retries;
      if (!o.ok) {
        d.stage = o.error_kind != "input" ? "generate"
                  : o.error.rfind("concept extraction failed", 0) == 0 ? "extract"
                                                                      : "build-input";
        d.error = o.error;
      }
      report.documents.push_back(std::move(d));
    }
    const bool any_failed = std::any_of(report.documents.begin(), report.documents.end(),
                                        [](const DocumentOutcome& d) { return !d.ok; });
    report.status = any_failed ? RunStatus::kPartial : RunStatus::kSuccess;
  } catch (const std::exception& e) {
    report.status = RunStatus::kStageFailure;
    report.failed_stage = stage;
    report.failure = e.what();
  }

  try {
    auto out = open_out(paths.report);
    out << report.to_json().dump(2) << '\n';
  } catch (const std::exception& e) {
    if (report.status != RunStatus::kStageFailure) {
      report.status = RunStatus::kStageFailure;
      report.failed_stage = "report";
      report.failure = e.what();
    }
  }
  return report;
}

}  // namespace dischargegen::pipeline
