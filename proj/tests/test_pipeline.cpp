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

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "errors.hpp"
#include "pipeline.hpp"
#include "test_support.hpp"

namespace dischargegen::pipeline {
namespace {

using testing::data_path;
using testing::TempDir;

std::optional<std::string> no_env(const char*) { return std::nullopt; }

std::map<std::string, std::string>& fake_env() {
  static std::map<std::string, std::string> env;
  return env;
}

std::optional<std::string> lookup_fake(const char* name) {
  const auto it = fake_env().find(name);
  if (it == fake_env().end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> base_overrides(const fs::path& out) {
  return {"corpus.path=" + data_path("fixtures/train.jsonl").string(),
          "lexicon=" + data_path("lexicon.tsv").string(), "output_dir=" + out.string()};
}

json load(const fs::path& out, std::vector<std::string> extra = {}) {
  auto ov = base_overrides(out);
  ov.insert(ov.end(), extra.begin(), extra.end());
  return load_config(std::nullopt, ov, &no_env);
}

std::set<std::string> fields(const std::vector<Finding>& f) {
  std::set<std::string> out;
  for (const auto& x : f) out.insert(x.field);
  return out;
}

TEST(ConfigTest, DefaultsCarryTheDecodingSettings) {
  const json d = default_config();
  EXPECT_DOUBLE_EQ(d["generation"]["temperature"].get<double>(), 0.2);
  EXPECT_DOUBLE_EQ(d["generation"]["top_p"].get<double>(), 0.6);
  EXPECT_EQ(d["generation"]["max_new_tokens"], 512);
  EXPECT_EQ(d["budget"], 2048);
  EXPECT_EQ(d["tokenizer"], "whitespace");
  EXPECT_EQ(d["prompt"]["template"], "<VIRTUAL_PROMPT> Input: {input}\n Output:{output}");
  EXPECT_EQ(d["ner"]["concurrency"], 4);
  EXPECT_EQ(d["backend"]["retries"], 2);
  const auto paths = config_paths();
  EXPECT_TRUE(std::is_sorted(paths.begin(), paths.end()));
  EXPECT_NE(std::find(paths.begin(), paths.end(), "backend.kind"), paths.end());
  EXPECT_NE(std::find(paths.begin(), paths.end(), "selection"), paths.end());
}

TEST(ConfigTest, ValidConfigHasNoFindings) {
  TempDir tmp;
  const json cfg = load(tmp.path());
  EXPECT_TRUE(validate_config(cfg).empty()) << findings_to_json(validate_config(cfg)).dump();
  const auto typed = parse_config(cfg);
  EXPECT_EQ(typed.budget, 2048u);
  EXPECT_EQ(typed.backend, BackendKind::kMock);
  EXPECT_EQ(typed.params.seed, 7u);
  EXPECT_EQ(typed.metrics.size(), 6u);
}

TEST(ConfigTest, BudgetZeroAndOverlapAreReported) {
  TempDir tmp;
  json cfg = load(tmp.path(), {"budget=0"});
  auto f = validate_config(cfg);
  EXPECT_EQ(fields(f), (std::set<std::string>{"budget"}));
  EXPECT_THROW(parse_config(cfg), Error);

  cfg = load(tmp.path());
  cfg["selection"]["brief_hospital_course"]["verbatim_sections"].push_back("physical_exam");
  f = validate_config(cfg);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].field, "selection");
  EXPECT_NE(f[0].message.find("Physical Exam"), std::string::npos);
}

TEST(ConfigTest, UnknownKeysTypesAndSemantics) {
  TempDir tmp;
  json cfg = load(tmp.path());
  cfg["bugdet"] = 3;
  cfg["workers"] = "four";
  EXPECT_EQ(fields(validate_config(cfg)), (std::set<std::string>{"bugdet", "workers"}));

  cfg = load(tmp.path(), {"backend.kind=remote", "metrics=[\"rouge1\",\"bertscore\"]",
                          "tokenizer=bytes", "generation.top_p=1.5", "corpus.split=dev",
                          "prompt.template=Input: {input}"});
  const auto f = fields(validate_config(cfg));
  for (const char* k : {"backend.endpoint", "scorer.endpoint", "tokenizer", "generation.top_p",
                        "corpus.split", "prompt.template"}) {
    EXPECT_TRUE(f.count(k)) << k;
  }

  cfg = load(tmp.path(), {"corpus.path=/nonexistent/corpus.jsonl"});
  EXPECT_EQ(fields(validate_config(cfg)), (std::set<std::string>{"corpus.path"}));
}

TEST(ConfigTest, InvalidLexiconIsReported) {
  TempDir tmp;
  testing::write_file(tmp / "bad.tsv", "insulin\tTREATMENT\ninsulin\tTEST\n");
  json cfg = load(tmp.path(), {"lexicon=" + (tmp / "bad.tsv").string()});
  auto f = validate_config(cfg);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].field, "lexicon");
  EXPECT_NE(f[0].message.find(":2"), std::string::npos);

  cfg = load(tmp.path(), {"lexicon=" + (tmp / "missing.tsv").string()});
  EXPECT_EQ(fields(validate_config(cfg)), (std::set<std::string>{"lexicon"}));
}

TEST(ConfigTest, LayeringFileThenEnvThenOverrides) {
  TempDir tmp;
  testing::write_file(tmp / "c.json", R"({"budget": 100, "backend": {"kind": "extractive"},
                                           "output_dir": "from-file"})");
  fake_env() = {{"DGEN_BUDGET", "200"}, {"DGEN_OUTPUT_DIR", "from-env"},
                {"DGEN_BACKEND_EXTRACTIVE_K", "5"}};
  std::vector<std::string> ov = {"budget=300"};
  json cfg = load_config(tmp / "c.json", ov, &lookup_fake);
  EXPECT_EQ(cfg["budget"], 300);
  EXPECT_EQ(cfg["output_dir"], "from-env");
  EXPECT_EQ(cfg["backend"]["kind"], "extractive");
  EXPECT_EQ(cfg["backend"]["extractive_k"], 5);
  EXPECT_EQ(cfg["backend"]["mock"], default_config()["backend"]["mock"]);
  cfg = load_config(tmp / "c.json", {}, &no_env);
  EXPECT_EQ(cfg["budget"], 100);
  fake_env().clear();

  EXPECT_EQ(env_var_for("backend.extractive_k"), "DGEN_BACKEND_EXTRACTIVE_K");
  json c = default_config();
  apply_override(c, "prompt.marker", "{not json}");
  EXPECT_EQ(c["prompt"]["marker"], "{not json}");
  apply_override(c, "ner.retries", "5");
  EXPECT_EQ(c["ner"]["retries"], 5);
  EXPECT_THROW(apply_override(c, "nope.key", "1"), Error);
  EXPECT_THROW(apply_override(c, "budget", "many"), Error);
  testing::write_file(tmp / "broken.json", "{");
  EXPECT_THROW(load_config(tmp / "broken.json", {}, &no_env), Error);
  EXPECT_THROW(load_config(tmp / "absent.json", {}, &no_env), Error);
}

TEST(ConfigTest, HashIsStableAndSensitive) {
  TempDir tmp;
  const json a = load(tmp.path());
  EXPECT_EQ(config_hash(a), config_hash(load(tmp.path())));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_NE(config_hash(a), config_hash(load(tmp.path(), {"seed=8"})));
}

TEST(RecordsTest, JsonRoundTrips) {
  PromptRecord p{"1", TargetSection::kDischargeInstructions, "<VIRTUAL_PROMPT> Input: x\n Output:",
                 12, true, std::nullopt};
  const auto back = prompt_record_from_json(prompt_record_to_json(p));
  EXPECT_EQ(back.prompt, p.prompt);
  EXPECT_EQ(back.target, p.target);
  EXPECT_TRUE(back.truncated);
  const json j = prompt_record_to_json(p);
  EXPECT_EQ(j["target"], "discharge_instructions");
  for (const char* k : {"hadm_id", "target", "prompt", "total_tokens", "truncated"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }

  ConceptRecord c;
  c.hadm_id = "9";
  c.concepts.sections[segmenter::SectionId::kPertinentResults] = {
      {"EKG", concepts::ConceptType::kTest, 4, 7, segmenter::SectionId::kPertinentResults}};
  c.concepts.radiology = {{}, {{"edema", concepts::ConceptType::kProblem, 0, 5, {}}}};
  const auto c2 = concept_record_from_json(concept_record_to_json(c));
  EXPECT_EQ(c2.concepts.sections, c.concepts.sections);
  EXPECT_EQ(c2.concepts.radiology.size(), 2u);
  EXPECT_EQ(c2.concepts.radiology[1][0].text, "edema");
  EXPECT_THROW(concept_record_from_json(json{{"sections", 1}}), Error);
}

TEST(RunTest, FullRunWritesEveryArtifact) {
  TempDir tmp;
  const auto cfg = parse_config(load(tmp.path()));
  const auto report = run_pipeline(cfg);
  ASSERT_EQ(report.status, RunStatus::kSuccess) << report.failure;
  EXPECT_EQ(report.documents.size(), 48u);
  const auto paths = RunPaths::in(tmp.path());
  for (const auto& p : {paths.concepts, paths.prompts, paths.submission, paths.gold, paths.scores,
                        paths.aggregate, paths.report}) {
    EXPECT_TRUE(fs::exists(p)) << p;
  }
  const json rj = json::parse(testing::read_file(paths.report));
  EXPECT_EQ(rj["status"], "success");
  EXPECT_EQ(rj["config_hash"], config_hash(cfg.source));
  ASSERT_TRUE(report.aggregate.has_value());
  EXPECT_GT(report.aggregate->overall, 0.0);
  EXPECT_LT(report.aggregate->overall, 1.0);
  for (TargetSection t : kTargets) {
    const auto& c = report.compression.at(t);
    EXPECT_EQ(c.samples, 24u);
    EXPECT_LT(c.ratio, 1.0);
    EXPECT_GT(c.ratio, 0.0);
  }
}

TEST(RunTest, StagesChainedByHandMatchRun) {
  TempDir a, b;
  const auto cfg_a = parse_config(load(a.path()));
  ASSERT_EQ(run_pipeline(cfg_a).status, RunStatus::kSuccess);

  const auto cfg = parse_config(load(b.path()));
  const auto paths = RunPaths::in(b.path());
  const auto visits = corpus::load_corpus(cfg.corpus_path, cfg.split);
  write_concepts(paths.concepts, run_extract(cfg, visits).records);
  const auto concepts = read_jsonl(paths.concepts, &concept_record_from_json);
  write_prompts(paths.prompts, run_build_inputs(cfg, visits, concepts).prompts);
  const auto prompts = read_jsonl(paths.prompts, &prompt_record_from_json);
  write_submission_file(paths.submission, run_generate(cfg, prompts, visits).submission);
  write_gold(paths.gold, gold_from_visits(visits));
  std::ifstream sub_in(paths.submission, std::ios::binary);
  const auto result =
      run_evaluate(cfg, generation::read_submission(sub_in), read_gold(paths.gold));
  write_evaluation(paths.scores, paths.aggregate, result);

  const auto pa = RunPaths::in(a.path());
  for (auto member : {&RunPaths::concepts, &RunPaths::prompts, &RunPaths::submission,
                      &RunPaths::gold, &RunPaths::scores, &RunPaths::aggregate}) {
    EXPECT_EQ(testing::read_file(pa.*member), testing::read_file(paths.*member))
        << (pa.*member).filename();
  }
}

TEST(RunTest, GoldAcceptsCorpusRecords) {
  TempDir tmp;
  const auto visits = corpus::load_corpus(data_path("fixtures/train.jsonl"), corpus::Split::kTrain);
  const auto from_corpus = read_gold(data_path("fixtures/train.jsonl"));
  write_gold(tmp / "gold.jsonl", gold_from_visits(visits));
  EXPECT_EQ(read_gold(tmp / "gold.jsonl"), from_corpus);
  EXPECT_FALSE(from_corpus.at("10007").at(TargetSection::kBriefHospitalCourse).has_value());
  EXPECT_TRUE(from_corpus.at("10007").at(TargetSection::kDischargeInstructions).has_value());
}

TEST(RunTest, RemoteNerFailureIsPartial) {
  testing::MockServer srv;
  srv.server().Post("/ner", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    if (body["section"] == "Physical Exam") {
      res.status = 500;
      return;
    }
    res.set_content(R"({"spans":[]})", "application/json");
  });
  srv.start();
  TempDir tmp;
  const auto cfg = parse_config(load(tmp.path(), {"ner.mode=remote", "ner.endpoint=" + srv.url("/ner"),
                                                  "ner.retries=0", "ner.backoff_ms=1"}));
  const auto report = run_pipeline(cfg);
  ASSERT_EQ(report.status, RunStatus::kPartial) << report.failure;
  std::size_t failed = 0;
  std::set<std::pair<std::string, TargetSection>> seen;
  for (const auto& d : report.documents) {
    EXPECT_TRUE(seen.insert({d.hadm_id, d.target}).second);
    if (d.ok) continue;
    ++failed;
    EXPECT_EQ(d.stage, "extract");
    EXPECT_NE(d.hadm_id, "10009");  // its note has no Physical Exam
  }
  EXPECT_EQ(seen.size(), 48u);
  EXPECT_EQ(failed, 46u);
  EXPECT_EQ(json::parse(testing::read_file(RunPaths::in(tmp.path()).report))["status"], "partial");
}

TEST(RunTest, MissingCorpusIsStageFailure) {
  TempDir tmp;
  auto cfg = parse_config(load(tmp.path()));
  cfg.corpus_path = tmp / "gone.jsonl";
  const auto report = run_pipeline(cfg);
  EXPECT_EQ(report.status, RunStatus::kStageFailure);
  EXPECT_EQ(report.failed_stage, "load");
  EXPECT_TRUE(fs::exists(RunPaths::in(tmp.path()).report));
}

TEST(RunTest, StatsReportsCompression) {
  TempDir tmp;
  const json s = run_stats(parse_config(load(tmp.path())));
  EXPECT_EQ(s["budget"], 2048);
  EXPECT_TRUE(s.contains("compression"));
  EXPECT_GT(s["splits"][0]["note"]["fraction_over_budget"].get<double>(), 0.0);
}

}  // namespace
}  // namespace dischargegen::pipeline
