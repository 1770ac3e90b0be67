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

// dischargegen command line. Talks to the library only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dischargegen/dischargegen.h"
#include "json.hpp"

namespace {

enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitStage = 2, kExitPartial = 3 };

int exit_code_for(dg_status s) {
  switch (s) {
    case DG_OK:
      return kExitOk;
    case DG_PARTIAL:
      return kExitPartial;
    case DG_ERR_INVALID_ARGUMENT:
    case DG_ERR_VALIDATION:
    case DG_ERR_CONFIG:
    case DG_ERR_TEMPLATE:
      return kExitValidation;
    default:
      return kExitStage;
  }
}

struct CString {
  char* p = nullptr;
  ~CString() { dg_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct ConfigDeleter {
  void operator()(dg_config* c) const { dg_config_free(c); }
};
using ConfigPtr = std::unique_ptr<dg_config, ConfigDeleter>;

struct Globals {
  std::string config_file;
  bool no_env = false;
  std::vector<std::string> overrides;  // "dotted.key=value"
};

int report_error(const char* what, dg_status s) {
  std::cerr << "dischargegen: " << what << ": " << dg_status_name(s) << ": "
            << dg_last_error() << '\n';
  return exit_code_for(s);
}

// Loads and validates. Returns nullptr after printing problems.
ConfigPtr load_config(const Globals& g, int* exit_code, bool validate = true) {
  std::vector<const char*> ov;
  for (const auto& o : g.overrides) ov.push_back(o.c_str());
  dg_config* raw = nullptr;
  const dg_status s = dg_config_load(g.config_file.empty() ? nullptr : g.config_file.c_str(),
                                     ov.data(), ov.size(), g.no_env ? 0 : 1, &raw);
  if (s != DG_OK) {
    *exit_code = report_error("loading configuration", s);
    return nullptr;
  }
  ConfigPtr cfg(raw);
  if (validate) {
    CString findings;
    const dg_status v = dg_config_validate(cfg.get(), &findings.p);
    if (v != DG_OK) {
      std::cerr << "dischargegen: invalid configuration\n" << findings.str() << '\n';
      *exit_code = exit_code_for(v);
      return nullptr;
    }
  }
  return cfg;
}

nlohmann::json config_json(const dg_config* cfg) {
  CString out;
  if (dg_config_json(cfg, &out.p) != DG_OK) return nlohmann::json::object();
  return nlohmann::json::parse(out.str());
}

std::string output_dir(const dg_config* cfg) {
  return config_json(cfg).value("output_dir", std::string("out"));
}

std::optional<std::string> read_all(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Moves "--key=value" arguments naming a configuration key (or a parent
// object of one) into `overrides`.
std::vector<std::string> take_overrides(int argc, char** argv,
                                        std::vector<std::string>* overrides) {
  std::vector<std::string> keys;
  CString raw;
  if (dg_config_keys(&raw.p) == DG_OK) {
    keys = nlohmann::json::parse(raw.str()).get<std::vector<std::string>>();
  }
  const auto known = [&](const std::string& k) {
    for (const auto& key : keys) {
      if (key == k || key.rfind(k + ".", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> rest;
  for (int i = 0; i < argc; ++i) {
    const std::string a = argv[i];
    const auto eq = a.find('=');
    if (i > 0 && a.rfind("--", 0) == 0 && eq != std::string::npos &&
        known(a.substr(2, eq - 2))) {
      overrides->push_back(a.substr(2));
      continue;
    }
    rest.push_back(a);
  }
  return rest;
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  const std::vector<std::string> args = take_overrides(argc, argv, &g.overrides);

  CLI::App app{"Retrieve-then-generate discharge summary sections", "dischargegen"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(dg_version()));
  app.footer(
      "Configuration keys can be overridden with --key=value using dotted\n"
      "paths, e.g. --budget=1024 or --backend.kind=extractive.\n"
      "Environment variables use the DGEN_ prefix, e.g. DGEN_BACKEND_KIND.\n"
      "Exit codes: 0 ok, 1 invalid configuration, 2 stage failure, 3 partial.");
  app.add_option("-c,--config", g.config_file, "Pipeline configuration JSON")
      ->check(CLI::ExistingFile);
  app.add_flag("--no-env", g.no_env, "Ignore DGEN_* environment variables");

  int code = kExitOk;

  // segment
  std::string seg_input;
  auto* seg = app.add_subcommand("segment", "Split a note into sections (JSON)");
  seg->add_option("input", seg_input, "Note text file, or - for stdin")->required();
  seg->callback([&] {
    const auto text = read_all(seg_input);
    if (!text) {
      std::cerr << "dischargegen: cannot read " << seg_input << '\n';
      code = kExitStage;
      return;
    }
    CString out;
    const dg_status s = dg_segment(text->data(), text->size(), &out.p);
    if (s != DG_OK) {
      code = report_error("segment", s);
      return;
    }
    std::cout << out.str() << '\n';
  });

  // extract
  std::string ex_input, ex_section, ex_out;
  auto* ex = app.add_subcommand(
      "extract", "Concept extraction over the corpus, or over one text with --input");
  ex->add_option("--input", ex_input, "Text file (or -) to extract from");
  ex->add_option("--section", ex_section, "Section name for --input");
  ex->add_option("-o,--out", ex_out, "Output JSON lines (default <output_dir>/concepts.jsonl)");
  ex->callback([&] {
    auto cfg = load_config(g, &code, ex_input.empty());
    if (!cfg) return;
    if (!ex_input.empty()) {
      const auto text = read_all(ex_input);
      if (!text) {
        std::cerr << "dischargegen: cannot read " << ex_input << '\n';
        code = kExitStage;
        return;
      }
      const std::string lex_path = config_json(cfg.get()).value("lexicon", std::string());
      dg_lexicon* lex = nullptr;
      dg_status s = dg_lexicon_load(lex_path.c_str(), &lex);
      if (s != DG_OK) {
        code = report_error("loading lexicon", s);
        return;
      }
      CString out;
      s = dg_extract(lex, text->data(), text->size(),
                     ex_section.empty() ? nullptr : ex_section.c_str(), &out.p);
      dg_lexicon_free(lex);
      if (s != DG_OK) {
        code = report_error("extract", s);
        return;
      }
      std::cout << out.str() << '\n';
      return;
    }
    const std::string path = ex_out.empty() ? output_dir(cfg.get()) + "/concepts.jsonl" : ex_out;
    CString summary;
    const dg_status s = dg_stage_extract(cfg.get(), path.c_str(), &summary.p);
    if (s != DG_OK && s != DG_PARTIAL) {
      code = report_error("extract", s);
      return;
    }
    std::cerr << summary.str() << '\n';
    code = exit_code_for(s);
  });

  // build-input
  std::string bi_concepts, bi_out;
  auto* bi = app.add_subcommand("build-input", "Build prompts (JSON lines)");
  bi->add_option("--concepts", bi_concepts, "Concepts from `extract` (default: extract now)");
  bi->add_option("-o,--out", bi_out, "Output JSON lines (default <output_dir>/prompts.jsonl)");
  bi->callback([&] {
    auto cfg = load_config(g, &code);
    if (!cfg) return;
    const std::string path = bi_out.empty() ? output_dir(cfg.get()) + "/prompts.jsonl" : bi_out;
    CString summary;
    const dg_status s = dg_stage_build_inputs(
        cfg.get(), bi_concepts.empty() ? nullptr : bi_concepts.c_str(), path.c_str(),
        &summary.p);
    if (s != DG_OK && s != DG_PARTIAL) {
      code = report_error("build-input", s);
      return;
    }
    std::cerr << summary.str() << '\n';
    code = exit_code_for(s);
  });

  // generate
  std::string gen_prompts, gen_out;
  auto* gen = app.add_subcommand("generate", "Generate sections into a submission CSV");
  gen->add_option("--prompts", gen_prompts, "Prompts from `build-input`")->required();
  gen->add_option("-o,--out", gen_out, "Submission CSV (default <output_dir>/submission.csv)");
  gen->callback([&] {
    auto cfg = load_config(g, &code);
    if (!cfg) return;
    const std::string path = gen_out.empty() ? output_dir(cfg.get()) + "/submission.csv" : gen_out;
    CString summary;
    const dg_status s = dg_stage_generate(cfg.get(), gen_prompts.c_str(), path.c_str(),
                                          &summary.p);
    if (s != DG_OK && s != DG_PARTIAL) {
      code = report_error("generate", s);
      return;
    }
    std::cerr << summary.str() << '\n';
    code = exit_code_for(s);
  });

  // evaluate
  std::string ev_sub, ev_gold, ev_scores, ev_agg;
  auto* ev = app.add_subcommand("evaluate", "Score a submission against gold sections");
  ev->add_option("--submission", ev_sub, "Submission CSV")->required();
  ev->add_option("--gold", ev_gold, "Gold JSON lines or corpus JSON lines")->required();
  ev->add_option("--scores-out", ev_scores, "Per-document scores CSV");
  ev->add_option("--aggregate-out", ev_agg, "Aggregate JSON");
  ev->callback([&] {
    auto cfg = load_config(g, &code);
    if (!cfg) return;
    const std::string dir = output_dir(cfg.get());
    const std::string scores = ev_scores.empty() ? dir + "/scores.csv" : ev_scores;
    const std::string agg = ev_agg.empty() ? dir + "/aggregate.json" : ev_agg;
    CString out;
    const dg_status s = dg_stage_evaluate(cfg.get(), ev_sub.c_str(), ev_gold.c_str(),
                                          scores.c_str(), agg.c_str(), &out.p);
    if (s != DG_OK) {
      code = report_error("evaluate", s);
      return;
    }
    std::cout << out.str() << '\n';
  });

  // stats
  auto* st = app.add_subcommand("stats", "Corpus length statistics and input compression");
  st->callback([&] {
    auto cfg = load_config(g, &code);
    if (!cfg) return;
    CString out;
    const dg_status s = dg_stats(cfg.get(), &out.p);
    if (s != DG_OK) {
      code = report_error("stats", s);
      return;
    }
    std::cout << out.str() << '\n';
  });

  // run
  auto* run = app.add_subcommand("run", "Run every stage into <output_dir>");
  run->callback([&] {
    auto cfg = load_config(g, &code);
    if (!cfg) return;
    CString report;
    const dg_status s = dg_run(cfg.get(), &report.p);
    if (report.p == nullptr) {
      code = report_error("run", s);
      return;
    }
    const auto j = nlohmann::json::parse(report.str());
    std::cerr << "status: " << j.value("status", "") << '\n';
    if (j.contains("failed_stage")) {
      std::cerr << "failed stage: " << j["failed_stage"].get<std::string>() << ": "
                << j.value("failure", "") << '\n';
    }
    if (j.contains("aggregate") && j["aggregate"].is_object()) {
      std::cout << j["aggregate"].dump(2) << '\n';
    }
    code = exit_code_for(s);
  });

  // validate
  auto* val = app.add_subcommand("validate", "Check a configuration");
  val->callback([&] {
    auto cfg = load_config(g, &code, false);
    if (!cfg) return;
    CString findings;
    const dg_status s = dg_config_validate(cfg.get(), &findings.p);
    std::cout << findings.str() << '\n';
    code = exit_code_for(s);
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }
  return code;
}
