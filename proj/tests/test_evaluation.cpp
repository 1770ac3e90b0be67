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
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "evaluation.hpp"
#include "test_support.hpp"

namespace dischargegen::eval {
namespace {

using Tokens = std::vector<std::string>;

Tokens toks(const std::string& s) { return tokenize_eval(s); }

TEST(TokenizeTest, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(toks("The cat, sat."), (Tokens{"the", "cat", "sat"}));
  EXPECT_TRUE(toks("").empty());
  EXPECT_EQ(toks("A  B"), (Tokens{"a", "b"}));
  EXPECT_EQ(toks("(x-ray) ... 3.5mg"), (Tokens{"x-ray", "3.5mg"}));
}

TEST(MetricNamesTest, RoundTrip) {
  for (MetricId m : {MetricId::kBleu4, MetricId::kRouge1, MetricId::kRouge2, MetricId::kRougeL,
                     MetricId::kMeteor, MetricId::kConceptF1, MetricId::kBertScore,
                     MetricId::kAlignScore}) {
    EXPECT_EQ(parse_metric(metric_name(m)), m);
  }
  EXPECT_FALSE(parse_metric("medcon").has_value());
}

TEST(BleuTest, HandValues) {
  const Tokens six = {"a", "b", "c", "d", "e", "f"};
  EXPECT_DOUBLE_EQ(bleu4(six, six), 1.0);
  // p1 = 1/3, p2 = eps/2, p3 = eps/1, no 4-grams, no brevity penalty
  const double expected = std::cbrt((1.0 / 3.0) * (1e-9 / 2.0) * (1e-9 / 1.0));
  EXPECT_NEAR(bleu4(Tokens{"the", "the", "the"}, Tokens{"the", "cat"}), expected, 1e-15);
  EXPECT_EQ(bleu4(Tokens{"x", "y"}, Tokens{"a", "b"}), 0.0);
  EXPECT_EQ(bleu4(Tokens{}, Tokens{"a"}), 0.0);
  // two tokens of a four-token reference: brevity penalty exp(1 - 4/2)
  EXPECT_NEAR(bleu4(Tokens{"a", "b"}, Tokens{"a", "b", "c", "d"}), std::exp(-1.0), 1e-12);
}

TEST(RougeTest, HandValues) {
  EXPECT_DOUBLE_EQ(rouge_n(toks("a b c d"), toks("a b e f"), 1), 0.5);
  EXPECT_DOUBLE_EQ(rouge_n(toks("a b c d"), toks("a b e f"), 2), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(rouge_n(toks("a b c"), toks("a b c"), 2), 1.0);
  EXPECT_DOUBLE_EQ(rouge_n(Tokens{}, toks("a"), 1), 0.0);
  EXPECT_DOUBLE_EQ(rouge_n(Tokens{}, Tokens{}, 1), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l(toks("a b c d"), toks("a c b d")), 0.75);
  EXPECT_DOUBLE_EQ(rouge_l(toks("a b"), toks("a b")), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l(toks("a b"), toks("c d")), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l(Tokens{}, Tokens{}), 1.0);
}

TEST(MeteorTest, HandValues) {
  const auto s = toks("the cat sat on the mat");
  EXPECT_NEAR(meteor(s, s), 1.0 - 1.0 / 432.0, 1e-12);
  EXPECT_NEAR(meteor(s, s), 0.99769, 5e-6);
  EXPECT_DOUBLE_EQ(meteor(Tokens{"x"}, Tokens{"x"}), 0.5);
  EXPECT_DOUBLE_EQ(meteor(Tokens{"x"}, Tokens{"y"}), 0.0);
  EXPECT_DOUBLE_EQ(meteor(Tokens{}, Tokens{"y"}), 0.0);
  // stem stage: "walking" and "walked" share stem "walk"
  const auto a = meteor_align(Tokens{"walking", "dogs"}, Tokens{"walked", "dog"});
  EXPECT_EQ(a.matches, 2u);
  EXPECT_EQ(a.chunks, 1u);
  // swapped order: two chunks
  const auto b = meteor_align(Tokens{"b", "a"}, Tokens{"a", "b"});
  EXPECT_EQ(b.matches, 2u);
  EXPECT_EQ(b.chunks, 2u);
  // P = R = 1, Fmean 1, penalty 0.5 * (2/2)^3
  EXPECT_DOUBLE_EQ(meteor(Tokens{"b", "a"}, Tokens{"a", "b"}), 0.5);
}

TEST(MeteorTest, Stemmer) {
  EXPECT_EQ(meteor_stem("walking"), "walk");
  EXPECT_EQ(meteor_stem("boxes"), "box");
  EXPECT_EQ(meteor_stem("rested"), "rest");
  EXPECT_EQ(meteor_stem("cats"), "cat");
  EXPECT_EQ(meteor_stem("is"), "is");
  EXPECT_EQ(meteor_stem("sing"), "sing");
}

concepts::Lexicon small_lexicon() {
  concepts::Lexicon lex;
  lex.add("hypertension", concepts::ConceptType::kProblem);
  lex.add("colectomy", concepts::ConceptType::kTreatment);
  return lex;
}

TEST(ConceptF1Test, SetArithmetic) {
  const auto lex = small_lexicon();
  EXPECT_DOUBLE_EQ(concept_f1("Hypertension noted", "history of hypertension", lex), 1.0);
  EXPECT_NEAR(concept_f1("hypertension after colectomy", "hypertension", lex), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(concept_f1("nothing here", "or here", lex), 1.0);
  EXPECT_DOUBLE_EQ(concept_f1("colectomy", "nothing", lex), 0.0);
  EXPECT_THROW(concept_f1("a", "b", concepts::Lexicon{}), Error);
}

// Oracles: n-gram multisets through std::map, BLEU from its textbook form,
// LCS by enumerating every subsequence of the shorter side.
std::map<Tokens, std::size_t> grams(const Tokens& t, std::size_t n) {
  std::map<Tokens, std::size_t> m;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++m[Tokens(t.begin() + i, t.begin() + i + n)];
  return m;
}

double bleu_oracle(const Tokens& c, const Tokens& r) {
  if (c.empty()) return 0.0;
  double logs = 0.0;
  int orders = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto gc = grams(c, n), gr = grams(r, n);
    std::size_t total = 0, clipped = 0;
    for (const auto& [g, k] : gc) {
      total += k;
      const auto it = gr.find(g);
      clipped += std::min(k, it == gr.end() ? 0 : it->second);
    }
    if (n == 1 && clipped == 0) return 0.0;
    if (total == 0) continue;
    logs += std::log(clipped ? double(clipped) / total : 1e-9 / total);
    ++orders;
  }
  const double bp = c.size() < r.size() ? std::exp(1.0 - double(r.size()) / c.size()) : 1.0;
  return std::exp(logs / orders) * bp;
}

bool is_subsequence(const Tokens& s, const Tokens& of) {
  std::size_t j = 0;
  for (const auto& t : of) {
    if (j < s.size() && s[j] == t) ++j;
  }
  return j == s.size();
}

std::size_t lcs_oracle(const Tokens& a, const Tokens& b) {
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
    Tokens sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

Tokens random_tokens(std::mt19937& rng, std::size_t max_len, int symbols) {
  Tokens t(rng() % (max_len + 1));
  for (auto& x : t) x = std::string(1, static_cast<char>('a' + rng() % symbols));
  return t;
}

TEST(OracleTest, NgramAndBleuAgainstBruteForce) {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto c = random_tokens(rng, 10, 3);
    const auto r = random_tokens(rng, 10, 3);
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto ov = ngram_overlap<std::string>(c, r, n);
      std::size_t clipped = 0;
      const auto gc = grams(c, n), gr = grams(r, n);
      for (const auto& [g, k] : gc) {
        const auto it = gr.find(g);
        clipped += std::min(k, it == gr.end() ? 0 : it->second);
      }
      ASSERT_EQ(ov.clipped, clipped);
    }
    ASSERT_NEAR(bleu4(c, r), bleu_oracle(c, r), 1e-12);
  }
}

TEST(OracleTest, LcsAgainstExhaustiveSubsequences) {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto a = random_tokens(rng, 8, 3);
    const auto b = random_tokens(rng, 8, 3);
    const std::size_t l = lcs_oracle(a, b);
    ASSERT_EQ(lcs_length<std::string>(a, b), l);
    const double p = a.empty() ? 0 : double(l) / a.size();
    const double rr = b.empty() ? 0 : double(l) / b.size();
    const double f = a.empty() && b.empty() ? 1.0 : (p + rr > 0 ? 2 * p * rr / (p + rr) : 0.0);
    ASSERT_NEAR(rouge_l(a, b), f, 1e-12);
    if (a.size() == b.size()) ASSERT_DOUBLE_EQ(rouge_l(a, b), rouge_l(b, a));
  }
}

TEST(PropertyTest, AllMetricsInUnitRangeAndIdentity) {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto c = random_tokens(rng, 12, 4);
    const auto r = random_tokens(rng, 12, 4);
    for (double v : {bleu4(c, r), rouge_n(c, r, 1), rouge_n(c, r, 2), rouge_l(c, r), meteor(c, r)}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    if (!c.empty()) {
      ASSERT_NEAR(bleu4(c, c), 1.0, 1e-12);
      ASSERT_DOUBLE_EQ(rouge_n(c, c, 1), 1.0);
      ASSERT_DOUBLE_EQ(rouge_l(c, c), 1.0);
      const double m = double(c.size());
      ASSERT_NEAR(meteor(c, c), 1.0 - 0.5 * std::pow(1.0 / m, 3), 1e-12);
    }
  }
}

MetricReport report(std::string id, TargetSection t, std::map<MetricId, double> s) {
  return MetricReport{std::move(id), t, std::move(s)};
}

TEST(AggregateTest, HandArithmetic) {
  const auto bhc = TargetSection::kBriefHospitalCourse;
  const auto di = TargetSection::kDischargeInstructions;
  const std::vector<MetricReport> reports = {
      report("1", bhc, {{MetricId::kRouge1, 0.4}, {MetricId::kBleu4, 0.2}}),
      report("1", di, {{MetricId::kRouge1, 0.6}, {MetricId::kBleu4, 0.4}})};
  const auto agg = aggregate(reports);
  EXPECT_NEAR(agg.cross_target.at(MetricId::kRouge1), 0.5, 1e-12);
  EXPECT_NEAR(agg.cross_target.at(MetricId::kBleu4), 0.3, 1e-12);
  EXPECT_NEAR(agg.overall, 0.4, 1e-12);
  const auto j = agg.to_json();
  EXPECT_NEAR(j["overall"].get<double>(), 0.4, 1e-12);
}

TEST(AggregateTest, UnweightedAcrossTargets) {
  std::vector<MetricReport> reports;
  for (int i = 0; i < 10; ++i) {
    reports.push_back(report(std::to_string(i), TargetSection::kBriefHospitalCourse,
                             {{MetricId::kRouge1, 1.0}}));
  }
  for (int i = 0; i < 20; ++i) {
    reports.push_back(report(std::to_string(i), TargetSection::kDischargeInstructions,
                             {{MetricId::kRouge1, 0.0}}));
  }
  const auto agg = aggregate(reports);
  EXPECT_DOUBLE_EQ(agg.overall, 0.5);
  EXPECT_EQ(agg.sample_counts.at(TargetSection::kDischargeInstructions), 20u);
}

TEST(AggregateTest, ConstantPermutationAndErrors) {
  std::mt19937 rng(37);
  std::vector<MetricReport> reports;
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 40; ++i) {
    const auto t = i % 3 ? TargetSection::kBriefHospitalCourse : TargetSection::kDischargeInstructions;
    reports.push_back(report(std::to_string(i), t,
                             {{MetricId::kRouge1, u(rng)}, {MetricId::kMeteor, u(rng)}}));
  }
  const double base = aggregate(reports).overall;
  for (int k = 0; k < 200; ++k) {
    std::shuffle(reports.begin(), reports.end(), rng);
    ASSERT_EQ(aggregate(reports).overall, base);
  }

  // dropping a metric: overall becomes the mean of what remains
  const auto full = aggregate(reports);
  std::vector<MetricReport> fewer = reports;
  for (auto& r : fewer) r.scores.erase(MetricId::kMeteor);
  EXPECT_NEAR(aggregate(fewer).overall, full.cross_target.at(MetricId::kRouge1), 1e-15);

  std::vector<MetricReport> constant = {
      report("a", TargetSection::kBriefHospitalCourse, {{MetricId::kBleu4, 0.7}}),
      report("a", TargetSection::kDischargeInstructions, {{MetricId::kBleu4, 0.7}})};
  EXPECT_NEAR(aggregate(constant).overall, 0.7, 1e-15);

  std::vector<MetricReport> one_target = {constant[0]};
  EXPECT_THROW(aggregate(one_target), Error);
  EXPECT_THROW(aggregate(std::vector<MetricReport>{}), Error);
  constant[1].scores[MetricId::kRouge1] = 0.1;
  EXPECT_THROW(aggregate(constant), Error);
}

http::RetryPolicy fast() {
  http::RetryPolicy p;
  p.initial_backoff = std::chrono::milliseconds(5);
  p.timeout = std::chrono::milliseconds(1000);
  return p;
}

TEST(RemoteScorerTest, EchoAndClamp) {
  testing::MockServer srv;
  srv.server().Post("/score", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const double v = body["candidate"] == "high" ? 1.3 : 0.8;
    res.set_content(nlohmann::json{{"value", v}, {"metric", body["metric"]}}.dump(),
                    "application/json");
  });
  srv.start();
  const RemoteScorer scorer(http::Endpoint::parse(srv.url("/score"), "/score"), fast());
  const auto ok = scorer.score("a", "b", MetricId::kBertScore);
  EXPECT_DOUBLE_EQ(ok.value, 0.8);
  EXPECT_FALSE(ok.clamped);
  const auto hi = scorer.score("high", "b", MetricId::kAlignScore);
  EXPECT_DOUBLE_EQ(hi.value, 1.0);
  EXPECT_TRUE(hi.clamped);
  EXPECT_THROW(scorer.score("a", "b", MetricId::kRouge1), Error);

  std::vector<Sample> samples = {
      {"1", TargetSection::kBriefHospitalCourse, "high", "x"},
      {"1", TargetSection::kDischargeInstructions, "a b", "a b"}};
  EvalOptions opts;
  opts.metrics = {MetricId::kRouge1, MetricId::kBertScore};
  opts.scorer = http::Endpoint::parse(srv.url("/score"), "/score");
  opts.retry = fast();
  const auto result = evaluate_samples(samples, opts);
  EXPECT_TRUE(result.unavailable.empty());
  ASSERT_EQ(result.warnings.size(), 1u);
  EXPECT_NE(result.warnings[0].find("clamped"), std::string::npos);
  EXPECT_DOUBLE_EQ(result.reports[0].scores.at(MetricId::kBertScore), 1.0);
  EXPECT_DOUBLE_EQ(result.reports[1].scores.at(MetricId::kBertScore), 0.8);
}

TEST(RemoteScorerTest, UnreachableMetricIsExcluded) {
  std::vector<Sample> samples = {
      {"1", TargetSection::kBriefHospitalCourse, "a b c d", "a b e f"},
      {"1", TargetSection::kDischargeInstructions, "a b", "a b"}};
  EvalOptions opts;
  opts.metrics = {MetricId::kRouge1, MetricId::kAlignScore};
  opts.scorer = http::Endpoint::parse(testing::dead_url("/score"), "/score");
  opts.retry = fast();
  opts.retry.max_retries = 0;
  const auto result = evaluate_samples(samples, opts);
  EXPECT_EQ(result.unavailable, (std::vector<MetricId>{MetricId::kAlignScore}));
  EXPECT_FALSE(result.warnings.empty());
  for (const auto& r : result.reports) EXPECT_EQ(r.scores.count(MetricId::kAlignScore), 0u);
  EXPECT_NEAR(aggregate(result.reports).overall, (0.5 + 1.0) / 2, 1e-12);

  EvalOptions no_endpoint = opts;
  no_endpoint.scorer.reset();
  EXPECT_EQ(evaluate_samples(samples, no_endpoint).unavailable,
            (std::vector<MetricId>{MetricId::kAlignScore}));
}

TEST(EvaluateSamplesTest, LocalMetricsAndCsv) {
  const auto lex = small_lexicon();
  std::vector<Sample> samples = {
      {"2", TargetSection::kDischargeInstructions, "rest", "rest"},
      {"1", TargetSection::kBriefHospitalCourse, "hypertension after colectomy", "hypertension"}};
  EvalOptions opts;
  opts.lexicon = &lex;
  const auto result = evaluate_samples(samples, opts);
  ASSERT_EQ(result.reports.size(), 2u);
  EXPECT_EQ(result.reports[0].hadm_id, "1");
  EXPECT_EQ(result.reports[0].scores.size(), 6u);
  EXPECT_NEAR(result.reports[0].scores.at(MetricId::kConceptF1), 2.0 / 3.0, 1e-12);
  std::ostringstream csv;
  write_scores_csv(csv, result.reports);
  EXPECT_TRUE(csv.str().starts_with("hadm_id,target,metric,value\r\n1,brief_hospital_course,"));

  EvalOptions needs_lexicon;
  EXPECT_THROW(evaluate_samples(samples, needs_lexicon), Error);
  EvalOptions none;
  none.metrics.clear();
  EXPECT_THROW(evaluate_samples(samples, none), Error);
}

}  // namespace
}  // namespace dischargegen::eval
