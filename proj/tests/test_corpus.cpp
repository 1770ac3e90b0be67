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
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "errors.hpp"
#include "test_support.hpp"

namespace dischargegen::corpus {
namespace {

using testing::data_path;

std::string record(const std::string& id, const std::string& note,
                   const std::string& extra = "") {
  nlohmann::json j = {
      {"hadm_id", id},
      {"note_text", note},
      {"radiology_reports", {"CXR: clear."}},
      {"ed_diagnoses", {{{"icd_code", "R07.9"}, {"icd_version", 10}, {"long_title", "Chest pain"}}}},
      {"chief_complaint_ed", nullptr}};
  std::string s = j.dump();
  if (!extra.empty()) s.insert(s.size() - 1, "," + extra);
  return s;
}

TEST(CorpusTest, LoadsRecordsInFileOrder) {
  std::istringstream in(record("H3", "c") + "\n" + record("H1", "a") + "\n\n" +
                        record("H2", "b") + "\n");
  const auto visits = read_corpus(in, Split::kValid);
  ASSERT_EQ(visits.size(), 3u);
  EXPECT_EQ(visits[0].hadm_id, "H3");
  EXPECT_EQ(visits[1].hadm_id, "H1");
  EXPECT_EQ(visits[2].hadm_id, "H2");
  EXPECT_EQ(visits[0].split, Split::kValid);
  EXPECT_EQ(visits[0].ed_diagnoses[0].icd_version, IcdVersion::kIcd10);
  EXPECT_FALSE(visits[0].chief_complaint_ed.has_value());
}

TEST(CorpusTest, EmptyFileIsEmptyCorpus) {
  std::istringstream in("");
  EXPECT_TRUE(read_corpus(in, Split::kTrain).empty());
}

TEST(CorpusTest, MissingNoteTextNamesFieldAndLine) {
  nlohmann::json j = nlohmann::json::parse(record("H1", "x"));
  j.erase("note_text");
  std::istringstream in(record("H0", "ok") + "\n" + j.dump() + "\n");
  try {
    read_corpus(in, Split::kTrain);
    FAIL() << "expected RecordError";
  } catch (const RecordError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "note_text");
    EXPECT_NE(std::string(e.what()).find("note_text"), std::string::npos);
  }
}

TEST(CorpusTest, DuplicateIdCitesBothLines) {
  std::istringstream in(record("H001", "a") + "\n" + record("H002", "b") + "\n" +
                        record("H003", "c") + "\n" + record("H001", "d") + "\n");
  try {
    read_corpus(in, Split::kTrain);
    FAIL() << "expected DuplicateIdError";
  } catch (const DuplicateIdError& e) {
    EXPECT_EQ(e.hadm_id(), "H001");
    EXPECT_EQ(e.first_line(), 1u);
    EXPECT_EQ(e.second_line(), 4u);
  }
}

TEST(CorpusTest, RejectsInvariantViolations) {
  const auto bad = [](const std::string& line) {
    return [line] { parse_visit(line, 1, Split::kTrain); };
  };
  nlohmann::json j = nlohmann::json::parse(record("H1", "x"));
  auto no_reports = j;
  no_reports["radiology_reports"] = nlohmann::json::array();
  EXPECT_THROW(bad(no_reports.dump())(), RecordError);
  auto empty_id = j;
  empty_id["hadm_id"] = "";
  EXPECT_THROW(bad(empty_id.dump())(), RecordError);
  auto empty_note = j;
  empty_note["note_text"] = "";
  EXPECT_THROW(bad(empty_note.dump())(), RecordError);
  auto bad_icd = j;
  bad_icd["ed_diagnoses"][0]["icd_version"] = 11;
  EXPECT_THROW(bad(bad_icd.dump())(), RecordError);
  auto bad_cc = j;
  bad_cc["chief_complaint_ed"] = 3;
  EXPECT_THROW(bad(bad_cc.dump())(), RecordError);
  EXPECT_THROW(bad("{not json")(), RecordError);
  EXPECT_THROW(bad("[1,2]")(), RecordError);
}

TEST(CorpusTest, RoundTripThroughWriter) {
  const auto visits = load_corpus(data_path("fixtures/train.jsonl"), Split::kTrain);
  std::ostringstream out;
  write_corpus(out, visits);
  std::istringstream in(out.str());
  EXPECT_EQ(read_corpus(in, Split::kTrain), visits);
}

TEST(CorpusTest, FixtureCorpusShape) {
  const auto visits = load_corpus(data_path("fixtures/train.jsonl"), Split::kTrain);
  EXPECT_GE(visits.size(), 20u);
  const auto stats = compute_stats(visits, text::Tokenizer(), 2048);
  ASSERT_EQ(stats.splits.size(), 1u);
  EXPECT_GT(stats.splits[0].note.fraction_over_budget, 0.0);
  EXPECT_LT(stats.splits[0].target_present.at(TargetSection::kBriefHospitalCourse),
            visits.size());
}

Visit visit_with_tokens(const std::string& id, std::size_t tokens, Split split = Split::kTrain) {
  Visit v;
  v.hadm_id = id;
  for (std::size_t i = 0; i < tokens; ++i) v.note_text += "w ";
  v.radiology_reports = {"r"};
  v.split = split;
  return v;
}

TEST(StatsTest, MeanAndFractionHandCount) {
  const std::vector<Visit> visits = {visit_with_tokens("a", 10), visit_with_tokens("b", 30)};
  const auto stats = compute_stats(visits, text::Tokenizer(), 20);
  ASSERT_EQ(stats.splits.size(), 1u);
  EXPECT_DOUBLE_EQ(stats.splits[0].note.mean_tokens, 20.0);
  EXPECT_DOUBLE_EQ(stats.splits[0].note.fraction_over_budget, 0.5);
  EXPECT_EQ(stats.splits[0].note.sample_count, 2u);
}

TEST(StatsTest, EmptyCorpus) {
  const auto stats = compute_stats({}, text::Tokenizer(), 20);
  ASSERT_EQ(stats.splits.size(), 1u);
  EXPECT_EQ(stats.splits[0].note.mean_tokens, 0.0);
  EXPECT_EQ(stats.splits[0].note.fraction_over_budget, 0.0);
  EXPECT_EQ(stats.splits[0].note.sample_count, 0u);
}

TEST(StatsTest, AllUnderBudgetAndZeroBudget) {
  const std::vector<Visit> visits = {visit_with_tokens("a", 3), visit_with_tokens("b", 4)};
  EXPECT_EQ(compute_stats(visits, text::Tokenizer(), 100).splits[0].note.fraction_over_budget,
            0.0);
  EXPECT_THROW(compute_stats(visits, text::Tokenizer(), 0), Error);
}

TEST(StatsTest, SplitsReportedSeparately) {
  const std::vector<Visit> visits = {visit_with_tokens("a", 3, Split::kTestPhase2),
                                     visit_with_tokens("b", 5, Split::kTrain)};
  const auto stats = compute_stats(visits, text::Tokenizer(), 4);
  ASSERT_EQ(stats.splits.size(), 2u);
  EXPECT_EQ(stats.splits[0].split, Split::kTrain);
  EXPECT_EQ(stats.splits[1].split, Split::kTestPhase2);
  EXPECT_EQ(stats.splits[0].note.fraction_over_budget, 1.0);
}

TEST(StatsTest, PermutationInvariantAndMonotoneInBudget) {
  std::mt19937 rng(3);
  std::vector<Visit> visits;
  for (int i = 0; i < 40; ++i) visits.push_back(visit_with_tokens(std::to_string(i), rng() % 60));
  const auto base = compute_stats(visits, text::Tokenizer(), 25);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(visits.begin(), visits.end(), rng);
    const auto s = compute_stats(visits, text::Tokenizer(), 25);
    EXPECT_EQ(s.splits[0].note.mean_tokens, base.splits[0].note.mean_tokens);
    EXPECT_EQ(s.splits[0].note.fraction_over_budget, base.splits[0].note.fraction_over_budget);
  }
  double prev = 1.0;
  for (std::size_t budget = 1; budget < 70; ++budget) {
    const double f = compute_stats(visits, text::Tokenizer(), budget).splits[0].note.fraction_over_budget;
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, prev);
    prev = f;
  }
}

TEST(SplitTest, NamesRoundTrip) {
  for (Split s : {Split::kTrain, Split::kValid, Split::kTestPhase1, Split::kTestPhase2}) {
    EXPECT_EQ(parse_split(split_name(s)), s);
  }
  EXPECT_FALSE(parse_split("dev").has_value());
  EXPECT_EQ(parse_target("brief_hospital_course"), TargetSection::kBriefHospitalCourse);
  EXPECT_EQ(target_display_name(TargetSection::kDischargeInstructions), "Discharge Instructions");
}

}  // namespace
}  // namespace dischargegen::corpus
