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

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"

namespace dischargegen::csv {
namespace {

using Rows = std::vector<std::vector<std::string>>;

TEST(CsvTest, EscapesOnlyWhenNeeded) {
  EXPECT_EQ(escape_field("plain"), "plain");
  EXPECT_EQ(escape_field(""), "");
  EXPECT_EQ(escape_field("a,b"), "\"a,b\"");
  EXPECT_EQ(escape_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(escape_field("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(escape_field("cr\r"), "\"cr\r\"");
}

TEST(CsvTest, WriteRowUsesCrlf) {
  std::ostringstream out;
  const std::vector<std::string> row = {"1", "a,b", ""};
  write_row(out, row);
  EXPECT_EQ(out.str(), "1,\"a,b\",\r\n");
}

TEST(CsvTest, ParsesQuotedAndBareLineEnds) {
  EXPECT_EQ(parse("a,b\nc,d"), (Rows{{"a", "b"}, {"c", "d"}}));
  EXPECT_EQ(parse("a,b\r\nc,d\r\n"), (Rows{{"a", "b"}, {"c", "d"}}));
  EXPECT_EQ(parse("\"x\r\ny\",\"q\"\"\"\r\n"), (Rows{{"x\r\ny", "q\""}}));
  EXPECT_EQ(parse("a,,\n"), (Rows{{"a", "", ""}}));
  EXPECT_TRUE(parse("").empty());
}

TEST(CsvTest, RejectsMalformedQuotes) {
  EXPECT_THROW(parse("\"open"), Error);
  EXPECT_THROW(parse("\"a\"b,c"), Error);
}

TEST(CsvTest, RoundTripsRandomFields) {
  std::mt19937 rng(17);
  const std::string alphabet = "ab,\"\r\n é";
  for (int trial = 0; trial < 500; ++trial) {
    Rows rows(1 + rng() % 4);
    const std::size_t width = 1 + rng() % 4;
    for (auto& row : rows) {
      for (std::size_t c = 0; c < width; ++c) {
        std::string f;
        for (std::size_t k = rng() % 6; k > 0; --k) f.push_back(alphabet[rng() % alphabet.size()]);
        row.push_back(f);
      }
    }
    // a single empty field per row is indistinguishable from an empty line
    if (width == 1) {
      for (auto& row : rows) row[0] += "z";
    }
    std::ostringstream out;
    for (const auto& row : rows) write_row(out, row);
    ASSERT_EQ(parse(out.str()), rows);
    std::istringstream in(out.str());
    ASSERT_EQ(read(in), rows);
  }
}

}  // namespace
}  // namespace dischargegen::csv
