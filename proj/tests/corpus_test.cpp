// Copyright 2026 The nerlens Authors. All Rights Reserved.
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

#include "nerlens/corpus.hpp"

#include <gtest/gtest.h>

namespace nerlens {
namespace {

TEST(ParseConllTest, EmptyInputHasNoSentences) {
  EXPECT_TRUE(ParseConll("").sentences.empty());
}

TEST(ParseConllTest, BlankLinesSplitSentences) {
  const auto c = ParseConll("John I-PER\nslept O\n\nParis I-LOC\n", {0, 1});
  ASSERT_EQ(c.sentences.size(), 2u);
  EXPECT_EQ(c.sentences[0].tokens.size(), 2u);
  EXPECT_EQ(c.sentences[1].tokens.size(), 1u);
  EXPECT_EQ(c.sentences[0].tags[0], "I-PER");
}

TEST(ParseConllTest, MissingColumnReportsLine) {
  try {
    ParseConll("John\n", {0, 1});
    FAIL() << "expected MalformedLine";
  } catch (const MalformedLine& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    ParseConll("a O\nb O\n\nc\n", {0, 1});
    FAIL() << "expected MalformedLine";
  } catch (const MalformedLine& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(ParseConllTest, SkipsDocstartAndPicksLastColumn) {
  const auto c = ParseConll(
      "-DOCSTART- -X- -X- O\n\nEU NNP B-NP B-ORG\nrejects VBZ B-VP O\n");
  ASSERT_EQ(c.sentences.size(), 1u);
  EXPECT_EQ(c.sentences[0].tokens, (std::vector<std::string>{"EU", "rejects"}));
  EXPECT_EQ(c.sentences[0].tags, (std::vector<std::string>{"B-ORG", "O"}));
}

TEST(ParseConllTest, HandlesCrlfAndTrailingBlankLines) {
  const auto c = ParseConll("a O\r\nb B-LOC\r\n\r\n\r\n");
  ASSERT_EQ(c.sentences.size(), 1u);
  EXPECT_EQ(c.sentences[0].tags[1], "B-LOC");
}

TEST(ParseConllTest, SerializeRoundTrips) {
  const std::string text = "John I-PER\nslept O\n\nParis B-LOC\n";
  EXPECT_EQ(SerializeConll(ParseConll(text)), text);
  // Tabs and runs of spaces normalize to one space.
  EXPECT_EQ(SerializeConll(ParseConll("John\t\tI-PER\nslept   O\n")),
            "John I-PER\nslept O\n");
}

TEST(ToIoTest, StripsPrefixes) {
  const LabelSet labels;
  EXPECT_EQ(labels.name(ToIo("B-PER", labels)), "PER");
  EXPECT_EQ(labels.name(ToIo("I-MISC", labels)), "MISC");
  EXPECT_EQ(ToIo("O", labels), labels.outside());
  EXPECT_THROW(ToIo("I-GPE", labels), UnknownType);
}

TEST(ToIoTest, Idempotent) {
  const LabelSet labels;
  for (const char* raw : {"B-PER", "I-ORG", "LOC", "O"}) {
    const auto once = ToIo(raw, labels);
    EXPECT_EQ(ToIo(labels.name(once), labels), once);
  }
}

TEST(ToIoTest, CorpusConversion) {
  const Corpus c = ToIo(ParseConll("John B-PER\nSmith I-PER\nslept O\n"), LabelSet{});
  ASSERT_EQ(c.sentences.size(), 1u);
  EXPECT_EQ(c.token_count(), 3u);
  EXPECT_EQ(SerializeConll(ToRaw(c)), "John PER\nSmith PER\nslept O\n");
}

TEST(LabelSetTest, OutsideAddedAndCsvRoundTrip) {
  const auto l = LabelSet::FromCsv("PER, GPE");
  EXPECT_EQ(l.ToCsv(), "PER,GPE,O");
  EXPECT_EQ(LabelSet::FromCsv(l.ToCsv()), l);
  EXPECT_THROW(LabelSet::FromCsv("PER,PER"), InvalidArgument);
}

Corpus Make(const std::string& text) { return ToIo(ParseConll(text), LabelSet{}); }

TEST(SeenTokenStatsTest, DirectCount) {
  const auto s = ComputeSeenTokenStats(Make("John PER\nran O\n"),
                                       Make("John PER\nand O\nMary PER\n"));
  EXPECT_EQ(s.seen, 1u);
  EXPECT_EQ(s.total, 2u);
  EXPECT_DOUBLE_EQ(s.fraction, 0.5);
}

TEST(SeenTokenStatsTest, SelfOverlapIsOne) {
  const auto c = Make("John PER\nvisited O\nParis LOC\n");
  EXPECT_DOUBLE_EQ(ComputeSeenTokenStats(c, c).fraction, 1.0);
}

TEST(SeenTokenStatsTest, EmptyDenominatorIsFlagged) {
  const auto s = ComputeSeenTokenStats(Make("a O\n"), Make("b O\n"));
  EXPECT_TRUE(s.empty);
  EXPECT_EQ(s.fraction, 0.0);
}

TEST(SeenTokenStatsTest, NonEntityTrainOccurrencesCount) {
  // "Paris" appears only as O in train; still counts as seen.
  const auto s = ComputeSeenTokenStats(Make("Paris O\n"), Make("Paris LOC\n"));
  EXPECT_DOUBLE_EQ(s.fraction, 1.0);
}

TEST(SeenTokenStatsTest, CaseFlag) {
  const auto train = Make("john O\n");
  const auto test = Make("John PER\n");
  EXPECT_DOUBLE_EQ(ComputeSeenTokenStats(train, test).fraction, 0.0);
  EXPECT_DOUBLE_EQ(ComputeSeenTokenStats(train, test, false).fraction, 1.0);
}

TEST(SeenTokenStatsTest, MonotoneInTrain) {
  const auto test = Make("John PER\nMary PER\nin O\nRome LOC\nLima LOC\n");
  Corpus train = Make("x O\n");
  double last = ComputeSeenTokenStats(train, test).fraction;
  for (const char* add : {"Mary PER\n", "q O\n", "Rome O\n", "Lima LOC\nJohn PER\n"}) {
    train.sentences.push_back(Make(add).sentences[0]);
    const double now = ComputeSeenTokenStats(train, test).fraction;
    EXPECT_GE(now, last);
    last = now;
  }
  EXPECT_DOUBLE_EQ(last, 1.0);
}

}  // namespace
}  // namespace nerlens
