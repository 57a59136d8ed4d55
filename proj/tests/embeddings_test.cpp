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

#include "nerlens/embeddings.hpp"

#include "nerlens/rng.hpp"

#include <gtest/gtest.h>
#include <zlib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace nerlens {
namespace {

namespace fs = std::filesystem;

class EmbeddingsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nerlens_emb_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Write(const std::string& name, const std::string& body) {
    const auto p = (dir_ / name).string();
    std::ofstream(p) << body;
    return p;
  }

  fs::path dir_;
};

TEST_F(EmbeddingsTest, AverageIsMean) {
  const auto t = LoadEmbeddings(Write("a.txt", "a 1 0\nb 0 1\nc 2 2\n"), 2);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_NEAR(t.average()[0], 1.0, 1e-12);
  EXPECT_NEAR(t.average()[1], 1.0, 1e-12);
}

TEST_F(EmbeddingsTest, SingletonAverage) {
  const auto t = LoadEmbeddings(Write("a.txt", "cat 0.25 -3\n"), 2);
  EXPECT_EQ(t.average(), t.Lookup("cat"));
}

TEST_F(EmbeddingsTest, WrongWidthReportsLine) {
  try {
    LoadEmbeddings(Write("a.txt", "dog 1 2\ncat 0.1\n"), 2);
    FAIL() << "expected DimensionMismatch";
  } catch (const DimensionMismatchAtLine& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST_F(EmbeddingsTest, BadNumberAndEmptyFile) {
  EXPECT_THROW(LoadEmbeddings(Write("a.txt", "dog 1 x\n"), 2), ParseError);
  EXPECT_THROW(LoadEmbeddings(Write("b.txt", ""), 2), Error);
  EXPECT_THROW(LoadEmbeddings((dir_ / "missing.txt").string(), 2), Error);
}

TEST_F(EmbeddingsTest, FallbackIsCaseSensitive) {
  const auto t = LoadEmbeddings(Write("a.txt", "cat 1 0\ndog 0 3\n"), 2);
  EXPECT_EQ(t.Lookup("cat"), (Vector(2) << 1, 0).finished());
  EXPECT_EQ(t.Lookup("Cat"), t.average());
  EXPECT_EQ(t.Lookup("zebra"), t.average());
}

TEST_F(EmbeddingsTest, HeaderAndDuplicates) {
  const auto t = LoadEmbeddings(Write("a.txt", "2 2\na 1 1\na 5 5\nb 3 3\n"), 2);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.Lookup("a")[0], 1.0);
  EXPECT_NEAR(t.average()[0], 2.0, 1e-12);
}

TEST_F(EmbeddingsTest, KeepFilterRetainsFullAverage) {
  EmbeddingLoadOptions opt;
  opt.keep.emplace();
  opt.keep->insert("b");
  const auto t = LoadEmbeddings(Write("a.txt", "a 1 0\nb 0 1\nc 2 2\n"), 2, opt);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_FALSE(t.contains("a"));
  EXPECT_NEAR(t.average()[0], 1.0, 1e-12);
}

TEST_F(EmbeddingsTest, ReadsGzip) {
  const auto p = (dir_ / "a.txt.gz").string();
  gzFile f = gzopen(p.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  const std::string body = "a 1 0\nb 0 1\nc 2 2\n";
  gzwrite(f, body.data(), static_cast<unsigned>(body.size()));
  gzclose(f);
  const auto t = LoadEmbeddings(p, 2);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_NEAR(t.average()[1], 1.0, 1e-12);
}

TEST_F(EmbeddingsTest, AverageIndependentOfLineOrder) {
  Rng rng(5);
  std::vector<std::string> lines;
  for (int i = 0; i < 200; ++i) {
    std::string l = "w" + std::to_string(i);
    for (int k = 0; k < 4; ++k) l += " " + std::to_string(rng.Uniform(-1.0, 1.0));
    lines.push_back(l + "\n");
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& l : v) s += l;
    return s;
  };
  const auto a = LoadEmbeddings(Write("a.txt", join(lines)), 4);
  std::sort(lines.begin(), lines.end());
  const auto b = LoadEmbeddings(Write("b.txt", join(lines)), 4);
  EXPECT_LT((a.average() - b.average()).cwiseAbs().maxCoeff(), 1e-9);
}

}  // namespace
}  // namespace nerlens
