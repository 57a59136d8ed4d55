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

// Corpus context patterns: person names right after an honorific, and
// organizations inside sports-score lines.

#ifndef NERLENS_PATTERNS_HPP_
#define NERLENS_PATTERNS_HPP_

#include <array>
#include <map>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nerlens/corpus.hpp"
#include "nerlens/records.hpp"

namespace nerlens {

inline constexpr std::string_view kHonorifics[] = {
    "Dr",         "Mr",        "Ms",          "Mrs",          "Mstr",
    "Miss",       "Dr.",       "Mr.",         "Ms.",          "Mrs.",
    "Mx.",        "Mstr.",     "Mister",      "Professor",    "Doctor",
    "President",  "Senator",   "Judge",       "Governor",     "Officer",
    "General",    "Nurse",     "Captain",     "Coach",        "Reverend",
    "Rabbi",      "Ma'am",     "Sir",         "Father",       "Maestro",
    "Madam",      "Colonel",   "Gentleman",   "Sire",         "Mistress",
    "Lord",       "Lady",      "Esq",         "Excellency",   "Chancellor",
    "Warden",     "Principal", "Provost",     "Headmaster",   "Headmistress",
    "Director",   "Regent",    "Dean",        "Chairman",     "Chairwoman",
    "Chairperson", "Pastor",
};

inline bool IsHonorific(std::string_view surface) {
  for (std::string_view h : kHonorifics) {
    if (h == surface) return true;
  }
  return false;
}

// The three sports-score patterns, searched unanchored over the sentence's
// tokens joined by single spaces.
inline constexpr std::array<const char*, 3> kSportsScorePatterns = {
    R"(([0-9]+. )?([A-Za-z]+ ){1,3}([0-9]+ ){0,6}(([0-9]+)(?!\/))( 1\/2)?( -)?)",
    R"(([A-Za-z]+ ){1,3}([0-9]+ ){1,3}([A-Za-z]+ ){1,3}([0-9]+ ){0,2}[0-9])",
    R"(([A-Z]+ ){1,3}AT ([A-Z]+ ){1,2}[A-Z]+)",
};

inline const std::vector<std::regex>& SportsScoreRegexes() {
  static const std::vector<std::regex> kRegexes = [] {
    std::vector<std::regex> out;
    for (const char* p : kSportsScorePatterns) {
      out.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
    }
    return out;
  }();
  return kRegexes;
}

inline bool IsSportsScoreLine(const std::string& sentence) {
  for (const auto& re : SportsScoreRegexes()) {
    if (std::regex_search(sentence, re)) return true;
  }
  return false;
}

inline std::string JoinSurfaces(std::span<const std::string> words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// A sentence as surfaces plus gold label names.
struct LabeledSentence {
  std::vector<std::string> words;
  std::vector<std::string> gold;
};

inline std::vector<LabeledSentence> LabeledSentences(const Corpus& corpus) {
  std::vector<LabeledSentence> out;
  for (const auto& s : corpus.sentences) {
    LabeledSentence ls;
    ls.words = s.surfaces();
    for (EntityType t : s.gold) ls.gold.push_back(corpus.label_set.name(t));
    out.push_back(std::move(ls));
  }
  return out;
}

// Regroups records into sentences by (dataset, sentence_id), ordered by
// token_index. Assumes one system.
inline std::vector<LabeledSentence> LabeledSentences(const RecordSet& records) {
  std::map<std::pair<std::string, std::int64_t>,
           std::map<std::int64_t, const PredictionRecord*>>
      grouped;
  for (const auto& r : records) grouped[{r.dataset, r.sentence_id}][r.token_index] = &r;
  std::vector<LabeledSentence> out;
  for (const auto& [key, toks] : grouped) {
    LabeledSentence ls;
    for (const auto& [idx, r] : toks) {
      ls.words.push_back(r->surface);
      ls.gold.push_back(r->gold);
    }
    out.push_back(std::move(ls));
  }
  return out;
}

struct PatternStat {
  std::size_t hits = 0;
  std::size_t total = 0;
  double fraction = 0.0;
  bool empty = true;
};

inline PatternStat MakeStat(std::size_t hits, std::size_t total) {
  return {hits, total,
          total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total),
          total == 0};
}

// Fraction of gold-PER tokens whose preceding token is an honorific.
inline PatternStat HonorificStat(std::span<const LabeledSentence> sentences,
                                 std::string_view person = "PER") {
  std::size_t hits = 0, total = 0;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.words.size(); ++i) {
      if (s.gold[i] != person) continue;
      ++total;
      if (i > 0 && IsHonorific(s.words[i - 1])) ++hits;
    }
  }
  return MakeStat(hits, total);
}

// Fraction of gold-ORG tokens in sentences matching a sports-score pattern.
inline PatternStat SportsScoreStat(std::span<const LabeledSentence> sentences,
                                   std::string_view organization = "ORG") {
  std::size_t hits = 0, total = 0;
  for (const auto& s : sentences) {
    std::size_t orgs = 0;
    for (const auto& g : s.gold) orgs += g == organization;
    if (orgs == 0) continue;
    total += orgs;
    if (IsSportsScoreLine(JoinSurfaces(s.words))) hits += orgs;
  }
  return MakeStat(hits, total);
}

}  // namespace nerlens

#endif  // NERLENS_PATTERNS_HPP_
