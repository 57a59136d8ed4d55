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

// Small builders shared by the unit and acceptance suites.

#ifndef NERLENS_TESTS_FIXTURES_HPP_
#define NERLENS_TESTS_FIXTURES_HPP_

#include <sstream>
#include <string>
#include <vector>

#include "nerlens/annotation.hpp"
#include "nerlens/corpus.hpp"
#include "nerlens/embeddings.hpp"
#include "nerlens/rng.hpp"
#include "nerlens/taggers.hpp"

namespace nerlens::testing {

// "John/PER slept/O" style sentence; bare words are O.
inline Sentence Tagged(const std::string& text, const LabelSet& labels = {}) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::vector<EntityType> tags;
  std::string tok;
  while (in >> tok) {
    const auto slash = tok.rfind('/');
    if (slash == std::string::npos || slash == 0) {
      words.push_back(tok);
      tags.push_back(labels.outside());
    } else {
      words.push_back(tok.substr(0, slash));
      tags.push_back(labels.at(tok.substr(slash + 1)));
    }
  }
  return Sentence::FromSurfaces(words, tags);
}

inline Corpus MakeCorpus(const std::vector<std::string>& lines, const LabelSet& labels = {}) {
  Corpus c;
  c.label_set = labels;
  for (const auto& l : lines) c.sentences.push_back(Tagged(l, labels));
  return c;
}

// Random vectors for every surface in `corpora`.
inline EmbeddingTable RandomTable(const std::vector<const Corpus*>& corpora,
                                  Eigen::Index dim, Rng& rng) {
  EmbeddingTable t(dim);
  for (const Corpus* c : corpora) {
    for (const auto& s : c->sentences) {
      for (const auto& tok : s.tokens) {
        Vector v(dim);
        for (Eigen::Index k = 0; k < dim; ++k) v[k] = rng.Uniform(-1.0, 1.0);
        t.Add(tok.surface, v);
      }
    }
  }
  t.RecomputeAverage();
  return t;
}

inline TrainConfig SmallConfig(int hidden = 3, std::uint64_t seed = 3) {
  TrainConfig c;
  c.hidden_dim = hidden;
  c.seed = seed;
  return c;
}

// `n` study items whose target is always a wrongly predicted entity.
inline std::vector<StudyItem> MakeStudyItems(std::size_t n) {
  static const char* kTypes[] = {"PER", "ORG", "LOC"};
  std::vector<StudyItem> out;
  for (std::size_t i = 0; i < n; ++i) {
    StudyItem it;
    it.item_id = "item" + std::to_string(i);
    it.tokens = {"Yesterday", "we", "visited", "Target" + std::to_string(i), "again", "."};
    it.target = 3;
    it.gold = kTypes[i % 3];
    it.system_pred = kTypes[(i + 1) % 3];
    out.push_back(std::move(it));
  }
  return out;
}

}  // namespace nerlens::testing

#endif  // NERLENS_TESTS_FIXTURES_HPP_
