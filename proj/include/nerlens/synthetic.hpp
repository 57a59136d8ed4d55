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

// Templated synthetic NER corpora with disjoint train/test name inventories,
// plus matching random word vectors. Each template fixes the entity type of
// its slots, so the type is always recoverable from context alone.

#ifndef NERLENS_SYNTHETIC_HPP_
#define NERLENS_SYNTHETIC_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nerlens/corpus.hpp"
#include "nerlens/embeddings.hpp"
#include "nerlens/rng.hpp"

namespace nerlens {

struct SyntheticConfig {
  std::size_t train_sentences = 200;
  std::size_t test_sentences = 100;
  std::size_t names_per_type = 40;  // per split
  Eigen::Index dim = 16;
  // Weight of a per-type direction added to every name vector.
  double type_signal = 0.5;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  Corpus train;
  Corpus test;
  EmbeddingTable embeddings;
  std::map<std::string, std::vector<std::string>> train_names;  // by type
  std::map<std::string, std::vector<std::string>> test_names;
};

// "_PER" etc. mark slots.
inline const std::vector<std::vector<std::string>>& SyntheticTemplates() {
  static const std::vector<std::vector<std::string>> kTemplates = {
      {"The", "flight", "to", "_LOC", "leaves", "at", "noon", "."},
      {"The", "CEO", "of", "_ORG", "resigned", "yesterday", "."},
      {"My", "name", "is", "_PER", "."},
      {"She", "moved", "to", "_LOC", "last", "year", "."},
      {"Shares", "of", "_ORG", "fell", "sharply", "."},
      {"Mr.", "_PER", "said", "on", "Friday", "."},
      {"We", "met", "_PER", "at", "the", "conference", "."},
      {"He", "works", "for", "_ORG", "as", "an", "engineer", "."},
      {"Fans", "watched", "the", "_MISC", "festival", "on", "television", "."},
      {"_PER", "visited", "_LOC", "in", "spring", "."},
      {"_ORG", "beat", "_ORG", "in", "the", "final", "."},
      {"The", "weather", "was", "cold", "and", "wet", "."},
      {"They", "spoke", "_MISC", "at", "home", "."},
      {"Talks", "between", "_ORG", "and", "the", "union", "failed", "."},
  };
  return kTemplates;
}

namespace internal {

inline std::string PseudoName(Rng& rng) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                  "r", "s", "t", "v", "z", "br", "kr", "st", "tr"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  const std::size_t syllables = 2 + static_cast<std::size_t>(rng.UniformInt(2));
  std::string s;
  for (std::size_t k = 0; k < syllables; ++k) {
    s += kOnsets[rng.UniformInt(std::size(kOnsets))];
    s += kVowels[rng.UniformInt(std::size(kVowels))];
  }
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace internal

inline SyntheticData MakeSyntheticData(const SyntheticConfig& cfg) {
  Rng rng(cfg.seed);
  const LabelSet labels;
  const std::vector<std::string> types = {"PER", "ORG", "LOC", "MISC"};
  std::set<std::string> reserved;
  for (const auto& t : SyntheticTemplates()) reserved.insert(t.begin(), t.end());

  SyntheticData data;
  for (auto* pool : {&data.train_names, &data.test_names}) {
    for (const auto& type : types) {
      auto& names = (*pool)[type];
      while (names.size() < cfg.names_per_type) {
        std::string n = internal::PseudoName(rng);
        if (reserved.insert(n).second) names.push_back(n);
      }
    }
  }

  auto make_corpus = [&](const std::map<std::string, std::vector<std::string>>& names,
                         std::size_t count, const std::string& name) {
    Corpus c;
    c.name = name;
    c.label_set = labels;
    const auto& templates = SyntheticTemplates();
    for (std::size_t k = 0; k < count; ++k) {
      const auto& tpl = templates[rng.UniformInt(templates.size())];
      std::vector<std::string> words;
      std::vector<EntityType> tags;
      for (const auto& w : tpl) {
        if (w.size() > 1 && w[0] == '_') {
          const std::string type = w.substr(1);
          const auto& pool = names.at(type);
          words.push_back(pool[rng.UniformInt(pool.size())]);
          tags.push_back(labels.at(type));
        } else {
          words.push_back(w);
          tags.push_back(labels.outside());
        }
      }
      c.sentences.push_back(Sentence::FromSurfaces(words, tags));
    }
    return c;
  };
  data.train = make_corpus(data.train_names, cfg.train_sentences, "synthetic-train");
  data.test = make_corpus(data.test_names, cfg.test_sentences, "synthetic-test");

  // Vectors: uniform noise, plus a shared direction per entity type for names.
  data.embeddings = EmbeddingTable(cfg.dim);
  std::map<std::string, Vector> centroid;
  for (const auto& type : types) {
    Vector v(cfg.dim);
    for (Eigen::Index k = 0; k < cfg.dim; ++k) v[k] = rng.Uniform(-1.0, 1.0);
    centroid[type] = v;
  }
  auto noise = [&] {
    Vector v(cfg.dim);
    for (Eigen::Index k = 0; k < cfg.dim; ++k) v[k] = rng.Uniform(-1.0, 1.0);
    return v;
  };
  std::set<std::string> template_words;
  for (const auto& t : SyntheticTemplates()) {
    for (const auto& w : t) {
      if (!(w.size() > 1 && w[0] == '_')) template_words.insert(w);
    }
  }
  for (const auto& w : template_words) data.embeddings.Add(w, noise());
  for (auto* pool : {&data.train_names, &data.test_names}) {
    for (const auto& [type, names] : *pool) {
      for (const auto& n : names) {
        data.embeddings.Add(n, noise() + cfg.type_signal * centroid[type]);
      }
    }
  }
  data.embeddings.RecomputeAverage();
  return data;
}

inline void WriteEmbeddings(const EmbeddingTable& table, std::ostream& out) {
  out.precision(17);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.words()[i];
    const Vector& v = table.vector_at(i);
    for (Eigen::Index k = 0; k < v.size(); ++k) out << ' ' << v[k];
    out << '\n';
  }
}

}  // namespace nerlens

#endif  // NERLENS_SYNTHETIC_HPP_
