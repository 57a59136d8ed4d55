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

// Column-formatted corpora: parsing, IO-scheme normalization, and
// train/test token overlap.

#ifndef NERLENS_CORPUS_HPP_
#define NERLENS_CORPUS_HPP_

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nerlens/error.hpp"

namespace nerlens {

inline constexpr std::string_view kOutside = "O";

// Index into a LabelSet.
struct EntityType {
  int id = 0;
  friend auto operator<=>(const EntityType&, const EntityType&) = default;
};

// Ordered, immutable set of entity type names. "O" is always a member.
class LabelSet {
 public:
  LabelSet() : LabelSet({"PER", "ORG", "LOC", "MISC", "O"}) {}

  LabelSet(std::initializer_list<std::string> names)
      : LabelSet(std::vector<std::string>(names)) {}

  explicit LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
    if (std::find(names_.begin(), names_.end(), kOutside) == names_.end()) {
      names_.emplace_back(kOutside);
    }
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw InvalidArgument("empty label name");
      for (std::size_t j = 0; j < i; ++j) {
        if (names_[i] == names_[j]) {
          throw InvalidArgument("duplicate label '" + names_[i] + "'");
        }
      }
    }
  }

  // Parses a comma-separated list such as "PER,ORG,LOC,O".
  static LabelSet FromCsv(std::string_view csv) {
    std::vector<std::string> names;
    std::string cur;
    for (char c : csv) {
      if (c == ',') {
        if (!cur.empty()) names.push_back(cur);
        cur.clear();
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) names.push_back(cur);
    return LabelSet(std::move(names));
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(EntityType t) const { return names_.at(t.id); }

  bool contains(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
  }

  EntityType at(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw UnknownType(std::string(name));
    return EntityType{static_cast<int>(it - names_.begin())};
  }

  EntityType outside() const { return at(kOutside); }

  std::string ToCsv() const {
    std::string out;
    for (const auto& n : names_) {
      if (!out.empty()) out += ',';
      out += n;
    }
    return out;
  }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<std::string> names_;
};

struct Token {
  std::string surface;
  std::size_t index = 0;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<EntityType> gold;

  std::size_t size() const { return tokens.size(); }

  std::vector<std::string> surfaces() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.surface);
    return out;
  }

  static Sentence FromSurfaces(const std::vector<std::string>& words,
                               const std::vector<EntityType>& tags) {
    if (words.size() != tags.size()) {
      throw DimensionMismatch("sentence has " + std::to_string(words.size()) +
                              " tokens but " + std::to_string(tags.size()) +
                              " tags");
    }
    Sentence s;
    for (std::size_t i = 0; i < words.size(); ++i) {
      s.tokens.push_back(Token{words[i], i});
    }
    s.gold = tags;
    return s;
  }
};

struct Corpus {
  std::string name;
  std::vector<Sentence> sentences;
  LabelSet label_set;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
};

// A sentence as read from disk, tags not yet normalized.
struct RawSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

struct RawCorpus {
  std::string name;
  std::vector<RawSentence> sentences;
};

// Column selection for parse_conll. A negative tag column counts from the
// end of the line (-1 is the last column).
struct ConllColumns {
  int token = 0;
  int tag = -1;
};

namespace internal {

inline std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

inline bool IsBlank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  });
}

}  // namespace internal

// Parses whitespace-separated column text. Blank lines end sentences and
// lines starting with "-DOCSTART-" are skipped. Tags are kept verbatim.
inline RawCorpus ParseConll(std::string_view text, ConllColumns cols = {},
                            std::string name = {}) {
  RawCorpus corpus;
  corpus.name = std::move(name);
  RawSentence current;
  auto flush = [&] {
    if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
    current = RawSentence{};
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (internal::IsBlank(line)) {
      flush();
      continue;
    }
    if (line.starts_with("-DOCSTART-")) continue;

    auto fields = internal::SplitFields(line);
    auto resolve = [&](int col) -> long {
      return col >= 0 ? col : static_cast<long>(fields.size()) + col;
    };
    long tok = resolve(cols.token);
    long tag = resolve(cols.tag);
    long need = std::max(cols.token, cols.tag) + 1;
    if (tok < 0 || tag < 0 || tok >= static_cast<long>(fields.size()) ||
        tag >= static_cast<long>(fields.size())) {
      throw MalformedLine(line_no, "expected at least " +
                                       std::to_string(std::max(need, 2L)) +
                                       " columns, found " +
                                       std::to_string(fields.size()));
    }
    current.tokens.emplace_back(fields[tok]);
    current.tags.emplace_back(fields[tag]);
  }
  flush();
  return corpus;
}

// Writes "token tag" lines with single-space separators.
inline std::string SerializeConll(const RawCorpus& corpus) {
  std::string out;
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
    if (s > 0) out += '\n';
    const auto& sent = corpus.sentences[s];
    for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
      out += sent.tokens[i];
      out += ' ';
      out += sent.tags[i];
      out += '\n';
    }
  }
  return out;
}

// Strips a B-/I- prefix. "O" maps to O.
inline EntityType ToIo(std::string_view raw_tag, const LabelSet& labels) {
  std::string_view bare = raw_tag;
  if (bare.size() > 2 && (bare[0] == 'B' || bare[0] == 'I') && bare[1] == '-') {
    bare.remove_prefix(2);
  }
  return labels.at(bare);
}

inline Corpus ToIo(const RawCorpus& raw, const LabelSet& labels) {
  Corpus corpus;
  corpus.name = raw.name;
  corpus.label_set = labels;
  corpus.sentences.reserve(raw.sentences.size());
  for (const auto& rs : raw.sentences) {
    Sentence s;
    for (std::size_t i = 0; i < rs.tokens.size(); ++i) {
      s.tokens.push_back(Token{rs.tokens[i], i});
      s.gold.push_back(ToIo(rs.tags[i], labels));
    }
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Corpus LoadConll(const std::string& path, const LabelSet& labels,
                        ConllColumns cols = {}) {
  return ToIo(ParseConll(ReadFile(path), cols, path), labels);
}

// Back to raw form with plain IO tags.
inline RawCorpus ToRaw(const Corpus& corpus) {
  RawCorpus raw;
  raw.name = corpus.name;
  for (const auto& s : corpus.sentences) {
    RawSentence rs;
    for (std::size_t i = 0; i < s.size(); ++i) {
      rs.tokens.push_back(s.tokens[i].surface);
      rs.tags.push_back(corpus.label_set.name(s.gold[i]));
    }
    raw.sentences.push_back(std::move(rs));
  }
  return raw;
}

struct SeenTokenStats {
  std::size_t seen = 0;
  std::size_t total = 0;
  double fraction = 0.0;
  bool empty = true;  // no test entity tokens
};

namespace internal {
inline std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}
}  // namespace internal

// Fraction of test entity tokens whose surface occurs anywhere in train.
inline SeenTokenStats ComputeSeenTokenStats(const Corpus& train,
                                            const Corpus& test,
                                            bool case_sensitive = true) {
  std::unordered_set<std::string> vocab;
  for (const auto& s : train.sentences) {
    for (const auto& t : s.tokens) {
      vocab.insert(case_sensitive ? t.surface : internal::Lower(t.surface));
    }
  }
  const EntityType outside = test.label_set.outside();
  SeenTokenStats stats;
  for (const auto& s : test.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.gold[i] == outside) continue;
      ++stats.total;
      const auto& surf = s.tokens[i].surface;
      if (vocab.contains(case_sensitive ? surf : internal::Lower(surf))) {
        ++stats.seen;
      }
    }
  }
  stats.empty = stats.total == 0;
  stats.fraction = stats.empty ? 0.0
                               : static_cast<double>(stats.seen) /
                                     static_cast<double>(stats.total);
  return stats;
}

}  // namespace nerlens

#endif  // NERLENS_CORPUS_HPP_
