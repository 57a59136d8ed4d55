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

// Pretrained word vectors in the whitespace-separated text format
// ("word v1 ... vd"), plain or gzip-compressed. Lookups are case-sensitive
// and fall back to the average of every vector in the file.

#ifndef NERLENS_EMBEDDINGS_HPP_
#define NERLENS_EMBEDDINGS_HPP_

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nerlens/corpus.hpp"
#include "nerlens/error.hpp"
#include "nerlens/netcore.hpp"

namespace nerlens {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Eigen::Index dim)
      : dim_(dim), average_(Vector::Zero(dim)) {}

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const Vector& average() const { return average_; }
  const std::vector<std::string>& words() const { return words_; }
  const Vector& vector_at(std::size_t i) const { return vectors_[i]; }

  bool contains(const std::string& surface) const {
    return index_.contains(surface);
  }

  // Stored vector, or the average for out-of-vocabulary surfaces.
  const Vector& Lookup(const std::string& surface) const {
    auto it = index_.find(surface);
    return it == index_.end() ? average_ : vectors_[it->second];
  }

  // Adds a word if absent. Returns false for duplicates. Does not touch the
  // average; call SetAverage or RecomputeAverage afterwards.
  bool Add(const std::string& word, Vector v) {
    if (v.size() != dim_) {
      throw DimensionMismatch("vector for '" + word + "' has length " +
                              std::to_string(v.size()));
    }
    if (index_.contains(word)) return false;
    index_.emplace(word, words_.size());
    words_.push_back(word);
    vectors_.push_back(std::move(v));
    return true;
  }

  void SetAverage(Vector avg) { average_ = std::move(avg); }

  void RecomputeAverage() {
    Vector sum = Vector::Zero(dim_);
    for (const auto& v : vectors_) sum += v;
    if (!vectors_.empty()) sum /= static_cast<double>(vectors_.size());
    average_ = std::move(sum);
  }

 private:
  Eigen::Index dim_ = 0;
  std::vector<std::string> words_;
  std::vector<Vector> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
  Vector average_;
};

struct EmbeddingLoadOptions {
  // When set, only these surfaces are kept in memory. The average still
  // covers every distinct word in the file.
  std::optional<std::unordered_set<std::string>> keep;
};

namespace internal {

class GzLineReader {
 public:
  explicit GzLineReader(const std::string& path)
      : file_(gzopen(path.c_str(), "rb")) {
    if (file_ == nullptr) throw Error("cannot open '" + path + "'");
    gzbuffer(file_, 1 << 17);
  }
  ~GzLineReader() {
    if (file_ != nullptr) gzclose(file_);
  }
  GzLineReader(const GzLineReader&) = delete;
  GzLineReader& operator=(const GzLineReader&) = delete;

  bool Next(std::string& line) {
    line.clear();
    char buf[8192];
    while (gzgets(file_, buf, sizeof(buf)) != nullptr) {
      line.append(buf);
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
    }
    return !line.empty();
  }

 private:
  gzFile file_;
};

inline bool IsUnsigned(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace internal

// Streams the file once; duplicates keep their first occurrence.
inline EmbeddingTable LoadEmbeddings(const std::string& path, Eigen::Index dim,
                                     const EmbeddingLoadOptions& options = {}) {
  internal::GzLineReader reader(path);
  EmbeddingTable table(dim);
  std::unordered_set<std::string> seen;
  Vector sum = Vector::Zero(dim);
  std::size_t count = 0;
  std::string line;
  std::size_t line_no = 0;
  Vector v(dim);
  while (reader.Next(line)) {
    ++line_no;
    auto fields = internal::SplitFields(line);
    if (fields.empty()) continue;
    // word2vec-style "count dim" header.
    if (line_no == 1 && fields.size() == 2 && internal::IsUnsigned(fields[0]) &&
        internal::IsUnsigned(fields[1])) {
      continue;
    }
    if (static_cast<Eigen::Index>(fields.size()) != dim + 1) {
      throw DimensionMismatchAtLine(
          line_no, "expected " + std::to_string(dim) + " values, found " +
                       std::to_string(fields.size() - 1));
    }
    std::string word(fields[0]);
    if (!seen.insert(word).second) continue;
    for (Eigen::Index k = 0; k < dim; ++k) {
      auto f = fields[static_cast<std::size_t>(k) + 1];
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(line_no, "bad number '" + std::string(f) + "'");
      }
      v[k] = x;
    }
    sum += v;
    ++count;
    if (!options.keep || options.keep->contains(word)) table.Add(word, v);
  }
  if (count == 0) throw Error("embedding file '" + path + "' has no vectors");
  table.SetAverage(sum / static_cast<double>(count));
  return table;
}

// Vector length of the first entry, skipping a word2vec-style header.
inline Eigen::Index DetectEmbeddingDim(const std::string& path) {
  internal::GzLineReader reader(path);
  std::string line;
  std::size_t line_no = 0;
  while (reader.Next(line)) {
    ++line_no;
    auto fields = internal::SplitFields(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && internal::IsUnsigned(fields[0]) &&
        internal::IsUnsigned(fields[1])) {
      continue;
    }
    if (fields.size() < 2) throw ParseError(line_no, "word without a vector");
    return static_cast<Eigen::Index>(fields.size() - 1);
  }
  throw Error("embedding file '" + path + "' has no vectors");
}

}  // namespace nerlens

#endif  // NERLENS_EMBEDDINGS_HPP_
