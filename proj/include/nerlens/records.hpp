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

// PredictionRecord: one token's gold and predicted tag from one system. The
// JSONL form (one object per line) is the interchange unit between taggers,
// external systems, and every analysis.

#ifndef NERLENS_RECORDS_HPP_
#define NERLENS_RECORDS_HPP_

#include <compare>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "nerlens/corpus.hpp"
#include "nerlens/error.hpp"

namespace nerlens {

struct PredictionRecord {
  std::string dataset;
  std::int64_t sentence_id = 0;
  std::int64_t token_index = 0;
  std::string surface;
  std::string gold;
  std::string pred;
  std::optional<double> g_w;
  std::optional<double> g_c;
  std::string system;

  bool correct() const { return gold == pred; }
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

using RecordSet = std::vector<PredictionRecord>;

struct RecordKey {
  std::string dataset;
  std::int64_t sentence_id = 0;
  std::int64_t token_index = 0;

  friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
  std::string ToString() const {
    return dataset + ":" + std::to_string(sentence_id) + ":" +
           std::to_string(token_index);
  }
};

inline RecordKey KeyOf(const PredictionRecord& r) {
  return {r.dataset, r.sentence_id, r.token_index};
}

class DuplicateKey : public Error {
 public:
  explicit DuplicateKey(const std::string& what) : Error("DuplicateKey: " + what) {}
};

inline nlohmann::json RecordToJson(const PredictionRecord& r) {
  nlohmann::json j = {{"dataset", r.dataset},
                      {"sentence_id", r.sentence_id},
                      {"token_index", r.token_index},
                      {"surface", r.surface},
                      {"gold", r.gold},
                      {"pred", r.pred}};
  if (r.g_w) j["g_w"] = *r.g_w;
  if (r.g_c) j["g_c"] = *r.g_c;
  j["system"] = r.system;
  return j;
}

inline void WriteRecords(const RecordSet& records, std::ostream& out) {
  for (const auto& r : records) out << RecordToJson(r).dump() << '\n';
}

inline void ExportRecords(const RecordSet& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  WriteRecords(records, out);
}

// Parses JSONL. Unknown fields are ignored; keys must be unique per system.
inline RecordSet ParseRecords(std::istream& in) {
  RecordSet out;
  std::set<std::tuple<std::string, RecordKey>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (internal::IsBlank(line)) continue;
    PredictionRecord r;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
      for (const char* f : {"dataset", "sentence_id", "token_index", "surface",
                            "gold", "pred", "system"}) {
        if (!j.contains(f)) {
          throw ParseError(line_no, std::string("missing field \"") + f + "\"");
        }
      }
      r.dataset = j.at("dataset").get<std::string>();
      r.sentence_id = j.at("sentence_id").get<std::int64_t>();
      r.token_index = j.at("token_index").get<std::int64_t>();
      r.surface = j.at("surface").get<std::string>();
      r.gold = j.at("gold").get<std::string>();
      r.pred = j.at("pred").get<std::string>();
      r.system = j.at("system").get<std::string>();
      if (j.contains("g_w") && !j.at("g_w").is_null()) r.g_w = j.at("g_w").get<double>();
      if (j.contains("g_c") && !j.at("g_c").is_null()) r.g_c = j.at("g_c").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (!seen.emplace(r.system, KeyOf(r)).second) {
      throw DuplicateKey("line " + std::to_string(line_no) + " repeats " +
                         KeyOf(r).ToString() + " for system '" + r.system + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline RecordSet ImportRecords(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return ParseRecords(in);
}

// Records for a corpus with gold tags only; `preds` supplies predictions
// sentence by sentence.
inline RecordSet MakeRecords(const Corpus& corpus,
                             const std::vector<std::vector<EntityType>>& preds,
                             const std::string& system,
                             const std::string& dataset) {
  RecordSet out;
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
    const auto& sent = corpus.sentences[s];
    for (std::size_t i = 0; i < sent.size(); ++i) {
      PredictionRecord r;
      r.dataset = dataset;
      r.sentence_id = static_cast<std::int64_t>(s);
      r.token_index = static_cast<std::int64_t>(i);
      r.surface = sent.tokens[i].surface;
      r.gold = corpus.label_set.name(sent.gold[i]);
      r.pred = corpus.label_set.name(preds[s][i]);
      r.system = system;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace nerlens

#endif  // NERLENS_RECORDS_HPP_
