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

// Cross-system analyses over prediction records: gate statistics, per-token
// oracle combination, masked (context-only) inference, and error-overlap
// sampling.

#ifndef NERLENS_ANALYSIS_HPP_
#define NERLENS_ANALYSIS_HPP_

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerlens/corpus.hpp"
#include "nerlens/error.hpp"
#include "nerlens/evalkit.hpp"
#include "nerlens/records.hpp"
#include "nerlens/rng.hpp"
#include "nerlens/taggers.hpp"

namespace nerlens {

class MissingGates : public Error {
 public:
  explicit MissingGates(const std::string& key)
      : Error("MissingGates: record " + key + " has no gate values") {}
};

class KeyMismatch : public Error {
 public:
  explicit KeyMismatch(const std::string& what) : Error("KeyMismatch: " + what) {}
};

class GoldDisagreement : public Error {
 public:
  explicit GoldDisagreement(const std::string& key)
      : Error("GoldDisagreement: systems disagree on the gold tag of " + key) {}
};

// ---------------------------------------------------------------------------
// Records from taggers

inline RecordSet PredictRecords(const Tagger& tagger, const Corpus& corpus,
                                const std::string& system,
                                const std::string& dataset) {
  RecordSet out;
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
    const auto& sent = corpus.sentences[s];
    const auto preds = tagger.Predict(sent);
    for (std::size_t i = 0; i < sent.size(); ++i) {
      PredictionRecord r;
      r.dataset = dataset;
      r.sentence_id = static_cast<std::int64_t>(s);
      r.token_index = static_cast<std::int64_t>(i);
      r.surface = sent.tokens[i].surface;
      r.gold = corpus.label_set.name(sent.gold[i]);
      r.pred = tagger.labels().name(preds[i].tag);
      r.g_w = preds[i].word_gate;
      r.g_c = preds[i].context_gate;
      r.system = system;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// Tag at `position` after replacing that token's embedding with the frozen
// mask vector. Inference only.
inline EntityType MaskedPredict(const NeuralTagger& model, const Sentence& s,
                                std::size_t position) {
  if (position >= s.size()) {
    throw InvalidArgument("PositionOutOfRange: position " +
                          std::to_string(position) + " in a sentence of " +
                          std::to_string(s.size()));
  }
  const std::size_t masked[] = {position};
  return model.Predict(s, masked)[position].tag;
}

// Every token predicted with itself masked, one decode per token.
inline RecordSet MaskedRecords(const NeuralTagger& model, const Corpus& corpus,
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
      r.pred = model.labels().name(MaskedPredict(model, sent, i));
      r.system = system;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gate statistics

struct GateCell {
  std::size_t count = 0;
  double mean_context_gate = 0.0;
  double mean_word_gate = 0.0;
  bool empty = true;
};

// cells[entity ? 0 : 1][correct ? 0 : 1]
struct GateStatsReport {
  std::array<std::array<GateCell, 2>, 2> cells{};
  std::size_t total = 0;

  const GateCell& at(bool entity, bool correct) const {
    return cells[entity ? 0 : 1][correct ? 0 : 1];
  }
};

inline GateStatsReport GateStats(std::span<const PredictionRecord> records) {
  GateStatsReport rep;
  std::array<std::array<double, 2>, 2> sum_c{}, sum_w{};
  for (const auto& r : records) {
    if (!r.g_w || !r.g_c) throw MissingGates(KeyOf(r).ToString());
    const int e = r.gold != kOutside ? 0 : 1;
    const int c = r.correct() ? 0 : 1;
    ++rep.cells[e][c].count;
    sum_c[e][c] += *r.g_c;
    sum_w[e][c] += *r.g_w;
    ++rep.total;
  }
  for (int e = 0; e < 2; ++e) {
    for (int c = 0; c < 2; ++c) {
      auto& cell = rep.cells[e][c];
      cell.empty = cell.count == 0;
      if (!cell.empty) {
        cell.mean_context_gate = sum_c[e][c] / static_cast<double>(cell.count);
        cell.mean_word_gate = sum_w[e][c] / static_cast<double>(cell.count);
      }
    }
  }
  return rep;
}

inline nlohmann::json GateStatsToJson(const GateStatsReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (bool entity : {true, false}) {
    for (bool correct : {true, false}) {
      const auto& c = r.at(entity, correct);
      nlohmann::json row = {{"type", entity ? "ENT" : "O"},
                            {"prediction", correct ? "correct" : "incorrect"},
                            {"count", c.count},
                            {"empty", c.empty}};
      if (!c.empty) {
        row["context_gate"] = c.mean_context_gate;
        row["word_gate"] = c.mean_word_gate;
      }
      rows.push_back(std::move(row));
    }
  }
  return {{"total", r.total}, {"cells", rows}};
}

inline std::string FormatGateStats(const GateStatsReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-5s %-10s %13s %10s %8s\n", "Type",
                "Prediction", "Context gate", "Word gate", "Count");
  out += buf;
  for (bool entity : {true, false}) {
    for (bool correct : {true, false}) {
      const auto& c = r.at(entity, correct);
      if (c.empty) {
        std::snprintf(buf, sizeof(buf), "%-5s %-10s %13s %10s %8zu\n",
                      entity ? "ENT" : "O", correct ? "Correct" : "Incorrect",
                      "n/a", "n/a", c.count);
      } else {
        std::snprintf(buf, sizeof(buf), "%-5s %-10s %13.3f %10.3f %8zu\n",
                      entity ? "ENT" : "O", correct ? "Correct" : "Incorrect",
                      c.mean_context_gate, c.mean_word_gate, c.count);
      }
      out += buf;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle combination

struct OracleReport {
  RecordSet combined;
  std::vector<std::string> systems;
  std::vector<double> component_f1;
  std::vector<double> component_accuracy;
  double oracle_f1 = 0.0;
  double oracle_accuracy = 0.0;
  std::size_t default_index = 0;
  // Index of the system whose tag each combined record carries.
  std::vector<std::size_t> provenance;
};

namespace internal {

inline std::map<RecordKey, const PredictionRecord*> IndexByKey(
    const RecordSet& set, std::size_t which) {
  std::map<RecordKey, const PredictionRecord*> idx;
  for (const auto& r : set) {
    if (!idx.emplace(KeyOf(r), &r).second) {
      throw DuplicateKey("record set " + std::to_string(which) + " repeats " +
                         KeyOf(r).ToString());
    }
  }
  return idx;
}

}  // namespace internal

// Per token: gold if any system predicted it, else the default system's tag.
inline OracleReport OracleCombine(std::span<const RecordSet> sets,
                                  std::size_t default_index = 0,
                                  const MetricOptions& metric = {}) {
  if (sets.empty()) throw InvalidArgument("oracle_combine needs at least one system");
  if (default_index >= sets.size()) {
    throw InvalidArgument("default system index out of range");
  }
  std::vector<std::map<RecordKey, const PredictionRecord*>> indexed;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    indexed.push_back(internal::IndexByKey(sets[k], k));
  }
  for (std::size_t k = 1; k < sets.size(); ++k) {
    if (indexed[k].size() != indexed[0].size()) {
      throw KeyMismatch("system " + std::to_string(k) + " covers " +
                        std::to_string(indexed[k].size()) + " tokens, system 0 covers " +
                        std::to_string(indexed[0].size()));
    }
  }

  OracleReport rep;
  rep.default_index = default_index;
  std::string name = "oracle(";
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const std::string sys = sets[k].empty() ? std::to_string(k) : sets[k].front().system;
    rep.systems.push_back(sys);
    name += (k ? "+" : "") + sys;
  }
  name += ")";

  // Walk in the default system's record order.
  for (const auto& base : sets[default_index]) {
    const RecordKey key = KeyOf(base);
    std::size_t chosen = default_index;
    bool found = false;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      auto it = indexed[k].find(key);
      if (it == indexed[k].end()) {
        throw KeyMismatch("token " + key.ToString() + " missing from system " +
                          std::to_string(k));
      }
      if (it->second->gold != base.gold) throw GoldDisagreement(key.ToString());
      if (!found && it->second->correct()) {
        chosen = k;
        found = true;
      }
    }
    PredictionRecord r = base;
    r.pred = found ? base.gold : base.pred;
    r.g_w.reset();
    r.g_c.reset();
    r.system = name;
    rep.combined.push_back(std::move(r));
    rep.provenance.push_back(chosen);
  }
  for (const auto& s : sets) {
    rep.component_f1.push_back(MicroPrf(s, metric).f1);
    rep.component_accuracy.push_back(TokenAccuracy(s));
  }
  rep.oracle_f1 = MicroPrf(rep.combined, metric).f1;
  rep.oracle_accuracy = TokenAccuracy(rep.combined);
  return rep;
}

inline nlohmann::json OracleToJson(const OracleReport& r) {
  nlohmann::json comps = nlohmann::json::array();
  for (std::size_t k = 0; k < r.systems.size(); ++k) {
    comps.push_back({{"system", r.systems[k]},
                     {"f1", r.component_f1[k]},
                     {"accuracy", r.component_accuracy[k]}});
  }
  std::vector<std::size_t> supplied(r.systems.size(), 0);
  for (std::size_t p : r.provenance) ++supplied[p];
  return {{"components", comps},
          {"default_index", r.default_index},
          {"oracle_f1", r.oracle_f1},
          {"oracle_accuracy", r.oracle_accuracy},
          {"tokens_supplied_by_system", supplied}};
}

// min / max / comb F1 in percent, followed by the component list.
inline std::string FormatOracle(const OracleReport& r) {
  double lo = 1.0, hi = 0.0;
  for (double f : r.component_f1) {
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-40s %7s %7s %7s\n", "Systems", "min", "max", "comb");
  out += buf;
  std::string names;
  for (std::size_t k = 0; k < r.systems.size(); ++k) {
    names += (k ? " + " : "") + r.systems[k];
  }
  std::snprintf(buf, sizeof(buf), "%-40s %7s %7s %7s\n", names.c_str(),
                Percent(lo).c_str(), Percent(hi).c_str(), Percent(r.oracle_f1).c_str());
  out += buf;
  for (std::size_t k = 0; k < r.systems.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "  [%zu]%s %-34s F1 %6s  acc %6s\n", k,
                  k == r.default_index ? "*" : " ", r.systems[k].c_str(),
                  Percent(r.component_f1[k]).c_str(),
                  Percent(r.component_accuracy[k]).c_str());
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Error overlap

struct OverlapSample {
  std::size_t population = 0;
  std::size_t sampled = 0;
  std::size_t b_correct = 0;
  double b_accuracy = 0.0;
  bool insufficient = false;
};

struct OverlapReport {
  OverlapSample a_correct;    // Sample-C
  OverlapSample a_incorrect;  // Sample-I
};

// Draws `sample_size` tokens where A is right and `sample_size` where A is
// wrong, and scores B on each draw.
inline OverlapReport ErrorOverlap(const RecordSet& a, const RecordSet& b,
                                  std::size_t sample_size, Rng& rng) {
  const auto idx_b = internal::IndexByKey(b, 1);
  if (idx_b.size() != a.size()) {
    throw KeyMismatch("record sets cover different numbers of tokens");
  }
  std::vector<const PredictionRecord*> pop_c, pop_i;
  for (const auto& r : a) {
    (r.correct() ? pop_c : pop_i).push_back(&r);
  }
  auto draw = [&](std::vector<const PredictionRecord*> pop) {
    OverlapSample s;
    s.population = pop.size();
    s.insufficient = pop.size() < sample_size;
    const std::size_t take = std::min(sample_size, pop.size());
    // Partial Fisher-Yates: the first `take` slots become the sample.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.UniformInt(pop.size() - i));
      std::swap(pop[i], pop[j]);
    }
    for (std::size_t i = 0; i < take; ++i) {
      auto it = idx_b.find(KeyOf(*pop[i]));
      if (it == idx_b.end()) {
        throw KeyMismatch("token " + KeyOf(*pop[i]).ToString() + " missing from B");
      }
      if (it->second->gold != pop[i]->gold) {
        throw GoldDisagreement(KeyOf(*pop[i]).ToString());
      }
      s.b_correct += it->second->correct();
    }
    s.sampled = take;
    s.b_accuracy = take == 0 ? 0.0
                             : static_cast<double>(s.b_correct) / static_cast<double>(take);
    return s;
  };
  OverlapReport rep;
  rep.a_correct = draw(pop_c);
  rep.a_incorrect = draw(pop_i);
  return rep;
}

inline nlohmann::json OverlapToJson(const OverlapReport& r) {
  auto one = [](const OverlapSample& s) {
    return nlohmann::json{{"population", s.population},
                          {"sampled", s.sampled},
                          {"b_correct", s.b_correct},
                          {"b_accuracy", s.b_accuracy},
                          {"insufficient", s.insufficient}};
  };
  return {{"sample_c", one(r.a_correct)}, {"sample_i", one(r.a_incorrect)}};
}

}  // namespace nerlens

#endif  // NERLENS_ANALYSIS_HPP_
