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

// Token-level metrics: typed micro P/R/F1, untyped recognition scores, and
// confusion matrices.

#ifndef NERLENS_EVALKIT_HPP_
#define NERLENS_EVALKIT_HPP_

#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerlens/corpus.hpp"
#include "nerlens/records.hpp"

namespace nerlens {

struct ClassScores {
  std::string label;
  std::size_t tp = 0, fp = 0, fn = 0, support = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
  std::vector<ClassScores> per_class;
  std::size_t tp = 0, fp = 0, fn = 0;
  std::size_t tokens = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  bool empty = true;
  bool include_o = false;
  bool recognition = false;
};

struct MetricOptions {
  // Count O as a scored class (then micro P = R = token accuracy).
  bool include_o = false;
};

inline double SafeDiv(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline double F1Score(double p, double r) {
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

namespace internal {

inline void Finish(ClassScores& c) {
  c.precision = SafeDiv(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  c.recall = SafeDiv(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  c.f1 = F1Score(c.precision, c.recall);
}

inline std::size_t LabelIndex(std::vector<std::string>& labels,
                              const std::string& name) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == name) return i;
  }
  labels.push_back(name);
  return labels.size() - 1;
}

// Shared counting over (gold, pred) label strings.
template <typename MapLabel>
EvalReport Score(std::span<const PredictionRecord> records, MetricOptions opt,
                 MapLabel map) {
  EvalReport rep;
  rep.include_o = opt.include_o;
  rep.tokens = records.size();
  rep.empty = records.empty();
  std::vector<std::string> labels;
  std::vector<ClassScores> classes;
  auto cls = [&](const std::string& name) -> ClassScores& {
    const std::size_t k = LabelIndex(labels, name);
    if (k == classes.size()) classes.push_back(ClassScores{name});
    return classes[k];
  };
  auto scored = [&](const std::string& l) { return opt.include_o || l != kOutside; };
  for (const auto& r : records) {
    const std::string gold = map(r.gold);
    const std::string pred = map(r.pred);
    if (scored(gold)) ++cls(gold).support;
    if (gold == pred) {
      if (scored(gold)) {
        ++rep.tp;
        ++cls(gold).tp;
      }
      continue;
    }
    if (scored(pred)) {
      ++rep.fp;
      ++cls(pred).fp;
    }
    if (scored(gold)) {
      ++rep.fn;
      ++cls(gold).fn;
    }
  }
  for (auto& c : classes) Finish(c);
  rep.per_class = std::move(classes);
  rep.precision = SafeDiv(static_cast<double>(rep.tp), static_cast<double>(rep.tp + rep.fp));
  rep.recall = SafeDiv(static_cast<double>(rep.tp), static_cast<double>(rep.tp + rep.fn));
  rep.f1 = F1Score(rep.precision, rep.recall);
  return rep;
}

}  // namespace internal

// Typed micro-averaged scores. With O excluded, a token is a TP when
// pred == gold != O, an FP when pred != O and pred != gold, and an FN when
// gold != O and pred != gold.
inline EvalReport MicroPrf(std::span<const PredictionRecord> records,
                           MetricOptions opt = {}) {
  return internal::Score(records, opt, [](const std::string& l) { return l; });
}

// Same counting with every entity type collapsed to ENT.
inline EvalReport RecognitionPrf(std::span<const PredictionRecord> records,
                                 MetricOptions opt = {}) {
  auto rep = internal::Score(records, opt, [](const std::string& l) {
    return l == kOutside ? std::string(kOutside) : std::string("ENT");
  });
  rep.recognition = true;
  return rep;
}

inline double TokenAccuracy(std::span<const PredictionRecord> records) {
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.correct();
  return SafeDiv(static_cast<double>(ok), static_cast<double>(records.size()));
}

// Rows are gold, columns predicted.
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> cells;

  std::size_t at(const std::string& gold, const std::string& pred) const {
    std::size_t g = labels.size(), p = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == gold) g = i;
      if (labels[i] == pred) p = i;
    }
    if (g == labels.size() || p == labels.size()) return 0;
    return cells[g][p];
  }

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : cells) {
      for (std::size_t v : row) t += v;
    }
    return t;
  }
};

// Labels follow `order`; labels seen in the records but absent from it are
// appended in order of first appearance.
inline ConfusionMatrix Confusion(std::span<const PredictionRecord> records,
                                 const LabelSet& order = LabelSet()) {
  ConfusionMatrix m;
  m.labels = order.names();
  for (const auto& r : records) {
    internal::LabelIndex(m.labels, r.gold);
    internal::LabelIndex(m.labels, r.pred);
  }
  m.cells.assign(m.labels.size(), std::vector<std::size_t>(m.labels.size(), 0));
  for (const auto& r : records) {
    ++m.cells[internal::LabelIndex(m.labels, r.gold)]
             [internal::LabelIndex(m.labels, r.pred)];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Formatting

inline nlohmann::json ReportToJson(const EvalReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& c : r.per_class) {
    per.push_back({{"label", c.label},
                   {"tp", c.tp},
                   {"fp", c.fp},
                   {"fn", c.fn},
                   {"support", c.support},
                   {"precision", c.precision},
                   {"recall", c.recall},
                   {"f1", c.f1}});
  }
  return {{"tokens", r.tokens},   {"tp", r.tp},
          {"fp", r.fp},           {"fn", r.fn},
          {"precision", r.precision}, {"recall", r.recall},
          {"f1", r.f1},           {"empty", r.empty},
          {"include_o", r.include_o}, {"recognition", r.recognition},
          {"per_class", per}};
}

inline nlohmann::json ConfusionToJson(const ConfusionMatrix& m) {
  return {{"labels", m.labels}, {"rows_are_gold", true}, {"cells", m.cells}};
}

inline std::string Percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
  return buf;
}

// "<name>  P  R  F1" rows in percent, one per class then the micro row.
inline std::string FormatReport(const EvalReport& r, const std::string& title) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-16s %7s %7s %7s %8s\n", title.c_str(), "P",
                "R", "F1", "support");
  out += buf;
  for (const auto& c : r.per_class) {
    std::snprintf(buf, sizeof(buf), "%-16s %7s %7s %7s %8zu\n", c.label.c_str(),
                  Percent(c.precision).c_str(), Percent(c.recall).c_str(),
                  Percent(c.f1).c_str(), c.support);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-16s %7s %7s %7s %8zu\n", "micro",
                Percent(r.precision).c_str(), Percent(r.recall).c_str(),
                Percent(r.f1).c_str(), r.tp + r.fn);
  out += buf;
  if (r.empty) out += "(no records)\n";
  return out;
}

inline std::string FormatConfusion(const ConfusionMatrix& m) {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-8s", "gold\\pred");
  out += buf;
  for (const auto& l : m.labels) {
    std::snprintf(buf, sizeof(buf), " %7s", l.c_str());
    out += buf;
  }
  out += '\n';
  for (std::size_t g = 0; g < m.labels.size(); ++g) {
    std::snprintf(buf, sizeof(buf), "%-9s", m.labels[g].c_str());
    out += buf;
    for (std::size_t v : m.cells[g]) {
      std::snprintf(buf, sizeof(buf), " %7zu", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace nerlens

#endif  // NERLENS_EVALKIT_HPP_
