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

// Masked-context human annotation study: item rendering, batch construction
// with a repeated item and an instruction check, quality-control filtering,
// majority labels, and error-class reporting. The HTTP front end lives in
// annotation_server.hpp; everything here is transport-free.

#ifndef NERLENS_ANNOTATION_HPP_
#define NERLENS_ANNOTATION_HPP_

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerlens/corpus.hpp"
#include "nerlens/error.hpp"
#include "nerlens/records.hpp"
#include "nerlens/rng.hpp"

namespace nerlens {

inline constexpr std::string_view kBlank = "___";
inline constexpr std::size_t kBatchSize = 10;
inline constexpr std::size_t kNormalPerBatch = 8;

enum class ItemRole { kNormal, kRepeat, kInstructionCheck };

inline std::string_view RoleName(ItemRole r) {
  switch (r) {
    case ItemRole::kNormal: return "normal";
    case ItemRole::kRepeat: return "repeat";
    case ItemRole::kInstructionCheck: return "instruction_check";
  }
  return "?";
}

// A study candidate: one target token in its sentence.
struct StudyItem {
  std::string item_id;
  std::vector<std::string> tokens;
  std::size_t target = 0;
  std::string gold;
  std::optional<std::string> system_pred;

  const std::string& surface() const { return tokens.at(target); }
};

// Sentence with the target replaced by the blank.
inline std::string RenderMasked(const std::vector<std::string>& tokens,
                                std::size_t target) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += i == target ? std::string(kBlank) : tokens[i];
  }
  return out;
}

struct AnnotationItem {
  std::string item_id;     // opaque, unique within the study
  std::string source_id;   // StudyItem id, or the catalogue id for checks
  std::string text;        // masked sentence
  std::string surface;     // hidden
  std::string gold;        // hidden
  ItemRole role = ItemRole::kNormal;
  std::string expected;    // instruction checks only
  std::string partner;     // repeats only: item_id of the original slot
  std::optional<std::string> system_pred;
};

struct AnnotationBatch {
  std::string batch_id;
  std::vector<AnnotationItem> items;

  const AnnotationItem* find(const std::string& item_id) const {
    for (const auto& it : items) {
      if (it.item_id == item_id) return &it;
    }
    return nullptr;
  }
};

struct InstructionExample {
  std::string id;
  std::vector<std::string> tokens;
  std::size_t target;
  std::string expected;
};

// Examples mirroring the task instructions; an attentive annotator selects
// at least the expected type.
inline const std::vector<InstructionExample>& InstructionCatalogue() {
  static const std::vector<InstructionExample> kCatalogue = {
      {"check-0", {"My", "name", "is", "Anna", "and", "I", "teach", "music", "."}, 3, "PER"},
      {"check-1", {"The", "flight", "to", "Lisbon", "leaves", "at", "noon", "."}, 3, "LOC"},
      {"check-2", {"The", "CEO", "of", "Initech", "resigned", "on", "Monday", "."}, 3, "ORG"},
      {"check-3", {"She", "was", "born", "in", "Oslo", "in", "1990", "."}, 4, "LOC"},
  };
  return kCatalogue;
}

class InsufficientItems : public Error {
 public:
  InsufficientItems(std::size_t have)
      : Error("InsufficientItems: need at least " + std::to_string(kNormalPerBatch) +
              " usable items per batch, have " + std::to_string(have)) {}
};

struct BatchPlan {
  std::vector<AnnotationBatch> batches;
  std::vector<std::string> unbatched;  // leftover item ids (< one batch)
  std::vector<std::string> excluded;   // target surface recurs in the sentence
};

// Shuffles the usable items, cuts them into groups of eight, and adds one
// repeat of a random group member plus one instruction check to each group.
// Slot order within a batch is shuffled too.
inline BatchPlan BuildBatches(std::span<const StudyItem> items, Rng& rng) {
  BatchPlan plan;
  std::vector<const StudyItem*> usable;
  for (const auto& it : items) {
    if (it.target >= it.tokens.size()) {
      throw InvalidArgument("item '" + it.item_id + "' has target out of range");
    }
    const bool recurs =
        std::count(it.tokens.begin(), it.tokens.end(), it.surface()) > 1;
    if (recurs) {
      plan.excluded.push_back(it.item_id);
    } else {
      usable.push_back(&it);
    }
  }
  if (usable.size() < kNormalPerBatch) throw InsufficientItems(usable.size());
  rng.Shuffle(usable);
  const auto& catalogue = InstructionCatalogue();
  const std::size_t num_batches = usable.size() / kNormalPerBatch;
  for (std::size_t b = 0; b < num_batches; ++b) {
    char id[32];
    std::snprintf(id, sizeof(id), "b%04zu", b);
    AnnotationBatch batch;
    batch.batch_id = id;
    std::vector<AnnotationItem> slots;
    for (std::size_t k = 0; k < kNormalPerBatch; ++k) {
      const StudyItem& src = *usable[b * kNormalPerBatch + k];
      AnnotationItem ai;
      ai.source_id = src.item_id;
      ai.text = RenderMasked(src.tokens, src.target);
      ai.surface = src.surface();
      ai.gold = src.gold;
      ai.system_pred = src.system_pred;
      slots.push_back(std::move(ai));
    }
    const std::size_t partner = static_cast<std::size_t>(rng.UniformInt(kNormalPerBatch));
    AnnotationItem rep = slots[partner];
    rep.role = ItemRole::kRepeat;
    const auto& ex = catalogue[static_cast<std::size_t>(rng.UniformInt(catalogue.size()))];
    AnnotationItem check;
    check.source_id = ex.id;
    check.text = RenderMasked(ex.tokens, ex.target);
    check.surface = ex.tokens[ex.target];
    check.gold = ex.expected;
    check.role = ItemRole::kInstructionCheck;
    check.expected = ex.expected;
    slots.push_back(std::move(rep));
    slots.push_back(std::move(check));
    rng.Shuffle(slots);
    for (std::size_t k = 0; k < slots.size(); ++k) {
      char iid[48];
      std::snprintf(iid, sizeof(iid), "%s-%02zu", id, k);
      slots[k].item_id = iid;
    }
    // Link the repeat to the normal slot sharing its source.
    for (auto& s : slots) {
      if (s.role != ItemRole::kRepeat) continue;
      for (const auto& o : slots) {
        if (o.role == ItemRole::kNormal && o.source_id == s.source_id) s.partner = o.item_id;
      }
    }
    batch.items = std::move(slots);
    plan.batches.push_back(std::move(batch));
  }
  for (std::size_t k = num_batches * kNormalPerBatch; k < usable.size(); ++k) {
    plan.unbatched.push_back(usable[k]->item_id);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Answers

struct AnnotatorAnswer {
  std::string annotator_id;
  std::string item_id;
  std::vector<std::string> selected;  // sorted, unique
  std::string timestamp;              // ISO-8601 UTC
};

inline std::string IsoTimestampNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json AnswerToJson(const AnnotatorAnswer& a) {
  return {{"annotator_id", a.annotator_id},
          {"item_id", a.item_id},
          {"selected", a.selected},
          {"timestamp", a.timestamp}};
}

inline AnnotatorAnswer AnswerFromJson(const nlohmann::json& j) {
  AnnotatorAnswer a;
  a.annotator_id = j.at("annotator_id").get<std::string>();
  a.item_id = j.at("item_id").get<std::string>();
  a.selected = j.at("selected").get<std::vector<std::string>>();
  a.timestamp = j.value("timestamp", "");
  std::sort(a.selected.begin(), a.selected.end());
  a.selected.erase(std::unique(a.selected.begin(), a.selected.end()), a.selected.end());
  return a;
}

inline std::vector<AnnotatorAnswer> ReadAnswerLog(const std::string& path) {
  std::vector<AnnotatorAnswer> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::IsBlank(line)) continue;
    try {
      out.push_back(AnswerFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quality control

struct QcOptions {
  // Drop an annotator everywhere once they fail any batch.
  bool global_drop = false;
};

struct QcDecision {
  std::string annotator_id;
  std::string batch_id;
  bool retained = false;
  std::string reason;  // empty when retained
};

struct QcResult {
  std::vector<QcDecision> decisions;

  bool retained(const std::string& annotator, const std::string& batch) const {
    for (const auto& d : decisions) {
      if (d.annotator_id == annotator && d.batch_id == batch) return d.retained;
    }
    return false;
  }
  std::set<std::string> retained_annotators(const std::string& batch) const {
    std::set<std::string> out;
    for (const auto& d : decisions) {
      if (d.batch_id == batch && d.retained) out.insert(d.annotator_id);
    }
    return out;
  }
};

// Per (annotator, batch): the repeated pair must carry identical selection
// sets and the instruction check must include the expected type.
inline QcResult QcFilter(std::span<const AnnotationBatch> batches,
                         std::span<const AnnotatorAnswer> answers,
                         const QcOptions& opt = {}) {
  std::map<std::pair<std::string, std::string>, const AnnotatorAnswer*> by_item;
  std::map<std::string, std::set<std::string>> annotators_by_batch;
  std::map<std::string, const AnnotationBatch*> batch_of_item;
  for (const auto& b : batches) {
    for (const auto& it : b.items) batch_of_item[it.item_id] = &b;
  }
  for (const auto& a : answers) {
    by_item[{a.annotator_id, a.item_id}] = &a;
    auto it = batch_of_item.find(a.item_id);
    if (it != batch_of_item.end()) annotators_by_batch[it->second->batch_id].insert(a.annotator_id);
  }
  QcResult res;
  std::set<std::string> failed;
  for (const auto& b : batches) {
    for (const auto& ann : annotators_by_batch[b.batch_id]) {
      QcDecision d{ann, b.batch_id, true, ""};
      auto get = [&](const std::string& item) -> const AnnotatorAnswer* {
        auto it = by_item.find({ann, item});
        return it == by_item.end() ? nullptr : it->second;
      };
      for (const auto& it : b.items) {
        const AnnotatorAnswer* a = get(it.item_id);
        if (a == nullptr) {
          d.retained = false;
          d.reason = "incomplete batch";
          break;
        }
        if (it.role == ItemRole::kRepeat) {
          const AnnotatorAnswer* p = get(it.partner);
          if (p != nullptr && p->selected != a->selected) {
            d.retained = false;
            d.reason = "inconsistent on repeated item";
            break;
          }
        } else if (it.role == ItemRole::kInstructionCheck) {
          if (std::find(a->selected.begin(), a->selected.end(), it.expected) ==
              a->selected.end()) {
            d.retained = false;
            d.reason = "failed instruction check";
            break;
          }
        }
      }
      if (!d.retained) failed.insert(ann);
      res.decisions.push_back(std::move(d));
    }
  }
  if (opt.global_drop) {
    for (auto& d : res.decisions) {
      if (d.retained && failed.contains(d.annotator_id)) {
        d.retained = false;
        d.reason = "dropped in another batch";
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Majority labels

class NoAnswers : public Error {
 public:
  NoAnswers() : Error("NoAnswers: no retained answers for this item") {}
};

struct MajorityResult {
  std::optional<std::string> label;  // nullopt = NoMajority
  std::map<std::string, std::size_t> votes;
};

// Each selected option gets one vote; a strict plurality wins.
inline MajorityResult MajorityLabel(std::span<const std::vector<std::string>> selections) {
  if (selections.empty()) throw NoAnswers();
  MajorityResult r;
  for (const auto& sel : selections) {
    std::set<std::string> uniq(sel.begin(), sel.end());
    for (const auto& o : uniq) ++r.votes[o];
  }
  std::size_t best = 0, ties = 0;
  for (const auto& [label, n] : r.votes) {
    if (n > best) {
      best = n;
      ties = 1;
      r.label = label;
    } else if (n == best) {
      ++ties;
    }
  }
  if (ties != 1) r.label.reset();
  return r;
}

// ---------------------------------------------------------------------------
// Study report

enum class ErrorClass { kHumanCorrect, kMajorityWrong, kNoMajority };

inline std::string_view ErrorClassName(ErrorClass c) {
  switch (c) {
    case ErrorClass::kHumanCorrect: return "1";
    case ErrorClass::kMajorityWrong: return "2a";
    case ErrorClass::kNoMajority: return "2b";
  }
  return "?";
}

struct ItemOutcome {
  std::string source_id;
  std::string text;
  std::string surface;
  std::string gold;
  std::optional<std::string> system_pred;
  std::size_t answers = 0;
  std::map<std::string, std::size_t> votes;
  std::optional<std::string> majority;
  std::optional<ErrorClass> error_class;  // system-error items only
};

struct StudyReport {
  std::vector<ItemOutcome> items;
  std::size_t system_errors = 0;  // system-error items with >= 1 answer
  std::size_t class1 = 0, class2_wrong = 0, class2_none = 0;
  double class1_fraction = 0.0, class2_wrong_fraction = 0.0, class2_none_fraction = 0.0;
  std::size_t system_correct = 0;
  std::size_t system_correct_majority_gold = 0;
  std::size_t unanswered = 0;
  QcResult qc;
};

inline StudyReport ErrorClassReport(std::span<const ItemOutcome> outcomes) {
  StudyReport rep;
  for (ItemOutcome o : outcomes) {
    if (o.answers == 0) {
      ++rep.unanswered;
    } else if (o.system_pred && *o.system_pred != o.gold) {
      ++rep.system_errors;
      if (!o.majority) {
        o.error_class = ErrorClass::kNoMajority;
        ++rep.class2_none;
      } else if (*o.majority == o.gold) {
        o.error_class = ErrorClass::kHumanCorrect;
        ++rep.class1;
      } else {
        o.error_class = ErrorClass::kMajorityWrong;
        ++rep.class2_wrong;
      }
    } else if (o.system_pred) {
      ++rep.system_correct;
      rep.system_correct_majority_gold += o.majority && *o.majority == o.gold;
    }
    rep.items.push_back(std::move(o));
  }
  const double n = static_cast<double>(rep.system_errors);
  if (rep.system_errors > 0) {
    rep.class1_fraction = static_cast<double>(rep.class1) / n;
    rep.class2_wrong_fraction = static_cast<double>(rep.class2_wrong) / n;
    rep.class2_none_fraction = static_cast<double>(rep.class2_none) / n;
  }
  return rep;
}

// Full pipeline: QC, then majority over retained annotators per normal item
// (the repeat slot does not vote twice), then error classes.
inline StudyReport BuildStudyReport(std::span<const AnnotationBatch> batches,
                                    std::span<const AnnotatorAnswer> answers,
                                    const QcOptions& opt = {}) {
  QcResult qc = QcFilter(batches, answers, opt);
  std::map<std::string, std::vector<const AnnotatorAnswer*>> by_item;
  for (const auto& a : answers) by_item[a.item_id].push_back(&a);
  std::vector<ItemOutcome> outcomes;
  for (const auto& b : batches) {
    const auto keep = qc.retained_annotators(b.batch_id);
    for (const auto& it : b.items) {
      if (it.role != ItemRole::kNormal) continue;
      ItemOutcome o;
      o.source_id = it.source_id;
      o.text = it.text;
      o.surface = it.surface;
      o.gold = it.gold;
      o.system_pred = it.system_pred;
      std::vector<std::vector<std::string>> sel;
      for (const AnnotatorAnswer* a : by_item[it.item_id]) {
        if (keep.contains(a->annotator_id)) sel.push_back(a->selected);
      }
      o.answers = sel.size();
      if (!sel.empty()) {
        auto m = MajorityLabel(sel);
        o.majority = m.label;
        o.votes = std::move(m.votes);
      }
      outcomes.push_back(std::move(o));
    }
  }
  StudyReport rep = ErrorClassReport(outcomes);
  rep.qc = std::move(qc);
  return rep;
}

inline nlohmann::json StudyReportToJson(const StudyReport& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& o : r.items) {
    nlohmann::json j = {{"item_id", o.source_id}, {"text", o.text},
                        {"word", o.surface},      {"gold", o.gold},
                        {"answers", o.answers},   {"votes", o.votes}};
    j["system_pred"] = o.system_pred ? nlohmann::json(*o.system_pred) : nlohmann::json();
    j["majority"] = o.majority ? nlohmann::json(*o.majority) : nlohmann::json();
    j["error_class"] = o.error_class ? nlohmann::json(std::string(ErrorClassName(*o.error_class)))
                                     : nlohmann::json();
    items.push_back(std::move(j));
  }
  nlohmann::json qc = nlohmann::json::array();
  for (const auto& d : r.qc.decisions) {
    qc.push_back({{"annotator_id", d.annotator_id},
                  {"batch_id", d.batch_id},
                  {"retained", d.retained},
                  {"reason", d.reason}});
  }
  return {{"system_errors", r.system_errors},
          {"class1", r.class1},
          {"class2_majority_wrong", r.class2_wrong},
          {"class2_no_majority", r.class2_none},
          {"class1_fraction", r.class1_fraction},
          {"class2_majority_wrong_fraction", r.class2_wrong_fraction},
          {"class2_no_majority_fraction", r.class2_none_fraction},
          {"system_correct", r.system_correct},
          {"system_correct_majority_gold", r.system_correct_majority_gold},
          {"unanswered", r.unanswered},
          {"qc", qc},
          {"items", items}};
}

// Per-item vote breakdown grouped by error class.
inline std::string FormatStudyReport(const StudyReport& r, const LabelSet& labels) {
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "System-error items: %zu  class 1: %.1f%%  class 2 (majority wrong): "
                "%.1f%%  class 2 (no majority): %.1f%%\n",
                r.system_errors, 100 * r.class1_fraction, 100 * r.class2_wrong_fraction,
                100 * r.class2_none_fraction);
  out += buf;
  if (r.system_correct > 0) {
    std::snprintf(buf, sizeof(buf), "System-correct items: %zu  majority == gold: %zu\n",
                  r.system_correct, r.system_correct_majority_gold);
    out += buf;
  }
  for (ErrorClass c : {ErrorClass::kHumanCorrect, ErrorClass::kMajorityWrong,
                       ErrorClass::kNoMajority}) {
    out += "\nError class " + std::string(ErrorClassName(c)) + "\n";
    std::snprintf(buf, sizeof(buf), "%-60s %-14s %-6s", "Sentence", "Word", "True");
    out += buf;
    for (const auto& l : labels.names()) {
      std::snprintf(buf, sizeof(buf), " %5s", l.c_str());
      out += buf;
    }
    out += '\n';
    for (const auto& o : r.items) {
      if (o.error_class != c) continue;
      std::string text = o.text.size() > 60 ? o.text.substr(0, 57) + "..." : o.text;
      std::snprintf(buf, sizeof(buf), "%-60s %-14s %-6s", text.c_str(), o.surface.c_str(),
                    o.gold.c_str());
      out += buf;
      for (const auto& l : labels.names()) {
        auto it = o.votes.find(l);
        std::snprintf(buf, sizeof(buf), " %5zu", it == o.votes.end() ? 0 : it->second);
        out += buf;
      }
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Items on disk: one JSON object per line with item_id, tokens, target,
// gold, and optionally system_pred.

inline std::vector<StudyItem> ParseStudyItems(std::istream& in) {
  std::vector<StudyItem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::IsBlank(line)) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      StudyItem it;
      it.item_id = j.at("item_id").get<std::string>();
      it.tokens = j.at("tokens").get<std::vector<std::string>>();
      it.target = j.at("target").get<std::size_t>();
      it.gold = j.at("gold").get<std::string>();
      if (j.contains("system_pred") && !j.at("system_pred").is_null()) {
        it.system_pred = j.at("system_pred").get<std::string>();
      }
      if (it.target >= it.tokens.size()) throw ParseError(line_no, "target out of range");
      out.push_back(std::move(it));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

inline std::vector<StudyItem> LoadStudyItems(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return ParseStudyItems(in);
}

inline nlohmann::json StudyItemToJson(const StudyItem& it) {
  nlohmann::json j = {{"item_id", it.item_id},
                      {"tokens", it.tokens},
                      {"target", it.target},
                      {"gold", it.gold}};
  if (it.system_pred) j["system_pred"] = *it.system_pred;
  return j;
}

// Study candidates from one system's predictions: every entity token plus
// every mispredicted token.
inline std::vector<StudyItem> StudyItemsFromRecords(const RecordSet& records) {
  std::map<std::pair<std::string, std::int64_t>,
           std::map<std::int64_t, const PredictionRecord*>>
      sentences;
  for (const auto& r : records) sentences[{r.dataset, r.sentence_id}][r.token_index] = &r;
  std::vector<StudyItem> out;
  for (const auto& [key, toks] : sentences) {
    std::vector<std::string> words;
    for (const auto& [i, r] : toks) words.push_back(r->surface);
    std::size_t pos = 0;
    for (const auto& [i, r] : toks) {
      if (r->gold != kOutside || !r->correct()) {
        StudyItem it;
        it.item_id = KeyOf(*r).ToString();
        it.tokens = words;
        it.target = pos;
        it.gold = r->gold;
        it.system_pred = r->pred;
        out.push_back(std::move(it));
      }
      ++pos;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Study store: batches, assignments, and the append-only answer log.

enum class SubmitStatus { kOk, kBadRequest, kNotFound, kConflict };

struct SubmitResult {
  SubmitStatus status = SubmitStatus::kOk;
  std::string message;
  std::size_t accepted = 0;
};

struct SubmittedSelection {
  std::string item_id;
  std::vector<std::string> selected;
};

class AnnotationStudy {
 public:
  // Replays `log_path` (if it exists) and appends new answers to it. An
  // empty path keeps answers in memory only.
  AnnotationStudy(std::vector<AnnotationBatch> batches, LabelSet labels,
                  std::size_t annotators_per_batch = 3, std::string log_path = {})
      : batches_(std::move(batches)),
        labels_(std::move(labels)),
        per_batch_(annotators_per_batch),
        log_path_(std::move(log_path)) {
    for (std::size_t b = 0; b < batches_.size(); ++b) {
      for (const auto& it : batches_[b].items) item_batch_[it.item_id] = b;
    }
    assigned_.resize(batches_.size());
    if (!log_path_.empty()) {
      for (auto& a : ReadAnswerLog(log_path_)) {
        auto it = item_batch_.find(a.item_id);
        if (it == item_batch_.end()) continue;
        answered_.insert({a.annotator_id, a.item_id});
        assigned_[it->second].insert(a.annotator_id);
        answers_.push_back(std::move(a));
      }
      log_.open(log_path_, std::ios::app);
      if (!log_) throw Error("cannot open answer log '" + log_path_ + "'");
    }
  }

  const LabelSet& labels() const { return labels_; }
  const std::vector<AnnotationBatch>& batches() const { return batches_; }

  // The annotator's unfinished batch, or a fresh one with room. nullptr when
  // nothing is left.
  const AnnotationBatch* NextBatch(const std::string& annotator) {
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t b = 0; b < batches_.size(); ++b) {
      if (assigned_[b].contains(annotator) && !CompleteLocked(annotator, b)) {
        return &batches_[b];
      }
    }
    for (std::size_t b = 0; b < batches_.size(); ++b) {
      if (!assigned_[b].contains(annotator) && assigned_[b].size() < per_batch_) {
        assigned_[b].insert(annotator);
        return &batches_[b];
      }
    }
    return nullptr;
  }

  // All-or-nothing: either every selection is stored or none is.
  SubmitResult Submit(const std::string& annotator,
                      const std::vector<SubmittedSelection>& selections) {
    if (annotator.empty()) return {SubmitStatus::kBadRequest, "annotator_id is empty", 0};
    if (selections.empty()) return {SubmitStatus::kBadRequest, "no answers", 0};
    std::lock_guard<std::mutex> lock(mu_);
    std::set<std::string> in_request;
    std::vector<AnnotatorAnswer> pending;
    for (const auto& s : selections) {
      if (s.selected.empty()) {
        return {SubmitStatus::kBadRequest, "empty selection for " + s.item_id, 0};
      }
      for (const auto& o : s.selected) {
        if (!labels_.contains(o)) {
          return {SubmitStatus::kBadRequest, "unknown option '" + o + "'", 0};
        }
      }
      auto it = item_batch_.find(s.item_id);
      if (it == item_batch_.end()) {
        return {SubmitStatus::kNotFound, "unknown item '" + s.item_id + "'", 0};
      }
      const std::size_t b = it->second;
      if (!assigned_[b].contains(annotator) && assigned_[b].size() >= per_batch_) {
        return {SubmitStatus::kConflict,
                "batch " + batches_[b].batch_id + " already has its annotators", 0};
      }
      if (answered_.contains({annotator, s.item_id}) || !in_request.insert(s.item_id).second) {
        return {SubmitStatus::kConflict, "duplicate answer for " + s.item_id, 0};
      }
      AnnotatorAnswer a;
      a.annotator_id = annotator;
      a.item_id = s.item_id;
      a.selected = s.selected;
      std::sort(a.selected.begin(), a.selected.end());
      a.selected.erase(std::unique(a.selected.begin(), a.selected.end()), a.selected.end());
      a.timestamp = IsoTimestampNow();
      pending.push_back(std::move(a));
    }
    for (auto& a : pending) {
      if (log_.is_open()) {
        log_ << AnswerToJson(a).dump() << '\n';
        log_.flush();
      }
      answered_.insert({a.annotator_id, a.item_id});
      assigned_[item_batch_[a.item_id]].insert(a.annotator_id);
      answers_.push_back(std::move(a));
    }
    return {SubmitStatus::kOk, "", pending.size()};
  }

  std::vector<AnnotatorAnswer> Answers() const {
    std::lock_guard<std::mutex> lock(mu_);
    return answers_;
  }

  StudyReport Report(const QcOptions& opt = {}) const {
    const auto snapshot = Answers();
    return BuildStudyReport(batches_, snapshot, opt);
  }

 private:
  bool CompleteLocked(const std::string& annotator, std::size_t b) const {
    for (const auto& it : batches_[b].items) {
      if (!answered_.contains({annotator, it.item_id})) return false;
    }
    return true;
  }

  std::vector<AnnotationBatch> batches_;
  LabelSet labels_;
  std::size_t per_batch_;
  std::string log_path_;
  std::ofstream log_;
  std::map<std::string, std::size_t> item_batch_;
  std::vector<std::set<std::string>> assigned_;
  std::set<std::pair<std::string, std::string>> answered_;
  std::vector<AnnotatorAnswer> answers_;
  mutable std::mutex mu_;
};

// What an annotator may see: ids, masked text, and options. Never gold,
// role, or the hidden surface.
inline nlohmann::json BlindedBatchJson(const AnnotationBatch& b, const LabelSet& labels) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : b.items) {
    items.push_back({{"item_id", it.item_id}, {"text", it.text}, {"options", labels.names()}});
  }
  return {{"batch_id", b.batch_id},
          {"items", items},
          {"option_descriptions", {{std::string(kOutside), "not a named entity"}}}};
}

}  // namespace nerlens

#endif  // NERLENS_ANNOTATION_HPP_
