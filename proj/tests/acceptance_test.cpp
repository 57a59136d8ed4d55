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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "nerlens/analysis.hpp"
#include "nerlens/annotation.hpp"
#include "nerlens/checkpoint.hpp"
#include "nerlens/crf.hpp"
#include "nerlens/evalkit.hpp"
#include "nerlens/gradsuite.hpp"
#include "nerlens/patterns.hpp"
#include "nerlens/synthetic.hpp"
#include "nerlens/taggers.hpp"
#include "oracles.hpp"
// httplib after Eigen: <resolv.h> defines a macro that collides with Eigen.
#include "nerlens/annotation_server.hpp"
#include "cli_runner.hpp"

namespace nerlens {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;
  std::vector<std::string> violations;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (violations.size() < 5) violations.push_back(what);
    }
  }
};

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string Sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

std::string Fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared synthetic setting

constexpr std::uint64_t kSeed = 7;

SyntheticConfig SyntheticSetting() {
  SyntheticConfig c;
  c.seed = 3;
  return c;
}

TrainConfig SyntheticTraining(std::uint64_t seed = kSeed) {
  TrainConfig c;
  c.hidden_dim = 16;
  c.epochs = 30;
  c.seed = seed;
  return c;
}

struct TrainedSystems {
  SyntheticData data;
  std::vector<std::pair<TaggerKind, Tagger>> taggers;

  const Tagger& Get(TaggerKind k) const {
    for (const auto& [kind, t] : taggers) {
      if (kind == k) return t;
    }
    throw std::logic_error("system not trained");
  }
};

const TrainedSystems& Systems() {
  static const TrainedSystems sys = [] {
    TrainedSystems s{MakeSyntheticData(SyntheticSetting()), {}};
    const Corpus* vocab[] = {&s.data.test};
    for (TaggerKind k : {TaggerKind::kLookup, TaggerKind::kLogReg, TaggerKind::kBiContextCrf,
                         TaggerKind::kFullBiLstmCrf, TaggerKind::kGatedBiLstmCrf}) {
      s.taggers.emplace_back(
          k, Train(k, s.data.train, &s.data.embeddings, SyntheticTraining(), vocab));
    }
    return s;
  }();
  return sys;
}

// ---------------------------------------------------------------------------
// Criteria

Verdict CrfOracle() {
  const auto t0 = Clock::now();
  Verdict v;
  Rng rng(kSeed);
  double worst_z = 0.0, worst_v = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.UniformInt(6));
    const Eigen::Index K = 1 + static_cast<Eigen::Index>(rng.UniformInt(5));
    const Matrix em = testing::RandomMatrix(n, K, rng, 3.0);
    const CrfParams p = testing::RandomCrf(K, rng, 3.0);
    const auto brute = testing::EnumeratePaths(em, p);
    const double dz = std::abs(LogPartition(em, p) - brute.log_partition);
    const auto vit = Viterbi(em, p);
    const double dv = std::abs(vit.score - brute.max_score);
    const double dpath = std::abs(PathScore(em, p, vit.tags) - brute.max_score);
    worst_z = std::max(worst_z, dz);
    worst_v = std::max({worst_v, dv, dpath});
    v.Require(dz <= 1e-8, "trial " + std::to_string(trial) + " log Z off by " + Sci(dz));
    v.Require(dv <= 1e-10 && dpath <= 1e-10,
              "trial " + std::to_string(trial) + " viterbi off by " + Sci(std::max(dv, dpath)));
  }
  const double secs = Seconds(t0);
  v.Require(secs < 10.0, "runtime " + Fixed(secs) + " s");
  v.detail = "100 instances, max |dlogZ| " + Sci(worst_z) + ", max |dviterbi| " +
             Sci(worst_v) + ", " + Fixed(secs) + " s";
  return v;
}

Verdict GradientSuite() {
  const auto t0 = Clock::now();
  Verdict v;
  std::string rows;
  for (TaggerKind k : kAllKinds) {
    if (k == TaggerKind::kLookup) continue;
    const auto r = RunGradSuite(k, kSeed);
    v.Require(r.max_rel_error < 1e-4, std::string(KindName(k)) + " rel. error " +
                                          Sci(r.max_rel_error) + " in " + r.worst_tensor +
                                          " (abs. " + Sci(r.max_abs_error) + ")");
    rows += std::string(rows.empty() ? "" : ", ") + std::string(KindName(k)) + " " +
            Sci(r.max_rel_error);
  }
  const double secs = Seconds(t0);
  v.Require(secs < 60.0, "runtime " + Fixed(secs) + " s");
  v.detail = "seed " + std::to_string(kSeed) + ", 3 sentences x 4 tokens, eps 1e-5: " + rows +
             "; " + Fixed(secs) + " s";
  return v;
}

Verdict ContextExclusion() {
  Verdict v;
  Rng rng(kSeed);
  std::vector<std::string> vocab;
  for (int w = 0; w < 20; ++w) vocab.push_back("w" + std::to_string(w));
  Corpus vocab_corpus = testing::MakeCorpus({""});
  vocab_corpus.sentences[0] = Sentence::FromSurfaces(
      vocab, std::vector<EntityType>(vocab.size(), LabelSet{}.outside()));
  const EmbeddingTable table = testing::RandomTable({&vocab_corpus}, 6, rng);
  const Corpus* corpora[] = {&vocab_corpus};
  const TaggerKind kinds[] = {TaggerKind::kFwContextCrf, TaggerKind::kBwContextCrf,
                              TaggerKind::kBiContextCrf};
  std::vector<NeuralTagger> models;
  for (TaggerKind k : kinds) {
    TrainConfig cfg = testing::SmallConfig(5, rng.NextU64());
    cfg.embedding_dim = 6;
    models.emplace_back(k, cfg, LabelSet{}, table, corpora);
  }
  // Surfaces to substitute in: known words and unknown ones.
  auto draw = [&] {
    return rng.Bernoulli(0.2) ? "unk" + std::to_string(rng.UniformInt(1000))
                              : vocab[rng.UniformInt(vocab.size())];
  };
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = static_cast<std::size_t>(trial % 3);
    const std::size_t n = 1 + rng.UniformInt(8);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back(draw());
    const std::size_t pos = rng.UniformInt(n);
    auto changed = words;
    for (std::size_t j = 0; j < n; ++j) {
      const bool excluded = j == pos || (kinds[m] == TaggerKind::kFwContextCrf && j > pos) ||
                            (kinds[m] == TaggerKind::kBwContextCrf && j < pos);
      if (excluded) {
        std::string w;
        do w = draw(); while (w == words[j]);
        changed[j] = w;
      }
    }
    const std::vector<EntityType> tags(n, LabelSet{}.outside());
    const auto a = models[m].Features(Sentence::FromSurfaces(words, tags))[pos];
    const auto b = models[m].Features(Sentence::FromSurfaces(changed, tags))[pos];
    const bool same = a.size() == b.size() &&
                      std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
    if (!same) ++violations;
    v.Require(same, std::string(KindName(kinds[m])) + " trial " + std::to_string(trial) +
                        " position " + std::to_string(pos));
  }
  v.detail = "1000 trials over fw/bw/bi-context, " + std::to_string(violations) + " violations";
  return v;
}

Verdict Overfit() {
  const auto t0 = Clock::now();
  Verdict v;
  SyntheticConfig sc = SyntheticSetting();
  sc.train_sentences = 20;
  sc.test_sentences = 1;
  const auto data = MakeSyntheticData(sc);
  TrainConfig cfg;
  cfg.hidden_dim = 32;
  cfg.lr = 0.05;
  cfg.seed = kSeed;
  cfg.embedding_dim = static_cast<int>(data.embeddings.dim());
  const Corpus* corpora[] = {&data.train};
  NeuralTagger model(TaggerKind::kFullBiLstmCrf, cfg, data.train.label_set, data.embeddings,
                     corpora);
  Trainer trainer(model, data.train);
  double acc = 0.0;
  int epoch = 0;
  while (epoch < 50 && acc < 0.99) {
    trainer.RunEpoch();
    ++epoch;
    acc = TokenAccuracy(Tagger(model), data.train);
  }
  const double secs = Seconds(t0);
  v.Require(acc >= 0.99, "train accuracy " + Fixed(acc, 4) + " after 50 epochs");
  v.Require(secs < 60.0, "runtime " + Fixed(secs) + " s");
  v.detail = "full model, 20 sentences: accuracy " + Fixed(acc, 4) + " after " +
             std::to_string(epoch) + " epochs, " + Fixed(secs) + " s";
  return v;
}

Verdict Generalization() {
  const auto t0 = Clock::now();
  Verdict v;
  const auto& sys = Systems();
  std::set<std::string> train_names, test_names;
  for (const auto& [type, names] : sys.data.train_names) train_names.insert(names.begin(), names.end());
  for (const auto& [type, names] : sys.data.test_names) test_names.insert(names.begin(), names.end());
  for (const auto& s : sys.data.train.sentences) {
    for (const auto& t : s.tokens) {
      v.Require(!test_names.contains(t.surface), "test name '" + t.surface + "' in train");
    }
  }
  const auto seen = ComputeSeenTokenStats(sys.data.train, sys.data.test);
  v.Require(seen.seen == 0, "test entity tokens seen in train: " + std::to_string(seen.seen));

  const auto lookup = PredictRecords(sys.Get(TaggerKind::kLookup), sys.data.test, "lookup", "test");
  const auto bi = PredictRecords(sys.Get(TaggerKind::kBiContextCrf), sys.data.test, "bi", "test");
  const auto lk_typed = MicroPrf(lookup), lk_rec = RecognitionPrf(lookup);
  const auto bi_typed = MicroPrf(bi);
  v.Require(lk_typed.recall == 0.0 && lk_rec.recall == 0.0,
            "lookup entity recall " + Fixed(lk_rec.recall));
  v.Require(bi_typed.f1 >= 0.90, "bi-context F1 " + Fixed(bi_typed.f1));
  // Includes training the shared systems the first time round.
  const double secs = Seconds(t0);
  v.Require(secs < 120.0, "runtime " + Fixed(secs) + " s");
  v.detail = std::to_string(test_names.size()) + " unseen test names (" +
             std::to_string(train_names.size()) + " train); lookup recall " +
             Fixed(lk_rec.recall) + ", bi-context F1 " + Fixed(bi_typed.f1) + ", " +
             Fixed(secs) + " s";
  return v;
}

Verdict OracleDominance() {
  Verdict v;
  std::size_t checks = 0;
  auto check = [&](std::span<const RecordSet> sets, std::size_t def, const std::string& what) {
    const auto rep = OracleCombine(sets, def);
    double best_acc = 0.0;
    for (double a : rep.component_accuracy) best_acc = std::max(best_acc, a);
    v.Require(rep.oracle_accuracy >= best_acc, what + ": accuracy " +
                                                   Fixed(rep.oracle_accuracy, 4) + " < " +
                                                   Fixed(best_acc, 4));
    v.Require(rep.oracle_f1 >= rep.component_f1[def],
              what + ": F1 " + Fixed(rep.oracle_f1, 4) + " < default " +
                  Fixed(rep.component_f1[def], 4));
    ++checks;
  };
  Rng rng(kSeed);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 * (1 + rng.UniformInt(30));
    const std::vector<std::string> labels = {"PER", "ORG", "LOC", "MISC"};
    RecordSet a = testing::RandomRecords(rng, n, labels, "a");
    RecordSet b = a;
    for (auto& r : b) {
      r.system = "b";
      if (rng.Bernoulli(0.5)) r.pred = rng.Bernoulli(0.5) ? r.gold : labels[rng.UniformInt(4)];
    }
    const RecordSet pair[] = {a, b};
    check(pair, rng.UniformInt(2), "random pair " + std::to_string(trial));
  }
  const auto& sys = Systems();
  std::vector<RecordSet> trained;
  for (const auto& [kind, tagger] : sys.taggers) {
    trained.push_back(PredictRecords(tagger, sys.data.test, std::string(KindName(kind)), "test"));
  }
  for (std::size_t i = 0; i < trained.size(); ++i) {
    for (std::size_t j = 0; j < trained.size(); ++j) {
      if (i == j) continue;
      const RecordSet pair[] = {trained[i], trained[j]};
      check(pair, 0, trained[i][0].system + "+" + trained[j][0].system);
    }
  }
  for (std::size_t d = 0; d < trained.size(); ++d) check(trained, d, "all trained systems");
  v.detail = std::to_string(checks) + " combinations (50 random pairs, " +
             std::to_string(trained.size()) + " trained systems)";
  return v;
}

Verdict MetricOracle() {
  Verdict v;
  Rng rng(kSeed);
  const std::vector<std::string> labels = {"PER", "ORG", "LOC", "MISC"};
  for (int trial = 0; trial < 100; ++trial) {
    const auto recs = testing::RandomRecords(rng, 1 + rng.UniformInt(60), labels);
    const auto typed = MicroPrf(recs);
    const auto rec = RecognitionPrf(recs);
    const auto bt = testing::BruteForceMicro(recs, false);
    const auto br = testing::BruteForceMicro(recs, true);
    const std::string t = "set " + std::to_string(trial);
    v.Require(typed.tp == std::size_t(bt.tp) && typed.fp == std::size_t(bt.fp) &&
                  typed.fn == std::size_t(bt.fn) && typed.f1 == bt.f1 &&
                  typed.precision == bt.p && typed.recall == bt.r,
              t + ": typed counts differ");
    v.Require(rec.tp == std::size_t(br.tp) && rec.fp == std::size_t(br.fp) &&
                  rec.fn == std::size_t(br.fn) && rec.f1 == br.f1,
              t + ": recognition counts differ");
    v.Require(rec.f1 >= typed.f1, t + ": recognition F1 below typed F1");
    std::map<std::pair<std::string, std::string>, std::size_t> pairs;
    for (const auto& r : recs) ++pairs[{r.gold, r.pred}];
    const auto m = Confusion(recs);
    for (const auto& g : m.labels) {
      for (const auto& p : m.labels) {
        const auto it = pairs.find({g, p});
        v.Require(m.at(g, p) == (it == pairs.end() ? 0 : it->second),
                  t + ": confusion cell " + g + "/" + p);
      }
    }
    v.Require(m.total() == recs.size(), t + ": confusion total");
  }
  v.detail = "100 random record sets agree exactly with direct counting";
  return v;
}

Verdict Patterns() {
  Verdict v;
  v.Require(IsSportsScoreLine("France 0 Italy 1"), "'France 0 Italy 1' not matched");
  const auto mr = HonorificStat(LabeledSentences(testing::MakeCorpus({"Mr. Smith/PER"})));
  v.Require(mr.hits == 1 && mr.total == 1, "'Mr. Smith' honorific rule did not fire");
  // Every capitalized word is tagged PER, so the honorific rule has
  // candidates to fire on.
  const char* negatives[] = {
      "The CEO of Acme resigned yesterday .",
      "My name is Anna .",
      "Jones teaches in Boston .",
      "mr Smith arrived late .",
      "The score was close , said Brown .",
      "Paris hosted the Games last summer .",
      "He won most matches against Italy .",
      "France beat Italy in the final .",
      "The office is on the top floor .",
      "Lee met Kim after lunch .",
  };
  for (const char* s : negatives) {
    v.Require(!IsSportsScoreLine(s), std::string("sports-score matched: ") + s);
    std::istringstream in(s);
    std::string w, tagged;
    while (in >> w) tagged += w + (std::isupper(static_cast<unsigned char>(w[0])) ? "/PER " : " ");
    const auto h = HonorificStat(LabeledSentences(testing::MakeCorpus({tagged})));
    v.Require(h.hits == 0, std::string("honorific fired: ") + s);
  }
  v.detail = "positive examples fire; 10 negatives match neither detector";
  return v;
}

Verdict MaskInvariance() {
  Verdict v;
  const auto& sys = Systems();
  Rng rng(kSeed);
  std::vector<const NeuralTagger*> models;
  for (const auto& [kind, t] : sys.taggers) {
    if (t.is_neural()) models.push_back(&t.neural());
  }
  const auto& words = sys.data.embeddings.words();
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const NeuralTagger& model = *models[static_cast<std::size_t>(trial) % models.size()];
    const auto& sent = sys.data.test.sentences[rng.UniformInt(sys.data.test.sentences.size())];
    const std::size_t pos = rng.UniformInt(sent.size());
    const EntityType base = MaskedPredict(model, sent, pos);
    for (int r = 0; r < 5; ++r) {
      std::vector<std::string> surfaces;
      for (const auto& t : sent.tokens) surfaces.push_back(t.surface);
      surfaces[pos] = r == 0 ? "never-seen-" + std::to_string(trial)
                             : words[rng.UniformInt(words.size())];
      const Sentence changed = Sentence::FromSurfaces(surfaces, sent.gold);
      const bool same = MaskedPredict(model, changed, pos) == base;
      violations += !same;
      v.Require(same, std::string(KindName(model.kind())) + " trial " + std::to_string(trial));
    }
  }
  v.detail = "100 (sentence, position) pairs x 5 replacement surfaces over " +
             std::to_string(models.size()) + " trained models, " + std::to_string(violations) +
             " violations";
  return v;
}

Verdict GateContract() {
  Verdict v;
  const auto& sys = Systems();
  const auto recs = PredictRecords(sys.Get(TaggerKind::kGatedBiLstmCrf), sys.data.test, "gated", "test");
  for (const auto& r : recs) {
    v.Require(r.g_w && r.g_c, "missing gates at " + KeyOf(r).ToString());
    if (r.g_w && r.g_c) {
      v.Require(*r.g_w > 0.0 && *r.g_w < 1.0 && *r.g_c > 0.0 && *r.g_c < 1.0,
                "gate outside (0,1) at " + KeyOf(r).ToString());
    }
  }
  // Hand-built: two entity-correct tokens, one entity-wrong, one O-correct.
  RecordSet hand(4);
  const char* gold[] = {"PER", "LOC", "ORG", "O"};
  const char* pred[] = {"PER", "LOC", "O", "O"};
  const double gw[] = {0.75, 0.25, 0.5, 0.125}, gc[] = {0.5, 1.0 / 3.0, 0.875, 0.25};
  for (std::size_t i = 0; i < 4; ++i) {
    hand[i] = {"h", 0, static_cast<std::int64_t>(i), "w", gold[i], pred[i], gw[i], gc[i], "g"};
  }
  const auto rep = GateStats(hand);
  v.Require(rep.at(true, true).count == 2 && rep.at(true, true).mean_word_gate == 0.5 &&
                rep.at(true, true).mean_context_gate == (0.5 + 1.0 / 3.0) / 2,
            "entity-correct cell");
  v.Require(rep.at(true, false).count == 1 && rep.at(true, false).mean_word_gate == 0.5 &&
                rep.at(true, false).mean_context_gate == 0.875,
            "entity-incorrect cell");
  v.Require(rep.at(false, true).count == 1 && rep.at(false, true).mean_word_gate == 0.125 &&
                rep.at(false, true).mean_context_gate == 0.25,
            "O-correct cell");
  v.Require(rep.at(false, false).empty && rep.at(false, false).count == 0, "O-incorrect cell");
  const std::string table = FormatGateStats(rep);
  std::vector<std::string> lines;
  std::istringstream in(table);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  v.Require(lines.size() == 5 && lines[0].find("Context gate") != std::string::npos &&
                lines[1].rfind("ENT   Correct", 0) == 0 &&
                lines[2].rfind("ENT   Incorrect", 0) == 0 &&
                lines[3].rfind("O     Correct", 0) == 0 &&
                lines[4].rfind("O     Incorrect", 0) == 0,
            "table shape");
  v.Require(lines.size() > 1 && lines[1].find("0.417      0.500        2") != std::string::npos,
            "entity-correct row text");
  v.detail = std::to_string(recs.size()) + " emitted gate pairs in (0,1); hand cells exact";
  return v;
}

// Scripted study over HTTP. Two batches of ten; answers per batch:
//   batch A: a1 and a2 honest, a3 inconsistent on the repeat (dropped)
//   batch B: a4 fails the instruction check (dropped), a1 and a2 honest
// Item X (batch A) gets {gold, alt} from both retained annotators: a 2-2
// tie, so no majority. a3 picks alt alone there. Item Y (batch B) gets the
// same wrong type from both retained annotators: majority wrong. a4 picks
// gold there. All sixteen items are system errors, so the expected classes
// are 14 x 1, 1 x 2a, 1 x 2b.
Verdict AnnotationPipeline() {
  Verdict v;
  const fs::path log = fs::temp_directory_path() / ("nerlens_accept_" + std::to_string(::getpid()) + ".jsonl");
  fs::remove(log);
  const auto items = testing::MakeStudyItems(16);
  Rng rng(kSeed);
  BatchPlan plan = BuildBatches(items, rng);
  if (plan.batches.size() != 2) {
    v.Require(false, "expected two batches");
    return v;
  }
  AnnotationStudy study(plan.batches, LabelSet{}, 3, log.string());
  httplib::Server server;
  InstallAnnotationRoutes(server, study, {.admin_token = "admin"});
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  const auto& batches = study.batches();
  auto find_batch = [&](const std::string& id) -> const AnnotationBatch& {
    for (const auto& b : batches) {
      if (b.batch_id == id) return b;
    }
    throw std::logic_error("unknown batch " + id);
  };
  auto normal_non_partner = [](const AnnotationBatch& b) -> const AnnotationItem& {
    std::string partner;
    for (const auto& it : b.items) {
      if (it.role == ItemRole::kRepeat) partner = it.partner;
    }
    for (const auto& it : b.items) {
      if (it.role == ItemRole::kNormal && it.item_id != partner) return it;
    }
    throw std::logic_error("no free normal item");
  };
  auto other = [](const std::string& l) { return l == "LOC" ? std::string("ORG") : std::string("LOC"); };

  // Each script maps the served item to its selection.
  using Script = std::function<std::vector<std::string>(const AnnotationBatch&, const AnnotationItem&)>;
  std::map<std::string, std::string> served;  // annotator -> batch id
  bool blinded = true;
  auto session = [&](const std::string& who, const Script& script) {
    auto res = client.Get(("/api/batch?annotator=" + who).c_str());
    if (!res || res->status != 200) {
      v.Require(false, who + ": no batch served");
      return;
    }
    const auto payload = json::parse(res->body);
    const AnnotationBatch& b = find_batch(payload["batch_id"]);
    served[who] = b.batch_id;
    for (const char* hidden : {"\"gold\"", "\"role\"", "\"expected\"", "\"partner\"",
                               "\"surface\"", "\"system_pred\"", "\"source_id\""}) {
      if (res->body.find(hidden) != std::string::npos) blinded = false;
    }
    for (const auto& it : b.items) {
      if (res->body.find(it.surface) != std::string::npos) blinded = false;
    }
    json answers = json::array();
    for (const auto& pit : payload["items"]) {
      const AnnotationItem* it = b.find(pit["item_id"]);
      if (it == nullptr) {
        v.Require(false, "payload item not in batch");
        return;
      }
      answers.push_back({{"item_id", it->item_id}, {"selected", script(b, *it)}});
    }
    auto post = client.Post("/api/answers", json{{"annotator_id", who}, {"answers", answers}}.dump(),
                            "application/json");
    v.Require(post && post->status == 200, who + ": submission rejected");
  };

  const std::string batch_a = batches[0].batch_id, batch_b = batches[1].batch_id;
  const AnnotationItem& x = normal_non_partner(batches[0]);
  const AnnotationItem& y = normal_non_partner(batches[1]);
  auto honest = [&](const AnnotationBatch& b, const AnnotationItem& it) -> std::vector<std::string> {
    if (b.batch_id == batch_a && it.item_id == x.item_id) return {x.gold, other(x.gold)};
    if (b.batch_id == batch_b && it.item_id == y.item_id) return {other(y.gold)};
    return {it.gold};
  };
  auto inconsistent = [&](const AnnotationBatch& b, const AnnotationItem& it) -> std::vector<std::string> {
    if (it.role == ItemRole::kRepeat) return {other(it.gold)};
    if (it.item_id == x.item_id) return {other(x.gold)};
    return honest(b, it);
  };
  auto careless = [&](const AnnotationBatch& b, const AnnotationItem& it) -> std::vector<std::string> {
    if (it.role == ItemRole::kInstructionCheck) return {"O"};
    if (it.item_id == y.item_id) return {y.gold};
    return {it.gold};
  };
  // Assignment order fixes who sees which batch (three annotators each).
  session("a1", honest);
  session("a2", honest);
  session("a3", inconsistent);
  session("a4", careless);
  session("a1", honest);
  session("a2", honest);
  v.Require(served["a3"] == batch_a && served["a4"] == batch_b, "batch assignment order");
  v.Require(blinded, "served payload exposes hidden fields or the target surface");
  v.Require(client.Get("/api/report")->status == 403, "report served without admin token");
  auto live = client.Get("/api/report", {{"X-Admin-Token", "admin"}});
  server.stop();
  thread.join();

  const auto answers = ReadAnswerLog(log.string());
  v.Require(answers.size() == 60, "logged answers " + std::to_string(answers.size()));
  const StudyReport rep = BuildStudyReport(batches, answers);

  // Retained set, by hand.
  const std::set<std::pair<std::string, std::string>> expected_retained = {
      {"a1", batch_a}, {"a2", batch_a}, {"a1", batch_b}, {"a2", batch_b}};
  std::set<std::pair<std::string, std::string>> retained;
  for (const auto& d : rep.qc.decisions) {
    if (d.retained) retained.insert({d.annotator_id, d.batch_id});
  }
  v.Require(retained == expected_retained, "retained set differs");
  v.Require(rep.qc.decisions.size() == 6, "QC decisions " + std::to_string(rep.qc.decisions.size()));

  // Majorities and classes by direct counting over retained answers.
  std::map<std::string, std::map<std::string, std::size_t>> votes;  // source -> label -> n
  for (const auto& a : answers) {
    for (const auto& b : batches) {
      const AnnotationItem* it = b.find(a.item_id);
      if (it == nullptr || it->role != ItemRole::kNormal) continue;
      if (!retained.contains({a.annotator_id, b.batch_id})) continue;
      for (const auto& s : a.selected) ++votes[it->source_id][s];
    }
  }
  std::size_t c1 = 0, c2a = 0, c2b = 0;
  for (const auto& o : rep.items) {
    const auto& vt = votes[o.source_id];
    std::size_t top = 0, ties = 0;
    std::string label;
    for (const auto& [l, n] : vt) {
      if (n > top) {
        top = n;
        ties = 1;
        label = l;
      } else if (n == top) {
        ++ties;
      }
    }
    const std::optional<std::string> majority =
        ties == 1 ? std::optional<std::string>(label) : std::nullopt;
    v.Require(o.majority == majority, "majority differs for " + o.source_id);
    if (!majority) ++c2b;
    else if (*majority == o.gold) ++c1;
    else ++c2a;
  }
  const ItemOutcome* ox = nullptr;
  const ItemOutcome* oy = nullptr;
  for (const auto& o : rep.items) {
    if (o.source_id == x.source_id) ox = &o;
    if (o.source_id == y.source_id) oy = &o;
  }
  v.Require(ox && !ox->majority && ox->error_class == ErrorClass::kNoMajority &&
                ox->votes.at(x.gold) == 2 && ox->votes.at(other(x.gold)) == 2,
            "multi-select tie is not NoMajority");
  v.Require(oy && oy->majority == other(y.gold) && oy->error_class == ErrorClass::kMajorityWrong,
            "majority-wrong item");
  v.Require(c1 == 14 && c2a == 1 && c2b == 1, "direct counts " + std::to_string(c1) + "/" +
                                                  std::to_string(c2a) + "/" + std::to_string(c2b));
  v.Require(rep.system_errors == 16 && rep.class1 == c1 && rep.class2_wrong == c2a &&
                rep.class2_none == c2b && rep.class1_fraction == 14.0 / 16 &&
                rep.class2_wrong_fraction == 1.0 / 16 && rep.class2_none_fraction == 1.0 / 16,
            "error-class fractions");
  v.Require(live && live->status == 200 && json::parse(live->body) == StudyReportToJson(rep),
            "live report differs from the log replay");
  fs::remove(log);
  v.detail = "retained 4/6 annotator-batches; classes 1/2a/2b = " + std::to_string(c1) + "/" +
             std::to_string(c2a) + "/" + std::to_string(c2b) + " of 16; payloads blinded";
  return v;
}

Verdict CliDeterminism() {
  Verdict v;
  const fs::path dir = fs::temp_directory_path() / ("nerlens_accept_cli_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](const std::vector<std::string>& args) {
    const auto r = testing::RunCli(args, dir);
    v.Require(r.code == 0, args[0] + " failed: " + r.err);
    return r;
  };
  const std::string d = dir.string();
  run({"synth", "--out-dir", d, "--seed", "3"});
  std::vector<std::string> ckpts, preds;
  for (const std::string tag : {"a", "b"}) {
    for (const std::string arch : {"gated", "bi-context"}) {
      const std::string ckpt = d + "/" + arch + "_" + tag + ".json";
      const std::string pred = d + "/" + arch + "_" + tag + ".jsonl";
      run({"train", "--arch", arch, "--train", d + "/train.conll", "--dev", d + "/test.conll",
           "--embeddings", d + "/embeddings.txt", "--seed", "7", "--epochs", "5",
           "--hidden-dim", "16", "--out", ckpt});
      run({"predict", "--model", ckpt, "--data", d + "/test.conll", "--out", pred});
      ckpts.push_back(testing::Slurp(ckpt));
      preds.push_back(testing::Slurp(pred));
    }
  }
  v.Require(!ckpts[0].empty() && ckpts[0] == ckpts[2], "gated checkpoints differ");
  v.Require(!ckpts[1].empty() && ckpts[1] == ckpts[3], "bi-context checkpoints differ");
  v.Require(!preds[0].empty() && preds[0] == preds[2], "gated predictions differ");
  v.Require(!preds[1].empty() && preds[1] == preds[3], "bi-context predictions differ");
  run({"train", "--arch", "gated", "--train", d + "/train.conll", "--dev", d + "/test.conll",
       "--embeddings", d + "/embeddings.txt", "--seed", "8", "--epochs", "5", "--hidden-dim",
       "16", "--out", d + "/other.json"});
  v.Require(testing::Slurp(d + "/other.json") != ckpts[0], "seed has no effect");
  v.detail = "train --seed 7 twice (gated, bi-context): checkpoints " +
             std::to_string(ckpts[0].size()) + " B and predictions byte-identical";
  fs::remove_all(dir);
  return v;
}

}  // namespace
}  // namespace nerlens

int main() {
  using namespace nerlens;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"CRF oracle equivalence", CrfOracle},
      {"Gradient suite", GradientSuite},
      {"Context-exclusion invariants", ContextExclusion},
      {"Overfit check", Overfit},
      {"Generalization to unseen names", Generalization},
      {"Oracle dominance", OracleDominance},
      {"Metric oracle", MetricOracle},
      {"Pattern detectors", Patterns},
      {"Mask invariance", MaskInvariance},
      {"Gate contract", GateContract},
      {"Annotation pipeline", AnnotationPipeline},
      {"Determinism", CliDeterminism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.pass;
    std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    for (const auto& why : v.violations) std::printf("      - %s\n", why.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
