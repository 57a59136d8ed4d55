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

// nerlens: train, predict, evaluate, analyze and serve.

#include "CLI11.hpp"

#include <cstdio>
#include <iomanip>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "nerlens/analysis.hpp"
#include "nerlens/annotation.hpp"
#include "nerlens/annotation_server.hpp"
#include "nerlens/checkpoint.hpp"
#include "nerlens/corpus.hpp"
#include "nerlens/embeddings.hpp"
#include "nerlens/evalkit.hpp"
#include "nerlens/gradsuite.hpp"
#include "nerlens/patterns.hpp"
#include "nerlens/records.hpp"
#include "nerlens/synthetic.hpp"
#include "nerlens/taggers.hpp"

namespace {

using nerlens::Corpus;
using nerlens::LabelSet;
using nerlens::RecordSet;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kDefaultLabels = "PER,ORG,LOC,MISC,O";

std::string Fmt(double v, const char* format = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nerlens::Error("cannot write '" + path + "'");
  return out;
}

void Header(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string line = "#";
  for (const auto& [k, v] : kv) line += " " + k + "=" + v;
  std::cout << line << "\n";
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  nerlens::SyntheticConfig cfg;
};

void RunSynth(const SynthArgs& a) {
  fs::create_directories(a.out_dir);
  const auto data = nerlens::MakeSyntheticData(a.cfg);
  OpenOut(a.out_dir + "/train.conll") << nerlens::SerializeConll(nerlens::ToRaw(data.train));
  OpenOut(a.out_dir + "/test.conll") << nerlens::SerializeConll(nerlens::ToRaw(data.test));
  auto emb = OpenOut(a.out_dir + "/embeddings.txt");
  nerlens::WriteEmbeddings(data.embeddings, emb);
  Header({{"command", "synth"},
          {"seed", std::to_string(a.cfg.seed)},
          {"train_sentences", std::to_string(a.cfg.train_sentences)},
          {"test_sentences", std::to_string(a.cfg.test_sentences)},
          {"names_per_type", std::to_string(a.cfg.names_per_type)},
          {"dim", std::to_string(a.cfg.dim)}});
  std::cout << "wrote " << a.out_dir << "/{train.conll,test.conll,embeddings.txt}\n";
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string arch, train, dev, embeddings, out, labels = kDefaultLabels, log;
  std::vector<std::string> extra_vocab;
  nerlens::TrainConfig cfg;
};

void RunTrain(const TrainArgs& a) {
  const auto kind = nerlens::ParseKind(a.arch);
  const LabelSet labels = LabelSet::FromCsv(a.labels);
  const Corpus train = nerlens::LoadConll(a.train, labels);
  std::vector<Corpus> extra;
  if (!a.dev.empty()) extra.push_back(nerlens::LoadConll(a.dev, labels));
  for (const auto& p : a.extra_vocab) extra.push_back(nerlens::LoadConll(p, labels));
  std::vector<const Corpus*> vocab;
  for (const auto& c : extra) vocab.push_back(&c);

  nerlens::TrainConfig cfg = a.cfg;
  std::optional<nerlens::EmbeddingTable> table;
  if (kind != nerlens::TaggerKind::kLookup) {
    if (a.embeddings.empty()) throw nerlens::InvalidArgument("--embeddings is required for " + a.arch);
    std::unordered_set<std::string> keep;
    for (const Corpus* c : {&train}) {
      for (const auto& s : c->sentences)
        for (const auto& t : s.tokens) keep.insert(t.surface);
    }
    for (const Corpus* c : vocab) {
      for (const auto& s : c->sentences)
        for (const auto& t : s.tokens) keep.insert(t.surface);
    }
    cfg.embedding_dim = static_cast<int>(nerlens::DetectEmbeddingDim(a.embeddings));
    table = nerlens::LoadEmbeddings(a.embeddings, cfg.embedding_dim, {std::move(keep)});
  }

  Header({{"command", "train"},
          {"arch", std::string(nerlens::KindName(kind))},
          {"seed", std::to_string(cfg.seed)},
          {"epochs", std::to_string(cfg.epochs)},
          {"lr", Fmt(cfg.lr)},
          {"weight_decay", Fmt(cfg.weight_decay)},
          {"dropout", Fmt(cfg.dropout)},
          {"hidden_dim", std::to_string(cfg.hidden_dim)},
          {"embedding_dim", std::to_string(cfg.embedding_dim)},
          {"config_hash", nerlens::ConfigHash(cfg)}});

  std::ofstream log;
  if (!a.log.empty()) log = OpenOut(a.log);
  auto on_epoch = [&](const nerlens::EpochLog& e) {
    json j = {{"epoch", e.epoch}, {"loss", e.loss}, {"seconds", e.seconds}};
    std::cout << "epoch " << e.epoch << " loss " << Fmt(e.loss, "%.4f") << "\n";
    if (log) log << j.dump() << "\n" << std::flush;
  };
  const nerlens::Tagger tagger =
      nerlens::Train(kind, train, table ? &*table : nullptr, cfg, vocab, on_epoch);
  nerlens::SaveCheckpoint(tagger, a.out);
  std::cout << "train accuracy " << Fmt(nerlens::TokenAccuracy(tagger, train), "%.4f")
            << "\nsaved " << a.out << "\n";
}

// --- predict / mask-eval ----------------------------------------------------

struct PredictArgs {
  std::string model, data, out, system, dataset;
  bool masked = false;
};

void RunPredict(const PredictArgs& a) {
  const nerlens::Tagger tagger = nerlens::LoadCheckpoint(a.model);
  const Corpus corpus = nerlens::LoadConll(a.data, tagger.labels());
  const std::string system =
      a.system.empty() ? std::string(nerlens::KindName(tagger.kind())) + (a.masked ? "+mask" : "")
                       : a.system;
  const std::string dataset = a.dataset.empty() ? fs::path(a.data).stem().string() : a.dataset;
  RecordSet records;
  if (a.masked) {
    if (!tagger.is_neural()) throw nerlens::InvalidArgument("mask-eval needs a neural model");
    records = nerlens::MaskedRecords(tagger.neural(), corpus, system, dataset);
  } else {
    records = nerlens::PredictRecords(tagger, corpus, system, dataset);
  }
  json meta = {{"model", a.model},
               {"data", a.data},
               {"system", system},
               {"dataset", dataset},
               {"arch", nerlens::KindName(tagger.kind())},
               {"masked", a.masked}};
  if (tagger.is_neural()) {
    meta["config"] = nerlens::ConfigToJson(tagger.neural().config());
    meta["config_hash"] = nerlens::ConfigHash(tagger.neural().config());
  }
  Header({{"command", a.masked ? "mask-eval" : "predict"},
          {"arch", std::string(nerlens::KindName(tagger.kind()))},
          {"system", system},
          {"dataset", dataset}});
  if (!a.out.empty()) {
    nerlens::ExportRecords(records, a.out);
    OpenOut(a.out + ".meta.json") << meta.dump(2) << "\n";
    std::cout << "wrote " << records.size() << " records to " << a.out << "\n";
  }
  if (a.masked || a.out.empty()) {
    const auto rep = nerlens::MicroPrf(records);
    std::cout << nerlens::FormatReport(rep, system);
    std::cout << "micro F1 " << Fmt(rep.f1, "%.3f") << "\n";
  }
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  bool recognition = false, include_o = false, as_json = false, confusion = false;
};

void RunEval(const EvalArgs& a) {
  const RecordSet records = nerlens::ImportRecords(a.pred);
  const nerlens::MetricOptions opt{.include_o = a.include_o};
  const auto typed = nerlens::MicroPrf(records, opt);
  const auto untyped = nerlens::RecognitionPrf(records, opt);
  const auto& main = a.recognition ? untyped : typed;
  if (a.as_json) {
    json j = {{"typed", nerlens::ReportToJson(typed)},
              {"recognition", nerlens::ReportToJson(untyped)},
              {"token_accuracy", nerlens::TokenAccuracy(records)}};
    if (a.confusion) j["confusion"] = nerlens::ConfusionToJson(nerlens::Confusion(records));
    std::cout << j.dump(2) << "\n";
    return;
  }
  Header({{"command", "eval"},
          {"pred", a.pred},
          {"recognition", a.recognition ? "true" : "false"},
          {"include_o", a.include_o ? "true" : "false"}});
  std::cout << nerlens::FormatReport(typed, "typed") << "\n"
            << nerlens::FormatReport(untyped, "recognition") << "\n";
  if (a.confusion) std::cout << nerlens::FormatConfusion(nerlens::Confusion(records)) << "\n";
  std::cout << "token accuracy " << Fmt(nerlens::TokenAccuracy(records), "%.3f") << "\n"
            << "micro F1 " << Fmt(main.f1, "%.3f") << "\n";
}

// --- patterns / seen --------------------------------------------------------

void PrintStat(const std::string& name, const nerlens::PatternStat& s) {
  std::cout << std::left << std::setw(14) << name << " " << s.hits << "/" << s.total << "  "
            << (s.empty ? std::string("n/a") : nerlens::Percent(s.fraction) + "%") << "\n";
}

void RunPatterns(const std::string& data, const std::string& labels) {
  const Corpus corpus = nerlens::LoadConll(data, LabelSet::FromCsv(labels));
  const auto sents = nerlens::LabeledSentences(corpus);
  Header({{"command", "patterns"}, {"data", data}});
  PrintStat("honorific", nerlens::HonorificStat(sents));
  PrintStat("sports-score", nerlens::SportsScoreStat(sents));
}

void RunSeen(const std::string& train, const std::string& test, const std::string& labels,
             bool ignore_case) {
  const LabelSet ls = LabelSet::FromCsv(labels);
  const auto s = nerlens::ComputeSeenTokenStats(nerlens::LoadConll(train, ls),
                                                nerlens::LoadConll(test, ls), !ignore_case);
  Header({{"command", "seen"}, {"train", train}, {"test", test},
          {"case_sensitive", ignore_case ? "false" : "true"}});
  std::cout << "seen entity tokens " << s.seen << "/" << s.total << "  "
            << (s.empty ? std::string("n/a") : nerlens::Percent(s.fraction) + "%") << "\n";
}

// --- gates / oracle / overlap -----------------------------------------------

void RunGates(const std::string& pred, bool as_json) {
  const auto rep = nerlens::GateStats(nerlens::ImportRecords(pred));
  if (as_json) {
    std::cout << nerlens::GateStatsToJson(rep).dump(2) << "\n";
    return;
  }
  Header({{"command", "gates"}, {"pred", pred}});
  std::cout << nerlens::FormatGateStats(rep);
}

void RunOracle(const std::vector<std::string>& preds, std::size_t default_index,
               bool include_o, bool as_json) {
  std::vector<RecordSet> sets;
  for (const auto& p : preds) sets.push_back(nerlens::ImportRecords(p));
  const auto rep = nerlens::OracleCombine(sets, default_index, {.include_o = include_o});
  if (as_json) {
    std::cout << nerlens::OracleToJson(rep).dump(2) << "\n";
    return;
  }
  Header({{"command", "oracle"}, {"default", std::to_string(default_index)},
          {"systems", std::to_string(preds.size())}});
  std::cout << nerlens::FormatOracle(rep) << "oracle F1 " << Fmt(rep.oracle_f1, "%.3f")
            << "  accuracy " << Fmt(rep.oracle_accuracy, "%.3f") << "\n";
}

void RunOverlap(const std::string& pa, const std::string& pb, std::size_t sample,
                std::uint64_t seed, bool as_json) {
  nerlens::Rng rng(seed);
  const auto rep = nerlens::ErrorOverlap(nerlens::ImportRecords(pa), nerlens::ImportRecords(pb),
                                         sample, rng);
  if (as_json) {
    std::cout << nerlens::OverlapToJson(rep).dump(2) << "\n";
    return;
  }
  Header({{"command", "overlap"}, {"sample", std::to_string(sample)},
          {"seed", std::to_string(seed)}});
  auto row = [](const char* name, const nerlens::OverlapSample& s) {
    std::cout << name << "  sampled " << s.sampled << "/" << s.population << "  B correct "
              << s.b_correct << "  (" << nerlens::Percent(s.b_accuracy) << "%)"
              << (s.insufficient ? "  [population smaller than sample]" : "") << "\n";
  };
  row("Sample-C (A correct)", rep.a_correct);
  row("Sample-I (A wrong)  ", rep.a_incorrect);
}

// --- gradcheck --------------------------------------------------------------

int RunGradcheck(const std::string& arch, std::uint64_t seed,
                 const nerlens::GradSuiteOptions& opt, double tolerance) {
  std::vector<nerlens::TaggerKind> kinds;
  if (arch == "all") {
    for (auto k : nerlens::kAllKinds)
      if (k != nerlens::TaggerKind::kLookup) kinds.push_back(k);
  } else {
    kinds.push_back(nerlens::ParseKind(arch));
  }
  Header({{"command", "gradcheck"}, {"arch", arch}, {"seed", std::to_string(seed)},
          {"sentences", std::to_string(opt.sentences)}, {"length", std::to_string(opt.length)},
          {"eps", Fmt(opt.eps)}, {"tolerance", Fmt(tolerance)}});
  bool ok = true;
  for (auto k : kinds) {
    const auto r = nerlens::RunGradSuite(k, seed, opt);
    const bool pass = r.max_rel_error < tolerance;
    ok = ok && pass;
    std::cout << std::left << std::setw(16) << nerlens::KindName(k) << " max rel. error "
              << Fmt(r.max_rel_error, "%.3e") << "  max abs. error "
              << Fmt(r.max_abs_error, "%.3e") << "  worst " << r.worst_tensor << "  "
              << (pass ? "ok" : "FAIL") << "\n";
  }
  return ok ? 0 : 1;
}

// --- annotation -------------------------------------------------------------

nerlens::BatchPlan PlanBatches(const std::string& items, std::uint64_t seed) {
  const auto loaded = nerlens::LoadStudyItems(items);
  nerlens::Rng rng(seed);
  return nerlens::BuildBatches(loaded, rng);
}

struct ServeArgs {
  std::string items, host = "127.0.0.1", log, admin_token, static_dir, labels = kDefaultLabels;
  int port = 8080;
  std::size_t per_batch = 3;
  std::uint64_t seed = 0;
  bool global_drop = false;
};

void RunServe(const ServeArgs& a) {
  auto plan = PlanBatches(a.items, a.seed);
  if (plan.batches.empty()) throw nerlens::InvalidArgument("InsufficientItems: no full batch");
  Header({{"command", "annotate-serve"}, {"seed", std::to_string(a.seed)},
          {"batches", std::to_string(plan.batches.size())},
          {"unbatched", std::to_string(plan.unbatched.size())},
          {"excluded", std::to_string(plan.excluded.size())},
          {"annotators_per_batch", std::to_string(a.per_batch)}});
  nerlens::AnnotationStudy study(std::move(plan.batches), LabelSet::FromCsv(a.labels),
                                 a.per_batch, a.log);
  httplib::Server server;
  nerlens::InstallAnnotationRoutes(
      server, study, {a.admin_token, a.static_dir, {.global_drop = a.global_drop}});
  std::cout << "listening on http://" << a.host << ":" << a.port << std::endl;
  if (!server.listen(a.host, a.port)) {
    throw nerlens::Error("cannot listen on " + a.host + ":" + std::to_string(a.port));
  }
}

void RunStudyReport(const std::string& log, const std::string& items, std::uint64_t seed,
                    const std::string& labels, bool global_drop, bool as_json) {
  const auto plan = PlanBatches(items, seed);
  const auto answers = nerlens::ReadAnswerLog(log);
  const auto rep = nerlens::BuildStudyReport(plan.batches, answers, {.global_drop = global_drop});
  if (as_json) {
    std::cout << nerlens::StudyReportToJson(rep).dump(2) << "\n";
    return;
  }
  Header({{"command", "study-report"}, {"seed", std::to_string(seed)},
          {"answers", std::to_string(answers.size())},
          {"global_drop", global_drop ? "true" : "false"}});
  std::size_t retained = 0;
  for (const auto& d : rep.qc.decisions) retained += d.retained;
  std::cout << "QC: " << retained << "/" << rep.qc.decisions.size()
            << " annotator-batch pairs retained\n";
  for (const auto& d : rep.qc.decisions) {
    if (!d.retained) std::cout << "  dropped " << d.annotator_id << " in " << d.batch_id
                               << ": " << d.reason << "\n";
  }
  std::cout << nerlens::FormatStudyReport(rep, LabelSet::FromCsv(labels));
}

void RunStudyItems(const std::string& pred, const std::string& out) {
  const auto items = nerlens::StudyItemsFromRecords(nerlens::ImportRecords(pred));
  auto f = OpenOut(out);
  for (const auto& it : items) f << nerlens::StudyItemToJson(it).dump() << "\n";
  Header({{"command", "study-items"}, {"pred", pred}});
  std::cout << "wrote " << items.size() << " items to " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nerlens: named-entity tagger analysis toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic templated corpus and embeddings");
  c_synth->add_option("--out-dir", synth.out_dir)->required();
  c_synth->add_option("--seed", synth.cfg.seed);
  c_synth->add_option("--train-sentences", synth.cfg.train_sentences);
  c_synth->add_option("--test-sentences", synth.cfg.test_sentences);
  c_synth->add_option("--names-per-type", synth.cfg.names_per_type);
  c_synth->add_option("--dim", synth.cfg.dim);
  c_synth->add_option("--type-signal", synth.cfg.type_signal);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a tagger");
  c_train->add_option("--arch", tr.arch, "lookup|logreg|glove-fixed|glove-finetuned|"
                                         "fw-context|bw-context|bi-context|full|gated")
      ->required();
  c_train->add_option("--train", tr.train)->required()->check(CLI::ExistingFile);
  c_train->add_option("--dev", tr.dev)->check(CLI::ExistingFile);
  c_train->add_option("--extra-vocab", tr.extra_vocab, "More corpora whose words get rows")
      ->check(CLI::ExistingFile);
  c_train->add_option("--embeddings", tr.embeddings)->check(CLI::ExistingFile);
  c_train->add_option("--out", tr.out)->required();
  c_train->add_option("--seed", tr.cfg.seed);
  c_train->add_option("--epochs", tr.cfg.epochs);
  c_train->add_option("--lr", tr.cfg.lr);
  c_train->add_option("--weight-decay", tr.cfg.weight_decay);
  c_train->add_option("--dropout", tr.cfg.dropout);
  c_train->add_option("--hidden-dim", tr.cfg.hidden_dim);
  c_train->add_option("--labels", tr.labels);
  c_train->add_option("--log", tr.log, "Per-epoch JSONL run log");

  PredictArgs pr;
  auto* c_predict = app.add_subcommand("predict", "Tag a corpus and write prediction records");
  c_predict->add_option("--model", pr.model)->required()->check(CLI::ExistingFile);
  c_predict->add_option("--data", pr.data)->required()->check(CLI::ExistingFile);
  c_predict->add_option("--out", pr.out)->required();
  c_predict->add_option("--system", pr.system);
  c_predict->add_option("--dataset", pr.dataset);

  PredictArgs mk;
  mk.masked = true;
  auto* c_mask = app.add_subcommand("mask-eval", "Context-only evaluation by per-token masking");
  c_mask->add_option("--model", mk.model)->required()->check(CLI::ExistingFile);
  c_mask->add_option("--data", mk.data)->required()->check(CLI::ExistingFile);
  c_mask->add_option("--out", mk.out);
  c_mask->add_option("--system", mk.system);
  c_mask->add_option("--dataset", mk.dataset);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Micro, per-type and recognition scores");
  c_eval->add_option("--pred", ev.pred)->required()->check(CLI::ExistingFile);
  c_eval->add_flag("--recognition", ev.recognition);
  c_eval->add_flag("--include-o", ev.include_o);
  c_eval->add_flag("--confusion", ev.confusion);
  c_eval->add_flag("--json", ev.as_json);

  std::string data, labels = kDefaultLabels;
  auto* c_patterns = app.add_subcommand("patterns", "Honorific and sports-score statistics");
  c_patterns->add_option("--data", data)->required()->check(CLI::ExistingFile);
  c_patterns->add_option("--labels", labels);

  std::string seen_train, seen_test;
  bool ignore_case = false;
  auto* c_seen = app.add_subcommand("seen", "Share of test entity tokens seen in train");
  c_seen->add_option("--train", seen_train)->required()->check(CLI::ExistingFile);
  c_seen->add_option("--test", seen_test)->required()->check(CLI::ExistingFile);
  c_seen->add_option("--labels", labels);
  c_seen->add_flag("--ignore-case", ignore_case);

  std::string pred;
  bool as_json = false;
  auto* c_gates = app.add_subcommand("gates", "Gate statistics of a gated model's predictions");
  c_gates->add_option("--pred", pred)->required()->check(CLI::ExistingFile);
  c_gates->add_flag("--json", as_json);

  std::vector<std::string> preds;
  std::size_t default_index = 0;
  bool include_o = false;
  auto* c_oracle = app.add_subcommand("oracle", "Oracle combination of several systems");
  c_oracle->add_option("--pred", preds)->required()->check(CLI::ExistingFile);
  c_oracle->add_option("--default", default_index);
  c_oracle->add_flag("--include-o", include_o);
  c_oracle->add_flag("--json", as_json);

  std::string pred_a, pred_b;
  std::size_t sample = 200;
  std::uint64_t seed = 0;
  auto* c_overlap = app.add_subcommand("overlap", "Error overlap between two systems");
  c_overlap->add_option("--pred-a", pred_a)->required()->check(CLI::ExistingFile);
  c_overlap->add_option("--pred-b", pred_b)->required()->check(CLI::ExistingFile);
  c_overlap->add_option("--sample", sample);
  c_overlap->add_option("--seed", seed);
  c_overlap->add_flag("--json", as_json);

  std::string gc_arch;
  nerlens::GradSuiteOptions gc;
  double tolerance = 1e-4;
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  c_grad->add_option("--arch", gc_arch, "An architecture or 'all'")->required();
  c_grad->add_option("--seed", seed);
  c_grad->add_option("--sentences", gc.sentences);
  c_grad->add_option("--length", gc.length);
  c_grad->add_option("--embedding-dim", gc.embedding_dim);
  c_grad->add_option("--hidden-dim", gc.hidden_dim);
  c_grad->add_option("--eps", gc.eps);
  c_grad->add_option("--tolerance", tolerance);

  ServeArgs sv;
  auto* c_serve = app.add_subcommand("annotate-serve", "Serve the annotation study over HTTP");
  c_serve->add_option("--items", sv.items)->required()->check(CLI::ExistingFile);
  c_serve->add_option("--port", sv.port);
  c_serve->add_option("--host", sv.host);
  c_serve->add_option("--annotators-per-batch", sv.per_batch);
  c_serve->add_option("--seed", sv.seed);
  c_serve->add_option("--log", sv.log, "Append-only answer log (JSONL)");
  c_serve->add_option("--admin-token", sv.admin_token, "Enables /api/report");
  c_serve->add_option("--static-dir", sv.static_dir, "UI bundle served at /");
  c_serve->add_option("--labels", sv.labels);
  c_serve->add_flag("--global-drop", sv.global_drop);

  std::string log, items;
  bool global_drop = false;
  auto* c_report = app.add_subcommand("study-report", "QC, majority labels and error classes");
  c_report->add_option("--log", log)->required()->check(CLI::ExistingFile);
  c_report->add_option("--items", items, "Items file the study was served from")
      ->required()->check(CLI::ExistingFile);
  c_report->add_option("--seed", seed, "Seed the study was served with");
  c_report->add_option("--labels", labels);
  c_report->add_flag("--global-drop", global_drop);
  c_report->add_flag("--json", as_json);

  std::string items_out;
  auto* c_items = app.add_subcommand("study-items", "Annotation items from prediction records");
  c_items->add_option("--pred", pred)->required()->check(CLI::ExistingFile);
  c_items->add_option("--out", items_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*c_synth) RunSynth(synth);
    else if (*c_train) RunTrain(tr);
    else if (*c_predict) RunPredict(pr);
    else if (*c_mask) RunPredict(mk);
    else if (*c_eval) RunEval(ev);
    else if (*c_patterns) RunPatterns(data, labels);
    else if (*c_seen) RunSeen(seen_train, seen_test, labels, ignore_case);
    else if (*c_gates) RunGates(pred, as_json);
    else if (*c_oracle) RunOracle(preds, default_index, include_o, as_json);
    else if (*c_overlap) RunOverlap(pred_a, pred_b, sample, seed, as_json);
    else if (*c_grad) return RunGradcheck(gc_arch, seed, gc, tolerance);
    else if (*c_serve) RunServe(sv);
    else if (*c_report) RunStudyReport(log, items, seed, labels, global_drop, as_json);
    else if (*c_items) RunStudyItems(pred, items_out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    if (auto nl = msg.find('\n'); nl != std::string::npos) msg.resize(nl);
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}
