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

// Model checkpoints as a single JSON document:
//
//   {
//     "format": "nerlens-checkpoint", "version": 1,
//     "arch": "<kind name>",
//     "config": {epochs, lr, weight_decay, dropout, hidden_dim,
//                embedding_dim, seed, decay_untouched_rows},
//     "config_hash": "<16 hex digits, FNV-1a 64 of the compact config dump>",
//     "labels": ["PER", ...],
//     // neural taggers
//     "vocabulary": ["word", ...],        // embedding row order; OOV row last
//     "mask_vector": [...],
//     "tensors": [{"name", "rows", "cols", "trainable", "data": [row-major]}],
//     // lookup tagger
//     "table": [["word", "TAG"], ...]
//   }
//
// Doubles are written in shortest round-trip form, so save/load is exact.

#ifndef NERLENS_CHECKPOINT_HPP_
#define NERLENS_CHECKPOINT_HPP_

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include "json.hpp"
#include "nerlens/corpus.hpp"
#include "nerlens/error.hpp"
#include "nerlens/taggers.hpp"

namespace nerlens {

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json ConfigToJson(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"dropout", c.dropout},
          {"hidden_dim", c.hidden_dim},
          {"embedding_dim", c.embedding_dim},
          {"seed", c.seed},
          {"decay_untouched_rows", c.decay_untouched_rows}};
}

inline TrainConfig ConfigFromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.decay_untouched_rows = j.value("decay_untouched_rows", false);
  return c;
}

inline std::string ConfigHash(const TrainConfig& c) {
  const std::string s = ConfigToJson(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json SaveCheckpointJson(const Tagger& tagger) {
  nlohmann::json j;
  j["format"] = "nerlens-checkpoint";
  j["version"] = kCheckpointVersion;
  j["arch"] = std::string(KindName(tagger.kind()));
  j["labels"] = tagger.labels().names();
  if (!tagger.is_neural()) {
    const auto& lk = tagger.lookup();
    auto table = nlohmann::json::array();
    for (const auto& w : lk.words()) {
      table.push_back({w, lk.labels().name(lk.Lookup(w))});
    }
    j["table"] = std::move(table);
    return j;
  }
  const NeuralTagger& m = tagger.neural();
  j["config"] = ConfigToJson(m.config());
  j["config_hash"] = ConfigHash(m.config());
  j["vocabulary"] = m.vocabulary();
  j["mask_vector"] = std::vector<double>(m.mask_vector().data(),
                                         m.mask_vector().data() + m.mask_vector().size());
  auto tensors = nlohmann::json::array();
  for (const ParamTensor* p : m.Parameters()) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) data.push_back(p->value(r, c));
    }
    tensors.push_back({{"name", p->name},
                       {"rows", p->value.rows()},
                       {"cols", p->value.cols()},
                       {"trainable", p->trainable},
                       {"data", std::move(data)}});
  }
  j["tensors"] = std::move(tensors);
  return j;
}

inline Tagger LoadCheckpointJson(const nlohmann::json& j) {
  if (j.value("format", "") != "nerlens-checkpoint") {
    throw Error("not a nerlens checkpoint");
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw Error("unsupported checkpoint version");
  }
  const TaggerKind kind = ParseKind(j.at("arch").get<std::string>());
  const LabelSet labels(j.at("labels").get<std::vector<std::string>>());
  if (kind == TaggerKind::kLookup) {
    LookupTagger t(labels);
    for (const auto& row : j.at("table")) {
      t.Set(row.at(0).get<std::string>(), labels.at(row.at(1).get<std::string>()));
    }
    return t;
  }
  const TrainConfig config = ConfigFromJson(j.at("config"));
  if (j.contains("config_hash") &&
      j.at("config_hash").get<std::string>() != ConfigHash(config)) {
    throw Error("checkpoint config hash mismatch");
  }
  NeuralTagger m(kind, config, labels,
                 j.at("vocabulary").get<std::vector<std::string>>());
  const auto mask = j.at("mask_vector").get<std::vector<double>>();
  m.set_mask_vector(Eigen::Map<const Vector>(mask.data(),
                                             static_cast<Eigen::Index>(mask.size())));
  for (const auto& t : j.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    ParamTensor* p = m.FindParameter(name);
    if (p == nullptr) throw Error("unexpected tensor '" + name + "' in checkpoint");
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw DimensionMismatch("tensor '" + name + "' has the wrong shape");
    }
    const auto& data = t.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw DimensionMismatch("tensor '" + name + "' has the wrong size");
    }
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) p->value(r, c) = data[k++].get<double>();
    }
  }
  return m;
}

inline void SaveCheckpoint(const Tagger& tagger, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << SaveCheckpointJson(tagger).dump() << '\n';
}

inline Tagger LoadCheckpoint(const std::string& path) {
  try {
    return LoadCheckpointJson(nlohmann::json::parse(ReadFile(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad checkpoint '" + path + "': " + e.what());
  }
}

}  // namespace nerlens

#endif  // NERLENS_CHECKPOINT_HPP_
