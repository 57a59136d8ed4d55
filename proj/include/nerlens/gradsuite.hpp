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

// Gradient check of one architecture on random short sentences.

#ifndef NERLENS_GRADSUITE_HPP_
#define NERLENS_GRADSUITE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "nerlens/corpus.hpp"
#include "nerlens/embeddings.hpp"
#include "nerlens/netcore.hpp"
#include "nerlens/rng.hpp"
#include "nerlens/taggers.hpp"

namespace nerlens {

struct GradSuiteOptions {
  int sentences = 3;
  int length = 4;
  int vocabulary = 8;
  Eigen::Index embedding_dim = 4;
  int hidden_dim = 3;
  double eps = 1e-5;
};

struct GradSuiteReport {
  TaggerKind kind = TaggerKind::kLogReg;
  std::uint64_t seed = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_tensor;
  std::vector<GradCheckResult> per_sentence;
};

// Everything is drawn from `seed`: sentences, tags, word vectors, dropout
// masks and the model itself. Zero-initialized tensors (biases, CRF
// potentials) are moved to small random values first so that no gradient
// path is checked only at a symmetric point.
inline GradSuiteReport RunGradSuite(TaggerKind kind, std::uint64_t seed,
                                    const GradSuiteOptions& opt = {}) {
  if (kind == TaggerKind::kLookup) throw InvalidArgument("lookup has no gradients");
  Rng rng(seed);
  const LabelSet labels;
  Corpus corpus;
  corpus.label_set = labels;
  for (int s = 0; s < opt.sentences; ++s) {
    std::vector<std::string> words;
    std::vector<EntityType> tags;
    for (int i = 0; i < opt.length; ++i) {
      words.push_back("w" + std::to_string(rng.UniformInt(static_cast<std::uint64_t>(opt.vocabulary))));
      tags.push_back(EntityType{static_cast<int>(rng.UniformInt(labels.size()))});
    }
    corpus.sentences.push_back(Sentence::FromSurfaces(words, tags));
  }
  EmbeddingTable table(opt.embedding_dim);
  for (int w = 0; w < opt.vocabulary; ++w) {
    Vector v(opt.embedding_dim);
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = rng.Uniform(-1.0, 1.0);
    table.Add("w" + std::to_string(w), v);
  }
  table.RecomputeAverage();

  TrainConfig cfg;
  cfg.hidden_dim = opt.hidden_dim;
  cfg.seed = seed;
  const Corpus* corpora[] = {&corpus};
  NeuralTagger model(kind, cfg, labels, table, corpora);
  for (ParamTensor* p : model.Parameters()) {
    if (p->name.starts_with("crf.") || p->name == "output.bias") {
      for (Eigen::Index k = 0; k < p->value.size(); ++k) {
        p->value(k) = rng.Uniform(-0.5, 0.5);
      }
    }
  }

  GradSuiteReport rep;
  rep.kind = kind;
  rep.seed = seed;
  for (const auto& s : corpus.sentences) {
    GradCheckResult r = GradCheckTagger(model, s, rng, opt.eps);
    if (r.max_rel_error >= rep.max_rel_error) {
      rep.max_rel_error = r.max_rel_error;
      rep.worst_tensor = r.worst_tensor;
    }
    rep.max_abs_error = std::max(rep.max_abs_error, r.max_abs_error);
    rep.per_sentence.push_back(std::move(r));
  }
  return rep;
}

}  // namespace nerlens

#endif  // NERLENS_GRADSUITE_HPP_
