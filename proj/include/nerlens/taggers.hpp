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

// The tagger zoo: a frequency lookup baseline and eight neural variants that
// differ only in which features feed the output layer. Word-only variants
// see the current embedding; context-only variants see LSTM states of the
// neighbouring words; the gated variant mixes a projected word vector and a
// context vector through two scalar sigmoid gates.

#ifndef NERLENS_TAGGERS_HPP_
#define NERLENS_TAGGERS_HPP_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "nerlens/corpus.hpp"
#include "nerlens/crf.hpp"
#include "nerlens/embeddings.hpp"
#include "nerlens/error.hpp"
#include "nerlens/netcore.hpp"
#include "nerlens/rng.hpp"

namespace nerlens {

enum class TaggerKind {
  kLookup,
  kLogReg,
  kGloveFixedCrf,
  kGloveFinetunedCrf,
  kFwContextCrf,
  kBwContextCrf,
  kBiContextCrf,
  kFullBiLstmCrf,
  kGatedBiLstmCrf,
};

inline constexpr TaggerKind kAllKinds[] = {
    TaggerKind::kLookup,        TaggerKind::kLogReg,
    TaggerKind::kGloveFixedCrf, TaggerKind::kGloveFinetunedCrf,
    TaggerKind::kFwContextCrf,  TaggerKind::kBwContextCrf,
    TaggerKind::kBiContextCrf,  TaggerKind::kFullBiLstmCrf,
    TaggerKind::kGatedBiLstmCrf,
};

inline std::string_view KindName(TaggerKind k) {
  switch (k) {
    case TaggerKind::kLookup: return "lookup";
    case TaggerKind::kLogReg: return "logreg";
    case TaggerKind::kGloveFixedCrf: return "glove-fixed";
    case TaggerKind::kGloveFinetunedCrf: return "glove-finetuned";
    case TaggerKind::kFwContextCrf: return "fw-context";
    case TaggerKind::kBwContextCrf: return "bw-context";
    case TaggerKind::kBiContextCrf: return "bi-context";
    case TaggerKind::kFullBiLstmCrf: return "full";
    case TaggerKind::kGatedBiLstmCrf: return "gated";
  }
  return "?";
}

inline TaggerKind ParseKind(std::string_view name) {
  for (TaggerKind k : kAllKinds) {
    if (KindName(k) == name) return k;
  }
  static const std::map<std::string_view, TaggerKind> kAliases = {
      {"Lookup", TaggerKind::kLookup},
      {"LogReg", TaggerKind::kLogReg},
      {"GloveFixedCrf", TaggerKind::kGloveFixedCrf},
      {"GloveFinetunedCrf", TaggerKind::kGloveFinetunedCrf},
      {"FwContextCrf", TaggerKind::kFwContextCrf},
      {"BwContextCrf", TaggerKind::kBwContextCrf},
      {"BiContextCrf", TaggerKind::kBiContextCrf},
      {"FullBiLstmCrf", TaggerKind::kFullBiLstmCrf},
      {"GatedBiLstmCrf", TaggerKind::kGatedBiLstmCrf},
  };
  auto it = kAliases.find(name);
  if (it == kAliases.end()) {
    throw InvalidArgument("unknown architecture '" + std::string(name) + "'");
  }
  return it->second;
}

inline bool HasCrf(TaggerKind k) {
  return k != TaggerKind::kLookup && k != TaggerKind::kLogReg;
}
inline bool UsesForwardLstm(TaggerKind k) {
  return k == TaggerKind::kFwContextCrf || k == TaggerKind::kBiContextCrf ||
         k == TaggerKind::kFullBiLstmCrf || k == TaggerKind::kGatedBiLstmCrf;
}
inline bool UsesBackwardLstm(TaggerKind k) {
  return k == TaggerKind::kBwContextCrf || k == TaggerKind::kBiContextCrf ||
         k == TaggerKind::kFullBiLstmCrf || k == TaggerKind::kGatedBiLstmCrf;
}

struct TrainConfig {
  int epochs = 10;
  double lr = 0.01;
  double weight_decay = 1e-4;
  double dropout = 0.5;
  int hidden_dim = 100;
  int embedding_dim = 300;
  std::uint64_t seed = 0;
  // Fine-tuned embeddings: decay every row on every update instead of only
  // the rows the current sentence touched.
  bool decay_untouched_rows = false;
};

// ---------------------------------------------------------------------------
// Context feature extractors over an arbitrary embedded sequence.

// Position i gets h_{i-1} of the forward LSTM; position 0 gets zeros.
inline std::vector<Vector> ForwardContextFeatures(const LstmParams& lstm,
                                                  std::span<const Vector> xs) {
  const auto steps = LstmForward(lstm, xs);
  std::vector<Vector> out(xs.size(), Vector::Zero(lstm.hidden_dim));
  for (std::size_t i = 1; i < xs.size(); ++i) out[i] = steps[i - 1].h;
  return out;
}

// Position i gets h_{i+1} of the LSTM run over the reversed sequence; the
// last position gets zeros.
inline std::vector<Vector> BackwardContextFeatures(const LstmParams& lstm,
                                                   std::span<const Vector> xs) {
  std::vector<Vector> reversed(xs.rbegin(), xs.rend());
  const auto steps = LstmForward(lstm, reversed);
  const std::size_t n = xs.size();
  std::vector<Vector> out(n, Vector::Zero(lstm.hidden_dim));
  for (std::size_t i = 0; i + 1 < n; ++i) out[i] = steps[n - 2 - i].h;
  return out;
}

inline Vector Concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

// [h_{i-1}^fw ; h_{i+1}^bw]. Independent of token i itself.
inline std::vector<Vector> BiContextFeatures(const LstmParams& fw,
                                             const LstmParams& bw,
                                             std::span<const Vector> xs) {
  auto f = ForwardContextFeatures(fw, xs);
  auto b = BackwardContextFeatures(bw, xs);
  std::vector<Vector> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back(Concat(f[i], b[i]));
  return out;
}

// [h_i^fw ; h_i^bw], both including token i.
inline std::vector<Vector> FullFeatures(const LstmParams& fw,
                                        const LstmParams& bw,
                                        std::span<const Vector> xs) {
  const auto fsteps = LstmForward(fw, xs);
  std::vector<Vector> reversed(xs.rbegin(), xs.rend());
  const auto bsteps = LstmForward(bw, reversed);
  const std::size_t n = xs.size();
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(Concat(fsteps[i].h, bsteps[n - 1 - i].h));
  }
  return out;
}

struct GateOutput {
  Vector combined;
  double word_gate = 0.0;
  double context_gate = 0.0;
};

// g_w = sigma(w_word . [x_w; x_c]), g_c = sigma(w_ctx . [x_w; x_c]),
// combined = g_w x_w + g_c x_c.
inline GateOutput GatedCombine(const Vector& x_word, const Vector& x_context,
                               const Matrix& word_gate_weight,
                               const Matrix& context_gate_weight) {
  if (x_word.size() != x_context.size()) {
    throw DimensionMismatch("gated_combine: word dim " +
                            std::to_string(x_word.size()) + " != context dim " +
                            std::to_string(x_context.size()));
  }
  const Vector z = Concat(x_word, x_context);
  if (word_gate_weight.rows() != 1 || word_gate_weight.cols() != z.size() ||
      context_gate_weight.rows() != 1 || context_gate_weight.cols() != z.size()) {
    throw DimensionMismatch("gated_combine: gate weights must be 1x" +
                            std::to_string(z.size()));
  }
  GateOutput g;
  g.word_gate = Sigmoid(word_gate_weight.row(0).dot(z));
  g.context_gate = Sigmoid(context_gate_weight.row(0).dot(z));
  g.combined = g.word_gate * x_word + g.context_gate * x_context;
  return g;
}

// ---------------------------------------------------------------------------
// Predictions

struct TokenPrediction {
  EntityType tag;
  std::optional<double> word_gate;
  std::optional<double> context_gate;
};

// ---------------------------------------------------------------------------
// Lookup baseline

class LookupTagger {
 public:
  explicit LookupTagger(LabelSet labels) : labels_(std::move(labels)) {}

  // Most frequent gold tag per case-preserved surface; ties resolve to O.
  static LookupTagger Train(const Corpus& corpus) {
    if (corpus.sentences.empty()) throw InvalidArgument("EmptyCorpus");
    std::unordered_map<std::string, std::vector<std::size_t>> counts;
    std::vector<std::string> order;
    const std::size_t K = corpus.label_set.size();
    for (const auto& s : corpus.sentences) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        auto [it, inserted] = counts.try_emplace(s.tokens[i].surface,
                                                 std::vector<std::size_t>(K, 0));
        if (inserted) order.push_back(s.tokens[i].surface);
        ++it->second[static_cast<std::size_t>(s.gold[i].id)];
      }
    }
    LookupTagger t(corpus.label_set);
    const EntityType outside = corpus.label_set.outside();
    for (const auto& w : order) {
      const auto& c = counts[w];
      std::size_t best = 0;
      bool tie = false;
      for (std::size_t k = 1; k < K; ++k) {
        if (c[k] > c[best]) {
          best = k;
          tie = false;
        } else if (c[k] == c[best]) {
          tie = true;
        }
      }
      EntityType tag = tie ? outside : EntityType{static_cast<int>(best)};
      t.table_.emplace(w, tag);
      t.words_.push_back(w);
    }
    return t;
  }

  EntityType Lookup(const std::string& surface) const {
    auto it = table_.find(surface);
    return it == table_.end() ? labels_.outside() : it->second;
  }

  std::vector<TokenPrediction> Predict(const Sentence& s) const {
    std::vector<TokenPrediction> out;
    out.reserve(s.size());
    for (const auto& t : s.tokens) out.push_back({Lookup(t.surface), {}, {}});
    return out;
  }

  const LabelSet& labels() const { return labels_; }
  // Insertion order, for stable serialization.
  const std::vector<std::string>& words() const { return words_; }
  void Set(const std::string& word, EntityType tag) {
    if (table_.insert_or_assign(word, tag).second) words_.push_back(word);
  }

 private:
  LabelSet labels_;
  std::unordered_map<std::string, EntityType> table_;
  std::vector<std::string> words_;
};

// ---------------------------------------------------------------------------
// Neural taggers

// Everything computed by one forward pass, kept for backpropagation.
struct ForwardPass {
  std::vector<int> rows;        // embedding row per token, -1 when masked
  std::vector<Vector> dropout;  // per-token multiplier (empty in eval mode)
  std::vector<Vector> inputs;   // embeddings after dropout
  std::vector<LstmStepCache> fw_steps;
  std::vector<LstmStepCache> bw_steps;  // over the reversed sentence
  std::vector<Vector> word_proj;        // gated only
  std::vector<Vector> context;          // gated only
  std::vector<double> word_gate, context_gate;
  std::vector<Vector> features;
  Matrix emissions;
};

class NeuralTagger {
 public:
  // Fresh model. The vocabulary is every surface of `corpora` that has a
  // pretrained vector, in first-occurrence order; the final embedding row is
  // the shared out-of-vocabulary vector, initialized to the table average.
  NeuralTagger(TaggerKind kind, const TrainConfig& config,
               const LabelSet& labels, const EmbeddingTable& table,
               std::span<const Corpus* const> corpora)
      : kind_(kind), config_(config), labels_(labels) {
    if (kind == TaggerKind::kLookup) {
      throw InvalidArgument("lookup is not a neural tagger");
    }
    config_.embedding_dim = static_cast<int>(table.dim());
    for (const Corpus* c : corpora) {
      for (const auto& s : c->sentences) {
        for (const auto& t : s.tokens) {
          if (table.contains(t.surface) && !vocab_.contains(t.surface)) {
            vocab_.emplace(t.surface, static_cast<int>(words_.size()));
            words_.push_back(t.surface);
          }
        }
      }
    }
    Rng rng(config_.seed);
    Allocate(&rng);
    for (std::size_t r = 0; r < words_.size(); ++r) {
      embedding_.value.row(static_cast<Eigen::Index>(r)) =
          table.Lookup(words_[r]).transpose();
    }
    embedding_.value.row(static_cast<Eigen::Index>(words_.size())) =
        table.average().transpose();
    mask_vector_ = table.average();
    rng_ = rng;
  }

  // Shell with the given vocabulary and zeroed tensors, to be filled by a
  // checkpoint reader.
  NeuralTagger(TaggerKind kind, const TrainConfig& config,
               const LabelSet& labels, std::vector<std::string> words)
      : kind_(kind), config_(config), labels_(labels), words_(std::move(words)) {
    for (std::size_t r = 0; r < words_.size(); ++r) {
      vocab_.emplace(words_[r], static_cast<int>(r));
    }
    Allocate(nullptr);
    mask_vector_ = Vector::Zero(config_.embedding_dim);
  }

  TaggerKind kind() const { return kind_; }
  const TrainConfig& config() const { return config_; }
  const LabelSet& labels() const { return labels_; }
  const std::vector<std::string>& vocabulary() const { return words_; }
  const Vector& mask_vector() const { return mask_vector_; }
  void set_mask_vector(Vector v) { mask_vector_ = std::move(v); }
  Rng& rng() { return rng_; }

  Eigen::Index input_dim() const { return config_.embedding_dim; }
  Eigen::Index hidden_dim() const { return config_.hidden_dim; }
  Eigen::Index feature_dim() const {
    switch (kind_) {
      case TaggerKind::kFwContextCrf:
      case TaggerKind::kBwContextCrf:
        return hidden_dim();
      case TaggerKind::kBiContextCrf:
      case TaggerKind::kFullBiLstmCrf:
      case TaggerKind::kGatedBiLstmCrf:
        return 2 * hidden_dim();
      default:
        return input_dim();
    }
  }

  const ParamTensor& embedding() const { return embedding_; }
  const LstmParams& forward_lstm() const { return fw_; }
  const LstmParams& backward_lstm() const { return bw_; }
  LstmParams& forward_lstm() { return fw_; }
  LstmParams& backward_lstm() { return bw_; }
  const ParamTensor& word_gate_weight() const { return gate_word_; }
  const ParamTensor& context_gate_weight() const { return gate_context_; }
  ParamTensor& word_gate_weight() { return gate_word_; }
  ParamTensor& context_gate_weight() { return gate_context_; }

  CrfParams crf() const {
    return {crf_trans_.value, crf_start_.value.col(0), crf_stop_.value.col(0)};
  }

  // Every tensor this architecture owns, trainable or not.
  std::vector<ParamTensor*> Parameters() {
    std::vector<ParamTensor*> out{&embedding_};
    if (UsesForwardLstm(kind_)) {
      out.push_back(&fw_.weight);
      out.push_back(&fw_.bias);
    }
    if (UsesBackwardLstm(kind_)) {
      out.push_back(&bw_.weight);
      out.push_back(&bw_.bias);
    }
    if (kind_ == TaggerKind::kGatedBiLstmCrf) {
      out.push_back(&proj_);
      out.push_back(&gate_word_);
      out.push_back(&gate_context_);
    }
    out.push_back(&out_w_);
    out.push_back(&out_b_);
    if (HasCrf(kind_)) {
      out.push_back(&crf_trans_);
      out.push_back(&crf_start_);
      out.push_back(&crf_stop_);
    }
    return out;
  }

  std::vector<const ParamTensor*> Parameters() const {
    auto ps = const_cast<NeuralTagger*>(this)->Parameters();
    return {ps.begin(), ps.end()};
  }

  ParamTensor* FindParameter(std::string_view name) {
    for (ParamTensor* p : Parameters()) {
      if (p->name == name) return p;
    }
    return nullptr;
  }

  // Embedding row for a surface; the last row is the shared OOV vector.
  int RowOf(const std::string& surface) const {
    auto it = vocab_.find(surface);
    return it == vocab_.end() ? static_cast<int>(words_.size()) : it->second;
  }

  // Runs the network. `masked` positions use the frozen mask vector instead
  // of their embedding. With `dropout` non-null (train mode), those
  // multipliers are applied to each input embedding.
  ForwardPass Forward(const Sentence& s, std::span<const std::size_t> masked = {},
                      const std::vector<Vector>* dropout = nullptr) const {
    const std::size_t n = s.size();
    if (n == 0) throw InvalidArgument("empty sentence");
    ForwardPass fp;
    fp.rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) fp.rows[i] = RowOf(s.tokens[i].surface);
    for (std::size_t m : masked) {
      if (m >= n) throw InvalidArgument("PositionOutOfRange");
      fp.rows[m] = -1;
    }
    fp.inputs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Vector x = fp.rows[i] < 0 ? mask_vector_
                                : Vector(embedding_.value.row(fp.rows[i]).transpose());
      if (dropout != nullptr) x = x.cwiseProduct((*dropout)[i]);
      fp.inputs.push_back(std::move(x));
    }
    if (dropout != nullptr) fp.dropout = *dropout;

    if (UsesForwardLstm(kind_)) fp.fw_steps = LstmForward(fw_, fp.inputs);
    if (UsesBackwardLstm(kind_)) {
      std::vector<Vector> rev(fp.inputs.rbegin(), fp.inputs.rend());
      fp.bw_steps = LstmForward(bw_, rev);
    }
    const Eigen::Index H = hidden_dim();
    auto fw_ctx = [&](std::size_t i) -> Vector {
      return i == 0 ? Vector(Vector::Zero(H)) : fp.fw_steps[i - 1].h;
    };
    auto bw_ctx = [&](std::size_t i) -> Vector {
      return i + 1 == n ? Vector(Vector::Zero(H)) : fp.bw_steps[n - 2 - i].h;
    };

    fp.features.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      switch (kind_) {
        case TaggerKind::kFwContextCrf:
          fp.features.push_back(fw_ctx(i));
          break;
        case TaggerKind::kBwContextCrf:
          fp.features.push_back(bw_ctx(i));
          break;
        case TaggerKind::kBiContextCrf:
          fp.features.push_back(Concat(fw_ctx(i), bw_ctx(i)));
          break;
        case TaggerKind::kFullBiLstmCrf:
          fp.features.push_back(Concat(fp.fw_steps[i].h, fp.bw_steps[n - 1 - i].h));
          break;
        case TaggerKind::kGatedBiLstmCrf: {
          Vector xw = proj_.value * fp.inputs[i];
          Vector xc = Concat(fw_ctx(i), bw_ctx(i));
          GateOutput g = GatedCombine(xw, xc, gate_word_.value, gate_context_.value);
          fp.word_proj.push_back(std::move(xw));
          fp.context.push_back(std::move(xc));
          fp.word_gate.push_back(g.word_gate);
          fp.context_gate.push_back(g.context_gate);
          fp.features.push_back(std::move(g.combined));
          break;
        }
        default:
          fp.features.push_back(fp.inputs[i]);
      }
    }
    const Eigen::Index K = static_cast<Eigen::Index>(labels_.size());
    fp.emissions.resize(static_cast<Eigen::Index>(n), K);
    for (std::size_t i = 0; i < n; ++i) {
      fp.emissions.row(static_cast<Eigen::Index>(i)) =
          (out_w_.value * fp.features[i] + out_b_.value.col(0)).transpose();
    }
    return fp;
  }

  // Per-token features as exposed to the output layer (eval mode).
  std::vector<Vector> Features(const Sentence& s) const {
    return Forward(s).features;
  }

  std::vector<int> GoldIndices(const Sentence& s) const {
    std::vector<int> gold;
    gold.reserve(s.size());
    for (EntityType t : s.gold) gold.push_back(t.id);
    return gold;
  }

  // Loss of a forward pass against the sentence's gold tags.
  double Loss(const Sentence& s, const ForwardPass& fp) const {
    const auto gold = GoldIndices(s);
    if (HasCrf(kind_)) return CrfNllGrad(fp.emissions, crf(), gold).loss;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < fp.emissions.rows(); ++i) {
      const double lz = internal::LogSumExp(fp.emissions.row(i).transpose());
      loss += lz - fp.emissions(i, gold[static_cast<std::size_t>(i)]);
    }
    return loss;
  }

  // Accumulates dL/dtheta into the parameter grads. Returns the loss.
  double Backward(const Sentence& s, const ForwardPass& fp) {
    const std::size_t n = s.size();
    const auto gold = GoldIndices(s);
    Matrix d_em;
    double loss = 0.0;
    if (HasCrf(kind_)) {
      CrfGradient g = CrfNllGrad(fp.emissions, crf(), gold);
      loss = g.loss;
      d_em = std::move(g.d_emissions);
      crf_trans_.grad += g.d_transitions;
      crf_start_.grad.col(0) += g.d_start;
      crf_stop_.grad.col(0) += g.d_stop;
    } else {
      d_em.resize(fp.emissions.rows(), fp.emissions.cols());
      for (Eigen::Index i = 0; i < fp.emissions.rows(); ++i) {
        const double lz = internal::LogSumExp(fp.emissions.row(i).transpose());
        loss += lz - fp.emissions(i, gold[static_cast<std::size_t>(i)]);
        d_em.row(i) = (fp.emissions.row(i).array() - lz).exp().matrix();
        d_em(i, gold[static_cast<std::size_t>(i)]) -= 1.0;
      }
    }

    std::vector<Vector> d_feat(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vector de = d_em.row(static_cast<Eigen::Index>(i)).transpose();
      out_w_.grad.noalias() += de * fp.features[i].transpose();
      out_b_.grad.col(0) += de;
      d_feat[i] = out_w_.value.transpose() * de;
    }

    const Eigen::Index H = hidden_dim();
    std::vector<Vector> d_input(n, Vector::Zero(input_dim()));
    std::vector<Vector> dh_fw(n, Vector::Zero(H));
    std::vector<Vector> dh_bw(n, Vector::Zero(H));  // reversed indexing
    auto add_fw_ctx = [&](std::size_t i, const Vector& d) {
      if (i > 0) dh_fw[i - 1] += d;
    };
    auto add_bw_ctx = [&](std::size_t i, const Vector& d) {
      if (i + 1 < n) dh_bw[n - 2 - i] += d;
    };

    for (std::size_t i = 0; i < n; ++i) {
      const Vector& df = d_feat[i];
      switch (kind_) {
        case TaggerKind::kFwContextCrf:
          add_fw_ctx(i, df);
          break;
        case TaggerKind::kBwContextCrf:
          add_bw_ctx(i, df);
          break;
        case TaggerKind::kBiContextCrf:
          add_fw_ctx(i, df.head(H));
          add_bw_ctx(i, df.tail(H));
          break;
        case TaggerKind::kFullBiLstmCrf:
          dh_fw[i] += df.head(H);
          dh_bw[n - 1 - i] += df.tail(H);
          break;
        case TaggerKind::kGatedBiLstmCrf: {
          const Vector& xw = fp.word_proj[i];
          const Vector& xc = fp.context[i];
          const double gw = fp.word_gate[i];
          const double gc = fp.context_gate[i];
          const Vector z = Concat(xw, xc);
          const double dzw = df.dot(xw) * gw * (1.0 - gw);
          const double dzc = df.dot(xc) * gc * (1.0 - gc);
          gate_word_.grad.row(0) += dzw * z.transpose();
          gate_context_.grad.row(0) += dzc * z.transpose();
          const Vector dz = dzw * gate_word_.value.row(0).transpose() +
                            dzc * gate_context_.value.row(0).transpose();
          const Eigen::Index dw = xw.size();
          const Vector d_xw = gw * df + dz.head(dw);
          const Vector d_xc = gc * df + dz.tail(xc.size());
          proj_.grad.noalias() += d_xw * fp.inputs[i].transpose();
          d_input[i] += proj_.value.transpose() * d_xw;
          add_fw_ctx(i, d_xc.head(H));
          add_bw_ctx(i, d_xc.tail(H));
          break;
        }
        default:
          d_input[i] += df;
      }
    }

    if (UsesForwardLstm(kind_)) {
      auto dx = LstmBackward(fw_, fp.fw_steps, dh_fw);
      for (std::size_t i = 0; i < n; ++i) d_input[i] += dx[i];
    }
    if (UsesBackwardLstm(kind_)) {
      auto dx = LstmBackward(bw_, fp.bw_steps, dh_bw);
      for (std::size_t i = 0; i < n; ++i) d_input[n - 1 - i] += dx[i];
    }

    if (embedding_.trainable) {
      for (std::size_t i = 0; i < n; ++i) {
        if (fp.rows[i] < 0) continue;
        Vector d = d_input[i];
        if (!fp.dropout.empty()) d = d.cwiseProduct(fp.dropout[i]);
        embedding_.grad.row(fp.rows[i]) += d.transpose();
        embedding_.Touch(fp.rows[i]);
      }
    }
    return loss;
  }

  // Fresh per-token dropout multipliers for one training example.
  std::vector<Vector> SampleDropout(std::size_t n, Rng& rng) const {
    std::vector<Vector> masks;
    masks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      masks.push_back(DropoutMask(input_dim(), config_.dropout, rng));
    }
    return masks;
  }

  void ZeroGrad() {
    for (ParamTensor* p : Parameters()) p->ZeroGrad();
  }

  // One SGD update on one sentence. Returns the sentence loss.
  double TrainStep(const Sentence& s) {
    ZeroGrad();
    const auto masks = SampleDropout(s.size(), rng_);
    const ForwardPass fp = Forward(s, {}, &masks);
    const double loss = Backward(s, fp);
    const auto params = Parameters();
    SgdStep(params, SgdOptions{config_.lr, config_.weight_decay,
                               config_.decay_untouched_rows});
    return loss;
  }

  // Eval-mode decoding. Never consults the rng.
  std::vector<TokenPrediction> Predict(
      const Sentence& s, std::span<const std::size_t> masked = {}) const {
    const ForwardPass fp = Forward(s, masked);
    std::vector<int> tags;
    if (HasCrf(kind_)) {
      tags = Viterbi(fp.emissions, crf()).tags;
    } else {
      for (Eigen::Index i = 0; i < fp.emissions.rows(); ++i) {
        Eigen::Index arg = 0;
        for (Eigen::Index k = 1; k < fp.emissions.cols(); ++k) {
          if (fp.emissions(i, k) > fp.emissions(i, arg)) arg = k;
        }
        tags.push_back(static_cast<int>(arg));
      }
    }
    std::vector<TokenPrediction> out;
    out.reserve(tags.size());
    for (std::size_t i = 0; i < tags.size(); ++i) {
      TokenPrediction p{EntityType{tags[i]}, {}, {}};
      if (kind_ == TaggerKind::kGatedBiLstmCrf) {
        p.word_gate = fp.word_gate[i];
        p.context_gate = fp.context_gate[i];
      }
      out.push_back(p);
    }
    return out;
  }

 private:
  void Allocate(Rng* rng) {
    const Eigen::Index D = config_.embedding_dim;
    const Eigen::Index H = config_.hidden_dim;
    const Eigen::Index K = static_cast<Eigen::Index>(labels_.size());
    const Eigen::Index V = static_cast<Eigen::Index>(words_.size()) + 1;
    auto weight = [&](const std::string& name, Eigen::Index r, Eigen::Index c) {
      return rng ? InitWeight(name, r, c, *rng)
                 : ParamTensor(name, Matrix::Zero(r, c));
    };

    embedding_ = ParamTensor("embedding", Matrix::Zero(V, D));
    embedding_.trainable = kind_ == TaggerKind::kGloveFinetunedCrf;
    embedding_.row_sparse = true;
    embedding_.touched.assign(static_cast<std::size_t>(V), 0);
    if (UsesForwardLstm(kind_)) {
      fw_ = rng ? LstmParams::Init("lstm_fw", D, H, *rng)
                : LstmParams::Zero("lstm_fw", D, H);
    }
    if (UsesBackwardLstm(kind_)) {
      bw_ = rng ? LstmParams::Init("lstm_bw", D, H, *rng)
                : LstmParams::Zero("lstm_bw", D, H);
    }
    if (kind_ == TaggerKind::kGatedBiLstmCrf) {
      proj_ = weight("word_proj", 2 * H, D);
      gate_word_ = weight("gate_word", 1, 4 * H);
      gate_context_ = weight("gate_context", 1, 4 * H);
    }
    out_w_ = weight("output.weight", K, feature_dim());
    out_b_ = InitBias("output.bias", K);
    if (HasCrf(kind_)) {
      crf_trans_ = ParamTensor("crf.transitions", Matrix::Zero(K, K), false);
      crf_start_ = InitBias("crf.start", K);
      crf_stop_ = InitBias("crf.stop", K);
    }
  }

  TaggerKind kind_;
  TrainConfig config_;
  LabelSet labels_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> vocab_;
  Vector mask_vector_;
  Rng rng_;

  ParamTensor embedding_;
  LstmParams fw_, bw_;
  ParamTensor proj_, gate_word_, gate_context_;
  ParamTensor out_w_, out_b_;
  ParamTensor crf_trans_, crf_start_, crf_stop_;
};

// Finite-difference check of one model on one sentence. A single dropout
// draw is frozen so the analytic and numeric routes see the same network.
inline GradCheckResult GradCheckTagger(NeuralTagger& model, const Sentence& s,
                                       Rng& rng, double eps = 1e-5) {
  const auto masks = model.SampleDropout(s.size(), rng);
  auto loss = [&] { return model.Loss(s, model.Forward(s, {}, &masks)); };
  auto backward = [&] {
    model.ZeroGrad();
    model.Backward(s, model.Forward(s, {}, &masks));
  };
  const auto params = model.Parameters();
  return GradCheck(params, loss, backward, eps);
}

// ---------------------------------------------------------------------------
// Any tagger.

class Tagger {
 public:
  Tagger(LookupTagger t) : impl_(std::move(t)) {}  // NOLINT
  Tagger(NeuralTagger t) : impl_(std::move(t)) {}  // NOLINT

  TaggerKind kind() const {
    if (const auto* n = std::get_if<NeuralTagger>(&impl_)) return n->kind();
    return TaggerKind::kLookup;
  }
  const LabelSet& labels() const {
    return std::visit([](const auto& t) -> const LabelSet& { return t.labels(); },
                      impl_);
  }
  bool is_neural() const { return std::holds_alternative<NeuralTagger>(impl_); }
  const NeuralTagger& neural() const { return std::get<NeuralTagger>(impl_); }
  NeuralTagger& neural() { return std::get<NeuralTagger>(impl_); }
  const LookupTagger& lookup() const { return std::get<LookupTagger>(impl_); }

  std::vector<TokenPrediction> Predict(const Sentence& s) const {
    return std::visit([&](const auto& t) { return t.Predict(s); }, impl_);
  }

 private:
  std::variant<LookupTagger, NeuralTagger> impl_;
};

// ---------------------------------------------------------------------------
// Training

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Per-sentence SGD with a fresh shuffle each epoch, all draws from the
// model's seeded rng.
class Trainer {
 public:
  Trainer(NeuralTagger& model, const Corpus& corpus)
      : model_(model), corpus_(corpus) {
    if (corpus.sentences.empty()) throw InvalidArgument("EmptyCorpus");
    if (!(corpus.label_set == model.labels())) {
      throw InvalidArgument("corpus label set differs from the model's");
    }
    order_.resize(corpus.sentences.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  }

  EpochLog RunEpoch() {
    const auto t0 = std::chrono::steady_clock::now();
    model_.rng().Shuffle(order_);
    double total = 0.0;
    for (std::size_t idx : order_) {
      total += model_.TrainStep(corpus_.sentences[idx]);
    }
    ++epoch_;
    const auto t1 = std::chrono::steady_clock::now();
    return {epoch_, total, std::chrono::duration<double>(t1 - t0).count()};
  }

  int epoch() const { return epoch_; }

 private:
  NeuralTagger& model_;
  const Corpus& corpus_;
  std::vector<std::size_t> order_;
  int epoch_ = 0;
};

// Builds and trains any variant. `vocab_corpora` lists the corpora whose
// surfaces get their own embedding rows (the training corpus is always
// included).
inline Tagger Train(TaggerKind kind, const Corpus& train,
                    const EmbeddingTable* table, const TrainConfig& config,
                    std::span<const Corpus* const> vocab_corpora = {},
                    const EpochCallback& on_epoch = {}) {
  if (train.sentences.empty()) throw InvalidArgument("EmptyCorpus");
  if (kind == TaggerKind::kLookup) return LookupTagger::Train(train);
  if (table == nullptr) throw InvalidArgument("neural taggers need embeddings");
  std::vector<const Corpus*> corpora{&train};
  corpora.insert(corpora.end(), vocab_corpora.begin(), vocab_corpora.end());
  NeuralTagger model(kind, config, train.label_set, *table, corpora);
  Trainer trainer(model, train);
  for (int e = 0; e < config.epochs; ++e) {
    EpochLog log = trainer.RunEpoch();
    if (on_epoch) on_epoch(log);
  }
  return model;
}

inline double TokenAccuracy(const Tagger& tagger, const Corpus& corpus) {
  std::size_t correct = 0, total = 0;
  for (const auto& s : corpus.sentences) {
    const auto pred = tagger.Predict(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      correct += pred[i].tag == s.gold[i];
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace nerlens

#endif  // NERLENS_TAGGERS_HPP_
