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

// Linear-chain CRF: forward algorithm, Viterbi decoding, and the negative
// log-likelihood with forward-backward gradients. Everything is computed in
// log space.

#ifndef NERLENS_CRF_HPP_
#define NERLENS_CRF_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "nerlens/error.hpp"
#include "nerlens/netcore.hpp"

namespace nerlens {

// transitions(from, to); start/stop are per-tag boundary potentials.
struct CrfParams {
  Matrix transitions;
  Vector start;
  Vector stop;

  static CrfParams Zero(Eigen::Index num_tags) {
    return {Matrix::Zero(num_tags, num_tags), Vector::Zero(num_tags),
            Vector::Zero(num_tags)};
  }
  Eigen::Index num_tags() const { return start.size(); }
};

namespace internal {

inline void CheckCrfShapes(const Matrix& emissions, const CrfParams& p) {
  const Eigen::Index K = p.num_tags();
  if (emissions.rows() < 1 || emissions.cols() != K ||
      p.transitions.rows() != K || p.transitions.cols() != K ||
      p.stop.size() != K) {
    throw DimensionMismatch("crf: emissions " +
                            std::to_string(emissions.rows()) + "x" +
                            std::to_string(emissions.cols()) + " vs " +
                            std::to_string(K) + " tags");
  }
}

template <typename Derived>
double LogSumExp(const Eigen::MatrixBase<Derived>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// alpha(i, k) = log-sum of scores of prefixes ending in tag k at i.
inline Matrix ForwardScores(const Matrix& emissions, const CrfParams& p) {
  const Eigen::Index n = emissions.rows();
  const Eigen::Index K = p.num_tags();
  Matrix alpha(n, K);
  alpha.row(0) = p.start.transpose() + emissions.row(0);
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index k = 0; k < K; ++k) {
      alpha(i, k) = LogSumExp(alpha.row(i - 1).transpose() + p.transitions.col(k)) +
                    emissions(i, k);
    }
  }
  return alpha;
}

// beta(i, k) = log-sum of scores of suffixes after position i given tag k.
inline Matrix BackwardScores(const Matrix& emissions, const CrfParams& p) {
  const Eigen::Index n = emissions.rows();
  const Eigen::Index K = p.num_tags();
  Matrix beta(n, K);
  beta.row(n - 1) = p.stop.transpose();
  for (Eigen::Index i = n - 1; i-- > 0;) {
    for (Eigen::Index k = 0; k < K; ++k) {
      beta(i, k) = LogSumExp(p.transitions.row(k).transpose() +
                             emissions.row(i + 1).transpose() +
                             beta.row(i + 1).transpose());
    }
  }
  return beta;
}

}  // namespace internal

inline double LogPartition(const Matrix& emissions, const CrfParams& p) {
  internal::CheckCrfShapes(emissions, p);
  const Matrix alpha = internal::ForwardScores(emissions, p);
  return internal::LogSumExp(alpha.row(emissions.rows() - 1).transpose() + p.stop);
}

// Unnormalized score of one tag path.
inline double PathScore(const Matrix& emissions, const CrfParams& p,
                        const std::vector<int>& tags) {
  internal::CheckCrfShapes(emissions, p);
  if (static_cast<Eigen::Index>(tags.size()) != emissions.rows()) {
    throw DimensionMismatch("crf: path length differs from emissions");
  }
  double s = p.start[tags.front()] + p.stop[tags.back()];
  for (std::size_t i = 0; i < tags.size(); ++i) {
    s += emissions(static_cast<Eigen::Index>(i), tags[i]);
    if (i > 0) s += p.transitions(tags[i - 1], tags[i]);
  }
  return s;
}

struct ViterbiResult {
  std::vector<int> tags;
  double score = 0.0;
};

// Ties go to the lowest tag index.
inline ViterbiResult Viterbi(const Matrix& emissions, const CrfParams& p) {
  internal::CheckCrfShapes(emissions, p);
  const Eigen::Index n = emissions.rows();
  const Eigen::Index K = p.num_tags();
  Vector score = p.start + emissions.row(0).transpose();
  Vector next(K);
  std::vector<int> back(static_cast<std::size_t>((n - 1) * K));
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index k = 0; k < K; ++k) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (Eigen::Index j = 0; j < K; ++j) {
        const double s = score[j] + p.transitions(j, k);
        if (s > best) {
          best = s;
          arg = static_cast<int>(j);
        }
      }
      next[k] = best + emissions(i, k);
      back[static_cast<std::size_t>((i - 1) * K + k)] = arg;
    }
    score.swap(next);
  }
  score += p.stop;
  int last = 0;
  for (Eigen::Index k = 1; k < K; ++k) {
    if (score[k] > score[last]) last = static_cast<int>(k);
  }
  ViterbiResult r;
  r.score = score[last];
  r.tags.assign(static_cast<std::size_t>(n), 0);
  r.tags.back() = last;
  for (Eigen::Index i = n - 1; i > 0; --i) {
    r.tags[static_cast<std::size_t>(i - 1)] =
        back[static_cast<std::size_t>((i - 1) * K + r.tags[static_cast<std::size_t>(i)])];
  }
  return r;
}

// Per-token posterior marginals, n x K; rows sum to 1.
inline Matrix Marginals(const Matrix& emissions, const CrfParams& p) {
  internal::CheckCrfShapes(emissions, p);
  const Matrix alpha = internal::ForwardScores(emissions, p);
  const Matrix beta = internal::BackwardScores(emissions, p);
  const double log_z = internal::LogSumExp(
      alpha.row(emissions.rows() - 1).transpose() + p.stop);
  return (alpha + beta).array().unaryExpr([log_z](double v) {
    return std::exp(v - log_z);
  }).matrix();
}

struct CrfGradient {
  double loss = 0.0;
  Matrix d_emissions;
  Matrix d_transitions;
  Vector d_start;
  Vector d_stop;
};

// loss = log Z - score(gold). Gradients are expected counts minus gold counts.
inline CrfGradient CrfNllGrad(const Matrix& emissions, const CrfParams& p,
                              const std::vector<int>& gold) {
  internal::CheckCrfShapes(emissions, p);
  const Eigen::Index n = emissions.rows();
  const Eigen::Index K = p.num_tags();
  if (static_cast<Eigen::Index>(gold.size()) != n) {
    throw DimensionMismatch("crf: gold length differs from emissions");
  }
  const Matrix alpha = internal::ForwardScores(emissions, p);
  const Matrix beta = internal::BackwardScores(emissions, p);
  const double log_z =
      internal::LogSumExp(alpha.row(n - 1).transpose() + p.stop);

  CrfGradient g;
  g.loss = log_z - PathScore(emissions, p, gold);
  g.d_emissions = (alpha + beta).array().unaryExpr([log_z](double v) {
    return std::exp(v - log_z);
  }).matrix();
  g.d_start = g.d_emissions.row(0).transpose();
  g.d_stop = g.d_emissions.row(n - 1).transpose();
  g.d_transitions = Matrix::Zero(K, K);
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index a = 0; a < K; ++a) {
      for (Eigen::Index b = 0; b < K; ++b) {
        g.d_transitions(a, b) += std::exp(alpha(i - 1, a) + p.transitions(a, b) +
                                          emissions(i, b) + beta(i, b) - log_z);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    g.d_emissions(i, gold[static_cast<std::size_t>(i)]) -= 1.0;
    if (i > 0) {
      g.d_transitions(gold[static_cast<std::size_t>(i - 1)],
                      gold[static_cast<std::size_t>(i)]) -= 1.0;
    }
  }
  g.d_start[gold.front()] -= 1.0;
  g.d_stop[gold.back()] -= 1.0;
  // Roundoff can leave the loss a hair below zero in the saturated limit.
  if (g.loss < 0.0) g.loss = 0.0;
  return g;
}

}  // namespace nerlens

#endif  // NERLENS_CRF_HPP_
