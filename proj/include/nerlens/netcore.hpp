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

// Minimal neural substrate: parameter tensors with gradients, an LSTM cell
// with hand-written backpropagation, inverted dropout, SGD with weight decay,
// Glorot initialization, and finite-difference gradient checking.

#ifndef NERLENS_NETCORE_HPP_
#define NERLENS_NETCORE_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nerlens/error.hpp"
#include "nerlens/rng.hpp"

namespace nerlens {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ParamTensor {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;
  // Biases and CRF potentials are exempt from weight decay.
  bool decay = true;
  // Row-sparse tensors (embedding tables) only update rows marked touched.
  bool row_sparse = false;
  std::vector<char> touched;

  ParamTensor() = default;
  ParamTensor(std::string n, Matrix v, bool decays = true)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Matrix::Zero(value.rows(), value.cols())),
        decay(decays) {}

  void ZeroGrad() {
    grad.setZero();
    if (row_sparse) touched.assign(value.rows(), 0);
  }

  void Touch(Eigen::Index row) {
    if (row_sparse) {
      if (touched.size() != static_cast<std::size_t>(value.rows())) {
        touched.assign(value.rows(), 0);
      }
      touched[row] = 1;
    }
  }
};

inline double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vector Sigmoid(const Vector& v) {
  return v.unaryExpr([](double x) { return Sigmoid(x); });
}

// Uniform on +-sqrt(6 / (fan_in + fan_out)), fan_in = cols, fan_out = rows.
inline ParamTensor InitWeight(std::string name, Eigen::Index rows,
                              Eigen::Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  // Row-major draw order so the layout of draws does not depend on Eigen's
  // storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.Uniform(-bound, bound);
  }
  return ParamTensor(std::move(name), std::move(m), /*decays=*/true);
}

inline ParamTensor InitBias(std::string name, Eigen::Index size,
                            double fill = 0.0) {
  return ParamTensor(std::move(name), Matrix::Constant(size, 1, fill),
                     /*decays=*/false);
}

// ---------------------------------------------------------------------------
// LSTM

// Gate blocks are stacked in the order input, forget, output, candidate.
struct LstmParams {
  Eigen::Index input_dim = 0;
  Eigen::Index hidden_dim = 0;
  ParamTensor weight;  // 4H x (D + H)
  ParamTensor bias;    // 4H x 1

  static LstmParams Init(const std::string& prefix, Eigen::Index input_dim,
                         Eigen::Index hidden_dim, Rng& rng) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.weight = InitWeight(prefix + ".weight", 4 * hidden_dim,
                          input_dim + hidden_dim, rng);
    p.bias = InitBias(prefix + ".bias", 4 * hidden_dim);
    p.bias.value.block(hidden_dim, 0, hidden_dim, 1).setOnes();
    return p;
  }

  // Zero-initialized cell of the given shape.
  static LstmParams Zero(const std::string& prefix, Eigen::Index input_dim,
                         Eigen::Index hidden_dim) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.weight = ParamTensor(prefix + ".weight",
                           Matrix::Zero(4 * hidden_dim, input_dim + hidden_dim));
    p.bias = InitBias(prefix + ".bias", 4 * hidden_dim);
    return p;
  }
};

struct LstmStepCache {
  Vector x, h_prev, c_prev;
  Vector i, f, o, g;
  Vector c, tanh_c, h;
};

inline LstmStepCache LstmStepWithCache(const LstmParams& p, const Vector& h_prev,
                                       const Vector& c_prev, const Vector& x) {
  const Eigen::Index H = p.hidden_dim;
  if (x.size() != p.input_dim || h_prev.size() != H || c_prev.size() != H) {
    throw DimensionMismatch("lstm_step: expected input " +
                            std::to_string(p.input_dim) + ", hidden " +
                            std::to_string(H));
  }
  Vector xh(p.input_dim + H);
  xh << x, h_prev;
  const Vector z = p.weight.value * xh + p.bias.value.col(0);
  LstmStepCache s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  s.i = Sigmoid(Vector(z.segment(0, H)));
  s.f = Sigmoid(Vector(z.segment(H, H)));
  s.o = Sigmoid(Vector(z.segment(2 * H, H)));
  s.g = z.segment(3 * H, H).array().tanh().matrix();
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = s.o.cwiseProduct(s.tanh_c);
  return s;
}

struct LstmState {
  Vector h;
  Vector c;
};

inline LstmState LstmStep(const LstmParams& p, const Vector& h_prev,
                          const Vector& c_prev, const Vector& x) {
  auto s = LstmStepWithCache(p, h_prev, c_prev, x);
  return {std::move(s.h), std::move(s.c)};
}

// Runs the cell over xs from a zero state.
inline std::vector<LstmStepCache> LstmForward(const LstmParams& p,
                                              std::span<const Vector> xs) {
  std::vector<LstmStepCache> steps;
  steps.reserve(xs.size());
  Vector h = Vector::Zero(p.hidden_dim);
  Vector c = Vector::Zero(p.hidden_dim);
  for (const auto& x : xs) {
    steps.push_back(LstmStepWithCache(p, h, c, x));
    h = steps.back().h;
    c = steps.back().c;
  }
  return steps;
}

// Backpropagation through time. dh[t] is the loss gradient flowing into h_t
// from outside the recurrence. Accumulates into p's grads and returns dL/dx_t.
inline std::vector<Vector> LstmBackward(LstmParams& p,
                                        const std::vector<LstmStepCache>& steps,
                                        std::span<const Vector> dh) {
  const Eigen::Index H = p.hidden_dim;
  const Eigen::Index D = p.input_dim;
  std::vector<Vector> dx(steps.size());
  Vector dh_next = Vector::Zero(H);
  Vector dc_next = Vector::Zero(H);
  Vector xh(D + H);
  Vector dz(4 * H);
  for (std::size_t t = steps.size(); t-- > 0;) {
    const auto& s = steps[t];
    const Vector dht = dh[t] + dh_next;
    const Vector d_o = dht.cwiseProduct(s.tanh_c);
    const Vector dc =
        dht.cwiseProduct(s.o)
            .cwiseProduct((1.0 - s.tanh_c.array().square()).matrix()) +
        dc_next;
    const Vector di = dc.cwiseProduct(s.g);
    const Vector dg = dc.cwiseProduct(s.i);
    const Vector df = dc.cwiseProduct(s.c_prev);
    dc_next = dc.cwiseProduct(s.f);
    dz.segment(0, H) = di.array() * s.i.array() * (1.0 - s.i.array());
    dz.segment(H, H) = df.array() * s.f.array() * (1.0 - s.f.array());
    dz.segment(2 * H, H) = d_o.array() * s.o.array() * (1.0 - s.o.array());
    dz.segment(3 * H, H) = dg.array() * (1.0 - s.g.array().square());
    xh << s.x, s.h_prev;
    p.weight.grad.noalias() += dz * xh.transpose();
    p.bias.grad.col(0) += dz;
    const Vector dxh = p.weight.value.transpose() * dz;
    dx[t] = dxh.head(D);
    dh_next = dxh.tail(H);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Dropout

enum class Mode { kTrain, kEval };

class InvalidRate : public Error {
 public:
  explicit InvalidRate(double rate)
      : Error("InvalidRate: dropout rate " + std::to_string(rate) +
              " outside [0, 1)") {}
};

// Per-component multipliers: 0 with probability rate, else 1/(1-rate).
inline Vector DropoutMask(Eigen::Index dim, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidRate(rate);
  Vector mask(dim);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index k = 0; k < dim; ++k) {
    mask[k] = (rate > 0.0 && rng.Bernoulli(rate)) ? 0.0 : keep_scale;
  }
  return mask;
}

// Inverted dropout. Eval mode never touches the rng.
inline Vector Dropout(const Vector& x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidRate(rate);
  if (mode == Mode::kEval || rate == 0.0) return x;
  return x.cwiseProduct(DropoutMask(x.size(), rate, rng));
}

// ---------------------------------------------------------------------------
// SGD

struct SgdOptions {
  double lr = 0.01;
  double weight_decay = 1e-4;
  // For row-sparse tensors: also decay rows that received no gradient.
  bool decay_untouched_rows = false;
};

// values -= lr * (grad + wd * values), decay skipped for exempt tensors.
// Gradients are zeroed afterwards.
inline void SgdStep(std::span<ParamTensor* const> params,
                    const SgdOptions& opt) {
  for (ParamTensor* p : params) {
    if (!p->trainable) {
      p->ZeroGrad();
      continue;
    }
    const double wd = p->decay ? opt.weight_decay : 0.0;
    if (p->row_sparse && !opt.decay_untouched_rows) {
      for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
        if (static_cast<std::size_t>(r) >= p->touched.size() || !p->touched[r]) {
          continue;
        }
        p->value.row(r) -= opt.lr * (p->grad.row(r) + wd * p->value.row(r));
      }
    } else {
      p->value -= opt.lr * (p->grad + wd * p->value);
    }
    p->ZeroGrad();
  }
}

inline void SgdStep(std::span<ParamTensor* const> params, double lr,
                    double weight_decay) {
  SgdStep(params, SgdOptions{lr, weight_decay, false});
}

// ---------------------------------------------------------------------------
// Gradient checking

class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss() : Error("NonFiniteLoss: loss evaluated to a non-finite value") {}
};

struct TensorGradError {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  // |a - n| is dominated by roundoff of order ulp(loss) / eps for components
  // whose gradient is tiny; the absolute figure separates that from real bugs.
  double max_abs_error = 0.0;
  std::string worst_tensor;
  std::vector<TensorGradError> tensors;
};

inline double RelativeError(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

// Compares analytic gradients against central differences on every trainable
// component. `backward` must zero the grads and fill them for the current
// parameter values; `loss` must be deterministic.
inline GradCheckResult GradCheck(std::span<ParamTensor* const> params,
                                 const std::function<double()>& loss,
                                 const std::function<void()>& backward,
                                 double eps = 1e-5) {
  backward();
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (ParamTensor* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamTensor* p = params[k];
    if (!p->trainable) continue;
    TensorGradError te{p->name, 0.0, 0.0, 0};
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double orig = p->value(r, c);
        p->value(r, c) = orig + eps;
        const double up = loss();
        p->value(r, c) = orig - eps;
        const double down = loss();
        p->value(r, c) = orig;
        if (!std::isfinite(up) || !std::isfinite(down)) throw NonFiniteLoss();
        const double numeric = (up - down) / (2.0 * eps);
        te.max_rel_error =
            std::max(te.max_rel_error, RelativeError(analytic[k](r, c), numeric));
        te.max_abs_error =
            std::max(te.max_abs_error, std::abs(analytic[k](r, c) - numeric));
        ++te.checked;
      }
    }
    if (te.max_rel_error >= result.max_rel_error) {
      result.max_rel_error = te.max_rel_error;
      result.worst_tensor = te.name;
    }
    result.max_abs_error = std::max(result.max_abs_error, te.max_abs_error);
    result.tensors.push_back(std::move(te));
  }
  return result;
}

}  // namespace nerlens

#endif  // NERLENS_NETCORE_HPP_
