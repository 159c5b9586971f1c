//------------------------------------------------------------------------------
//
//   Copyright 2026 The rulkit Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rulkit/linalg.hpp"
#include "rulkit/ordinal.hpp"
#include "rulkit/rng.hpp"

namespace rulkit {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One layer's affine map: a (4h)-row matrix over the concatenated
// [layer input; previous hidden] vector, gate row order i, f, o, g.
struct LstmLayerParams {
  Matrix weight;  // 4h x (in + h)
  Vector bias;    // 4h

  int hidden_size() const { return static_cast<int>(bias.size()) / 4; }
  int input_size() const { return weight.cols - hidden_size(); }
};

struct LstmStackParams {
  int input_size = 0;   // p
  int hidden_size = 0;  // h
  std::vector<LstmLayerParams> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }

  static LstmStackParams zeros(int p, int h, int num_layers) {
    if (p < 1 || h < 1 || num_layers < 1)
      throw std::invalid_argument("LstmStackParams: p, h, L must be >= 1");
    LstmStackParams s;
    s.input_size = p;
    s.hidden_size = h;
    s.layers.resize(static_cast<std::size_t>(num_layers));
    for (int l = 0; l < num_layers; ++l) {
      const int in = l == 0 ? p : h;
      s.layers[l].weight = Matrix(4 * h, in + h);
      s.layers[l].bias.assign(static_cast<std::size_t>(4 * h), 0.0);
    }
    return s;
  }

  // Uniform [-1/sqrt(h), 1/sqrt(h)] weights; zero biases except the forget
  // gate, which starts at 1 so early training does not wipe the cell state.
  static LstmStackParams init_random(int p, int h, int num_layers,
                                     RngStream& rng) {
    LstmStackParams s = zeros(p, h, num_layers);
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    for (auto& layer : s.layers) {
      for (double& w : layer.weight.data) w = rng.uniform(-bound, bound);
      for (int j = 0; j < h; ++j) layer.bias[h + j] = 1.0;
    }
    return s;
  }
};

enum class HeadKind { ordinal, metric };

// Output layer: sigmoid(W_C z + b_C), K units for the ordinal head or a
// single unit for metric regression.
struct HeadParams {
  HeadKind kind = HeadKind::ordinal;
  Matrix weight;  // K x h  (metric: 1 x h)
  Vector bias;    // K      (metric: 1)

  int output_size() const { return static_cast<int>(bias.size()); }

  static HeadParams zeros(HeadKind kind, int h, int k) {
    const int out = kind == HeadKind::metric ? 1 : k;
    if (out < 1 || h < 1) throw std::invalid_argument("HeadParams: bad sizes");
    HeadParams hp;
    hp.kind = kind;
    hp.weight = Matrix(out, h);
    hp.bias.assign(static_cast<std::size_t>(out), 0.0);
    return hp;
  }

  static HeadParams init_random(HeadKind kind, int h, int k, RngStream& rng) {
    HeadParams hp = zeros(kind, h, k);
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    for (double& w : hp.weight.data) w = rng.uniform(-bound, bound);
    return hp;
  }
};

// Dropout on the non-recurrent connections only (each layer's input), with
// inverted scaling so inference needs no rescale.
struct DropoutSpec {
  double rate = 0.0;
  bool train = false;

  bool active() const { return train && rate > 0.0; }
};

// Everything the backward pass needs to reproduce the forward computation:
// per layer and timestep, the post-dropout input actually fed to the affine
// map, the four gate activations, cell and hidden states, and dropout masks.
struct ForwardTrace {
  struct LayerTrace {
    Matrix input;   // T x in   (after dropout)
    Matrix gate_i;  // T x h
    Matrix gate_f;
    Matrix gate_o;
    Matrix gate_g;
    Matrix cell;
    Matrix hidden;
    Matrix dropout_mask;  // T x in; empty when dropout was inactive
  };
  int seq_len = 0;
  int input_size = 0;
  int hidden_size = 0;
  std::vector<LayerTrace> layers;

  Vector final_hidden() const {
    const Matrix& z = layers.back().hidden;
    return Vector(z.row(seq_len - 1), z.row(seq_len - 1) + z.cols);
  }
};

// Runs the stack over a T x p input (rows are timesteps) with zero initial
// states. RNG is consumed only when dropout is active, one mask entry per
// input dimension per timestep, layers inner-most.
inline ForwardTrace lstm_forward(const Matrix& x, const LstmStackParams& params,
                                 const DropoutSpec& dropout, RngStream& rng) {
  if (x.rows < 1) throw std::invalid_argument("lstm_forward: empty sequence");
  if (x.cols != params.input_size)
    throw std::invalid_argument("lstm_forward: input dimension " +
                                std::to_string(x.cols) + " != p = " +
                                std::to_string(params.input_size));
  if (!all_finite(x.data))
    throw std::invalid_argument("lstm_forward: non-finite input");

  const int t_len = x.rows;
  const int h = params.hidden_size;
  const int l_count = params.num_layers();
  const bool drop = dropout.active();
  const double keep = 1.0 - dropout.rate;

  ForwardTrace trace;
  trace.seq_len = t_len;
  trace.input_size = params.input_size;
  trace.hidden_size = h;
  trace.layers.resize(static_cast<std::size_t>(l_count));
  for (int l = 0; l < l_count; ++l) {
    const int in = params.layers[l].input_size();
    auto& lt = trace.layers[l];
    lt.input = Matrix(t_len, in);
    lt.gate_i = Matrix(t_len, h);
    lt.gate_f = Matrix(t_len, h);
    lt.gate_o = Matrix(t_len, h);
    lt.gate_g = Matrix(t_len, h);
    lt.cell = Matrix(t_len, h);
    lt.hidden = Matrix(t_len, h);
    if (drop) lt.dropout_mask = Matrix(t_len, in);
  }

  Vector concat;
  Vector preact(static_cast<std::size_t>(4 * h));
  for (int t = 0; t < t_len; ++t) {
    const double* below = x.row(t);  // current layer's raw input at time t
    for (int l = 0; l < l_count; ++l) {
      auto& lt = trace.layers[l];
      const auto& lp = params.layers[l];
      const int in = lp.input_size();

      double* u = lt.input.row(t);
      if (drop) {
        double* m = lt.dropout_mask.row(t);
        for (int j = 0; j < in; ++j) {
          m[j] = rng.next_double() < dropout.rate ? 0.0 : 1.0 / keep;
          u[j] = below[j] * m[j];
        }
      } else {
        for (int j = 0; j < in; ++j) u[j] = below[j];
      }

      concat.assign(u, u + in);
      const double* z_prev = t > 0 ? lt.hidden.row(t - 1) : nullptr;
      if (z_prev)
        concat.insert(concat.end(), z_prev, z_prev + h);
      else
        concat.insert(concat.end(), static_cast<std::size_t>(h), 0.0);

      matvec_add(lp.weight, concat.data(), lp.bias.data(), preact.data());

      double* gi = lt.gate_i.row(t);
      double* gf = lt.gate_f.row(t);
      double* go = lt.gate_o.row(t);
      double* gg = lt.gate_g.row(t);
      double* c = lt.cell.row(t);
      double* z = lt.hidden.row(t);
      const double* c_prev = t > 0 ? lt.cell.row(t - 1) : nullptr;
      for (int j = 0; j < h; ++j) {
        gi[j] = sigmoid(preact[j]);
        gf[j] = sigmoid(preact[h + j]);
        go[j] = sigmoid(preact[2 * h + j]);
        gg[j] = std::tanh(preact[3 * h + j]);
        c[j] = gf[j] * (c_prev ? c_prev[j] : 0.0) + gi[j] * gg[j];
        z[j] = go[j] * std::tanh(c[j]);
      }
      below = z;
    }
  }
  return trace;
}

inline Vector head_logits(std::span<const double> z, const HeadParams& head) {
  if (static_cast<int>(z.size()) != head.weight.cols)
    throw std::invalid_argument("head: hidden size " + std::to_string(z.size()) +
                                " != " + std::to_string(head.weight.cols));
  Vector s(static_cast<std::size_t>(head.output_size()));
  matvec_add(head.weight, z.data(), head.bias.data(), s.data());
  return s;
}

inline Vector head_forward(std::span<const double> z, const HeadParams& head) {
  Vector s = head_logits(z, head);
  for (double& v : s) v = sigmoid(v);
  return s;
}

// ---------------------------------------------------------------------------
// Losses

// Mean binary cross-entropy over the unmasked prefix of the target. Masked
// positions are never read, so the loss is bit-identical under arbitrary
// perturbation of predictions there. Probabilities are clamped away from
// 0 and 1; training uses the logit form below instead.
inline double loss_orc(std::span<const double> prediction,
                       const OrdinalTarget& target) {
  if (static_cast<int>(prediction.size()) != target.size())
    throw std::invalid_argument("loss_orc: prediction/target length mismatch");
  if (target.known_count < 1)
    throw std::invalid_argument("loss_orc: target has no known labels (K'=0)");
  constexpr double kEps = 1e-7;
  double sum = 0.0;
  for (int j = 0; j < target.size(); ++j) {
    if (!target.mask[j]) continue;
    double p = prediction[j];
    if (p < kEps) p = kEps;
    if (p > 1.0 - kEps) p = 1.0 - kEps;
    sum -= target.labels[j] ? std::log(p) : std::log(1.0 - p);
  }
  return sum / target.known_count;
}

// Squared error on the sigmoid output against a normalized RUL in [0, 1].
inline double loss_mr(double prediction, double normalized_target) {
  if (!(normalized_target >= 0.0 && normalized_target <= 1.0))
    throw std::invalid_argument("loss_mr: target outside [0,1]");
  const double d = prediction - normalized_target;
  return d * d;
}

// Numerically stable BCE of sigmoid(s) against y in {0,1}.
inline double bce_from_logit(double s, double y) {
  const double m = s > 0.0 ? s : 0.0;
  return m - s * y + std::log1p(std::exp(-(s > 0.0 ? s : -s)));
}

// Either an ordinal target with mask or a normalized metric target.
using HeadTarget = std::variant<OrdinalTarget, double>;

// Loss evaluated from logits; used by training and by the backward pass so
// that gradients and loss always refer to the same function.
inline double head_loss_from_logits(std::span<const double> logits,
                                    const HeadParams& head,
                                    const HeadTarget& target) {
  if (head.kind == HeadKind::ordinal) {
    const auto& t = std::get<OrdinalTarget>(target);
    if (static_cast<int>(logits.size()) != t.size())
      throw std::invalid_argument("head loss: logit/target length mismatch");
    if (t.known_count < 1)
      throw std::invalid_argument("head loss: target has no known labels");
    double sum = 0.0;
    for (int j = 0; j < t.size(); ++j) {
      if (!t.mask[j]) continue;
      sum += bce_from_logit(logits[j], t.labels[j] ? 1.0 : 0.0);
    }
    return sum / t.known_count;
  }
  const double y = std::get<double>(target);
  return loss_mr(sigmoid(logits[0]), y);
}

// ---------------------------------------------------------------------------
// Backward pass

// Gradients in the same shapes as the parameters they refer to.
struct GradientBundle {
  LstmStackParams lstm;
  HeadParams head;

  static GradientBundle zeros_like(const LstmStackParams& p,
                                   const HeadParams& h) {
    GradientBundle g;
    g.lstm = LstmStackParams::zeros(p.input_size, p.hidden_size, p.num_layers());
    g.head = HeadParams::zeros(h.kind, p.hidden_size, h.output_size());
    return g;
  }

  void scale(double s) {
    for (auto& l : lstm.layers) {
      for (double& v : l.weight.data) v *= s;
      for (double& v : l.bias) v *= s;
    }
    for (double& v : head.weight.data) v *= s;
    for (double& v : head.bias) v *= s;
  }
};

namespace detail {

inline void check_trace_matches(const ForwardTrace& trace,
                                const LstmStackParams& params) {
  if (trace.input_size != params.input_size ||
      trace.hidden_size != params.hidden_size ||
      static_cast<int>(trace.layers.size()) != params.num_layers())
    throw std::invalid_argument(
        "backward: trace does not match the supplied parameters");
}

}  // namespace detail

// Exact gradient of the selected loss w.r.t. every parameter, accumulated
// into `grads` (callers batching samples divide afterwards). Returns the
// loss value. Masked target positions contribute zero everywhere.
inline double backward_acc(const ForwardTrace& trace,
                           const LstmStackParams& params,
                           const HeadParams& head, const HeadTarget& target,
                           GradientBundle& grads) {
  detail::check_trace_matches(trace, params);
  const int t_len = trace.seq_len;
  const int h = params.hidden_size;
  const int l_count = params.num_layers();

  const Vector z_final = trace.final_hidden();
  const Vector logits = head_logits(z_final, head);
  const double loss = head_loss_from_logits(logits, head, target);

  // d loss / d logit
  Vector ds(logits.size(), 0.0);
  if (head.kind == HeadKind::ordinal) {
    const auto& t = std::get<OrdinalTarget>(target);
    for (int j = 0; j < t.size(); ++j) {
      if (!t.mask[j]) continue;
      ds[j] = (sigmoid(logits[j]) - (t.labels[j] ? 1.0 : 0.0)) / t.known_count;
    }
  } else {
    const double y = sigmoid(logits[0]);
    ds[0] = 2.0 * (y - std::get<double>(target)) * y * (1.0 - y);
  }

  outer_acc(grads.head.weight, ds.data(), z_final.data());
  for (std::size_t j = 0; j < ds.size(); ++j) grads.head.bias[j] += ds[j];

  Vector dz_head(static_cast<std::size_t>(h), 0.0);
  mat_t_vec_acc(head.weight, ds.data(), dz_head.data());

  // Carries across time: gradient w.r.t. z_{t-1}^l and c_{t-1}^l.
  std::vector<Vector> dz_carry(l_count, Vector(static_cast<std::size_t>(h), 0.0));
  std::vector<Vector> dc_carry(l_count, Vector(static_cast<std::size_t>(h), 0.0));

  const int max_in = params.layers[0].input_size();
  Vector da(static_cast<std::size_t>(4 * h));
  Vector dv(static_cast<std::size_t>((max_in > h ? max_in : h) + h));
  Vector concat(dv.size());
  Vector dz_above(static_cast<std::size_t>(h));

  for (int t = t_len - 1; t >= 0; --t) {
    if (t == t_len - 1)
      dz_above = dz_head;
    else
      std::fill(dz_above.begin(), dz_above.end(), 0.0);

    for (int l = l_count - 1; l >= 0; --l) {
      const auto& lt = trace.layers[l];
      const auto& lp = params.layers[l];
      auto& gl = grads.lstm.layers[l];
      const int in = lp.input_size();

      const double* gi = lt.gate_i.row(t);
      const double* gf = lt.gate_f.row(t);
      const double* go = lt.gate_o.row(t);
      const double* gg = lt.gate_g.row(t);
      const double* c = lt.cell.row(t);
      const double* c_prev = t > 0 ? lt.cell.row(t - 1) : nullptr;
      const double* z_prev = t > 0 ? lt.hidden.row(t - 1) : nullptr;

      for (int j = 0; j < h; ++j) {
        const double dz = dz_carry[l][j] + dz_above[j];
        const double tc = std::tanh(c[j]);
        const double dc = dc_carry[l][j] + dz * go[j] * (1.0 - tc * tc);
        const double d_o = dz * tc;
        const double d_i = dc * gg[j];
        const double d_g = dc * gi[j];
        const double d_f = dc * (c_prev ? c_prev[j] : 0.0);
        dc_carry[l][j] = dc * gf[j];
        da[j] = d_i * gi[j] * (1.0 - gi[j]);
        da[h + j] = d_f * gf[j] * (1.0 - gf[j]);
        da[2 * h + j] = d_o * go[j] * (1.0 - go[j]);
        da[3 * h + j] = d_g * (1.0 - gg[j] * gg[j]);
      }

      const double* u = lt.input.row(t);
      for (int j = 0; j < in; ++j) concat[j] = u[j];
      for (int j = 0; j < h; ++j) concat[in + j] = z_prev ? z_prev[j] : 0.0;

      outer_acc(gl.weight, da.data(), concat.data());
      for (int j = 0; j < 4 * h; ++j) gl.bias[j] += da[j];

      std::fill(dv.begin(), dv.begin() + in + h, 0.0);
      mat_t_vec_acc(lp.weight, da.data(), dv.data());

      for (int j = 0; j < h; ++j) dz_carry[l][j] = dv[in + j];

      if (l > 0) {
        // through the dropout operator into the layer below
        if (!lt.dropout_mask.data.empty()) {
          const double* m = lt.dropout_mask.row(t);
          for (int j = 0; j < h; ++j) dz_above[j] = dv[j] * m[j];
        } else {
          for (int j = 0; j < h; ++j) dz_above[j] = dv[j];
        }
      }
    }
  }
  return loss;
}

inline GradientBundle backward(const ForwardTrace& trace,
                               const LstmStackParams& params,
                               const HeadParams& head,
                               const HeadTarget& target) {
  GradientBundle grads = GradientBundle::zeros_like(params, head);
  backward_acc(trace, params, head, target, grads);
  return grads;
}

}  // namespace rulkit
