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
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rulkit/data.hpp"
#include "rulkit/lstm.hpp"
#include "rulkit/ordinal.hpp"
#include "rulkit/rng.hpp"

namespace rulkit {

struct TrainConfig {
  int hidden_size = 50;
  int num_layers = 2;
  double learning_rate = 0.001;
  double dropout_rate = 0.2;
  int batch_size = 32;
  int max_iterations = 2000;   // one iteration = one mini-batch update
  int patience = 10;           // evaluations without improvement before stopping
  int eval_every = 0;          // 0: one pass-equivalent, ceil(n_windows/batch)
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 0;      // master seed; model_index selects the streams

  void validate() const {
    if (hidden_size < 1 || num_layers < 1 || batch_size < 1)
      throw std::invalid_argument("TrainConfig: h, L, batch_size must be >= 1");
    if (max_iterations < 0) throw std::invalid_argument("TrainConfig: bad max_iterations");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw std::invalid_argument("TrainConfig: dropout_rate must be in [0,1)");
  }
};

struct EvalPoint {
  int iteration = 0;
  double train_loss = 0.0;  // mean batch loss since the previous evaluation
  double val_loss = 0.0;
};

// Best-validation snapshot of a training run (not the final parameters).
struct TrainedModel {
  LstmStackParams params;
  HeadParams head;
  IntervalScheme scheme;
  TrainConfig config;
  int model_index = 0;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<EvalPoint> history;
  bool diverged = false;
  std::string diagnostic;
};

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<double> m, v;
  long long step = 0;
};

namespace detail {

template <class Fn>
inline void for_each_param_array(LstmStackParams& p, HeadParams& h, Fn&& fn) {
  for (auto& layer : p.layers) {
    fn(layer.weight.data);
    fn(layer.bias);
  }
  fn(h.weight.data);
  fn(h.bias);
}

template <class Fn>
inline void for_each_param_array(const LstmStackParams& p, const HeadParams& h,
                                 Fn&& fn) {
  for (const auto& layer : p.layers) {
    fn(layer.weight.data);
    fn(layer.bias);
  }
  fn(h.weight.data);
  fn(h.bias);
}

inline std::size_t param_count(const LstmStackParams& p, const HeadParams& h) {
  std::size_t n = 0;
  for_each_param_array(p, h, [&](const std::vector<double>& a) { n += a.size(); });
  return n;
}

}  // namespace detail

// One bias-corrected Adam update (beta1=0.9, beta2=0.999, eps=1e-8) applied
// in declared parameter order. Rejects non-finite gradients.
inline void optimizer_step(LstmStackParams& params, HeadParams& head,
                           const GradientBundle& grads, AdamState& state,
                           double learning_rate) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const std::size_t n = detail::param_count(params, head);
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n)
    throw std::invalid_argument("optimizer_step: state size mismatch");

  detail::for_each_param_array(grads.lstm, grads.head,
                               [](const std::vector<double>& a) {
                                 if (!all_finite(a))
                                   throw std::invalid_argument(
                                       "optimizer_step: non-finite gradient");
                               });

  state.step += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));

  std::size_t offset = 0;
  std::vector<const std::vector<double>*> grad_arrays;
  detail::for_each_param_array(grads.lstm, grads.head,
                               [&](const std::vector<double>& a) {
                                 grad_arrays.push_back(&a);
                               });
  std::size_t which = 0;
  detail::for_each_param_array(params, head, [&](std::vector<double>& a) {
    const std::vector<double>& g = *grad_arrays[which++];
    for (std::size_t i = 0; i < a.size(); ++i) {
      double& m = state.m[offset + i];
      double& v = state.v[offset + i];
      m = kBeta1 * m + (1.0 - kBeta1) * g[i];
      v = kBeta2 * v + (1.0 - kBeta2) * g[i] * g[i];
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      a[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + kEps);
    }
    offset += a.size();
  });
}

// ---------------------------------------------------------------------------
// Training loop

namespace detail {

inline HeadTarget window_target(const WindowSample& w, HeadKind kind,
                                const IntervalScheme& scheme) {
  if (kind == HeadKind::metric) {
    if (w.censored)
      throw std::invalid_argument("metric head cannot train on censored windows");
    const double r_u = scheme.upper_bound();
    const double r = w.label < r_u ? w.label : r_u;
    return HeadTarget{r / r_u};
  }
  OrdinalTarget t = w.censored ? encode_censored(w.label, scheme)
                               : encode_failed(w.label, scheme);
  if (t.excluded())
    throw std::invalid_argument(
        "ordinal window with no usable label (K'=0); filter before training");
  return HeadTarget{std::move(t)};
}

inline double clip_global_norm(GradientBundle& grads, double max_norm) {
  double sq = 0.0;
  for_each_param_array(grads.lstm, grads.head,
                       [&](const std::vector<double>& a) {
                         for (double v : a) sq += v * v;
                       });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

}  // namespace detail

// Keep only windows an ordinal/metric trainer can use: exact windows always;
// censored windows only for the ordinal head and only when the encoded lower
// bound yields at least one known label.
inline std::vector<WindowSample> usable_windows(
    std::span<const WindowSample> windows, HeadKind kind,
    const IntervalScheme& scheme, bool include_censored) {
  std::vector<WindowSample> out;
  for (const auto& w : windows) {
    if (!w.censored) {
      out.push_back(w);
      continue;
    }
    if (!include_censored || kind == HeadKind::metric) continue;
    if (!encode_censored(w.label, scheme).excluded()) out.push_back(w);
  }
  return out;
}

inline double validation_loss(const LstmStackParams& params,
                              const HeadParams& head,
                              const IntervalScheme& scheme,
                              std::span<const WindowSample> windows) {
  if (windows.empty()) return std::numeric_limits<double>::quiet_NaN();
  DropoutSpec off{0.0, false};
  RngStream dummy(0);
  double sum = 0.0;
  for (const auto& w : windows) {
    const ForwardTrace trace = lstm_forward(w.input, params, off, dummy);
    const Vector logits = head_logits(trace.final_hidden(), head);
    sum += head_loss_from_logits(logits, head,
                                 detail::window_target(w, head.kind, scheme));
  }
  return sum / static_cast<double>(windows.size());
}

// Mini-batch training with early stopping on the validation loss. All
// randomness comes from the master seed through the "init:<i>", "shuffle:<i>"
// and "dropout:<i>" sub-streams, where i = model_index.
inline TrainedModel train(const TrainConfig& config, HeadKind head_kind,
                          const IntervalScheme& scheme,
                          std::span<const WindowSample> train_windows,
                          std::span<const WindowSample> val_windows,
                          int model_index = 0) {
  config.validate();
  if (train_windows.empty())
    throw std::invalid_argument("train: no training windows");
  const int p = train_windows.front().input.cols;

  const std::string tag = std::to_string(model_index);
  RngStream init_rng(config.seed, "init:" + tag);
  RngStream shuffle_rng(config.seed, "shuffle:" + tag);
  RngStream dropout_rng(config.seed, "dropout:" + tag);

  TrainedModel model;
  model.scheme = scheme;
  model.config = config;
  model.model_index = model_index;
  model.params = LstmStackParams::init_random(p, config.hidden_size,
                                              config.num_layers, init_rng);
  model.head = HeadParams::init_random(head_kind, config.hidden_size,
                                       scheme.num_intervals, init_rng);

  const int n = static_cast<int>(train_windows.size());
  const int eval_every = config.eval_every > 0
                             ? config.eval_every
                             : (n + config.batch_size - 1) / config.batch_size;

  LstmStackParams params = model.params;
  HeadParams head = model.head;
  AdamState adam;
  const DropoutSpec drop{config.dropout_rate, true};

  auto evaluate = [&](int iteration, double recent_train_loss) {
    const double vl = validation_loss(params, head, scheme, val_windows);
    model.history.push_back({iteration, recent_train_loss, vl});
    return vl;
  };

  // Baseline evaluation so "best" is defined even if no update improves it.
  double best = evaluate(0, std::numeric_limits<double>::quiet_NaN());
  model.best_val_loss = best;
  const bool has_val = !val_windows.empty();
  int evals_since_improvement = 0;

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  shuffle_rng.shuffle(order);
  int cursor = 0;

  GradientBundle grads = GradientBundle::zeros_like(params, head);
  double loss_accum = 0.0;
  int loss_count = 0;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    for (auto& layer : grads.lstm.layers) {
      layer.weight.fill(0.0);
      std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
    grads.head.weight.fill(0.0);
    std::fill(grads.head.bias.begin(), grads.head.bias.end(), 0.0);

    double batch_loss = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor >= n) {
        shuffle_rng.shuffle(order);
        cursor = 0;
      }
      const WindowSample& w = train_windows[static_cast<std::size_t>(
          order[static_cast<std::size_t>(cursor++)])];
      const ForwardTrace trace = lstm_forward(w.input, params, drop, dropout_rng);
      batch_loss += backward_acc(trace, params, head,
                                 detail::window_target(w, head_kind, scheme),
                                 grads);
    }
    batch_loss /= config.batch_size;
    grads.scale(1.0 / config.batch_size);

    if (!std::isfinite(batch_loss)) {
      model.diverged = true;
      model.diagnostic = "non-finite training loss at iteration " +
                         std::to_string(iter) + "; returning best snapshot";
      break;
    }

    detail::clip_global_norm(grads, config.grad_clip_norm);
    optimizer_step(params, head, grads, adam, config.learning_rate);
    loss_accum += batch_loss;
    loss_count += 1;

    if (iter % eval_every == 0 || iter == config.max_iterations) {
      const double recent = loss_count > 0 ? loss_accum / loss_count : batch_loss;
      loss_accum = 0.0;
      loss_count = 0;
      const double vl = evaluate(iter, recent);
      const double track = has_val ? vl : recent;
      if (!std::isfinite(track)) {
        model.diverged = true;
        model.diagnostic = "non-finite validation loss at iteration " +
                           std::to_string(iter) + "; returning best snapshot";
        break;
      }
      if (!(track >= best)) {  // strict improvement (also handles NaN baseline)
        best = track;
        model.best_val_loss = best;
        model.params = params;
        model.head = head;
        evals_since_improvement = 0;
      } else {
        if (++evals_since_improvement >= config.patience) break;
      }
      if (iter == config.max_iterations) break;
    }
  }

  if (!has_val) {
    // No validation set: the last parameters are the result and the tracked
    // quantity is the training loss.
    if (!model.diverged && !model.history.empty()) {
      model.params = params;
      model.head = head;
      model.best_val_loss = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Grid search

struct GridSpec {
  std::vector<int> hidden_sizes{50, 60, 70, 80, 90, 100};
  std::vector<int> layer_counts{2, 3};
  std::vector<double> learning_rates{0.001, 0.005};

  void validate() const {
    if (hidden_sizes.empty() || layer_counts.empty() || learning_rates.empty())
      throw std::invalid_argument("GridSpec: candidate sets must be non-empty");
  }
};

struct GridResult {
  TrainConfig config;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
};

struct GridOutcome {
  TrainConfig best;
  std::vector<GridResult> results;
};

// Trains one model per grid point and picks the minimum validation loss;
// exact ties go to the smaller h, then L, then learning rate (the iteration
// order below).
inline GridOutcome grid_search(const GridSpec& grid, HeadKind head_kind,
                               const IntervalScheme& scheme,
                               std::span<const WindowSample> train_windows,
                               std::span<const WindowSample> val_windows,
                               const TrainConfig& base_config) {
  grid.validate();
  GridSpec g = grid;
  std::sort(g.hidden_sizes.begin(), g.hidden_sizes.end());
  std::sort(g.layer_counts.begin(), g.layer_counts.end());
  std::sort(g.learning_rates.begin(), g.learning_rates.end());

  GridOutcome out;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int h : g.hidden_sizes)
    for (int layers : g.layer_counts)
      for (double lr : g.learning_rates) {
        TrainConfig cfg = base_config;
        cfg.hidden_size = h;
        cfg.num_layers = layers;
        cfg.learning_rate = lr;
        TrainedModel m = train(cfg, head_kind, scheme, train_windows, val_windows);
        GridResult r{cfg, m.best_val_loss, m.diverged};
        out.results.push_back(r);
        if (!m.diverged && std::isfinite(m.best_val_loss) && m.best_val_loss < best) {
          best = m.best_val_loss;
          out.best = cfg;
          found = true;
        }
      }
  if (!found)
    throw std::runtime_error("grid_search: every grid point diverged");
  return out;
}

}  // namespace rulkit
