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

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "rulkit/ordinal.hpp"
#include "rulkit/train.hpp"

namespace rulkit {

// Population standard deviation of the member estimates (the divisor is m,
// not m-1).
inline double esd(std::span<const double> estimates) {
  if (estimates.empty()) throw std::invalid_argument("esd: empty estimate list");
  const double mu = mean(estimates);
  double sq = 0.0;
  for (double r : estimates) sq += (r - mu) * (r - mu);
  return std::sqrt(sq / static_cast<double>(estimates.size()));
}

// Entropy over the K+1 monotone label vectors (all-zeros, then ones starting
// at position K, K-1, ..., 1), scored by the mean prediction vector with
// independent per-classifier probabilities. The total mass over this set is
// generally below 1; it is intentionally not renormalized. Natural log,
// 0 log 0 = 0.
inline double entropy_uncertainty(std::span<const double> mean_prediction) {
  const int k = static_cast<int>(mean_prediction.size());
  for (double y : mean_prediction)
    if (!(y >= 0.0 && y <= 1.0))
      throw std::invalid_argument("entropy_uncertainty: component outside [0,1]");
  double h = 0.0;
  for (int start = 0; start <= k; ++start) {
    // ones at positions >= start (start == k: the all-zeros vector)
    double p = 1.0;
    for (int j = 0; j < k; ++j)
      p *= j >= start ? mean_prediction[static_cast<std::size_t>(j)]
                      : 1.0 - mean_prediction[static_cast<std::size_t>(j)];
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

struct PredictionRecord {
  int unit_id = -1;
  double true_rul = kUnknown;
  std::vector<double> member_estimates;
  double ensemble_estimate = 0.0;
  std::vector<double> mean_prediction;  // [0,1]^K
  double u_esd_raw = 0.0;
  double u_ent_raw = 0.0;
  double u_esd = kUnknown;  // min-max normalized against a validation set
  double u_ent = kUnknown;
};

// Min-max range of the raw uncertainties over a hold-out validation set.
// Applied values are not clamped; a degenerate range maps everything to 0.
struct UncertaintyNormalizer {
  double esd_min = 0.0, esd_max = 1.0;
  double ent_min = 0.0, ent_max = 1.0;

  static double apply_one(double raw, double lo, double hi) {
    if (hi == lo) return 0.0;
    return (raw - lo) / (hi - lo);
  }
  double apply_esd(double raw) const { return apply_one(raw, esd_min, esd_max); }
  double apply_ent(double raw) const { return apply_one(raw, ent_min, ent_max); }
};

inline UncertaintyNormalizer fit_uncertainty_normalizer(
    std::span<const PredictionRecord> validation_records) {
  if (validation_records.empty())
    throw std::invalid_argument("fit_uncertainty_normalizer: empty validation set");
  UncertaintyNormalizer n;
  n.esd_min = n.esd_max = validation_records.front().u_esd_raw;
  n.ent_min = n.ent_max = validation_records.front().u_ent_raw;
  for (const auto& r : validation_records) {
    n.esd_min = std::min(n.esd_min, r.u_esd_raw);
    n.esd_max = std::max(n.esd_max, r.u_esd_raw);
    n.ent_min = std::min(n.ent_min, r.u_ent_raw);
    n.ent_max = std::max(n.ent_max, r.u_ent_raw);
  }
  return n;
}

inline void apply_normalizer(const UncertaintyNormalizer& n,
                             PredictionRecord& rec) {
  rec.u_esd = n.apply_esd(rec.u_esd_raw);
  rec.u_ent = n.apply_ent(rec.u_ent_raw);
}

struct Ensemble {
  std::vector<TrainedModel> members;  // kept in ascending validation loss
  IntervalScheme scheme;
  UncertaintyNormalizer normalizer;
  bool normalizer_fitted = false;

  int size() const { return static_cast<int>(members.size()); }
};

// Trains pool_size models (streams "init:<i>" / "shuffle:<i>" / "dropout:<i>"
// for i = 0..pool_size-1), orders them by validation loss ascending and keeps
// the first m.
inline Ensemble train_ensemble(const TrainConfig& config, HeadKind head_kind,
                               const IntervalScheme& scheme,
                               std::span<const WindowSample> train_windows,
                               std::span<const WindowSample> val_windows,
                               int pool_size, int m) {
  if (pool_size < m || m < 1)
    throw std::invalid_argument("train_ensemble: need pool_size >= m >= 1");
  std::vector<TrainedModel> pool;
  for (int i = 0; i < pool_size; ++i) {
    TrainedModel model =
        train(config, head_kind, scheme, train_windows, val_windows, i);
    if (!model.diverged && std::isfinite(model.best_val_loss))
      pool.push_back(std::move(model));
  }
  if (static_cast<int>(pool.size()) < m)
    throw std::runtime_error("train_ensemble: only " +
                             std::to_string(pool.size()) + " of " +
                             std::to_string(pool_size) +
                             " models trained without divergence, need " +
                             std::to_string(m));
  std::stable_sort(pool.begin(), pool.end(),
                   [](const TrainedModel& a, const TrainedModel& b) {
                     return a.best_val_loss < b.best_val_loss;
                   });
  pool.resize(static_cast<std::size_t>(m));
  Ensemble e;
  e.members = std::move(pool);
  e.scheme = scheme;
  return e;
}

// Inference-mode member predictions on one window; Eq.-style ensemble mean,
// ESD and entropy uncertainties. Normalized fields are filled only when the
// ensemble carries a fitted normalizer.
inline PredictionRecord predict_ensemble(const Ensemble& ensemble,
                                         const Matrix& window) {
  if (ensemble.members.empty())
    throw std::invalid_argument("predict_ensemble: empty ensemble");
  if (window.rows < 1)
    throw std::invalid_argument("predict_ensemble: empty window");

  const int k = ensemble.scheme.num_intervals;
  PredictionRecord rec;
  rec.mean_prediction.assign(static_cast<std::size_t>(k), 0.0);
  DropoutSpec off{0.0, false};
  RngStream dummy(0);
  for (const auto& member : ensemble.members) {
    const ForwardTrace trace = lstm_forward(window, member.params, off, dummy);
    const Vector y = head_forward(trace.final_hidden(), member.head);
    if (member.head.kind == HeadKind::ordinal) {
      for (int j = 0; j < k; ++j) rec.mean_prediction[static_cast<std::size_t>(j)] += y[static_cast<std::size_t>(j)];
      rec.member_estimates.push_back(decode_rul(y, ensemble.scheme));
    } else {
      rec.member_estimates.push_back(ensemble.scheme.upper_bound() * y[0]);
    }
  }
  const double m = static_cast<double>(ensemble.members.size());
  for (double& v : rec.mean_prediction) v /= m;
  rec.ensemble_estimate = mean(rec.member_estimates);
  rec.u_esd_raw = esd(rec.member_estimates);
  rec.u_ent_raw = ensemble.members.front().head.kind == HeadKind::ordinal
                      ? entropy_uncertainty(rec.mean_prediction)
                      : 0.0;
  if (ensemble.normalizer_fitted) apply_normalizer(ensemble.normalizer, rec);
  return rec;
}

}  // namespace rulkit
